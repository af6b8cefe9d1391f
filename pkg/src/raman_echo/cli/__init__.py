"""CLI for the raman-echo simulator"""
