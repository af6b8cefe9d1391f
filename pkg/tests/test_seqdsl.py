"""
Tests for the pulse-sequence text format
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raman_echo.core.errors import SequenceError
from raman_echo.simulation.model import (
    FieldDrive,
    FieldName,
    Mark,
    PulseSegment,
    PulseSequence,
    SetOverride,
    resolve_durations,
)
from raman_echo.simulation.scenarios import (
    ScenarioParams,
    ScenarioVariant,
    locking_protocol,
    photon_echo,
    triple_bit_storage,
    weak_probe,
)
from raman_echo.simulation.seqdsl import ParseError, format_sequence, parse, parse_file, tokenize

EXAMPLE = (
    "init 0.5 0.5; pulse probe(amp=17kHz), coupling(amp=17kHz) dur 3 us; wait 4 us; "
    "pulse probe(amp=35.355kHz), coupling(amp=35.355kHz) area 2 pi; mark R_end;"
)


class TestParse:
    def test_example_sequence(self):
        """Four statements; the 2 pi Raman pulse resolves to 20 us"""
        sequence = parse(EXAMPLE)
        assert len(sequence.statements) == 4
        assert sequence.initial_populations == (0.5, 0.5)
        resolved = resolve_durations(sequence)
        assert resolved.segments[2].duration_us == pytest.approx(20.0, abs=1e-3)
        assert resolved.markers["R_end"] == pytest.approx(27.0, abs=1e-3)

    def test_empty_source(self):
        sequence = parse("")
        assert sequence.statements == ()
        assert sequence.initial_populations is None

    def test_comments_and_units(self):
        sequence = parse("# header\nwait 1.5 ms; # trailing\nmark done;\n")
        wait, mark = sequence.statements
        assert wait.duration_us == pytest.approx(1500.0)
        assert isinstance(mark, Mark) and mark.name == "done"

    def test_field_options(self):
        sequence = parse("pulse aux(amp=50kHz, det=-2.5kHz, phase=90deg) dur 1 us;")
        drive = sequence.statements[0].fields[FieldName.AUX]
        assert drive.amplitude_khz == 50.0
        assert drive.detuning_khz == -2.5
        assert drive.phase_deg == 90.0

    def test_overrides(self):
        sequence = parse("set gamma(2,1)=2kHz; wait 1010 us with gamma(2,1)=0kHz, gamma(3,1)=5kHz;")
        set_statement, wait = sequence.statements
        assert isinstance(set_statement, SetOverride)
        assert set_statement.override.gamma_khz == 2.0
        assert [(ov.i, ov.j, ov.gamma_khz) for ov in wait.decay_overrides] == [(2, 1, 0.0), (3, 1, 5.0)]

    def test_shipped_sequences_parse(self, sequences_dir):
        for path in sorted(sequences_dir.glob("*.qps")):
            sequence = resolve_durations(parse_file(path))
            assert sequence.segments, path.name
            assert "R_end" in sequence.markers


class TestParseErrors:
    def test_missing_amp(self):
        """Error points at the closing parenthesis and names the key"""
        with pytest.raises(ParseError) as info:
            parse("pulse probe() dur 3 us;")
        assert (info.value.line, info.value.column) == (1, 13)
        assert "amp" in info.value.message
        assert info.value.token == ")"

    def test_unknown_field(self):
        with pytest.raises(ParseError, match="unknown field name 'laser'"):
            parse("pulse laser(amp=1kHz) dur 1 us;")

    def test_missing_semicolon(self):
        with pytest.raises(ParseError) as info:
            parse("wait 3 us\nmark x;")
        assert info.value.line == 2
        assert info.value.column == 1
        assert "';'" in info.value.message

    def test_area_with_no_field(self):
        with pytest.raises(ParseError, match="amplitude is zero"):
            parse("pulse probe(amp=0kHz) area 1 pi;")

    def test_negative_duration(self):
        with pytest.raises(ParseError, match="duration must be >"):
            parse("wait -3 us;")

    def test_negative_amplitude(self):
        with pytest.raises(ParseError):
            parse("pulse probe(amp=-1kHz) dur 1 us;")

    def test_unknown_statement(self):
        with pytest.raises(ParseError, match="unknown statement"):
            parse("sleep 3 us;")

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as info:
            parse("wait 3 us;\n  @")
        assert (info.value.line, info.value.column) == (2, 3)

    def test_positions_index_the_source(self):
        """Every reported position is a real character of the input"""
        sources = ["pulse probe() dur 3 us;", "wait 3 us\nmark x;", "init 0.5 0.5;\ninit 1 0;", "set gamma(0,1)=1kHz;"]
        for source in sources:
            with pytest.raises(ParseError) as info:
                parse(source)
            line = source.split("\n")[info.value.line - 1]
            assert 1 <= info.value.column <= len(line) + 1

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(SequenceError):
            parse_file(tmp_path / "missing.qps")

    def test_parse_error_is_sequence_error(self):
        assert issubclass(ParseError, SequenceError)


class TestFormat:
    def test_tokens_skip_comments(self):
        kinds = [token.kind for token in tokenize("wait 1 us; # note")]
        assert kinds == ["ident", "number", "ident", "punct", "eof"]

    def test_round_trip_example(self):
        sequence = parse(EXAMPLE)
        assert parse(format_sequence(sequence)) == sequence

    @pytest.mark.parametrize(
        "builder",
        [
            triple_bit_storage,
            photon_echo,
            weak_probe,
            locking_protocol,
            lambda: locking_protocol(ScenarioParams(variant=ScenarioVariant.FIG2_UNLOCKED)),
        ],
    )
    def test_round_trip_scenarios(self, builder):
        """Built sequences survive text round-trip up to derived values"""
        sequence = builder().sequence
        assert parse(format_sequence(sequence)) == sequence.as_written()

    def test_format_starts_with_header(self):
        text = format_sequence(parse("wait 1 us;"))
        assert text.startswith("# raman-echo pulse sequence\n")
        assert text.endswith("wait 1 us;\n")

    def test_fractional_values_are_exact(self):
        segment = PulseSegment(kind="wait", duration_us=0.1 + 0.2)
        text = format_sequence(PulseSequence(statements=(segment,)))
        assert parse(text).statements[0].duration_us == 0.1 + 0.2


durations = st.floats(min_value=1e-3, max_value=1e4, allow_nan=False, allow_infinity=False)
amplitudes = st.floats(min_value=0.1, max_value=1e3, allow_nan=False, allow_infinity=False)
detunings = st.floats(min_value=-500.0, max_value=500.0, allow_nan=False, allow_infinity=False)

drives = st.builds(FieldDrive, amplitude_khz=amplitudes, detuning_khz=detunings)
pulses = st.builds(
    lambda fields, duration: PulseSegment(fields=fields, duration_us=duration),
    st.dictionaries(st.sampled_from([FieldName.PROBE, FieldName.COUPLING]), drives, min_size=1),
    durations,
)
waits = st.builds(lambda duration: PulseSegment(kind="wait", duration_us=duration), durations)
marks = st.builds(Mark, name=st.sampled_from(["A_start", "A_end", "R_start", "R_end"]))


class TestFormatProperties:
    @given(st.lists(st.one_of(pulses, waits, marks), max_size=8))
    @settings(max_examples=50)
    def test_parse_inverts_format(self, statements):
        """Any sequence of pulses, waits and marks survives the text format exactly"""
        sequence = PulseSequence(statements=tuple(statements))
        assert parse(format_sequence(sequence)) == sequence
