"""
Validation report types

Validation collects every problem it finds instead of stopping at the first,
so a user sees all invalid rates, populations and segments in one pass.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class ValidationLevel(Enum):
    """Validation severity levels"""

    PASS = 0
    WARNING = 1
    ERROR = 2
    CRITICAL = 3


@dataclass
class ValidationIssue:
    """Individual validation issue"""

    level: ValidationLevel
    category: str
    message: str
    location: Optional[str] = None
    suggestion: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "level": self.level.value,
            "level_name": self.level.name,
            "category": self.category,
            "message": self.message,
            "location": self.location,
            "suggestion": self.suggestion,
        }


@dataclass
class ValidationReport:
    """Result of validating a system, sequence and ensemble together"""

    issues: List[ValidationIssue] = field(default_factory=list)

    def add(
        self,
        level: ValidationLevel,
        category: str,
        message: str,
        location: Optional[str] = None,
        suggestion: Optional[str] = None,
    ) -> None:
        self.issues.append(ValidationIssue(level, category, message, location, suggestion))

    def error(self, category: str, message: str, **kwargs: Any) -> None:
        self.add(ValidationLevel.ERROR, category, message, **kwargs)

    def warning(self, category: str, message: str, **kwargs: Any) -> None:
        self.add(ValidationLevel.WARNING, category, message, **kwargs)

    def extend(self, other: "ValidationReport") -> None:
        self.issues.extend(other.issues)

    @property
    def errors(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.level in (ValidationLevel.ERROR, ValidationLevel.CRITICAL)]

    @property
    def warnings(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.level == ValidationLevel.WARNING]

    @property
    def is_valid(self) -> bool:
        """True when there are no error or critical issues; warnings do not fail"""
        return not self.errors

    @property
    def summary(self) -> str:
        if not self.issues:
            return "Validation passed"
        return f"{len(self.errors)} error(s), {len(self.warnings)} warning(s)"

    def categories(self) -> List[str]:
        return sorted({i.category for i in self.issues})

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "is_valid": self.is_valid,
            "total_issues": len(self.issues),
            "issues_by_level": {
                level.name: len([i for i in self.issues if i.level == level]) for level in ValidationLevel
            },
            "issues": [issue.to_dict() for issue in self.issues],
            "summary": self.summary,
        }

    def get_exit_code(self) -> int:
        """0 when valid, 1 when any error-level issue was found"""
        return 0 if self.is_valid else 1
