"""Exception hierarchy shared across the toolkit."""
from __future__ import annotations


class QAForgeError(Exception):
    """Base class; every error raised by this package derives from it."""

    code = "Error"

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


# --- reference ingest -------------------------------------------------------

class UnbalancedDelimiter(QAForgeError):
    code = "UnbalancedDelimiter"

    def __init__(self, position: int, message: str = ""):
        self.position = position
        super().__init__(message or f"unbalanced delimiter at offset {position}")


class MissingEntryKey(QAForgeError):
    code = "MissingEntryKey"


class NotADoi(QAForgeError):
    code = "NotADoi"


class MalformedFieldLine(QAForgeError):
    code = "MalformedFieldLine"

    def __init__(self, line_number: int, message: str = ""):
        self.line_number = line_number
        super().__init__(message or f"malformed field line {line_number}")


class ParseError(QAForgeError):
    code = "ParseError"

    def __init__(self, record_index: int, message: str = ""):
        self.record_index = record_index
        super().__init__(message or f"corrupt record at index {record_index}")


class IoError(QAForgeError):
    code = "IoError"


# --- QA validation ----------------------------------------------------------

class ValidationError(QAForgeError):
    code = "ValidationError"


class EmptyQuestion(ValidationError):
    code = "EmptyQuestion"


class EmptyAnswer(ValidationError):
    code = "EmptyAnswer"


class UnknownCategory(ValidationError):
    code = "UnknownCategory"


class BadPmid(ValidationError):
    code = "BadPmid"


class BadDoi(ValidationError):
    code = "BadDoi"


# --- templates --------------------------------------------------------------

class UnbalancedPlaceholder(QAForgeError):
    code = "UnbalancedPlaceholder"

    def __init__(self, offset: int, message: str = ""):
        self.offset = offset
        super().__init__(message or f"unbalanced placeholder at byte offset {offset}")


class BadIdentifier(QAForgeError):
    code = "BadIdentifier"


class MissingVariable(QAForgeError):
    code = "MissingVariable"

    def __init__(self, name: str):
        self.name = name
        super().__init__(name)


# --- fine-tune orchestration ------------------------------------------------

class SizeExceedsPopulation(QAForgeError):
    code = "SizeExceedsPopulation"


class ShapeMismatch(QAForgeError):
    code = "ShapeMismatch"


class EmptyManifest(QAForgeError):
    code = "EmptyManifest"


# --- generation -------------------------------------------------------------

class SkippedNoAbstract(QAForgeError):
    code = "SkippedNoAbstract"


class BackendError(QAForgeError):
    code = "BackendError"


class NoJsonFound(QAForgeError):
    code = "NoJsonFound"


class MissingKeys(QAForgeError):
    code = "MissingKeys"

    def __init__(self, *keys: str):
        self.keys = list(keys)
        super().__init__(", ".join(keys))


class NonStringValue(QAForgeError):
    code = "NonStringValue"


class EmptyAfterCleaning(QAForgeError):
    code = "EmptyAfterCleaning"


class OverLength(QAForgeError):
    code = "OverLength"

    def __init__(self, field: str, length: int, limit: int):
        self.field = field
        self.length = length
        self.limit = limit
        super().__init__(f"{field}: {length} > limit {limit}")


# --- evaluation -------------------------------------------------------------

class InvalidComponentValue(QAForgeError):
    code = "InvalidComponentValue"


class MixedQaRef(QAForgeError):
    code = "MixedQaRef"


class EmptyReviewSet(QAForgeError):
    code = "EmptyReviewSet"


class EmptyInput(QAForgeError):
    code = "EmptyInput"
