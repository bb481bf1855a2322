# app/utils/errors.py
"""
Error hierarchy shared by the library and the CLI.

Every error carries an exit code and a human-readable detail, the same way an
HTTP error carries a status code and a detail string. Library code raises;
only app/main.py turns an error into a process exit code.

  1  parse / usage
  2  semantic (self-joins, inconsistent consistent-relation input, ...)
  3  engine capability (wrong engine for the query class, broken preconditions)
"""


class CQAError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ---- exit 1: parse / usage ----
class ParseError(CQAError):
    exit_code = 1

    def __init__(self, detail: str, line: int | None = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class UsageError(CQAError):
    exit_code = 1


# ---- exit 2: semantic ----
class SemanticError(CQAError):
    exit_code = 2


class SelfJoinError(SemanticError):
    pass


class ArityMismatch(SemanticError):
    pass


class UnknownRelation(SemanticError):
    pass


class InconsistentConsistentRelation(SemanticError):
    pass


class LengthMismatch(SemanticError):
    pass


class AtomNotInQuery(SemanticError):
    pass


class UnknownVariable(SemanticError):
    pass


class NoConsistentAtom(SemanticError):
    pass


# ---- exit 3: engine capability ----
class CapabilityError(CQAError):
    exit_code = 3


class NotFOQuery(CapabilityError):
    pass


class PreconditionError(CapabilityError):
    pass


class ShapeError(CapabilityError):
    pass


class RepairSpaceTooLarge(CapabilityError):
    pass


class GBlockTooLarge(CapabilityError):
    pass


class NotGPurified(CapabilityError):
    pass


class UnsupportedStructure(CapabilityError):
    pass
