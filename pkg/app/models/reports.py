# app/models/reports.py
"""
Request and response models for the command line, the counterpart of the
request/response bodies a web router would validate.
"""
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

Engine = Literal["auto", "fo", "ptime", "oracle"]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    query: str | None = None
    database: str | None = None
    engine: Engine = "auto"
    oracle_cap: int | None = Field(None, gt=0)
    gblock_cap: int | None = Field(None, gt=0)
    workers: int = Field(1, ge=1)
    seed: int = 0
    cases: int = Field(100, ge=0)
    dot: bool = False
    count: bool = False
    witness: bool = False
    trace: bool = False
    as_json: bool = False


class CommandReport(BaseModel):
    """The object printed by --json."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: str
    query_class: str | None = Field(None, alias="class")
    evidence: list[str] = Field(default_factory=list)
    result: bool | int | str | None = None
    stats: dict[str, Any] = Field(default_factory=dict)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class Outcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    report: CommandReport
    exit_code: int = 0
