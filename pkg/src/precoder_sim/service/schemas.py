"""Request/response models for the HTTP service.

Cycle counts are exact rationals internally, so they cross the wire as
exact-decimal strings rather than floats.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..scenario import RunReport, SlotReport, VerifyReport
from ..timing import LatencyReport, exact_decimal, fixed_us


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    manifest_path: str | None = None
    manifest_text: str | None = None
    base_dir: str = "."
    overrides: list[str] = Field(default_factory=list)


class LatencyReportModel(BaseModel):
    per_symbol_cycles: list[str]
    slot_cycles: str
    slot_us: str
    deadline_met: bool
    n_mult_total: int
    dsp_estimate: int

    @classmethod
    def from_report(cls, report: LatencyReport) -> "LatencyReportModel":
        return cls(
            per_symbol_cycles=[exact_decimal(c) for c in report.per_symbol_cycles],
            slot_cycles=exact_decimal(report.slot_cycles),
            slot_us=fixed_us(report.slot_us),
            deadline_met=report.deadline_met,
            n_mult_total=report.n_mult_total,
            dsp_estimate=report.dsp_estimate,
        )


class SlotReportModel(BaseModel):
    slot_id: int
    cycles: str
    us: str
    deadline: bool
    nmult: int
    err: int
    sat: int
    checksum: str

    @classmethod
    def from_report(cls, slot: SlotReport) -> "SlotReportModel":
        return cls(
            slot_id=slot.slot_id,
            cycles=exact_decimal(slot.latency.slot_cycles),
            us=fixed_us(slot.latency.slot_us),
            deadline=slot.latency.deadline_met,
            nmult=slot.n_mult,
            err=slot.max_error,
            sat=slot.saturation_count,
            checksum=slot.checksum,
        )


class RunResponse(BaseModel):
    slots: list[SlotReportModel]
    passed: bool
    report_text: str

    @classmethod
    def from_report(cls, report: RunReport, text: str) -> "RunResponse":
        return cls(
            slots=[SlotReportModel.from_report(s) for s in report.slots],
            passed=report.passed,
            report_text=text,
        )


class VerifyResponse(BaseModel):
    slots: list[SlotReportModel]
    passed: bool
    report_text: str
    max_int_error: int
    max_float_error: float
    bound: float

    @classmethod
    def from_report(cls, verify: VerifyReport, text: str) -> "VerifyResponse":
        return cls(
            slots=[SlotReportModel.from_report(s) for s in verify.run.slots],
            passed=verify.passed,
            report_text=text,
            max_int_error=verify.max_int_error,
            max_float_error=verify.max_float_error,
            bound=verify.bound,
        )


class GenerateRequest(BaseModel):
    out_dir: str
    seed: int = 0
    users: int = 1
    pattern: str = "contiguous"
    slots: int = 1
    overrides: list[str] = Field(default_factory=list)


class GenerateResponse(BaseModel):
    manifest_path: str
    num_frames: int


class TimingRequest(BaseModel):
    config_path: str | None = None
    config_text: str | None = None
    overrides: list[str] = Field(default_factory=list)


class TimingResponse(BaseModel):
    report: LatencyReportModel
    text: str
