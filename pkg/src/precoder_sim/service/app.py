"""HTTP face of the simulator: run, verify, generate and timing endpoints.

The service wraps the in-process scenario engine; paths in requests are
resolved on the service host. Domain failures surface as HTTP 400 with
the original error text.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..scenario import (
    ScenarioError,
    ScenarioManifest,
    apply_overrides,
    build_manifest,
    format_report,
    generate_scenario,
    load_manifest,
    parse_config,
    parse_manifest,
    run_scenario,
    verify_scenario,
)
from ..timing import exact_decimal, fixed_us, worst_case_report
from .schemas import (
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    LatencyReportModel,
    RunRequest,
    RunResponse,
    TimingRequest,
    TimingResponse,
    VerifyResponse,
)

app = FastAPI(title="precoder-sim", version=__version__)

# every deliberate failure mode in the core raises one of these
_DOMAIN_ERRORS = (ValueError, RuntimeError)


def _manifest_from(req: RunRequest) -> ScenarioManifest:
    overrides = tuple(req.overrides)
    if (req.manifest_path is None) == (req.manifest_text is None):
        raise HTTPException(400, "provide exactly one of manifest_path, manifest_text")
    if req.manifest_path is not None:
        return load_manifest(req.manifest_path, overrides)
    return parse_manifest(req.manifest_text, base_dir=req.base_dir, overrides=overrides)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    try:
        report = run_scenario(_manifest_from(req))
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(400, str(exc)) from exc
    return RunResponse.from_report(report, format_report(report))


@app.post("/verify", response_model=VerifyResponse)
def verify(req: RunRequest) -> VerifyResponse:
    try:
        result = verify_scenario(_manifest_from(req))
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(400, str(exc)) from exc
    text = format_report(result.run) + (
        f"int_error={result.max_int_error} "
        f"float_error={result.max_float_error:.9e} bound={result.bound:.9e}\n"
    )
    return VerifyResponse.from_report(result, text)


@app.post("/generate", response_model=GenerateResponse)
def generate(req: GenerateRequest) -> GenerateResponse:
    scalars = {
        "seed": str(req.seed),
        "num_users": str(req.users),
        "pattern": req.pattern,
        "slots": str(req.slots),
    }
    try:
        apply_overrides(scalars, tuple(req.overrides))
        manifest = build_manifest(scalars, frames=[])
        path = generate_scenario(manifest.config, manifest.generator, Path(req.out_dir))
        num_frames = len(load_manifest(path).frames)
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(400, str(exc)) from exc
    return GenerateResponse(manifest_path=str(path), num_frames=num_frames)


@app.post("/timing", response_model=TimingResponse)
def timing(req: TimingRequest) -> TimingResponse:
    try:
        if req.config_path is not None and req.config_text is not None:
            raise ScenarioError("provide at most one of config_path, config_text")
        text = req.config_text or ""
        if req.config_path is not None:
            text = Path(req.config_path).read_text()
        config = parse_config(text, tuple(req.overrides))
        report = worst_case_report(config.timing, config.n_t, config.n_l)
    except OSError as exc:
        raise HTTPException(400, f"cannot read config: {exc}") from exc
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(400, str(exc)) from exc
    lines = [
        f"symbol_cycles={exact_decimal(report.per_symbol_cycles[0])}",
        f"slot_cycles={exact_decimal(report.slot_cycles)}",
        f"slot_us={fixed_us(report.slot_us)}",
        f"deadline_met={report.deadline_met}",
        f"nmult={report.n_mult_total}",
        f"dsp={report.dsp_estimate}",
    ]
    return TimingResponse(
        report=LatencyReportModel.from_report(report), text="\n".join(lines) + "\n"
    )
