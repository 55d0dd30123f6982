"""Bit-accurate simulator of a massive-MIMO linear precoder datapath.

Fronthaul packet ingest, beam roster and resource-grid scheduling,
fixed-point Karatsuba matrix multiplication, uplink reordering, and an
analytic timing model, fronted by a scenario runner with an independent
golden reference.
"""

__version__ = "0.1.0"

from .fixedpoint import FixedComplex, WideComplex, karatsuba_mul, quantize
from .pipeline import Direction, Pipeline, SlotResult
from .scenario import (
    GeneratorSpec,
    RunReport,
    ScenarioManifest,
    SystemConfig,
    generate_scenario,
    load_manifest,
    run_scenario,
    verify_scenario,
)
from .timing import LatencyReport, TimingParams

__all__ = [
    "Direction",
    "FixedComplex",
    "GeneratorSpec",
    "LatencyReport",
    "Pipeline",
    "RunReport",
    "ScenarioManifest",
    "SlotResult",
    "SystemConfig",
    "TimingParams",
    "WideComplex",
    "__version__",
    "generate_scenario",
    "karatsuba_mul",
    "load_manifest",
    "quantize",
    "run_scenario",
    "verify_scenario",
]
