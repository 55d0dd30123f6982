"""Analytic latency and resource model for the precoder datapath.

Cycle counts carry quarter-cycle resolution, so everything is kept in
exact :class:`~fractions.Fraction` arithmetic and only formatted at the
edges. Per symbol the cost is a fixed load sweep over the whole grid
plus one cycle per allocated resource element:

    cycles = 1/t_clk_ns + re_per_rb * (allocated PRBs) + t_load * total_prb

A fully allocated symbol costs exactly 7644.25 cycles and a full slot
14 * 7644.25 = 107019.5 cycles (428.078 us), safely inside the 500 us
slot boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


class AllocationError(ValueError):
    """Symbol allocation violates the PRB budget or run bounds."""


@dataclass(frozen=True)
class TimingParams:
    slot_boundary_us: int = 500
    total_prb: int = 273
    re_per_rb: int = 12
    max_users: int = 64
    t_load_cycles: int = 16
    t_mult_cycles: int = 2
    t_clk_ns: Fraction = Fraction(4)       # multipliers at 250 MHz
    mem_clk_ns: Fraction = Fraction(16, 5)  # memories at 312.5 MHz
    symbols_per_slot: int = 14

    def __post_init__(self) -> None:
        for name in (
            "slot_boundary_us", "total_prb", "re_per_rb", "max_users",
            "t_load_cycles", "t_mult_cycles", "t_clk_ns", "mem_clk_ns",
            "symbols_per_slot",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def deadline_cycles(self) -> Fraction:
        return Fraction(self.slot_boundary_us * 1000) / self.t_clk_ns


@dataclass(frozen=True)
class Run:
    ian: int
    n_prb: int

    def __post_init__(self) -> None:
        if self.ian < 0:
            raise AllocationError(f"negative ian {self.ian}")
        if self.n_prb < 1:
            raise AllocationError(f"run needs at least one PRB, got {self.n_prb}")


@dataclass(frozen=True)
class SymbolAllocation:
    """Ordered per-user runs within one OFDM symbol."""

    runs: tuple[Run, ...] = ()

    def total_prb(self) -> int:
        return sum(r.n_prb for r in self.runs)


@dataclass(frozen=True)
class LatencyReport:
    per_symbol_cycles: tuple[Fraction, ...]
    slot_cycles: Fraction
    slot_us: Fraction
    deadline_met: bool
    n_mult_total: int
    dsp_estimate: int


def _check_budget(alloc: SymbolAllocation, params: TimingParams) -> int:
    total = alloc.total_prb()
    if total > params.total_prb:
        raise AllocationError(f"{total} PRBs allocated, grid has {params.total_prb}")
    return total


def symbol_latency(alloc: SymbolAllocation, params: TimingParams = TimingParams()) -> Fraction:
    """Fractional cycles to finish one symbol's multiplications."""
    total = _check_budget(alloc, params)
    return (
        Fraction(1) / params.t_clk_ns
        + params.re_per_rb * total
        + params.t_load_cycles * params.total_prb
    )


def user_completion_latency(
    alloc: SymbolAllocation, k: int, params: TimingParams = TimingParams()
) -> Fraction:
    """Cycles until the k-th run (1-based) of the symbol completes."""
    _check_budget(alloc, params)
    if not 1 <= k <= len(alloc.runs):
        raise AllocationError(f"run index {k} out of range 1..{len(alloc.runs)}")
    prefix = sum(r.n_prb for r in alloc.runs[:k])
    return (
        Fraction(1) / params.t_clk_ns
        + params.re_per_rb * prefix
        + params.t_load_cycles * params.total_prb
    )


def slot_latency(
    allocs: list[SymbolAllocation] | tuple[SymbolAllocation, ...],
    params: TimingParams = TimingParams(),
    *,
    n_mult_total: int | None = None,
    dsp_estimate: int = 0,
) -> LatencyReport:
    """Sum the 14 symbol latencies and check the slot deadline."""
    if len(allocs) != params.symbols_per_slot:
        raise AllocationError(
            f"slot needs {params.symbols_per_slot} symbol allocations, got {len(allocs)}"
        )
    per_symbol = tuple(symbol_latency(a, params) for a in allocs)
    slot_cycles = sum(per_symbol, Fraction(0))
    slot_us = slot_cycles * params.t_clk_ns / 1000
    if n_mult_total is None:
        n_mult_total = params.re_per_rb * sum(a.total_prb() for a in allocs)
    return LatencyReport(
        per_symbol_cycles=per_symbol,
        slot_cycles=slot_cycles,
        slot_us=slot_us,
        deadline_met=slot_us <= params.slot_boundary_us,
        n_mult_total=n_mult_total,
        dsp_estimate=dsp_estimate,
    )


def worst_case_nmult(params: TimingParams = TimingParams()) -> int:
    """Multiplications in a fully allocated slot: every RE of every symbol."""
    return params.total_prb * params.symbols_per_slot * params.re_per_rb


def estimate_dsp(n_t: int, n_l: int) -> int:
    """DSP blocks for the n_t x n_l multiplier array.

    Three real multipliers per complex product, each serving two products
    through the 2-cycle multiply, hence 3*n_t*n_l/2.
    """
    if n_t <= 0 or n_l <= 0:
        raise ValueError("dimensions must be positive")
    product = 3 * n_t * n_l
    if product % 2:
        raise ValueError(f"3*{n_t}*{n_l} is odd, time-sharing needs an even count")
    return product // 2


def full_allocation(params: TimingParams = TimingParams(), ian: int = 0) -> SymbolAllocation:
    return SymbolAllocation(runs=(Run(ian=ian, n_prb=params.total_prb),))


def equal_split_allocation(num_users: int, params: TimingParams = TimingParams()) -> SymbolAllocation:
    """All PRBs divided as evenly as possible across num_users runs."""
    if not 1 <= num_users <= params.max_users:
        raise AllocationError(f"num_users {num_users} outside 1..{params.max_users}")
    base, extra = divmod(params.total_prb, num_users)
    runs = tuple(Run(ian=k, n_prb=base + (1 if k < extra else 0)) for k in range(num_users))
    return SymbolAllocation(runs=runs)


def stress_users_fit(
    num_users: int, params: TimingParams = TimingParams()
) -> tuple[bool, LatencyReport]:
    """Deadline check for an equal-split allocation repeated on all symbols."""
    alloc = equal_split_allocation(num_users, params)
    report = slot_latency([alloc] * params.symbols_per_slot, params)
    return report.deadline_met, report


def worst_case_report(
    params: TimingParams = TimingParams(), n_t: int = 64, n_l: int = 8
) -> LatencyReport:
    """LatencyReport for the analytic worst case: every symbol fully allocated."""
    allocs = [full_allocation(params)] * params.symbols_per_slot
    return slot_latency(
        allocs,
        params,
        n_mult_total=worst_case_nmult(params),
        dsp_estimate=estimate_dsp(n_t, n_l),
    )


def exact_decimal(value: Fraction) -> str:
    """Render a fraction whose denominator is 2^a * 5^b as an exact decimal."""
    den = value.denominator
    exp = 0
    while den % 2 == 0:
        den //= 2
        exp += 1
    exp5 = 0
    while den % 5 == 0:
        den //= 5
        exp5 += 1
    if den != 1:
        raise ValueError(f"{value} has no finite decimal expansion")
    digits = max(exp, exp5)
    if digits == 0:
        return str(value.numerator)
    scaled = value.numerator * 10**digits // value.denominator
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{str(frac).zfill(digits)}".rstrip("0").rstrip(".")


def fixed_us(value: Fraction, places: int = 6) -> str:
    """Fixed-point microsecond rendering, rounded half-even like float printing."""
    scaled = value * 10**places
    whole = int(scaled)
    if scaled != whole:
        # round half away from zero on the remaining fraction
        rem = scaled - whole
        if rem >= Fraction(1, 2):
            whole += 1
        elif rem <= Fraction(-1, 2):
            whole -= 1
    sign = "-" if whole < 0 else ""
    whole = abs(whole)
    int_part, frac_part = divmod(whole, 10**places)
    return f"{sign}{int_part}.{str(frac_part).zfill(places)}"
