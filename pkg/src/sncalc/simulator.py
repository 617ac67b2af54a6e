"""Discrete-time tandem FIFO simulator with Markov-modulated on-off sources.

Topology: N identical through sources feed hop 1; every hop also receives M
fresh cross sources and serves the shared queue work-conservingly at a fixed
capacity per slot.  Cross traffic leaves after its hop, through departures
cascade to the next hop within the same slot.  Within one slot, cross
arrivals enqueue ahead of through arrivals, which is the harsher order for
the through flow and keeps bound validation conservative.

The per-hop queue dynamics are computed from cumulative arrival/service
curves (exactly equivalent to walking an ordered queue of (class, bits)
chunks, which the test suite cross-checks against a literal chunk-queue
implementation).  End-to-end measurements follow the cumulative-curve
definitions: backlog B(t) = A(t) - D(t) and virtual delay
W(t) = inf{d >= 0 : A(t - d) <= D(t)}.

Randomness: every source draws from its own counter-based Philox stream
keyed by (base_seed, replication, hop, source index), so adding sources,
hops or replications never perturbs existing streams.  Hop key 0 is the
through-source block at the ingress; cross sources use their hop number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import beta as _beta_dist

from .bounds import BoundResult, StabilityError
from .envelopes import MmooParams

__all__ = [
    "SimScenario",
    "SimResult",
    "ReplicationTrace",
    "HopTrace",
    "TailEstimate",
    "ValidationReport",
    "mmoo_source_step",
    "stationary_on_state",
    "simulate_replication",
    "simulate_tandem",
    "empirical_tail",
    "validate_samples",
    "validate_bound",
]


@dataclass(frozen=True)
class SimScenario:
    """Simulation description; all quantities in bits and slots.

    ``warmup_slots=None`` selects the default of 10x the longer of the two
    mean sojourn times, rounded up.  Samples taken during warmup are
    discarded.
    """

    hops: int
    capacity_per_slot: float
    through_count: int
    cross_count: int
    source: MmooParams
    measure_slots: int
    warmup_slots: Optional[int] = None
    replications: int = 1
    base_seed: int = 0
    backlog_guard_bits: float = 1e12

    def __post_init__(self):
        if self.hops < 1:
            raise ValueError("hops must be >= 1")
        if self.capacity_per_slot <= 0:
            raise ValueError("capacity_per_slot must be positive")
        if self.through_count < 1:
            raise ValueError("through_count must be >= 1")
        if self.cross_count < 0:
            raise ValueError("cross_count must be >= 0")
        if self.measure_slots < 1:
            raise ValueError("measure_slots must be >= 1")
        if self.warmup_slots is not None and self.warmup_slots < 0:
            raise ValueError("warmup_slots must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be a non-negative integer")

    def resolved_warmup(self) -> int:
        if self.warmup_slots is not None:
            return self.warmup_slots
        p = self.source
        sojourns = [1.0 / r for r in (p.r_on_off, p.r_off_on) if r > 0]
        return int(math.ceil(10.0 * max(sojourns))) if sojourns else 0

    def utilization(self) -> float:
        load = (self.through_count + self.cross_count) * self.source.mean_rate
        return load / self.capacity_per_slot


@dataclass(frozen=True, eq=False)
class HopTrace:
    """Cumulative curves for one hop (arrays of length T + 1, index = slot)."""

    arrivals_total: np.ndarray
    departures_total: np.ndarray
    arrivals_through: np.ndarray
    departures_through: np.ndarray
    through_per_slot: np.ndarray
    cross_per_slot: np.ndarray


@dataclass(frozen=True, eq=False)
class ReplicationTrace:
    ingress: np.ndarray           # cumulative through arrivals at hop 1
    egress: np.ndarray            # cumulative through departures from hop H
    delay_samples: np.ndarray     # int slots, one per measured slot
    backlog_samples: np.ndarray   # bits, one per measured slot
    hops: tuple                   # HopTrace per hop when requested, else ()


@dataclass(frozen=True, eq=False)
class SimResult:
    delay_samples: np.ndarray
    backlog_samples: np.ndarray
    replication_seeds: tuple
    measured_slots: int


# ---------------------------------------------------------------------------
# source processes
# ---------------------------------------------------------------------------

def stationary_on_state(rng: np.random.Generator, params: MmooParams) -> bool:
    """Draw the initial state from the stationary on-probability."""
    return bool(rng.random() < params.on_probability)


def mmoo_source_step(on: bool, rng: np.random.Generator, params: MmooParams):
    """One slot of a source: emit by the state at slot start, then switch.

    Per-slot switching probabilities follow the exponential-holding
    discretization 1 - e^{-rate}.  Returns (next_state, emitted_bits).
    """
    bits = params.peak_rate if on else 0.0
    rate = params.r_on_off if on else params.r_off_on
    if rate > 0 and rng.random() < -math.expm1(-rate):
        on = not on
    return on, bits


def _source_rng(base_seed: int, replication: int, hop: int, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence([base_seed, replication, hop, index])
    return np.random.Generator(np.random.Philox(seq))


def _on_runs(rng: np.random.Generator, params: MmooParams, total: int):
    """On-intervals [start, end) of one source over ``total`` slots.

    Sojourns are geometric with parameter 1 - e^{-rate}; a zero rate makes
    the corresponding state absorbing.
    """
    p_leave_on = -math.expm1(-params.r_on_off)
    p_leave_off = -math.expm1(-params.r_off_on)
    on = stationary_on_state(rng, params)

    if p_leave_on == 0.0:  # on state absorbs
        if on:
            return np.array([0]), np.array([total])
        first_off = int(rng.geometric(p_leave_off))
        if first_off >= total:
            return np.array([], dtype=np.int64), np.array([], dtype=np.int64)
        return np.array([first_off]), np.array([total])
    if p_leave_off == 0.0:  # off state absorbs
        if not on:
            return np.array([], dtype=np.int64), np.array([], dtype=np.int64)
        first_on = int(rng.geometric(p_leave_on))
        return np.array([0]), np.array([min(first_on, total)])

    cycle = 1.0 / p_leave_on + 1.0 / p_leave_off
    block = max(16, int(1.2 * total / cycle) + 4)
    starts_parts, ends_parts = [], []
    t = 0
    while t < total:
        cur = rng.geometric(p_leave_on if on else p_leave_off, block)
        alt = rng.geometric(p_leave_off if on else p_leave_on, block)
        lengths = np.empty(2 * block, dtype=np.int64)
        lengths[0::2] = cur
        lengths[1::2] = alt
        ends = t + np.cumsum(lengths)
        starts = np.empty_like(ends)
        starts[0] = t
        starts[1:] = ends[:-1]
        sel = slice(0, None, 2) if on else slice(1, None, 2)
        starts_parts.append(starts[sel])
        ends_parts.append(ends[sel])
        t = int(ends[-1])  # even number of sojourns: state unchanged
    starts = np.concatenate(starts_parts)
    ends = np.concatenate(ends_parts)
    keep = starts < total
    return starts[keep], np.minimum(ends[keep], total)


def _on_count(base_seed: int, replication: int, hop: int, count: int,
              params: MmooParams, total: int) -> np.ndarray:
    """Number of on sources per slot, summed over ``count`` sources."""
    delta = np.zeros(total + 1, dtype=np.int64)
    for j in range(count):
        rng = _source_rng(base_seed, replication, hop, j)
        starts, ends = _on_runs(rng, params, total)
        np.add.at(delta, starts, 1)
        np.add.at(delta, ends, -1)
    return np.cumsum(delta[:total])


# ---------------------------------------------------------------------------
# queueing
# ---------------------------------------------------------------------------

def _hop_curves(through_per_slot: np.ndarray, cross_per_slot: np.ndarray, capacity: float):
    """FIFO work-conserving hop over cumulative curves.

    Arrivals of slot s are available for service in slot s; within the slot
    the cross bits sit ahead of the through bits in the queue.
    Returns (A_total, D_total, A_through, D_through), length T + 1.
    """
    total_slots = len(through_per_slot)
    a_tot = through_per_slot + cross_per_slot
    arr_cum = np.empty(total_slots + 1)
    arr_cum[0] = 0.0
    np.cumsum(a_tot, out=arr_cum[1:])
    service_line = capacity * np.arange(total_slots + 1, dtype=float)
    dep_cum = service_line + np.minimum.accumulate(arr_cum - service_line)

    thr_cum = np.empty(total_slots + 1)
    thr_cum[0] = 0.0
    np.cumsum(through_per_slot, out=thr_cum[1:])
    # slots fully drained by dep_cum[t], then a partial slot served cross-first
    full = np.searchsorted(arr_cum, dep_cum, side="right") - 1
    thr_pad = np.append(through_per_slot, 0.0)
    cross_pad = np.append(cross_per_slot, 0.0)
    in_partial = dep_cum - arr_cum[full]
    thr_partial = np.clip(in_partial - cross_pad[full], 0.0, thr_pad[full])
    dep_thr = thr_cum[full] + thr_partial
    return arr_cum, dep_cum, thr_cum, dep_thr


def simulate_replication(scenario: SimScenario, replication: int, keep_hops: bool = False) -> ReplicationTrace:
    """Run one replication; deterministic in (scenario, replication)."""
    warmup = scenario.resolved_warmup()
    total = warmup + scenario.measure_slots
    peak = scenario.source.peak_rate
    cap = scenario.capacity_per_slot

    through_per_slot = peak * _on_count(
        scenario.base_seed, replication, 0, scenario.through_count, scenario.source, total
    ).astype(float)

    hop_traces = []
    ingress = None
    dep_thr = None
    incoming = through_per_slot
    for hop in range(1, scenario.hops + 1):
        cross_per_slot = peak * _on_count(
            scenario.base_seed, replication, hop, scenario.cross_count, scenario.source, total
        ).astype(float)
        arr_cum, dep_cum, thr_cum, dep_thr = _hop_curves(incoming, cross_per_slot, cap)
        max_queue = float(np.max(arr_cum - dep_cum))
        if max_queue > scenario.backlog_guard_bits:
            raise StabilityError(
                f"hop {hop} queue reached {max_queue:.3g} bits "
                f"(guard {scenario.backlog_guard_bits:.3g}); "
                f"offered load utilization is {scenario.utilization():.3f}"
            )
        if hop == 1:
            ingress = thr_cum
        if keep_hops:
            hop_traces.append(HopTrace(arr_cum, dep_cum, thr_cum, dep_thr,
                                       incoming.copy(), cross_per_slot))
        incoming = np.diff(dep_thr)

    slots = np.arange(warmup + 1, total + 1)
    egress = dep_thr
    backlog = ingress[slots] - egress[slots]
    latest_served = np.searchsorted(ingress, egress[slots], side="right") - 1
    delays = np.maximum(0, slots - latest_served)
    return ReplicationTrace(
        ingress=ingress,
        egress=egress,
        delay_samples=delays.astype(np.int64),
        backlog_samples=backlog,
        hops=tuple(hop_traces),
    )


def _replication_samples(scenario: SimScenario, replication: int):
    trace = simulate_replication(scenario, replication)
    return trace.delay_samples, trace.backlog_samples


def simulate_tandem(scenario: SimScenario, jobs: int = 1) -> SimResult:
    """All replications of a scenario, merged in replication order.

    Aborts with :class:`StabilityError` when the offered load exceeds the
    capacity (utilization > 1) or a queue outgrows the configured guard.
    """
    util = scenario.utilization()
    if util > 1.0:
        raise StabilityError(
            f"offered load {util:.3f} x capacity per hop exceeds 1; "
            f"{scenario.through_count}+{scenario.cross_count} sources at mean rate "
            f"{scenario.source.mean_rate:.6g} bits/slot against capacity "
            f"{scenario.capacity_per_slot:.6g} bits/slot"
        )
    reps = range(scenario.replications)
    if jobs > 1 and scenario.replications > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replication_samples, [scenario] * scenario.replications, reps))
    else:
        results = [_replication_samples(scenario, r) for r in reps]
    delays = np.concatenate([r[0] for r in results])
    backlogs = np.concatenate([r[1] for r in results])
    seeds = tuple((scenario.base_seed, r) for r in reps)
    return SimResult(
        delay_samples=delays,
        backlog_samples=backlogs,
        replication_seeds=seeds,
        measured_slots=scenario.measure_slots * scenario.replications,
    )


# ---------------------------------------------------------------------------
# empirical tails and bound validation
# ---------------------------------------------------------------------------

class TailEstimate(NamedTuple):
    frequency: float
    upper_confidence: float
    exceed_count: int
    sample_count: int


def empirical_tail(samples: np.ndarray, threshold: float, confidence: float = 0.95) -> TailEstimate:
    """Fraction of samples strictly above threshold, with a one-sided
    Clopper-Pearson upper confidence limit."""
    samples = np.asarray(samples)
    n = samples.size
    if n == 0:
        raise ValueError("samples must be non-empty")
    k = int(np.count_nonzero(samples > threshold))
    if k == n:
        upper = 1.0
    else:
        upper = float(_beta_dist.ppf(confidence, k + 1, n - k))
    return TailEstimate(frequency=k / n, upper_confidence=upper, exceed_count=k, sample_count=n)


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    threshold: float
    epsilon: float
    sample_count: int
    exceed_count: int
    frequency: float
    upper_confidence: float
    slack: float
    verdict: str                  # "pass" | "fail" | "inconclusive"
    warnings: tuple

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def validate_samples(samples: np.ndarray, kind: str, threshold: float, epsilon: float,
                     slack: float = 0.0, min_expected_exceedances: float = 100.0) -> ValidationReport:
    """Check that an analytic tail bound dominates the empirical tail.

    Pass means the one-sided 95% upper confidence limit of the exceedance
    frequency stays at or below epsilon * (1 + slack).  When the sample
    budget cannot resolve epsilon (epsilon * n below the expected-exceedance
    floor) the verdict is "inconclusive" and a warning is attached.
    """
    tail = empirical_tail(samples, threshold)
    warnings = []
    if epsilon * tail.sample_count < min_expected_exceedances:
        warnings.append(
            f"sample budget too small for epsilon={epsilon:g}: expected "
            f"exceedances {epsilon * tail.sample_count:.3g} < {min_expected_exceedances:g}"
        )
        verdict = "inconclusive"
    else:
        verdict = "pass" if tail.upper_confidence <= epsilon * (1.0 + slack) else "fail"
    return ValidationReport(
        kind=kind,
        threshold=threshold,
        epsilon=epsilon,
        sample_count=tail.sample_count,
        exceed_count=tail.exceed_count,
        frequency=tail.frequency,
        upper_confidence=tail.upper_confidence,
        slack=slack,
        verdict=verdict,
        warnings=tuple(warnings),
    )


def validate_bound(scenario: SimScenario, bound: BoundResult, epsilon: float,
                   slack: float = 0.0, jobs: int = 1) -> ValidationReport:
    """Simulate the scenario and validate one bound against its tail."""
    sim = simulate_tandem(scenario, jobs=jobs)
    samples = sim.delay_samples if bound.kind == "delay" else sim.backlog_samples
    return validate_samples(samples, bound.kind, bound.value, epsilon, slack=slack)
