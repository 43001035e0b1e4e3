"""Slot-level discrete-event simulator for two-modality transmission policies.

The channel carries one feature at a time; a transmission of modality m
started at slot S delivers at slot S + t_m, at which instant that modality's
age resets to t_m while the other keeps growing.  The next transmission starts
at the delivery slot (work conservation).  Slot t's loss is evaluated at the
age vector after applying that slot's delivery, so a segment of simulated
slots from one restart state to just before the next reproduces the analytic
half-cycle cost term for term.

Simulations always evaluate the surface in CLAMP mode through a fresh view:
random policies make ages unbounded, and the number of clamped lookups is
reported in the summary rather than aborting a long run.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .cycles import (Modality, RestartState, StationaryPolicy, SystemConfig,
                     full_cycle_length)
from .surface import BoundaryPolicy, LossSurface


@dataclass(frozen=True, slots=True)
class InFlight:
    """The transmission currently occupying the channel."""

    modality: Modality
    start: int
    delivery: int


@dataclass(frozen=True, slots=True)
class SimState:
    t: int
    aoi: tuple[int, int]
    in_flight: InFlight | None


def step_aoi(state: SimState, config: SystemConfig) -> SimState:
    """Advance one slot: ages grow by one, except a delivery resets its modality.

    A completed transmission leaves ``in_flight`` empty; the policy layer fills
    it again at the same slot.
    """
    t = state.t + 1
    a1, a2 = state.aoi
    tx = state.in_flight
    if tx is not None and tx.delivery == t:
        if tx.modality is Modality.M1:
            return SimState(t, (config.t1, a2 + 1), None)
        return SimState(t, (a1 + 1, config.t2), None)
    return SimState(t, (a1 + 1, a2 + 1), tx)


# ---------------------------------------------------------------------------
# policies

@dataclass(frozen=True)
class IndexThreshold:
    """Stationary threshold policy: tau extra runs per restart, then switch."""

    policy: StationaryPolicy


@dataclass(frozen=True)
class RoundRobin:
    """Strict alternation, starting with the modality the initial restart state is stale on."""


@dataclass(frozen=True)
class UniformRandom:
    """Each transmission picks a modality uniformly at random.

    Stream semantics: decisions consume one draw each from
    ``numpy.random.Generator(PCG64(seed)).integers(0, 2)``, in transmission
    order; equal seeds reproduce equal schedules on any platform.
    """

    seed: int


PolicyKind = IndexThreshold | RoundRobin | UniformRandom


def _decider(policy: PolicyKind, initial_state: RestartState, config: SystemConfig):
    """Stateful decision stream, returning modality ints in transmission order."""
    first = initial_state.modality
    if isinstance(policy, IndexThreshold):
        tau1, tau2 = policy.policy.tau1, policy.policy.tau2
        if tau1 > config.tau_max or tau2 > config.tau_max:
            raise ValueError(f"policy {policy.policy} exceeds tau_max={config.tau_max}")
        phase1 = [1] * tau1 + [2]
        phase2 = [2] * tau2 + [1]
        pattern = phase1 + phase2 if first is Modality.M1 else phase2 + phase1
        return itertools.cycle(pattern).__next__
    if isinstance(policy, RoundRobin):
        start = 2 if first is Modality.M1 else 1
        return itertools.cycle([start, 3 - start]).__next__
    if isinstance(policy, UniformRandom):
        rng = np.random.Generator(np.random.PCG64(policy.seed))
        draw = rng.integers

        def next_random() -> int:
            return 1 + int(draw(0, 2))

        return next_random
    raise TypeError(f"unknown policy kind {policy!r}")


def _policy_label(policy: PolicyKind) -> str:
    if isinstance(policy, IndexThreshold):
        return "index"
    if isinstance(policy, RoundRobin):
        return "rr"
    return "rand"


# ---------------------------------------------------------------------------
# traces

@dataclass(frozen=True, slots=True)
class Transmission:
    n: int
    modality: Modality
    start: int
    delivery: int


@dataclass(frozen=True)
class SimSummary:
    policy: str
    horizon: int
    warmup: int
    total_loss: float
    avg_loss: float
    clamp_count: int
    seed: int | None = None
    tau1: int | None = None
    tau2: int | None = None

    def to_dict(self) -> dict:
        out = {
            "policy": self.policy,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "avg_loss": self.avg_loss,
            "total_loss": self.total_loss,
            "clamp_count": self.clamp_count,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        if self.tau1 is not None:
            out["tau1"] = self.tau1
            out["tau2"] = self.tau2
        return out


@dataclass(frozen=True)
class SimTrace:
    """Per-slot ages and losses (including warmup slots), transmissions, and the summary."""

    delta1: np.ndarray
    delta2: np.ndarray
    loss: np.ndarray
    transmissions: tuple[Transmission, ...]
    summary: SimSummary

    @property
    def slots(self) -> int:
        return len(self.loss)


def run(surface: LossSurface, config: SystemConfig, policy: PolicyKind, horizon: int,
        initial_state: RestartState | None = None, warmup: int = 0) -> SimTrace:
    """Simulate warmup + horizon slots from a restart state.

    The trace records every simulated slot; the summary statistics cover only
    the last ``horizon`` slots, so ``avg_loss == total_loss / horizon`` holds
    exactly.  The given surface is never mutated: lookups go through a fresh
    CLAMP-mode view whose clamp count lands in the summary.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if warmup < 0:
        raise ValueError(f"warmup must be >= 0, got {warmup}")
    if initial_state is None:
        initial_state = RestartState(Modality.M1)

    view = surface.with_boundary(BoundaryPolicy.CLAMP)
    decide = _decider(policy, initial_state, config)
    ev = view.eval
    t1, t2 = config.t1, config.t2
    total_slots = warmup + horizon

    d1 = np.empty(total_slots, dtype=np.int64)
    d2 = np.empty(total_slots, dtype=np.int64)
    loss = np.empty(total_slots, dtype=np.float64)
    transmissions: list[Transmission] = []

    a1, a2 = initial_state.aoi_vector(config)
    m = decide()
    delivery = t1 if m == 1 else t2
    transmissions.append(Transmission(0, Modality(m), 0, delivery))

    for t in range(total_slots):
        if t > 0:
            if t == delivery:
                if m == 1:
                    a1 = t1
                    a2 += 1
                else:
                    a2 = t2
                    a1 += 1
                m = decide()
                delivery = t + (t1 if m == 1 else t2)
                transmissions.append(Transmission(len(transmissions), Modality(m), t, delivery))
            else:
                a1 += 1
                a2 += 1
        d1[t] = a1
        d2[t] = a2
        loss[t] = ev(a1, a2)

    total_loss = 0.0
    for x in loss[warmup:].tolist():
        total_loss += x
    avg_loss = total_loss / horizon

    seed = policy.seed if isinstance(policy, UniformRandom) else None
    tau1 = policy.policy.tau1 if isinstance(policy, IndexThreshold) else None
    tau2 = policy.policy.tau2 if isinstance(policy, IndexThreshold) else None
    summary = SimSummary(
        policy=_policy_label(policy),
        horizon=horizon,
        warmup=warmup,
        total_loss=total_loss,
        avg_loss=avg_loss,
        clamp_count=view.clamp_count,
        seed=seed,
        tau1=tau1,
        tau2=tau2,
    )
    return SimTrace(d1, d2, loss, tuple(transmissions), summary)


def write_trace_csv(trace: SimTrace, path) -> None:
    """Per-slot trace: t,delta1,delta2,loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "delta1", "delta2", "loss"])
        d1, d2 = trace.delta1.tolist(), trace.delta2.tolist()
        for t, value in enumerate(trace.loss.tolist()):
            writer.writerow([t, d1[t], d2[t], repr(value)])


def write_transmissions_csv(trace: SimTrace, path) -> None:
    """Per-transmission log: n,modality,start,delivery."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "modality", "start", "delivery"])
        for tx in trace.transmissions:
            writer.writerow([tx.n, int(tx.modality), tx.start, tx.delivery])


# ---------------------------------------------------------------------------
# policy comparison

@dataclass(frozen=True)
class PolicyRow:
    policy: str
    avg_loss: float
    clamp_count: int
    runs: int


@dataclass(frozen=True)
class PolicyComparison:
    rows: tuple[PolicyRow, ...]
    reductions: dict[str, float]
    index_policy: StationaryPolicy | None
    l_opt: float | None

    def row(self, label: str) -> PolicyRow:
        for row in self.rows:
            if row.policy == label:
                return row
        raise KeyError(label)


def _snap_to_cycles(horizon: int, cycle: int) -> int:
    # deterministic policies are measured over whole cycles so their average
    # is the exact long-run value; at least one full cycle is always simulated
    return max(cycle, (horizon // cycle) * cycle)


def compare_policies(surface: LossSurface, config: SystemConfig, horizon: int,
                     seeds: tuple[int, ...] = (1, 2, 3, 4, 5),
                     include: tuple[str, ...] = ("index", "rr", "rand"),
                     tol: float = 1e-9) -> PolicyComparison:
    """Average losses of the index policy and baselines on one instance.

    Deterministic policies run over the largest whole number of their cycles
    fitting in ``horizon`` (their time average is then the exact stationary
    value); the random baseline runs the full horizon once per seed and
    reports the mean over seeds.  Reductions are (baseline - index) / baseline
    when both sides are present.
    """
    from .solver import solve_threshold  # deferred: solver depends on cycles too

    rows: list[PolicyRow] = []
    index_avg = None
    index_policy = None
    l_opt = None
    for label in include:
        if label == "index":
            solution = solve_threshold(surface, config, tol)
            index_policy = solution.policy
            l_opt = solution.l_opt
            cycle = full_cycle_length(config, index_policy)
            trace = run(surface, config, IndexThreshold(index_policy),
                        _snap_to_cycles(horizon, cycle))
            index_avg = trace.summary.avg_loss
            rows.append(PolicyRow("index", index_avg, trace.summary.clamp_count, 1))
        elif label == "rr":
            cycle = config.t1 + config.t2
            trace = run(surface, config, RoundRobin(), _snap_to_cycles(horizon, cycle))
            rows.append(PolicyRow("rr", trace.summary.avg_loss, trace.summary.clamp_count, 1))
        elif label == "rand":
            total = 0.0
            clamps = 0
            for seed in seeds:
                trace = run(surface, config, UniformRandom(seed), horizon)
                total += trace.summary.avg_loss
                clamps += trace.summary.clamp_count
            rows.append(PolicyRow("rand", total / len(seeds), clamps, len(seeds)))
        else:
            raise ValueError(f"unknown policy label {label!r}")

    reductions: dict[str, float] = {}
    if index_avg is not None:
        for row in rows:
            if row.policy == "index":
                continue
            reductions[row.policy] = (0.0 if row.avg_loss == 0.0
                                      else (row.avg_loss - index_avg) / row.avg_loss)
    return PolicyComparison(tuple(rows), reductions, index_policy, l_opt)
