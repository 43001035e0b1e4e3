"""Index-threshold solver for the optimal stationary transmission schedule.

The optimal schedule switches modalities the first time the current modality's
index reaches the optimal average loss.  The index of staying for another run
after theta runs is the cheapest per-slot rate at which the half-cycle cost
can be extended, minimized over how many further runs the extension spans.
The optimal average loss itself is the unique root of a balance function g:
total cycle cost of the threshold policy at beta, minus beta times its cycle
length.  g is concave, continuous, and strictly decreasing, so bisection on a
bracket derived from the surface bound always lands on the root.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cycles import CostTable, Modality, StationaryPolicy, SystemConfig, cycle_duration
from .errors import BracketError, OutOfDomain
from .surface import LossSurface, required_domain

_MAX_BISECT = 500


@dataclass(frozen=True)
class IndexTable:
    """Per-modality index values gamma_m[theta], theta in 0..tau_max-1.

    gamma_m[theta] is the smallest per-slot rate over extensions of k more
    runs, k in 1..tau_max-theta; ``witness`` records the k attaining it (ties
    broken toward the smallest k).  Empty when tau_max == 0.
    """

    tau_max: int
    gamma1: tuple[float, ...]
    gamma2: tuple[float, ...]
    witness1: tuple[int, ...]
    witness2: tuple[int, ...]

    def gamma(self, modality: Modality) -> tuple[float, ...]:
        return self.gamma1 if modality is Modality.M1 else self.gamma2

    def witness(self, modality: Modality) -> tuple[int, ...]:
        return self.witness1 if modality is Modality.M1 else self.witness2


def _index_column(surface: LossSurface, config: SystemConfig,
                  modality: Modality) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Index values and witnesses for one modality.

    The extension cost (half-cycle cost at theta+k minus at theta) telescopes
    into a sum over only the slots that actually differ, so it is computed
    directly from those terms instead of subtracting two large memoized
    totals.  That keeps the k=1 entries exact: with equal transmission times
    the old and new switch segments cancel term-for-term and nothing is lost
    to float cancellation.
    """
    t_own = config.transmission_time(modality)
    t_other = config.transmission_time(modality.other)
    ev = surface.eval

    if modality is Modality.M1:
        def term(x: int, i: int) -> float:
            return ev(t_own + i, x + i)
    else:
        def term(x: int, i: int) -> float:
            return ev(x + i, t_own + i)

    def anchor(j: int) -> int:
        # other-modality age at the start of the j-th same-modality run
        return j * t_own + t_other

    tau_max = config.tau_max
    if tau_max == 0:
        return (), ()

    # cost of the j-th same-modality run (j >= 2 is all an extension ever adds whole)
    blocks = {}
    for j in range(2, tau_max + 1):
        x = anchor(j)
        s = 0.0
        for i in range(t_own):
            s += term(x, i)
        blocks[j] = s

    # cost of the switch segment when it happens after run tau
    tails = {}
    for tau in range(1, tau_max + 1):
        x = anchor(tau + 1)
        s = 0.0
        for i in range(t_other):
            s += term(x, i)
        tails[tau] = s

    def residue(theta: int) -> float:
        # first added run minus the displaced switch segment; their slots
        # coincide except for the overhang of the longer transmission time
        x = anchor(theta + 1)
        if t_own > t_other:
            s = 0.0
            for i in range(t_other, t_own):
                s += term(x, i)
            return s
        if t_own < t_other:
            s = 0.0
            for i in range(t_own, t_other):
                s += term(x, i)
            return -s
        return 0.0

    gamma: list[float] = []
    witness: list[int] = []
    for theta in range(tau_max):
        acc = residue(theta)
        best = float("inf")
        best_k = 0
        for k in range(1, tau_max - theta + 1):
            if k >= 2:
                acc += blocks[theta + k]
            rate = (acc + tails[theta + k]) / (k * t_own)
            if rate < best:
                best = rate
                best_k = k
        gamma.append(best)
        witness.append(best_k)
    return tuple(gamma), tuple(witness)


def build_index_table(surface: LossSurface, config: SystemConfig) -> IndexTable:
    g1, w1 = _index_column(surface, config, Modality.M1)
    g2, w2 = _index_column(surface, config, Modality.M2)
    return IndexTable(config.tau_max, g1, g2, w1, w2)


def tau_opt(index_table: IndexTable, config: SystemConfig,
            modality: Modality, beta: float) -> int:
    """Threshold decision: first theta whose index reaches beta, capped at tau_max."""
    if index_table.tau_max != config.tau_max:
        raise ValueError(f"index table built for tau_max={index_table.tau_max}, "
                         f"config has {config.tau_max}")
    for theta, value in enumerate(index_table.gamma(modality)):
        if value >= beta:
            return theta
    return config.tau_max


def _g(costs: CostTable, index_table: IndexTable, config: SystemConfig, beta: float) -> float:
    p1 = tau_opt(index_table, config, Modality.M1, beta)
    p2 = tau_opt(index_table, config, Modality.M2, beta)
    total_cost = costs.cost(Modality.M1, p1) + costs.cost(Modality.M2, p2)
    total_len = (p1 + 1) * config.t1 + (p2 + 1) * config.t2
    return total_cost - beta * total_len


def g_value(surface: LossSurface, config: SystemConfig, index_table: IndexTable,
            beta: float, costs: CostTable | None = None) -> float:
    """Balance function at beta.  Pass a shared CostTable when sweeping many betas."""
    if costs is None:
        costs = CostTable(surface, config)
    return _g(costs, index_table, config, beta)


@dataclass(frozen=True)
class ThresholdSolution:
    """Root of the balance function and the threshold policy it certifies.

    ``bracket`` is the final bisection interval (width <= tol) and l_opt its
    midpoint; ``residual`` is g(l_opt).  ``saturated`` flags a policy pinned
    at tau_max, where a larger cap might still lower the average loss.
    """

    l_opt: float
    policy: StationaryPolicy
    iterations: int
    residual: float
    bracket: tuple[float, float]
    saturated: bool


def solve_threshold(surface: LossSurface, config: SystemConfig,
                    tol: float = 1e-9) -> ThresholdSolution:
    """Find the optimal average loss and its threshold policy by bisection.

    The initial bracket is [-bound_m, +bound_m]: every policy's average loss
    is a mean of surface values, so the root lies inside.  One widening pass
    absorbs the boundary case where the root sits exactly on the bound; a
    bracket that still fails to straddle the root raises BracketError.
    Bisection continues until both the bracket width and the residual at the
    midpoint are within tol.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    d1_req, d2_req = required_domain(config)
    if not surface.covers(d1_req, d2_req):
        raise OutOfDomain(d1_req, d2_req, surface.d1_max, surface.d2_max,
                          note=f"surface too small for t1={config.t1}, t2={config.t2}, "
                               f"tau_max={config.tau_max}")

    costs = CostTable(surface, config)
    index_table = build_index_table(surface, config)

    def g(beta: float) -> float:
        return _g(costs, index_table, config, beta)

    bound = surface.bound_m
    lo, hi = -bound, bound
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    if not (g(lo) >= 0.0 >= g(hi)):
        lo, hi = 2.0 * lo - 1.0, 2.0 * hi + 1.0
        if not (g(lo) >= 0.0 >= g(hi)):
            raise BracketError(
                f"balance function does not change sign on [{lo}, {hi}]; "
                "surface and configuration are inconsistent")

    iterations = 0
    while iterations < _MAX_BISECT:
        mid = 0.5 * (lo + hi)
        iterations += 1
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(g(0.5 * (lo + hi))) <= tol:
            break

    l_opt = 0.5 * (lo + hi)
    # the policy is read at the left bracket end: g(lo) >= 0 puts lo at or
    # below the root, where the inclusive threshold comparison is stable even
    # when many decisions tie exactly at the optimum (constant surfaces)
    policy = StationaryPolicy(tau_opt(index_table, config, Modality.M1, lo),
                              tau_opt(index_table, config, Modality.M2, lo))
    saturated = config.tau_max > 0 and (policy.tau1 == config.tau_max
                                        or policy.tau2 == config.tau_max)
    return ThresholdSolution(
        l_opt=l_opt,
        policy=policy,
        iterations=iterations,
        residual=g(l_opt),
        bracket=(lo, hi),
        saturated=saturated,
    )


def optimal_policy(surface: LossSurface, config: SystemConfig,
                   tol: float = 1e-9) -> tuple[StationaryPolicy, float]:
    """Convenience wrapper: (policy, l_opt) from solve_threshold."""
    solution = solve_threshold(surface, config, tol)
    return solution.policy, solution.l_opt
