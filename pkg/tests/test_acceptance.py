"""Acceptance gate: one test per release criterion, each printing a verdict line.

Run with ``pytest -v tests/test_acceptance.py`` for one PASS/FAIL line per
criterion (the printed ``[criterion NN]`` lines additionally appear with
``-s`` or in failure output).
"""

import filecmp
import json
import time

import numpy as np
import pytest
from click.testing import CliRunner

from aoisched import (CostTable, IndexThreshold, Modality, RoundRobin,
                      StationaryPolicy, SurfaceSpec, SystemConfig,
                      brute_force_optimal, build_index_table, compare_policies,
                      cycle_cost, full_cycle_length, g_value, generate_surface,
                      required_domain, run, solve_threshold,
                      stationary_average_cost, tau_opt, verify_bellman)
from aoisched.cli import main as cli_main
from helpers import monotone_random_surface, random_instance

CORPUS_SIZE = 100
CORPUS_SEED_BASE = 20250800


def _report(num: int, label: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"[criterion {num:02d}] {status} - {label}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus():
    """Shared instance panel: mixed generators, transmission times, caps."""
    instances = []
    for i in range(CORPUS_SIZE):
        rng = np.random.default_rng(CORPUS_SEED_BASE + i)
        instances.append(random_instance(rng))
    return instances


@pytest.fixture(scope="module")
def solved(corpus):
    start = time.perf_counter()
    solutions = [solve_threshold(surface, config) for surface, config, _ in corpus]
    elapsed = time.perf_counter() - start
    return solutions, elapsed


def test_criterion_01_solver_matches_exhaustive_search(corpus, solved):
    """l_opt within 1e-8 of the enumerated optimum, policy in the tie set, fast."""
    solutions, elapsed = solved
    worst_gap = 0.0
    ok = True
    for (surface, config, _), sol in zip(corpus, solutions):
        report = brute_force_optimal(surface, config)
        gap = abs(sol.l_opt - report.best_avg_cost)
        worst_gap = max(worst_gap, gap)
        if gap > 1e-8 or not report.is_tie(sol.policy):
            ok = False
            break
    time_ok = elapsed < 10.0
    _report(1, "solver agrees with exhaustive search on 100 instances",
            ok and time_ok,
            f"worst l_opt gap {worst_gap:.2e}, solve time {elapsed:.2f}s")


def test_criterion_02_bellman_certificate(corpus, solved):
    """Every solved instance satisfies the optimality equations within 1e-8."""
    solutions, _ = solved
    worst = 0.0
    ok = True
    for (surface, config, _), sol in zip(corpus, solutions):
        check = verify_bellman(surface, config, sol.policy, sol.l_opt, tol=1e-8)
        worst = max(worst, *check.attainment_gap, *check.fixpoint_gap)
        if not check.ok:
            ok = False
            break
    _report(2, "Bellman certificate holds at tol 1e-8 on 100 instances", ok,
            f"worst gap {worst:.2e}")


def test_criterion_03_balance_function_shape(corpus):
    """g is strictly decreasing, concave, and crosses zero once on [-M, M]."""
    eps = 1e-10
    ok = True
    why = ""
    for n, (surface, config, name) in enumerate(corpus):
        costs = CostTable(surface, config)
        table = build_index_table(surface, config)
        bound = surface.bound_m if surface.bound_m > 0 else 1.0
        betas = np.linspace(-bound, bound, 200)
        values = [g_value(surface, config, table, float(b), costs=costs)
                  for b in betas]
        if not all(b < a for a, b in zip(values, values[1:])):
            ok, why = False, f"not strictly decreasing on instance {n} ({name})"
            break
        if not all(values[i] >= 0.5 * (values[i - 1] + values[i + 1]) - eps
                   for i in range(1, 199)):
            ok, why = False, f"midpoint concavity violated on instance {n} ({name})"
            break
        if not (values[0] >= -eps and values[-1] <= eps):
            ok, why = False, f"no sign change on instance {n} ({name})"
            break
    _report(3, "balance function shape on 200-point grids", ok, why)


def test_criterion_04_threshold_structure(corpus):
    """The index threshold equals the enumerated per-modality minimizer."""
    rng = np.random.default_rng(CORPUS_SEED_BASE - 1)
    coverage = {"base": 0, "interior": 0, "saturated": 0}
    ok = True
    why = ""
    for n, (surface, config, name) in enumerate(corpus):
        costs = CostTable(surface, config)
        table = build_index_table(surface, config)
        for modality in (Modality.M1, Modality.M2):
            gammas = table.gamma(modality)
            if gammas:
                lo, hi = min(gammas) - 1.0, max(gammas) + 1.0
            else:
                lo, hi = -surface.bound_m - 1.0, surface.bound_m + 1.0
            t_m = config.transmission_time(modality)
            for beta in rng.uniform(lo, hi, size=50):
                objective = [costs.cost(modality, tau) - tau * t_m * beta
                             for tau in range(config.tau_max + 1)]
                enum = objective.index(min(objective))
                fast = tau_opt(table, config, modality, float(beta))
                if enum != fast:
                    ok = False
                    why = (f"instance {n} ({name}) modality {int(modality)} "
                           f"beta {beta}: enumerated {enum}, threshold {fast}")
                    break
                if fast == 0:
                    coverage["base"] += 1
                elif fast == config.tau_max:
                    coverage["saturated"] += 1
                else:
                    coverage["interior"] += 1
            if not ok:
                break
        if not ok:
            break
    covered = all(v > 0 for v in coverage.values())
    _report(4, "threshold equals enumerated argmin for sampled rewards",
            ok and covered, why or f"coverage {coverage}")


def test_criterion_05_unit_time_index_identity():
    """With t1 = t2 = 1 and non-decreasing losses, gamma1(theta) is the single
    surface value L(1, theta + 3), reproduced bitwise (and symmetrically for
    modality 2)."""
    ok = True
    why = ""
    for i in range(20):
        rng = np.random.default_rng(7_700 + i)
        tau_max = int(rng.integers(3, 16))
        config = SystemConfig(1, 1, tau_max)
        surface = monotone_random_surface(rng, *required_domain(config))
        table = build_index_table(surface, config)
        for theta in range(tau_max):
            if table.gamma1[theta] != surface.eval(1, theta + 3):
                ok, why = False, f"surface {i}: gamma1({theta}) not bitwise equal"
                break
            if table.gamma2[theta] != surface.eval(theta + 3, 1):
                ok, why = False, f"surface {i}: gamma2({theta}) not bitwise equal"
                break
        if not ok:
            break
    _report(5, "unit-time index reads surface values bitwise", ok, why)


def test_criterion_06_cycle_cost_identity():
    """A simulated cycle reproduces both half-cycle costs bitwise and closes."""
    ok = True
    why = ""
    for i in range(50):
        rng = np.random.default_rng(8_800 + i)
        surface, config, name = random_instance(rng)
        tau1 = int(rng.integers(0, config.tau_max + 1))
        tau2 = int(rng.integers(0, config.tau_max + 1))
        policy = StationaryPolicy(tau1, tau2)
        cyclelen = full_cycle_length(config, policy)
        trace = run(surface, config, IndexThreshold(policy), cyclelen + 1)

        d1 = tau1 * config.t1 + config.t2
        seg1 = 0.0
        for x in trace.loss[:d1].tolist():
            seg1 += x
        seg2 = 0.0
        for x in trace.loss[d1:cyclelen].tolist():
            seg2 += x
        c1 = cycle_cost(surface, config, Modality.M1, tau1)
        c2 = cycle_cost(surface, config, Modality.M2, tau2)
        closes = (trace.delta1[cyclelen], trace.delta2[cyclelen]) == (
            config.t1, config.t1 + config.t2)
        if seg1 != c1 or seg2 != c2 or not closes:
            ok = False
            why = (f"instance {i} ({name}) policy ({tau1},{tau2}): "
                   f"seg1-c1={seg1 - c1!r}, seg2-c2={seg2 - c2!r}, closes={closes}")
            break
    _report(6, "simulated cycles reproduce cycle costs bitwise", ok, why)


def test_criterion_07_simulation_consistency():
    """Long deterministic runs land within the partial-cycle error bound."""
    horizon = 100_000
    ok = True
    why = ""
    worst_ratio = 0.0
    for i in range(10):
        rng = np.random.default_rng(9_900 + i)
        surface, config, name = random_instance(rng)
        sol = solve_threshold(surface, config)
        for policy, stat_policy in (
                (IndexThreshold(sol.policy), sol.policy),
                (RoundRobin(), StationaryPolicy(0, 0))):
            stationary = stationary_average_cost(surface, config, stat_policy)
            trace = run(surface, config, policy, horizon)
            cyclelen = full_cycle_length(config, stat_policy)
            slack = 2.0 * surface.bound_m * cyclelen / horizon
            err = abs(trace.summary.avg_loss - stationary)
            worst_ratio = max(worst_ratio, err / slack if slack else 0.0)
            if err > slack:
                ok = False
                why = f"instance {i} ({name}): error {err:.3e} > slack {slack:.3e}"
                break
        if not ok:
            break
    _report(7, "simulated averages match stationary averages at 1e5 slots", ok,
            why or f"worst error/slack {worst_ratio:.3f}")


def test_criterion_08_policy_dominance_sweep():
    """Index policy never loses to either baseline across a times grid."""
    start = time.perf_counter()
    tau_max = 30
    grid = (2, 4, 6, 8, 10)
    fit = SystemConfig(max(grid), max(grid), tau_max)
    surface = generate_surface(SurfaceSpec("nonmono_nonsep",
                                           *required_domain(fit), {}))
    ok = True
    why = ""
    lines = ["t1  t2  index      rr         rand       red_rr   red_rand"]
    for t1 in grid:
        for t2 in grid:
            config = SystemConfig(t1, t2, tau_max)
            comp = compare_policies(surface, config, 20_000, seeds=(1, 2, 3, 4, 5))
            idx = comp.row("index").avg_loss
            rr = comp.row("rr").avg_loss
            rand = comp.row("rand").avg_loss
            lines.append(f"{t1:<3d} {t2:<3d} {idx:<10.6f} {rr:<10.6f} "
                         f"{rand:<10.6f} {comp.reductions['rr']:<8.4f} "
                         f"{comp.reductions['rand']:<8.4f}")
            if idx > rr + 1e-9 or idx > rand + 1e-9:
                ok = False
                why = f"cell ({t1},{t2}): index {idx} vs rr {rr}, rand {rand}"
    elapsed = time.perf_counter() - start
    print("\n".join(lines))
    _report(8, "index policy dominates baselines on the 5x5 sweep",
            ok and elapsed < 60.0, why or f"{elapsed:.1f}s")


def test_criterion_09_symmetric_instances():
    """Symmetric separable losses make alternation optimal; index ties it."""
    ok = True
    why = ""
    for t in (1, 2, 3):
        config = SystemConfig(t, t, 6)
        surface = generate_surface(SurfaceSpec("aoi_sum",
                                               *required_domain(config), {}))
        sol = solve_threshold(surface, config)
        if sol.policy != StationaryPolicy(0, 0):
            ok, why = False, f"t={t}: policy {sol.policy} is not alternation"
            break
        comp = compare_policies(surface, config, 5_000, include=("index", "rr"))
        gap = abs(comp.row("index").avg_loss - comp.row("rr").avg_loss)
        if gap > 1e-9:
            ok, why = False, f"t={t}: index vs rr gap {gap:.2e}"
            break
    _report(9, "alternation is recovered on symmetric instances", ok, why)


def test_criterion_10_manifest_reproducibility(tmp_path):
    """Rerunning any manifest's argv reproduces the outputs byte for byte."""
    runner = CliRunner()
    jobs = [
        ["solve", "--gen", "nonmono_nonsep", "--t1", "2", "--t2", "3",
         "--tau-max", "8"],
        ["simulate", "--gen", "nonmono_nonsep", "--t1", "2", "--t2", "3",
         "--tau-max", "8", "--policy", "rand", "--seed", "7", "--horizon", "400"],
        ["verify", "--gen", "nonmono_nonsep", "--t1", "2", "--t2", "2",
         "--tau-max", "6"],
        ["sweep", "--gen", "nonmono_nonsep", "--t1-list", "1,2",
         "--t2-list", "2", "--tau-max", "5", "--horizon", "500", "--seeds", "1,2"],
    ]
    ok = True
    why = ""
    for j, args in enumerate(jobs):
        first = tmp_path / f"job{j}_a"
        second = tmp_path / f"job{j}_b"
        res = runner.invoke(cli_main, args + ["--out", str(first)])
        if res.exit_code != 0:
            ok, why = False, f"{args[0]} failed: {res.output}"
            break
        manifest = json.loads((first / "manifest.json").read_text())
        res = runner.invoke(cli_main, manifest["argv"] + ["--out", str(second)])
        if res.exit_code != 0:
            ok, why = False, f"{args[0]} rerun failed: {res.output}"
            break
        for name in manifest["outputs"]:
            if not filecmp.cmp(first / name, second / name, shallow=False):
                ok, why = False, f"{args[0]}: {name} differs on rerun"
                break
        if not ok:
            break

    if ok:
        # gen-surface writes a single file plus a sidecar manifest
        out_a = tmp_path / "gen_a.csv"
        out_b = tmp_path / "gen_b.csv"
        res = runner.invoke(cli_main, ["gen-surface", "--gen", "monotone_power:1.5,0.8",
                                       "--d1", "12", "--d2", "9", "--out", str(out_a)])
        if res.exit_code != 0:
            ok, why = False, f"gen-surface failed: {res.output}"
        else:
            manifest = json.loads((tmp_path / "gen_a.csv.manifest.json").read_text())
            argv = [tok if tok != str(out_a) else str(out_b)
                    for tok in manifest["argv"]] + ["--out", str(out_b)]
            res = runner.invoke(cli_main, argv)
            if res.exit_code != 0 or not filecmp.cmp(out_a, out_b, shallow=False):
                ok, why = False, "gen-surface rerun differs"
    _report(10, "manifests rerun to bitwise-identical outputs", ok, why)
