"""Self-contained invariant suite behind the ``check`` CLI subcommand.

Every structural invariant of the walk analysis and the two protocols is
exercised here: exact identities at their stated tolerances, Monte Carlo
estimates against 3-sigma bands, and long instrumented protocol runs with
per-tick conservation checks. ``quick=True`` shrinks the Monte Carlo and
tick budgets for smoke testing; the default budgets match the full suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import consensus as cons
from . import walks
from .graphs import Graph, build_graph, er_probability, shortest_path, TopologySpec
from .harness import init_majority_one, init_q_setting2, lollipop_clique_size

COMMUTE_REL_TOL = 1e-6
CYCLE_REL_TOL = 1e-6
CLOSED_FORM_REL_TOL = 1e-6
UNIFORM_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def small_graph_suite(max_n: int = 12, seed: int = 20260808) -> list[tuple[str, Graph]]:
    """star, line, lollipop and one ER instance per size up to max_n."""
    suite = []
    for n in range(3, max_n + 1):
        suite.append((f"star({n})", build_graph(TopologySpec("star", n))))
        suite.append((f"line({n})", build_graph(TopologySpec("line", n))))
        m = lollipop_clique_size(n)
        if m >= 3:
            suite.append((f"lollipop({n},{m})", build_graph(TopologySpec("lollipop", n, m=m))))
        p = er_probability(n)
        suite.append(
            (f"er({n},p={p:.3f})", build_graph(TopologySpec("erdos_renyi", n, p=p, seed=seed + n)))
        )
    return suite


def check_row_stochastic(suite) -> CheckResult:
    worst = 0.0
    for name, g in suite:
        for kind in walks.WALK_KINDS:
            m = walks.transition_matrix(g, kind)
            worst = max(worst, float(np.max(np.abs(m.p.sum(axis=1) - 1.0))))
    ok = worst <= walks.ROW_SUM_TOL
    return CheckResult("row_stochastic", ok, f"max row-sum deviation {worst:.3e}")


def check_biased_symmetry(suite) -> CheckResult:
    worst = 0.0
    for name, g in suite:
        p = walks.transition_matrix(g, "biased").p
        worst = max(worst, float(np.max(np.abs(p - p.T))))
    return CheckResult("biased_symmetry", worst == 0.0, f"max asymmetry {worst:.3e}")


def check_detailed_balance(suite) -> CheckResult:
    worst = 0.0
    for name, g in suite:
        m = walks.transition_matrix(g, "biased")
        pi = walks.stationary_distribution(m)
        worst = max(worst, float(np.max(np.abs(pi - 1.0 / g.n))))
    ok = worst <= UNIFORM_TOL
    return CheckResult("uniform_stationary", ok, f"max deviation from 1/n: {worst:.3e}")


def check_commute_identity(suite) -> CheckResult:
    worst = 0.0
    for name, g in suite:
        m = walks.transition_matrix(g, "biased")
        wg = walks.edge_weights(g)
        table = walks.hitting_table(m)
        r = walks.resistance_matrix(wg)
        for x in range(g.n):
            for y in range(x + 1, g.n):
                commute = table.h[x, y] + table.h[y, x]
                rel = abs(commute - g.n * r[x, y]) / max(1.0, commute)
                worst = max(worst, rel)
    ok = worst <= COMMUTE_REL_TOL
    return CheckResult("commute_identity", ok, f"max relative gap {worst:.3e}")


def check_cycle_identity(suite) -> CheckResult:
    worst = 0.0
    for name, g in suite:
        if g.n > 10:
            continue
        table = walks.hitting_table(walks.transition_matrix(g, "biased"))
        scale = max(1.0, table.max_hitting())
        for x in range(g.n):
            for y in range(g.n):
                for z in range(g.n):
                    worst = max(worst, walks.cycle_identity_gap(table, x, y, z) / scale)
    ok = worst <= CYCLE_REL_TOL
    return CheckResult("cycle_identity", ok, f"max relative gap {worst:.3e}")


def check_closed_forms(sizes=(3, 5, 9, 17)) -> CheckResult:
    worst = 0.0
    for n in sizes:
        star = build_graph(TopologySpec("star", n))
        h = walks.hitting_times(walks.transition_matrix(star, "biased"), 2)
        worst = max(worst, abs(h[1] - n * (n - 1)) / (n * (n - 1)))
        line = build_graph(TopologySpec("line", n))
        h = walks.hitting_times(walks.transition_matrix(line, "biased"), n - 1)
        expected = 0.5 * n * (n * n - 5.0 * n / 3.0)
        worst = max(worst, abs(h[0] - expected) / expected)
    ok = worst <= CLOSED_FORM_REL_TOL
    return CheckResult("closed_forms", ok, f"max relative error {worst:.3e}")


def check_hitting_bound(suite, lollipop_max: int = 30) -> CheckResult:
    graphs = list(suite)
    for n in range(5, lollipop_max + 1):
        m = lollipop_clique_size(n)
        graphs.append((f"lollipop({n},{m})", build_graph(TopologySpec("lollipop", n, m=m))))
    violations = []
    for name, g in graphs:
        table = walks.hitting_table(walks.transition_matrix(g, "biased"))
        bound = 3.0 * g.n**3
        if table.max_hitting() >= bound:
            violations.append(f"{name}: H={table.max_hitting():.1f} >= {bound:.1f}")
        for x in range(g.n):
            for y in range(g.n):
                if x == y:
                    continue
                general, refined = walks.hitting_bound(g, x, y)
                if not (table.h[x, y] <= refined <= general):
                    violations.append(f"{name}: bound ordering broken at ({x},{y})")
                    break
        for x in range(g.n):
            for y in range(g.n):
                if sum(g.degree(q) for q in shortest_path(g, x, y)) >= 3 * g.n:
                    violations.append(f"{name}: path degree sum >= 3n at ({x},{y})")
                    break
    ok = not violations
    return CheckResult("hitting_bound", ok, violations[0] if violations else
                       f"H < 3n^3 on {len(graphs)} graphs, all pairs")


def check_mc_hitting(quick: bool, seed: int = 11) -> CheckResult:
    runs = 2000 if quick else 100_000
    details = []
    ok = True
    for kind, x, y in (("star", 1, 2), ("line", 0, 4)):
        g = build_graph(TopologySpec(kind, 5))
        exact = float(walks.hitting_times(walks.transition_matrix(g, "biased"), y)[x])
        sample = walks.sample_hitting(g, x, y, seed, runs)
        se = float(sample.std(ddof=1)) / math.sqrt(runs)
        gap = abs(float(sample.mean()) - exact)
        ok = ok and gap <= 3 * se
        details.append(f"{kind}(5): |{sample.mean():.3f}-{exact:.3f}|={gap:.3f} vs 3se={3*se:.3f}")
    return CheckResult("mc_hitting_vs_exact", ok, "; ".join(details))


def check_meeting_bounds(quick: bool, seed: int = 12) -> CheckResult:
    runs = 1000 if quick else 10_000
    details = []
    ok = True
    for kind, n, x, y in (("star", 11, 1, 2), ("line", 9, 0, 8)):
        g = build_graph(TopologySpec(kind, n))
        hmax = walks.hitting_table(walks.transition_matrix(g, "biased")).max_hitting()
        sample = walks.sample_pair_meetings(g, x, y, seed, runs)
        mean = float(sample.mean())
        se = float(sample.std(ddof=1)) / math.sqrt(runs)
        ok = ok and mean + 3 * se <= 4 * hmax
        details.append(f"{kind}({n}): mean+3se={mean + 3 * se:.1f} vs 4H={4 * hmax:.1f}")
    g = build_graph(TopologySpec("line", 9))
    sx = walks.sample_pair_meetings(g, 0, 8, seed + 1, runs)
    sp = walks.sample_pair_meetings(g, 0, 8, seed + 2, runs, "Xprime")
    slack = 3 * math.sqrt(sx.var(ddof=1) / runs + 4 * sp.var(ddof=1) / runs)
    ok = ok and float(sx.mean()) <= 2 * float(sp.mean()) + slack
    details.append(f"line(9): X={sx.mean():.1f} vs 2*Xprime={2 * sp.mean():.1f} (+{slack:.1f})")
    return CheckResult("meeting_bounds", ok, "; ".join(details))


def check_binary_conservation(quick: bool, seed: int = 13) -> CheckResult:
    ticks = 10_000 if quick else 1_000_000
    g = build_graph(TopologySpec("erdos_renyi", 51, p=er_probability(51), seed=51))
    rng = np.random.default_rng(seed)
    state = init_majority_one(g.n, rng)
    surplus = state.s_plus - state.s_minus
    strong = state.s_plus + state.s_minus
    for _ in range(ticks):
        u = int(rng.random() * g.n)
        nbrs = g.adjacency[u]
        v = nbrs[int(rng.random() * len(nbrs))]
        cons.apply_binary_edge(state, u, v)
        if state.s_plus - state.s_minus != surplus:
            return CheckResult("binary_conservation", False, "signed strong surplus changed")
        new_strong = state.s_plus + state.s_minus
        if new_strong > strong or (strong - new_strong) % 2 != 0:
            return CheckResult("binary_conservation", False, "strong count did not step down by 2")
        strong = new_strong
    return CheckResult("binary_conservation", True,
                       f"surplus constant over {ticks} ticks on er(51)")


def check_quantized_conservation(quick: bool, seed: int = 14) -> CheckResult:
    ticks = 10_000 if quick else 1_000_000
    g = build_graph(TopologySpec("erdos_renyi", 100, p=er_probability(100), seed=100))
    rng = np.random.default_rng(seed)
    state = init_q_setting2(g.n, rng)
    n = g.n
    total = state.q_sum
    spread = state.spread
    drops = 0
    for _ in range(ticks):
        u = int(rng.random() * n)
        nbrs = g.adjacency[u]
        v = nbrs[int(rng.random() * len(nbrs))]
        a, b = state.values[u], state.values[v]
        cons.apply_quantized_edge(state, u, v)
        na, nb = state.values[u], state.values[v]
        if sum(state.values) != total:
            return CheckResult("quantized_conservation", False, "value sum changed")
        # n^2-scaled per-tick Lyapunov drop, exact in integer arithmetic.
        delta = ((n * a - total) ** 2 + (n * b - total) ** 2
                 - (n * na - total) ** 2 - (n * nb - total) ** 2)
        if delta < 0:
            return CheckResult("quantized_conservation", False, "Lyapunov increased")
        if abs(a - b) >= 2:
            if delta < 2 * n * n:
                return CheckResult("quantized_conservation", False,
                                   "non-trivial exchange dropped Lyapunov by < 2")
            drops += 1
        elif delta != 0:
            return CheckResult("quantized_conservation", False,
                               "trivial exchange changed the Lyapunov value")
        if state.spread > spread:
            return CheckResult("quantized_conservation", False, "max-min increased")
        spread = state.spread
    return CheckResult("quantized_conservation", True,
                       f"sum/Lyapunov/spread invariants held over {ticks} ticks "
                       f"({drops} non-trivial exchanges) on er(100)")


def check_majority_outcome(quick: bool, seed: int = 15) -> CheckResult:
    runs = 30 if quick else 1000
    cases = [
        ("star", build_graph(TopologySpec("star", 7))),
        ("line", build_graph(TopologySpec("line", 7))),
        ("er", build_graph(TopologySpec("erdos_renyi", 21, p=er_probability(21), seed=21))),
    ]
    for name, g in cases:
        for ri in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence([seed, g.n, ri]))
            state = init_majority_one(g.n, rng)
            majority = 1 if state.s_plus > state.s_minus else -1
            result = cons.run_to_convergence("binary", g, state, rng, 150 * g.n**3)
            if not result.converged:
                return CheckResult("binary_majority_outcome", False,
                                   f"{name}({g.n}) run {ri} timed out")
            final = 1 if state.positive == g.n else -1
            if final != majority:
                return CheckResult("binary_majority_outcome", False,
                                   f"{name}({g.n}) run {ri} converged to the minority sign")
    return CheckResult("binary_majority_outcome", True,
                       f"{runs} runs each on star(7), line(7), er(21): all majority")


def check_quantized_final_state(quick: bool, seed: int = 16) -> CheckResult:
    runs = 30 if quick else 1000
    cases = [
        ("star", build_graph(TopologySpec("star", 7))),
        ("line", build_graph(TopologySpec("line", 7))),
        ("er", build_graph(TopologySpec("erdos_renyi", 21, p=er_probability(21), seed=21))),
    ]
    for name, g in cases:
        for ri in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence([seed, g.n, ri]))
            state = init_q_setting2(g.n, rng)
            result = cons.run_to_convergence("quantized", g, state, rng, 150 * g.n**3)
            if not result.converged:
                return CheckResult("quantized_final_state", False,
                                   f"{name}({g.n}) run {ri} timed out")
            q, r = state.q, state.r
            if any(v not in (q, q + 1) for v in state.values):
                return CheckResult("quantized_final_state", False,
                                   f"{name}({g.n}) run {ri} has a value outside {{q, q+1}}")
            if state.values.count(q + 1) != r:
                return CheckResult("quantized_final_state", False,
                                   f"{name}({g.n}) run {ri} has wrong multiplicity of q+1")
    return CheckResult("quantized_final_state", True,
                       f"{runs} runs each on star(7), line(7), er(21): all in {{q,q+1}} with r copies of q+1")


def check_update_table() -> CheckResult:
    table = {
        (2, 2): (2, 2), (1, 1): (1, 1), (-1, -1): (-1, -1), (-2, -2): (-2, -2),
        (2, -2): (-1, 1), (-2, 2): (1, -1), (1, -1): (-1, 1), (-1, 1): (1, -1),
        (2, 1): (1, 2), (1, 2): (2, 1), (-2, -1): (-1, -2), (-1, -2): (-2, -1),
        (2, -1): (1, 2), (-1, 2): (2, 1), (-2, 1): (-1, -2), (1, -2): (-2, -1),
    }
    bad = [
        pair for pair, expected in table.items() if cons.binary_update(*pair) != expected
    ]
    ok = not bad
    return CheckResult("binary_update_table", ok,
                       f"mismatch at {bad}" if bad else "all 16 opinion pairs match")


def run_all_checks(quick: bool = False, seed: int = 2026) -> list[CheckResult]:
    suite = small_graph_suite()
    return [
        check_row_stochastic(suite),
        check_biased_symmetry(suite),
        check_detailed_balance(suite),
        check_commute_identity(suite),
        check_cycle_identity(suite),
        check_closed_forms(),
        check_hitting_bound(suite),
        check_update_table(),
        check_mc_hitting(quick, seed + 1),
        check_meeting_bounds(quick, seed + 2),
        check_binary_conservation(quick, seed + 3),
        check_quantized_conservation(quick, seed + 4),
        check_majority_outcome(quick, seed + 5),
        check_quantized_final_state(quick, seed + 6),
    ]
