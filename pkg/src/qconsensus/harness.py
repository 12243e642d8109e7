"""Experiment harness: seeded initial conditions, size sweeps, scaling fits.

A sweep measures mean convergence ticks over a fixed number of rounds per
graph size. Every round's RNG stream is derived from (master seed, n,
round index), and an Erdős-Rényi graph's sampling seed from (master seed,
n), so a config fully determines every record regardless of execution
order or worker count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .consensus import (
    STRONG_NEG,
    STRONG_POS,
    BinaryState,
    QuantizedState,
    run_to_convergence,
)
from .graphs import Graph, TopologySpec, build_graph, er_probability

PROTOCOLS = ("binary", "quantized")
INITS = ("majority_one", "q_setting1", "q_setting2")

# Desk-scale sweep grids (the full-scale grid runs 21..481 step 20).
DESK_N_VALUES = {
    "star": tuple(range(21, 202, 20)),
    "erdos_renyi": tuple(range(21, 202, 20)),
    "line": tuple(range(9, 66, 8)),
    "lollipop": tuple(range(9, 64, 6)),
}
FULL_N_VALUES = tuple(range(21, 482, 20))


def default_n_values(kind: str, full_grid: bool = False) -> tuple[int, ...]:
    if full_grid:
        return FULL_N_VALUES
    return DESK_N_VALUES.get(kind, tuple(range(21, 202, 20)))


def lollipop_clique_size(n: int) -> int:
    """The extremal clique size floor((2n+1)/3)."""
    return (2 * n + 1) // 3


def init_majority_one(n: int, rng) -> BinaryState:
    """ceil(n/2) strong positive and floor(n/2) strong negative voters.

    The one-vote margin makes this the adversarial majority setting; n must
    be odd for the convergence guarantee to apply.
    """
    if n % 2 == 0:
        raise ValueError(f"majority-one init requires odd n, got {n}")
    opinions = [STRONG_NEG] * n
    for i in rng.permutation(n)[: (n + 1) // 2]:
        opinions[i] = STRONG_POS
    return BinaryState.from_opinions(opinions)


def init_q_setting1(g: Graph, rng, exclude: Iterable[int] = ()) -> QuantizedState:
    """All ones except a 2 and a 0 on two distinct random eligible nodes.

    The sum is n, so the run converges exactly when every node holds 1.
    ``exclude`` removes nodes from eligibility (the hub on star graphs).
    """
    if g.n < 3:
        raise ValueError(f"setting-1 init requires n >= 3, got {g.n}")
    excluded = set(exclude)
    eligible = [i for i in range(g.n) if i not in excluded]
    if len(eligible) < 2:
        raise ValueError("setting-1 init needs at least two eligible nodes")
    i, j = rng.choice(len(eligible), size=2, replace=False)
    values = [1] * g.n
    values[eligible[int(i)]] = 2
    values[eligible[int(j)]] = 0
    return QuantizedState.from_values(values)


def init_q_setting2(n: int, rng, lo: int = 1, hi: int = 100) -> QuantizedState:
    """i.i.d. uniform integer values in [lo, hi]."""
    if lo > hi:
        raise ValueError(f"setting-2 init requires lo <= hi, got {lo} > {hi}")
    return QuantizedState.from_values(rng.integers(lo, hi + 1, size=n).tolist())


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a topology family, a protocol, an init and an n-grid.

    m is the lollipop clique size (None = floor((2n+1)/3)); p the ER edge
    probability (None = min(1, 5 ln n / n)); max_ticks the per-round budget
    (None = 50 times the 3 n^3 worst-case hitting bound).
    """

    kind: str
    n_values: tuple[int, ...]
    protocol: str
    init: str
    rounds: int
    master_seed: int
    m: int | None = None
    p: float | None = None
    lo: int = 1
    hi: int = 100
    max_ticks: int | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.protocol == "binary" and self.init != "majority_one":
            raise ValueError("binary sweeps use the majority_one init")
        if self.protocol == "quantized" and self.init == "majority_one":
            raise ValueError("quantized sweeps use a q_setting init")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.init == "majority_one":
            even = [n for n in self.n_values if n % 2 == 0]
            if even:
                raise ValueError(f"majority_one requires odd n, got {even}")

    def spec_for(self, n: int) -> TopologySpec:
        if self.kind == "lollipop":
            m = self.m if self.m is not None else lollipop_clique_size(n)
            return TopologySpec("lollipop", n, m=m)
        if self.kind == "erdos_renyi":
            p = self.p if self.p is not None else er_probability(n)
            seed = int(np.random.SeedSequence([self.master_seed, n]).generate_state(1)[0])
            return TopologySpec("erdos_renyi", n, p=p, seed=seed)
        return TopologySpec(self.kind, n)

    def max_ticks_for(self, n: int) -> int:
        if self.max_ticks is not None:
            return self.max_ticks
        return 150 * n**3


@dataclass(frozen=True)
class SweepRecord:
    """Aggregated result for one n: mean/std over the converged rounds only."""

    n: int
    mean_ticks: float
    std_ticks: float
    rounds_converged: int
    rounds_total: int
    round_ticks: tuple[tuple[int, int, bool], ...] = ()  # (round, ticks, converged)


def round_rng(master_seed: int, n: int, round_index: int):
    """Generator for one round, derived from (master seed, n, round index)."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, n, round_index]))


def _initial_state(cfg: SweepConfig, g: Graph, rng):
    if cfg.init == "majority_one":
        return init_majority_one(g.n, rng)
    if cfg.init == "q_setting1":
        exclude = (0,) if cfg.kind == "star" else ()
        return init_q_setting1(g, rng, exclude)
    return init_q_setting2(g.n, rng, cfg.lo, cfg.hi)


def iter_sweep(cfg: SweepConfig) -> Iterator[SweepRecord]:
    """Yield one record per n as soon as its rounds finish."""
    for n in cfg.n_values:
        g = build_graph(cfg.spec_for(n))
        budget = cfg.max_ticks_for(n)
        rounds = []
        for ri in range(cfg.rounds):
            rng = round_rng(cfg.master_seed, n, ri)
            state = _initial_state(cfg, g, rng)
            result = run_to_convergence(cfg.protocol, g, state, rng, budget)
            rounds.append((ri, result.ticks, result.converged))
        ticks = [t for _, t, ok in rounds if ok]
        if ticks:
            mean = float(np.mean(ticks))
            std = float(np.std(ticks, ddof=1)) if len(ticks) > 1 else 0.0
        else:
            mean = float("nan")
            std = float("nan")
        yield SweepRecord(n, mean, std, len(ticks), cfg.rounds, tuple(rounds))


def run_sweep(cfg: SweepConfig) -> list[SweepRecord]:
    return list(iter_sweep(cfg))


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    coefficient: float
    residual: float  # sum of squared log-space residuals


def fit_scaling(records, model: str = "power") -> ScalingFit:
    """Least-squares fit of mean ticks against n in log space.

    model "power" fits c * n^a; model "power_log" fits c * n^a * ln(n)
    with the ln(n) factor fixed (only a and c are free).
    """
    if model not in ("power", "power_log"):
        raise ValueError(f"unknown scaling model {model!r}")
    points = []
    for rec in records:
        if isinstance(rec, SweepRecord):
            if rec.rounds_converged == 0:
                continue
            points.append((rec.n, rec.mean_ticks))
        else:
            points.append((float(rec[0]), float(rec[1])))
    if len(points) < 3:
        raise ValueError(f"scaling fit needs at least 3 points, got {len(points)}")
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    if model == "power_log":
        y = y - np.log(np.log([p[0] for p in points]))
    coef = np.polyfit(x, y, 1)
    fitted = np.polyval(coef, x)
    residual = float(np.sum((y - fitted) ** 2))
    return ScalingFit(float(coef[0]), float(math.exp(coef[1])), residual)


# Reference curves from the figure overlays, keyed by (kind, protocol, init).
REFERENCE_CURVES: dict[tuple[str, str, str], tuple[tuple[str, Callable[[float], float]], ...]] = {
    ("star", "binary", "majority_one"): (
        ("0.63*n^2*ln(n)", lambda n: 0.63 * n * n * math.log(n)),
    ),
    ("star", "quantized", "q_setting1"): (
        ("0.6*n^2", lambda n: 0.6 * n * n),
        ("0.7*n^2", lambda n: 0.7 * n * n),
    ),
    ("star", "quantized", "q_setting2"): (
        ("13*n*ln(n)", lambda n: 13.0 * n * math.log(n)),
        ("15*n*ln(n)", lambda n: 15.0 * n * math.log(n)),
    ),
    ("line", "binary", "majority_one"): (
        ("0.15*n^3*ln(n)", lambda n: 0.15 * n**3 * math.log(n)),
    ),
    ("line", "quantized", "q_setting1"): (("0.17*n^3", lambda n: 0.17 * n**3),),
    ("line", "quantized", "q_setting2"): (("0.25*n^3", lambda n: 0.25 * n**3),),
    ("lollipop", "binary", "majority_one"): (
        ("0.14*n^3*ln(n)", lambda n: 0.14 * n**3 * math.log(n)),
    ),
    ("lollipop", "quantized", "q_setting1"): (("0.15*n^3", lambda n: 0.15 * n**3),),
    ("lollipop", "quantized", "q_setting2"): (("0.3*n^3", lambda n: 0.3 * n**3),),
    ("erdos_renyi", "binary", "majority_one"): (
        ("2*n^2*ln(n)", lambda n: 2.0 * n * n * math.log(n)),
        ("2.3*n^2*ln(n)", lambda n: 2.3 * n * n * math.log(n)),
    ),
    ("erdos_renyi", "quantized", "q_setting1"): (
        ("0.5*n^2", lambda n: 0.5 * n * n),
        ("0.7*n^2", lambda n: 0.7 * n * n),
    ),
    ("erdos_renyi", "quantized", "q_setting2"): (("1.1*n^2", lambda n: 1.1 * n * n),),
}

SWEEP_CSV_HEADER = (
    "topology", "protocol", "init", "n", "rounds", "converged",
    "mean_ticks", "std_ticks", "seed",
)


def sweep_csv_row(cfg: SweepConfig, rec: SweepRecord) -> list:
    return [
        cfg.kind, cfg.protocol, cfg.init, rec.n, rec.rounds_total,
        rec.rounds_converged, repr(rec.mean_ticks), repr(rec.std_ticks),
        cfg.master_seed,
    ]


def write_sweep_csv(cfg: SweepConfig, records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for rec in records:
            writer.writerow(sweep_csv_row(cfg, rec))


def write_rounds_csv(records, path) -> None:
    """Per-round dump: n,round,ticks,converged."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("n", "round", "ticks", "converged"))
        for rec in records:
            for ri, ticks, ok in rec.round_ticks:
                writer.writerow((rec.n, ri, ticks, int(ok)))


def write_curves_csv(cfg: SweepConfig, records, path) -> None:
    """Measured means next to the reference-model columns, for overlay plots."""
    curves = REFERENCE_CURVES.get((cfg.kind, cfg.protocol, cfg.init), ())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mean_ticks"] + [label for label, _ in curves])
        for rec in records:
            writer.writerow(
                [rec.n, repr(rec.mean_ticks)] + [repr(float(fn(rec.n))) for _, fn in curves]
            )
