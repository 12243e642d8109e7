"""The two asynchronous pairwise protocols and their convergence dynamics.

Binary voting: node states are strong/weak signed opinions encoded as
+2/-2/+1/-1. When an edge activates, opposite strong opinions annihilate
into weak ones, a strong opinion converts an opposing weak one while moving
across the edge, and equal-magnitude pairs swap. The signed strong surplus
(#S+ - #S-) is conserved, so the surviving sign is the initial majority.

Quantized averaging: node states are integers. An activated edge moves one
unit from the larger value to the smaller when they differ by at least two
(a non-trivial exchange), otherwise the two values swap. The sum is
conserved; with sum = q*n + r (0 <= r < n) the protocol converges when
every value lies in {q, q+1}.

One tick = one edge activation: a node chosen uniformly, then one of its
neighbors uniformly. All steppers draw exactly two uniform floats per tick
in (node, neighbor) order, so batched and per-step execution follow
identical trajectories for the same seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .graphs import Graph

STRONG_POS = 2
STRONG_NEG = -2
WEAK_POS = 1
WEAK_NEG = -1
OPINION_VALUES = (STRONG_POS, STRONG_NEG, WEAK_POS, WEAK_NEG)

_BATCH_TICKS = 8192


def binary_update(a: int, b: int) -> tuple[int, int]:
    """Apply the pairwise voting rules to opinions (a, b); total on all 16 pairs.

    Equal opinions are unchanged; exact opposites both turn weak (keeping
    their partner's sign); a strong opinion meeting a weak one moves across
    the edge and leaves a weak copy of its own sign behind.
    """
    if a == b:
        return a, b
    if a == -b:
        sa = 1 if a > 0 else -1
        return -sa, sa
    if a == STRONG_POS or a == STRONG_NEG:
        sa = 1 if a > 0 else -1
        return sa, a
    sb = 1 if b > 0 else -1
    return b, sb


def quantized_update(a: int, b: int) -> tuple[int, int]:
    """One unit toward the mean when |a-b| >= 2, otherwise a swap."""
    if a - b >= 2:
        return a - 1, b + 1
    if b - a >= 2:
        return a + 1, b - 1
    return b, a


@dataclass
class BinaryState:
    """Mutable protocol state: per-node opinions plus cached counts."""

    opinions: list[int]
    s_plus: int
    s_minus: int
    w_plus: int
    w_minus: int
    tick: int = 0

    @classmethod
    def from_opinions(cls, opinions) -> "BinaryState":
        opinions = list(opinions)
        for o in opinions:
            if o not in OPINION_VALUES:
                raise ValueError(f"invalid opinion value {o!r}")
        return cls(
            opinions,
            s_plus=opinions.count(STRONG_POS),
            s_minus=opinions.count(STRONG_NEG),
            w_plus=opinions.count(WEAK_POS),
            w_minus=opinions.count(WEAK_NEG),
        )

    @property
    def n(self) -> int:
        return len(self.opinions)

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.s_plus, self.s_minus, self.w_plus, self.w_minus)

    @property
    def positive(self) -> int:
        return self.s_plus + self.w_plus

    def copy(self) -> "BinaryState":
        return BinaryState(list(self.opinions), *self.counts, self.tick)


@dataclass
class QuantizedState:
    """Mutable protocol state: per-node integers plus cached sum and extrema."""

    values: list[int]
    q_sum: int
    q: int
    r: int
    tick: int = 0
    vmin: int = 0
    vmax: int = 0
    off_target: int = field(default=0, repr=False)  # nodes outside {q, q+1}
    _counts: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_values(cls, values) -> "QuantizedState":
        values = [int(v) for v in values]
        if not values:
            raise ValueError("quantized state needs at least one node")
        q_sum = sum(values)
        n = len(values)
        q, r = divmod(q_sum, n)
        counts: dict[int, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        off = sum(c for v, c in counts.items() if v != q and v != q + 1)
        return cls(values, q_sum, q, r, 0, min(values), max(values), off, counts)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def spread(self) -> int:
        return self.vmax - self.vmin

    def copy(self) -> "QuantizedState":
        return QuantizedState(
            list(self.values), self.q_sum, self.q, self.r, self.tick,
            self.vmin, self.vmax, self.off_target, dict(self._counts),
        )


def binary_init(g: Graph, votes, rng) -> BinaryState:
    """Voters get strong opinions; abstainers get a fair random weak one.

    ``votes`` holds one entry per node: +1, -1, or None to abstain.
    """
    votes = list(votes)
    if len(votes) != g.n:
        raise ValueError(f"expected {g.n} votes, got {len(votes)}")
    if all(v is None for v in votes):
        raise ValueError("at least one vote is required")
    opinions = []
    for v in votes:
        if v is None:
            opinions.append(WEAK_POS if rng.random() < 0.5 else WEAK_NEG)
        elif v > 0:
            opinions.append(STRONG_POS)
        elif v < 0:
            opinions.append(STRONG_NEG)
        else:
            raise ValueError("votes must be +1, -1 or None")
    return BinaryState.from_opinions(opinions)


def apply_binary_edge(s: BinaryState, u: int, v: int) -> None:
    """Apply the voting rules across edge (u, v), keeping counts in sync."""
    a = s.opinions[u]
    b = s.opinions[v]
    na, nb = binary_update(a, b)
    if na == a and nb == b:
        return
    s.opinions[u] = na
    s.opinions[v] = nb
    for old, delta in ((a, -1), (b, -1), (na, 1), (nb, 1)):
        if old == STRONG_POS:
            s.s_plus += delta
        elif old == STRONG_NEG:
            s.s_minus += delta
        elif old == WEAK_POS:
            s.w_plus += delta
        else:
            s.w_minus += delta


def binary_step(s: BinaryState, g: Graph, rng) -> BinaryState:
    """One edge activation; mutates and returns ``s``."""
    u = int(rng.random() * g.n)
    nbrs = g.adjacency[u]
    v = nbrs[int(rng.random() * len(nbrs))]
    apply_binary_edge(s, u, v)
    s.tick += 1
    return s


def binary_converged(s: BinaryState) -> bool:
    """True iff every node's sign agrees (strength does not matter)."""
    pos = s.s_plus + s.w_plus
    return pos == 0 or pos == s.n


def apply_quantized_edge(s: QuantizedState, u: int, v: int) -> None:
    """Apply the averaging rule across edge (u, v), keeping caches in sync."""
    a = s.values[u]
    b = s.values[v]
    na, nb = quantized_update(a, b)
    if na + nb != a + b:
        raise RuntimeError(f"sum conservation violated on edge ({u},{v})")
    s.values[u] = na
    s.values[v] = nb
    if na == b and nb == a:
        return  # swap: multiset unchanged
    counts = s._counts
    q, qp1 = s.q, s.q + 1
    for old in (a, b):
        counts[old] -= 1
        if counts[old] == 0:
            del counts[old]
        if old != q and old != qp1:
            s.off_target -= 1
    for new in (na, nb):
        counts[new] = counts.get(new, 0) + 1
        if new != q and new != qp1:
            s.off_target += 1
    if s.vmin not in counts:
        s.vmin = min(counts)
    if s.vmax not in counts:
        s.vmax = max(counts)


def quantized_step(s: QuantizedState, g: Graph, rng) -> QuantizedState:
    """One edge activation; mutates and returns ``s``."""
    u = int(rng.random() * g.n)
    nbrs = g.adjacency[u]
    v = nbrs[int(rng.random() * len(nbrs))]
    apply_quantized_edge(s, u, v)
    s.tick += 1
    return s


def quantized_converged(s: QuantizedState) -> bool:
    """True iff every value is q or q+1 for q = floor(sum / n)."""
    return s.off_target == 0


def lyapunov(s: QuantizedState) -> float:
    """Sum of squared deviations from the exact (real-valued) mean."""
    mean = s.q_sum / s.n
    return sum((v - mean) ** 2 for v in s.values)


@dataclass(frozen=True)
class SimResult:
    """Outcome of one protocol run."""

    protocol: str
    n: int
    ticks: int
    converged: bool
    detail: str
    trace_header: tuple[str, ...] = ()
    trace: tuple[tuple, ...] = ()


def run_to_convergence(protocol: str, g: Graph, state, rng, max_ticks: int,
                       trace_stride: int = 0) -> SimResult:
    """Drive a protocol state until its convergence predicate holds.

    Returns the first tick at which the predicate is true, or a result
    flagged non-converged after exactly ``max_ticks`` activations. With
    ``trace_stride`` > 0, metric rows are recorded every that many ticks
    (plus the first and final tick). The passed state is mutated in place.
    """
    if protocol == "binary":
        if not isinstance(state, BinaryState):
            raise ValueError("binary protocol requires a BinaryState")
        return _run_binary(g, state, rng, max_ticks, trace_stride)
    if protocol == "quantized":
        if not isinstance(state, QuantizedState):
            raise ValueError("quantized protocol requires a QuantizedState")
        return _run_quantized(g, state, rng, max_ticks, trace_stride)
    raise ValueError(f"unknown protocol {protocol!r}")


_BINARY_TRACE_HEADER = ("tick", "s_plus", "s_minus", "w_plus", "w_minus")
_QUANTIZED_TRACE_HEADER = ("tick", "lyapunov", "value_min", "value_max")


def _binary_detail(s: BinaryState, converged: bool) -> str:
    if not converged:
        return "timeout"
    return "all_positive" if s.positive == s.n else "all_negative"


def _run_binary(g: Graph, s: BinaryState, rng, max_ticks: int, stride: int) -> SimResult:
    if stride > 0:
        return _run_traced(g, s, rng, max_ticks, stride, "binary")
    n = g.n
    opinions = s.opinions
    pos = s.s_plus + s.w_plus
    if pos == 0 or pos == n:
        return SimResult("binary", n, 0, True, _binary_detail(s, True))
    adjacency = [list(nbrs) for nbrs in g.adjacency]
    degs = [len(a) for a in adjacency]
    ticks = 0
    converged = False
    while ticks < max_ticks and not converged:
        m = min(_BATCH_TICKS, max_ticks - ticks)
        rs = rng.random(size=2 * m).tolist()
        for k in range(m):
            u = int(rs[2 * k] * n)
            v = adjacency[u][int(rs[2 * k + 1] * degs[u])]
            a = opinions[u]
            b = opinions[v]
            ticks += 1
            if a == b:
                continue
            if a == -b:
                sa = 1 if a > 0 else -1
                opinions[u] = -sa
                opinions[v] = sa
            elif a == 2 or a == -2:
                sa = 1 if a > 0 else -1
                opinions[u] = sa
                opinions[v] = a
                if b == -sa:
                    pos += sa
            else:
                sb = 1 if b > 0 else -1
                opinions[u] = b
                opinions[v] = sb
                if a == -sb:
                    pos += sb
            if pos == 0 or pos == n:
                converged = True
                break
    s.s_plus = opinions.count(STRONG_POS)
    s.s_minus = opinions.count(STRONG_NEG)
    s.w_plus = opinions.count(WEAK_POS)
    s.w_minus = opinions.count(WEAK_NEG)
    s.tick += ticks
    return SimResult("binary", n, ticks, converged, _binary_detail(s, converged))


def _quantized_detail(s: QuantizedState, converged: bool) -> str:
    if not converged:
        return "timeout"
    return f"q={s.q} r={s.r}"


def _run_quantized(g: Graph, s: QuantizedState, rng, max_ticks: int, stride: int) -> SimResult:
    if stride > 0:
        return _run_traced(g, s, rng, max_ticks, stride, "quantized")
    n = g.n
    if s.off_target == 0:
        return SimResult("quantized", n, 0, True, _quantized_detail(s, True))
    values = s.values
    q = s.q
    qp1 = q + 1
    off = s.off_target
    adjacency = [list(nbrs) for nbrs in g.adjacency]
    degs = [len(a) for a in adjacency]
    ticks = 0
    converged = False
    while ticks < max_ticks and not converged:
        m = min(_BATCH_TICKS, max_ticks - ticks)
        rs = rng.random(size=2 * m).tolist()
        for k in range(m):
            u = int(rs[2 * k] * n)
            v = adjacency[u][int(rs[2 * k + 1] * degs[u])]
            a = values[u]
            b = values[v]
            ticks += 1
            diff = a - b
            if diff >= 2:
                na = a - 1
                nb = b + 1
            elif diff <= -2:
                na = a + 1
                nb = b - 1
            else:
                values[u] = b
                values[v] = a
                continue
            values[u] = na
            values[v] = nb
            off += (
                (a == q or a == qp1) - (na == q or na == qp1)
                + (b == q or b == qp1) - (nb == q or nb == qp1)
            )
            if off == 0:
                converged = True
                break
    # Rebuild caches from the final values.
    counts: dict[int, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    s._counts = counts
    s.vmin = min(counts)
    s.vmax = max(counts)
    s.off_target = off
    s.tick += ticks
    return SimResult("quantized", n, ticks, converged, _quantized_detail(s, converged))


def _run_traced(g: Graph, s, rng, max_ticks: int, stride: int, protocol: str) -> SimResult:
    binary = protocol == "binary"
    header = _BINARY_TRACE_HEADER if binary else _QUANTIZED_TRACE_HEADER
    step = binary_step if binary else quantized_step
    predicate = binary_converged if binary else quantized_converged

    def row():
        if binary:
            return (s.tick, s.s_plus, s.s_minus, s.w_plus, s.w_minus)
        return (s.tick, lyapunov(s), s.vmin, s.vmax)

    trace = [row()]
    last_tick = s.tick
    ticks = 0
    converged = predicate(s)
    while not converged and ticks < max_ticks:
        step(s, g, rng)
        ticks += 1
        converged = predicate(s)
        if ticks % stride == 0 and not converged:
            trace.append(row())
            last_tick = s.tick
    if s.tick != last_tick:
        trace.append(row())
    detail = _binary_detail(s, converged) if binary else _quantized_detail(s, converged)
    return SimResult(protocol, g.n, ticks, converged, detail, header, tuple(trace))


def read_binary_votes(path) -> list:
    """One of '+', '-', '.' per line; '.' abstains. '#' starts a comment."""
    votes = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == "+":
                votes.append(1)
            elif line == "-":
                votes.append(-1)
            elif line == ".":
                votes.append(None)
            else:
                raise ValueError(f"{path}:{lineno}: expected one of '+', '-', '.', got {line!r}")
    return votes


def read_quantized_values(path) -> list[int]:
    """One integer per line; '#' starts a comment."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: expected an integer, got {line!r}") from exc
    return values


def write_trace_csv(result: SimResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.trace_header)
        for row in result.trace:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
