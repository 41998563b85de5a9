"""Test and extremal functions on (0, 1]: exact moments and BMO norms.

Two representations live here:

* :class:`PiecewiseFunction` -- finitely many segments, each a constant or a
  logarithmic ramp ``gamma*log(a/t) + b``.  Everything is integrated in
  closed form; the ramp may be singular at ``t = 0``.
* :class:`DyadicStepFunction` -- a binary tree over the dyadic lattice whose
  leaves are constants or infinite arithmetic staircases.  A staircase node
  with ``(base, step)`` takes the value ``base`` on the right half of its
  interval, ``base + step`` on the right half of the left half, and so on.
  Moments, exponential averages and the dyadic BMO norm of a staircase are
  summed analytically, so nothing is truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ParameterError, UnsupportedShapeError

_JOIN_TOL = 1e-12


@dataclass(frozen=True)
class MomentTriple:
    mean: float
    second: float
    exp_mean: float  # math.inf when the exponential average diverges

    @property
    def variance(self) -> float:
        return self.second - self.mean * self.mean


def _check_interval(lo: float, hi: float) -> None:
    if not (0.0 <= lo < hi <= 1.0):
        raise ParameterError(f"need 0 <= lo < hi <= 1, got lo={lo!r}, hi={hi!r}")


# ---------------------------------------------------------------------------
# Piecewise functions with constant and logarithmic segments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    lo: float
    hi: float
    c: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.c)

    def integrals(self, u: float, v: float) -> tuple[float, float, float]:
        w = v - u
        return self.c * w, self.c * self.c * w, math.exp(self.c) * w

    def primitives(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Integrals of phi and phi**2 from ``lo`` to ``t`` (t inside the segment)."""
        w = t - self.lo
        return self.c * w, self.c * self.c * w

    def to_dict(self) -> dict:
        return {"kind": "constant", "lo": self.lo, "hi": self.hi, "c": self.c}


@dataclass(frozen=True)
class LogRamp:
    """``gamma*log(a/t) + b`` on (lo, hi] with ``hi <= a``."""

    lo: float
    hi: float
    gamma: float
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.hi <= self.a * (1 + _JOIN_TOL)):
            raise ParameterError(f"LogRamp needs 0 < hi <= a, got hi={self.hi}, a={self.a}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return self.gamma * np.log(self.a / t) + self.b

    # t*l(t) and t*l(t)**2 with their limits 0 at t = 0
    def _tl(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        l = np.log(self.a / safe)
        return np.where(t > 0, t * l, 0.0), np.where(t > 0, t * l * l, 0.0)

    def _p1(self, t):
        g, b = self.gamma, self.b
        tl, _ = self._tl(t)
        return (g + b) * t + g * tl

    def _p2(self, t):
        g, b = self.gamma, self.b
        tl, tl2 = self._tl(t)
        return (2 * g * g + 2 * g * b + b * b) * t + g * g * tl2 + 2 * g * (b + g) * tl

    def _pexp(self, t: float) -> float:
        # d/dt [t*(a/t)**gamma] = (1 - gamma)*(a/t)**gamma
        g = self.gamma
        if t == 0.0:
            return 0.0
        return math.exp(self.b) * t * math.exp(g * math.log(self.a / t)) / (1.0 - g)

    def integrals(self, u: float, v: float) -> tuple[float, float, float]:
        i1 = float(self._p1(v) - self._p1(u))
        i2 = float(self._p2(v) - self._p2(u))
        g = self.gamma
        if u == 0.0 and g >= 1.0:
            ie = math.inf
        elif g == 1.0:
            ie = math.exp(self.b) * self.a * (math.log(v) - math.log(u))
        else:
            ie = self._pexp(v) - self._pexp(u)
        return i1, i2, ie

    def primitives(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._p1(t) - self._p1(self.lo), self._p2(t) - self._p2(self.lo)

    def to_dict(self) -> dict:
        return {"kind": "logramp", "lo": self.lo, "hi": self.hi,
                "gamma": self.gamma, "a": self.a, "b": self.b}


Segment = Union[Constant, LogRamp]


@dataclass(frozen=True)
class PiecewiseFunction:
    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ParameterError("a piecewise function needs at least one segment")
        if segs[0].lo != 0.0 or abs(segs[-1].hi - 1.0) > _JOIN_TOL:
            raise ParameterError("segments must tile (0, 1]")
        for s, t in zip(segs, segs[1:]):
            if abs(s.hi - t.lo) > _JOIN_TOL:
                raise ParameterError(f"gap or overlap between segments at {s.hi} / {t.lo}")
        for s in segs:
            if not s.lo < s.hi:
                raise ParameterError(f"empty segment ({s.lo}, {s.hi}]")

    @classmethod
    def constant(cls, c: float) -> "PiecewiseFunction":
        return cls((Constant(0.0, 1.0, c),))

    @classmethod
    def log_family(cls, a: float, b: float, gamma: float) -> "PiecewiseFunction":
        """``gamma*log(a/t) + b`` on (0, a], ``b`` on (a, 1]."""
        if not 0.0 < a <= 1.0:
            raise ParameterError(f"need 0 < a <= 1, got {a}")
        if gamma == 0.0:
            return cls.constant(b)
        segs = [LogRamp(0.0, a, gamma, a, b)]
        if a < 1.0:
            segs.append(Constant(a, 1.0, b))
        return cls(tuple(segs))

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, s in enumerate(self.segments):
            mask = (t > s.lo) & (t <= s.hi) if i else (t <= s.hi)
            out[mask] = s(t[mask])
        return float(out[0]) if scalar else out

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([0.0] + [s.hi for s in self.segments])

    def integrals(self, lo: float, hi: float) -> tuple[float, float, float]:
        i1 = i2 = ie = 0.0
        for s in self.segments:
            u, v = max(lo, s.lo), min(hi, s.hi)
            if u < v:
                a, b, c = s.integrals(u, v)
                i1, i2, ie = i1 + a, i2 + b, ie + c
        return i1, i2, ie

    def cumulative(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised integrals of phi and phi**2 over (0, t]."""
        t = np.asarray(t, dtype=float)
        f1 = np.zeros_like(t)
        f2 = np.zeros_like(t)
        base1 = base2 = 0.0
        for s in self.segments:
            inside = (t > s.lo) & (t <= s.hi) if s.lo > 0 else (t <= s.hi)
            p1, p2 = s.primitives(np.clip(t, s.lo, s.hi))
            f1 = np.where(inside, base1 + p1, f1)
            f2 = np.where(inside, base2 + p2, f2)
            q1, q2 = s.primitives(np.array(s.hi))
            base1, base2 = base1 + float(q1), base2 + float(q2)
        return f1, f2

    def to_dict(self) -> dict:
        return {"type": "piecewise", "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseFunction":
        segs = []
        for s in d["segments"]:
            if s["kind"] == "constant":
                segs.append(Constant(s["lo"], s["hi"], s["c"]))
            elif s["kind"] == "logramp":
                segs.append(LogRamp(s["lo"], s["hi"], s["gamma"], s["a"], s["b"]))
            else:
                raise UnsupportedShapeError(f"unknown segment kind {s['kind']!r}")
        return cls(tuple(segs))


# ---------------------------------------------------------------------------
# Dyadic step functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    c: float


@dataclass(frozen=True)
class Staircase:
    base: float
    step: float


@dataclass(frozen=True, eq=False)
class Split:
    left: "Node"
    right: "Node"
    _avg: tuple = field(default=None, repr=False, compare=False)


Node = Union[Const, Staircase, Split]


def _exp_staircase(base: float, step: float) -> float:
    # sum_k 2^-(k+1) e^(base + k*step) = e^base / (2 - e^step)
    if step >= math.log(2.0):
        return math.inf
    return math.exp(base) / (2.0 - math.exp(step))


def _node_avg(node: Node) -> tuple[float, float, float]:
    """Averages of phi, phi**2, e**phi over the node's own interval."""
    if isinstance(node, Const):
        return node.c, node.c * node.c, math.exp(node.c)
    if isinstance(node, Staircase):
        b, s = node.base, node.step
        return b + s, b * b + 2 * b * s + 3 * s * s, _exp_staircase(b, s)
    if node._avg is None:
        l, r = _node_avg(node.left), _node_avg(node.right)
        avg = tuple(0.5 * (x + y) for x, y in zip(l, r))
        object.__setattr__(node, "_avg", avg)
    return node._avg


def _children(node: Node) -> tuple[Node, Node]:
    if isinstance(node, Split):
        return node.left, node.right
    if isinstance(node, Staircase):
        return Staircase(node.base + node.step, node.step), Const(node.base)
    return node, node


def _integrate(node: Node, nlo: float, nhi: float, lo: float, hi: float):
    if hi <= nlo or lo >= nhi:
        return 0.0, 0.0, 0.0
    w = nhi - nlo
    if lo <= nlo and nhi <= hi:
        m1, m2, me = _node_avg(node)
        return m1 * w, m2 * w, me * w
    if isinstance(node, Const):
        ov = min(hi, nhi) - max(lo, nlo)
        return node.c * ov, node.c * node.c * ov, math.exp(node.c) * ov
    mid = 0.5 * (nlo + nhi)
    left, right = _children(node)
    a = _integrate(left, nlo, mid, lo, hi)
    b = _integrate(right, mid, nhi, lo, hi)
    return a[0] + b[0], a[1] + b[1], a[2] + b[2]


def _negate(node: Node) -> Node:
    if isinstance(node, Const):
        return Const(-node.c)
    if isinstance(node, Staircase):
        return Staircase(-node.base, -node.step)
    return Split(_negate(node.left), _negate(node.right))


def _shift(node: Node, c: float) -> Node:
    if isinstance(node, Const):
        return Const(node.c + c)
    if isinstance(node, Staircase):
        return Staircase(node.base + c, node.step)
    return Split(_shift(node.left, c), _shift(node.right, c))


def _depth(node: Node) -> int:
    # iterative: extremal spines are deep but thin
    best, stack = 0, [(node, 0)]
    while stack:
        n, d = stack.pop()
        if isinstance(n, Split):
            stack.append((n.left, d + 1))
            stack.append((n.right, d + 1))
        else:
            best = max(best, d)
    return best


def _node_to_dict(node: Node):
    if isinstance(node, Const):
        return {"const": node.c}
    if isinstance(node, Staircase):
        return {"staircase": [node.base, node.step]}
    return {"split": [_node_to_dict(node.left), _node_to_dict(node.right)]}


def _node_from_dict(d) -> Node:
    if "const" in d:
        return Const(float(d["const"]))
    if "staircase" in d:
        b, s = d["staircase"]
        return Staircase(float(b), float(s))
    if "split" in d:
        l, r = d["split"]
        return Split(_node_from_dict(l), _node_from_dict(r))
    raise UnsupportedShapeError(f"unrecognised dyadic node {d!r}")


@dataclass(frozen=True)
class DyadicStepFunction:
    """Dyadic step function on (0, 1], stored as a tree of dyadic intervals.

    ``truncation_bound`` is an a-priori bound on the error of the exponential
    average caused by cutting an infinite construction at finite depth; it is
    zero for functions represented exactly.
    """

    root: Node
    truncation_bound: float = 0.0

    @classmethod
    def from_leaves(cls, leaves: Sequence[float], tail: dict | None = None) -> "DyadicStepFunction":
        """Build from ``2**K`` leaf values, optionally with a staircase tail.

        ``tail = {"anchor_k": K, "step": s}`` replaces the leftmost leaf
        ``(0, 2**-K]`` by the staircase that starts at that leaf's value and
        increases by ``s`` per halving.
        """
        n = len(leaves)
        k = n.bit_length() - 1
        if n == 0 or (1 << k) != n:
            raise ParameterError(f"need 2**K leaves, got {n}")
        nodes: list[Node] = [Const(float(v)) for v in leaves]
        if tail is not None:
            if int(tail["anchor_k"]) != k:
                raise ParameterError("tail anchor_k must equal the leaf depth")
            nodes[0] = Staircase(float(leaves[0]), float(tail["step"]))
        while len(nodes) > 1:
            nodes = [Split(nodes[i], nodes[i + 1]) for i in range(0, len(nodes), 2)]
        return cls(nodes[0])

    @property
    def depth(self) -> int:
        return _depth(self.root)

    def moments(self, lo: float = 0.0, hi: float = 1.0) -> MomentTriple:
        _check_interval(lo, hi)
        i1, i2, ie = _integrate(self.root, 0.0, 1.0, lo, hi)
        w = hi - lo
        return MomentTriple(i1 / w, i2 / w, ie / w)

    def leaves(self, depth: int) -> np.ndarray:
        """Averages over the ``2**depth`` dyadic intervals of the given generation."""
        out = np.empty(1 << depth)
        h = 1.0 / len(out)
        for m in range(len(out)):
            lo, hi = m * h, (m + 1) * h
            i1, _, _ = _integrate(self.root, 0.0, 1.0, lo, hi)
            out[m] = i1 / h
        return out

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, x in enumerate(t):
            node, lo, hi = self.root, 0.0, 1.0
            while not isinstance(node, Const):
                mid = 0.5 * (lo + hi)
                left, right = _children(node)
                if x > mid:
                    node, lo = right, mid
                else:
                    node, hi = left, mid
                if hi - lo < 1e-300:
                    break
            out[i] = node.c if isinstance(node, Const) else np.nan
        return float(out[0]) if scalar else out

    def negated(self) -> "DyadicStepFunction":
        return DyadicStepFunction(_negate(self.root), self.truncation_bound)

    def shifted(self, c: float) -> "DyadicStepFunction":
        return DyadicStepFunction(_shift(self.root, c), self.truncation_bound * math.exp(c))

    def to_dict(self) -> dict:
        return {"type": "dyadic", "root": _node_to_dict(self.root),
                "truncation_bound": self.truncation_bound}

    @classmethod
    def from_dict(cls, d: dict) -> "DyadicStepFunction":
        if "leaves" in d:
            return cls.from_leaves(d["leaves"], d.get("tail"))
        return cls(_node_from_dict(d["root"]), float(d.get("truncation_bound", 0.0)))


def function_from_dict(d: dict):
    if d.get("type") == "piecewise":
        return PiecewiseFunction.from_dict(d)
    if d.get("type") == "dyadic":
        return DyadicStepFunction.from_dict(d)
    raise UnsupportedShapeError(f"unknown function type {d.get('type')!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def moments(phi, lo: float = 0.0, hi: float = 1.0) -> MomentTriple:
    """Exact averages of phi, phi**2 and e**phi over (lo, hi]."""
    _check_interval(lo, hi)
    if isinstance(phi, DyadicStepFunction):
        return phi.moments(lo, hi)
    if not isinstance(phi, PiecewiseFunction):
        raise UnsupportedShapeError(f"cannot integrate {type(phi).__name__}")
    i1, i2, ie = phi.integrals(lo, hi)
    w = hi - lo
    return MomentTriple(i1 / w, i2 / w, ie / w)


_MIN_WIDTH = 1e-6  # narrower windows lose all digits to cancellation


def _variance_grid(phi: PiecewiseFunction, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    f1c, f2c = phi.cumulative(c)
    f1d, f2d = phi.cumulative(d)
    w = d - c
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = (f1d - f1c) / w
        v = (f2d - f2c) / w - m1 * m1
    return np.where(w >= _MIN_WIDTH, v, -np.inf)


def bmo_norm_continuous(phi: PiecewiseFunction, grid: int = 64, rounds: int = 3) -> float:
    """sup over subintervals [c, d] of the variance, square-rooted.

    Candidates: every pair of breakpoints (this already contains the exact
    supremum ``gamma**2`` of a single log ramp, attained on (0, d] for d <= a),
    then a ``grid x grid`` sweep of (c, d) with ``rounds`` local zooms around
    the best cell.
    """
    if not isinstance(phi, PiecewiseFunction):
        raise UnsupportedShapeError("continuous BMO norm needs a PiecewiseFunction")
    if sum(isinstance(s, LogRamp) for s in phi.segments) > 1:
        raise UnsupportedShapeError("at most one logarithmic segment is supported")

    bp = phi.breakpoints
    c, d = np.meshgrid(bp, bp, indexing="ij")
    v = _variance_grid(phi, c.ravel(), d.ravel())
    best = float(np.max(v)) if v.size else 0.0

    clo, chi, dlo, dhi = 0.0, 1.0, 0.0, 1.0
    for _ in range(rounds + 1):
        cs = np.union1d(np.linspace(clo, chi, grid), bp[(bp >= clo) & (bp <= chi)])
        ds = np.union1d(np.linspace(dlo, dhi, grid), bp[(bp >= dlo) & (bp <= dhi)])
        cc, dd = np.meshgrid(cs, ds, indexing="ij")
        v = _variance_grid(phi, cc.ravel(), dd.ravel())
        k = int(np.argmax(v))
        if v[k] > best:
            best = float(v[k])
        i, j = np.unravel_index(k, cc.shape)
        hc = (chi - clo) / (grid - 1)
        hd = (dhi - dlo) / (grid - 1)
        c0, d0 = cs[i], ds[j]
        clo, chi = max(0.0, c0 - 4 * hc), min(1.0, c0 + 4 * hc)
        dlo, dhi = max(0.0, d0 - 4 * hd), min(1.0, d0 + 4 * hd)
    return math.sqrt(max(best, 0.0))


def _dyadic_sup(node: Node, depth_left: int | None) -> float:
    if isinstance(node, Const):
        return 0.0
    if isinstance(node, Staircase):
        # (0, 2^-n] sub-staircases all have variance 2*step**2; right halves are flat
        return 2.0 * node.step * node.step
    m1, m2, _ = _node_avg(node)
    best = max(m2 - m1 * m1, 0.0)
    if depth_left is None or depth_left > 0:
        nxt = None if depth_left is None else depth_left - 1
        best = max(best, _dyadic_sup(node.left, nxt), _dyadic_sup(node.right, nxt))
    return best


def bmo_norm_dyadic(phi: DyadicStepFunction, max_depth: int | None = None) -> float:
    """Dyadic BMO norm; staircase tails contribute their exact value."""
    if not isinstance(phi, DyadicStepFunction):
        raise UnsupportedShapeError("dyadic BMO norm needs a DyadicStepFunction")
    return math.sqrt(_dyadic_sup(phi.root, max_depth))


def dyadic_worst_interval(phi: DyadicStepFunction) -> tuple[float, float, float]:
    """The dyadic interval (lo, hi] with the largest variance, and that variance."""
    best = (0.0, 1.0, -1.0)
    stack = [(phi.root, 0.0, 1.0)]
    while stack:
        node, lo, hi = stack.pop()
        if isinstance(node, Const):
            continue
        if isinstance(node, Staircase):
            v = 2.0 * node.step * node.step
            if v > best[2]:
                best = (lo, hi, v)
            continue
        m1, m2, _ = _node_avg(node)
        v = m2 - m1 * m1
        if v > best[2]:
            best = (lo, hi, v)
        mid = 0.5 * (lo + hi)
        stack.append((node.left, lo, mid))
        stack.append((node.right, mid, hi))
    return best


def dyadic_digits(alpha: float, n_digits: int) -> list[int]:
    """Binary digits of alpha in [0, 1]; alpha = 1 is 0.111..."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    bits, z = [], float(alpha)
    for _ in range(n_digits):
        # doubling is exact in binary floating point
        if z >= 0.5:
            bits.append(1)
            z = 2.0 * z - 1.0
        else:
            bits.append(0)
            z = 2.0 * z
    return bits


def sample_table(phi, n: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint samples ``(t, phi(t))`` on a uniform grid of (0, 1]."""
    t = (np.arange(n) + 0.5) / n
    return t, np.asarray(phi(t), dtype=float)


def iter_dyadic(depth: int) -> Iterable[tuple[int, int, float, float]]:
    """Yield (level, index, lo, hi) for every dyadic interval up to ``depth``."""
    for n in range(depth + 1):
        h = 1.0 / (1 << n)
        for m in range(1 << n):
            yield n, m, m * h, (m + 1) * h
