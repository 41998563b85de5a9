"""Numerical checks of local and midpoint concavity, the reduced extremal problem,
Bellman induction chains and a brute-force sharpness oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bellman import FD_STEP_SECOND, bellman_derivatives, bellman_value
from .constants import EPS0_DYADIC, delta_root, g_function
from .domain import BellmanPoint, ParabolicStrip, Sign, contains, max_spread_on_segment, vertical_gap
from .errors import DomainError, NumericalError, ParameterError, PreconditionError
from .piecewise import (DyadicStepFunction, PiecewiseFunction, _children, _node_avg,
                        bmo_norm_dyadic, dyadic_worst_interval)

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Reduced midpoint inequality
# ---------------------------------------------------------------------------


def midpoint_gap(a: float, a_minus: float, a_plus: float, theta: float, delta: float, sign) -> float:
    """f (PLUS) or f^- (MINUS) in the reduced variables.

    ``delta`` does not enter the formula; it is accepted so that calls carry
    the full context of the reduction.
    """
    if Sign.parse(sign) is Sign.PLUS:
        return (2 * (1 - a) * math.exp(a) - (1 - a_minus) * math.exp(-theta + a_minus)
                - (1 - a_plus) * math.exp(theta + a_plus))
    return (2 * (1 + a) * math.exp(-a) - (1 + a_minus) * math.exp(-theta - a_minus)
            - (1 + a_plus) * math.exp(theta - a_plus))


def _midpoint_gap_array(a, am, ap, th, sign: Sign):
    if sign is Sign.PLUS:
        return 2 * (1 - a) * np.exp(a) - (1 - am) * np.exp(-th + am) - (1 - ap) * np.exp(th + ap)
    return 2 * (1 + a) * np.exp(-a) - (1 + am) * np.exp(-th - am) - (1 + ap) * np.exp(th - ap)


def reduce_triple(x_minus: BellmanPoint, x_plus: BellmanPoint, delta: float):
    """Reduced coordinates (a, a-, a+, theta) and the factor relating f to the B-gap.

    ``2 B(mid) - B(x-) - B(x+) = factor * midpoint_gap(a, a-, a+, theta)``.
    """
    mid = BellmanPoint(0.5 * (x_minus.x1 + x_plus.x1), 0.5 * (x_minus.x2 + x_plus.x2))
    theta = 0.5 * (x_plus.x1 - x_minus.x1)
    return (vertical_gap(mid, delta), vertical_gap(x_minus, delta), vertical_gap(x_plus, delta), theta), mid


def bellman_midpoint_gap(x_minus: BellmanPoint, x_plus: BellmanPoint, delta: float, sign) -> float:
    """2 B(mid) - B(x-) - B(x+)."""
    mid = BellmanPoint(0.5 * (x_minus.x1 + x_plus.x1), 0.5 * (x_minus.x2 + x_plus.x2))
    return (2 * bellman_value(mid, delta, sign) - bellman_value(x_minus, delta, sign)
            - bellman_value(x_plus, delta, sign))


def segment_inside(x_minus, x_plus, delta: float) -> bool:
    return max_spread_on_segment(tuple(x_minus), tuple(x_plus)) <= delta * delta * (1 + 1e-12)


# ---------------------------------------------------------------------------
# Scan of the constraint set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanReport:
    extremum: float
    argument: tuple  # (a, a_minus, a_plus, theta)
    grid_size: int
    refined: bool
    expected: float = math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["argument"] = list(self.argument)
        return d


TIE_TOL = 1e-12


def _scan_box(lo, hi, n, sign: Sign):
    axes = [np.linspace(lo[i], hi[i], n) for i in range(3)]
    a, am, ap = np.meshgrid(*axes, indexing="ij")
    a, am, ap = a.ravel(), am.ravel(), ap.ravel()
    th2 = 0.5 * (am * am + ap * ap) - a * a
    ok = th2 >= 0
    ok &= (ap <= am) if sign is Sign.PLUS else (ap >= am)
    a, am, ap = a[ok], am[ok], ap[ok]
    th = np.sqrt(th2[ok])
    return a, am, ap, th, _midpoint_gap_array(a, am, ap, th, sign)


def _pick(a, am, ap, th, f, sign: Sign):
    """Extremal point; among near-ties prefer the largest theta (f vanishes on whole degenerate families)."""
    best = f.min() if sign is Sign.PLUS else f.max()
    near = np.flatnonzero(np.abs(f - best) <= TIE_TOL)
    k = near[np.argmax(th[near])]
    return float(f[k]), (float(a[k]), float(am[k]), float(ap[k]), float(th[k]))


def scan_constraint_set(delta: float, eps: float, sign, grid: int = 64, refine_rounds: int = 2,
                        zoom: int = 8, check: bool = True) -> ScanReport:
    """Extremum of f (min, PLUS) or f^- (max, MINUS) over the constraint set.

    The box [r1, delta]**3 of (a, a-, a+) is gridded and theta is solved from
    a-**2 + a+**2 = 2 a**2 + 2 theta**2, so every vertex of the box, the
    corner (r1, delta, r1, eps/sqrt2) included, is a grid point.  The best
    cell is then re-gridded ``refine_rounds`` times, each time ``zoom`` times
    finer.  With ``check`` the result is compared against min{0, g}
    (resp. max{0, g^-}).
    """
    sign = Sign.parse(sign)
    if not 0 < eps <= delta:
        raise DomainError(f"need 0 < eps <= delta, got eps={eps}, delta={delta}")
    if grid < 2:
        raise ParameterError(f"grid must be at least 2, got {grid}")
    r1 = math.sqrt(delta * delta - eps * eps)
    lo, hi = np.full(3, r1), np.full(3, float(delta))
    pts = _scan_box(lo, hi, grid, sign)
    if pts[0].size == 0:
        raise DomainError("empty feasible set")
    val, arg = _pick(*pts, sign)
    for _ in range(refine_rounds):
        half = (hi - lo) / (grid - 1) * zoom / 2
        centre = np.array(arg[:3])
        lo2, hi2 = np.maximum(centre - half, r1), np.minimum(centre + half, delta)
        pts = _scan_box(lo2, hi2, grid, sign)
        if pts[0].size:
            v2, a2 = _pick(*pts, sign)
            better = v2 < val - TIE_TOL if sign is Sign.PLUS else v2 > val + TIE_TOL
            tie = abs(v2 - val) <= TIE_TOL and a2[3] > arg[3]
            if better or tie:
                val, arg = v2, a2
        lo, hi = lo2, hi2
    g = g_function(delta, eps, sign)
    expected = min(0.0, g) if sign is Sign.PLUS else max(0.0, g)
    report = ScanReport(val, arg, grid, refine_rounds > 0, expected)
    if check and abs(val - expected) > 1e-6:
        raise NumericalError(f"scan extremum {val} at {arg} differs from predicted {expected}")
    return report


def slide_profile(theta: float, delta: float, eps: float, sign) -> float:
    """V(theta) (PLUS) or V^-(theta) (MINUS): f along the family through the corner."""
    sign = Sign.parse(sign)
    top = eps / SQRT2
    if not -1e-15 <= theta <= top * (1 + 1e-15):
        raise DomainError(f"theta = {theta} outside [0, {top}]")
    theta = min(max(theta, 0.0), top)
    r1 = math.sqrt(delta * delta - eps * eps)
    a = math.sqrt(max(delta * delta - 0.5 * eps * eps - theta * theta, 0.0))
    if sign is Sign.PLUS:
        return midpoint_gap(a, delta, r1, theta, delta, sign)
    return midpoint_gap(a, r1, delta, theta, delta, sign)


# ---------------------------------------------------------------------------
# Bellman induction
# ---------------------------------------------------------------------------


@dataclass
class InductionChain:
    levels: list = field(default_factory=list)  # [{"depth": n, "value": v}, ...]
    target: float = math.nan

    @property
    def values(self) -> list:
        return [lv["value"] for lv in self.levels]

    def to_dict(self) -> dict:
        return {"levels": list(self.levels), "target": self.target}


def _level_points(phi: DyadicStepFunction, max_depth: int):
    nodes = [phi.root]
    for n in range(max_depth + 1):
        avgs = np.array([_node_avg(nd)[:2] for nd in nodes])
        yield n, avgs
        nodes = [c for nd in nodes for c in _children(nd)]


def bellman_induction(phi: DyadicStepFunction, eps: float, sign, max_depth: int = 6,
                      check: bool = True, tol: float = 1e-12) -> InductionChain:
    """Level sums 2**-n * sum_m B(x^{n,m}) for n = 0..max_depth at delta = delta(eps).

    With ``check`` the chain must be nonincreasing (PLUS) / nondecreasing
    (MINUS) up to ``tol`` relative, and the last level must bound the
    exponential average of phi from the correct side.
    """
    sign = Sign.parse(sign)
    if sign is Sign.PLUS and eps >= EPS0_DYADIC:
        raise ParameterError(f"PLUS induction needs eps < sqrt(2) log 2, got {eps}")
    norm = bmo_norm_dyadic(phi)
    if norm > eps + 1e-9:
        lo, hi, var = dyadic_worst_interval(phi)
        raise PreconditionError(
            f"dyadic norm {norm} exceeds eps = {eps}; worst interval ({lo}, {hi}] has variance {var}")
    delta = delta_root(eps, sign).root
    chain = InductionChain(target=phi.moments().exp_mean)
    for n, pts in _level_points(phi, max_depth):
        vals = [bellman_value(BellmanPoint(x1, max(x2, x1 * x1)), delta, sign) for x1, x2 in pts]
        chain.levels.append({"depth": n, "value": math.fsum(vals) / len(vals)})
    if check:
        s = sign.s
        v = chain.values
        for n in range(1, len(v)):
            if s * (v[n] - v[n - 1]) > tol * max(1.0, abs(v[n - 1])):
                raise NumericalError(f"chain not monotone at depth {n}: {v[n - 1]} -> {v[n]}")
        if s * (chain.target - v[-1]) > 1e-10 * max(1.0, abs(v[-1])):
            raise NumericalError(f"last level {v[-1]} does not bound the exponential average {chain.target}")
    return chain


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    value: float
    leaves: np.ndarray
    evaluations: int
    restarts: int


def _dyadic_blocks(depth: int):
    n = 1 << depth
    return [(m * (n >> k), (m + 1) * (n >> k)) for k in range(depth) for m in range(1 << k)]


def leaves_norm(leaves: np.ndarray) -> float:
    """Dyadic BMO norm of a step function given by its 2**K leaf values."""
    v = np.asarray(leaves, dtype=float)
    depth = len(v).bit_length() - 1
    worst = 0.0
    for lo, hi in _dyadic_blocks(depth):
        worst = max(worst, float(np.var(v[lo:hi])))
    return math.sqrt(worst)


def brute_force_oracle(p: BellmanPoint, eps: float, depth: int, budget: int = 100_000,
                       seed: int = 0, patience: int = 40, details: bool = False):
    """Best <e^phi> found over depth-``depth`` dyadic step functions with
    averages p and dyadic norm at most eps.

    Leaves are parameterised as phi = x1 + sigma*(z - mean z)/sd(z), which
    satisfies both moment constraints exactly.  Each restart runs SLSQP on
    z with the norm constraints eps**2 var(z) >= sigma**2 var_J(z); restarts
    stop when ``budget`` objective evaluations are spent or after
    ``patience`` restarts without improvement.
    """
    if not 1 <= depth <= 6:
        raise ParameterError(f"depth must be in 1..6, got {depth}")
    if not contains(ParabolicStrip(eps), p):
        raise DomainError(f"point ({p.x1}, {p.x2}) is outside the eps-strip")
    sigma = math.sqrt(p.spread)
    n = 1 << depth
    if sigma == 0.0:
        res = OracleResult(math.exp(p.x1), np.full(n, p.x1), 1, 0)
        return res if details else res.value

    rng = np.random.default_rng(seed)
    blocks = [(lo, hi) for lo, hi in _dyadic_blocks(depth) if hi - lo >= 2]
    e2 = eps * eps * (1 - 1e-10)
    s2 = sigma * sigma
    counter = {"n": 0}

    def phi_of(z):
        c = z - z.mean()
        sd = math.sqrt(float(c @ c) / n)
        return p.x1 + sigma * c / sd, c, sd

    def obj(z):
        counter["n"] += 1
        phi, c, sd = phi_of(z)
        w = np.exp(phi)
        u = c / sd
        grad = (sigma / sd) / n * (w - w.mean() - u * float(u @ w) / n)
        return -float(w.mean()), -grad

    ind = np.zeros((len(blocks), n))
    for i, (lo, hi) in enumerate(blocks):
        ind[i, lo:hi] = 1.0 / (hi - lo)

    def cons(z):
        c = z - z.mean()
        var = float(c @ c) / n
        mj = ind @ z
        return e2 * var - s2 * (ind @ (z * z) - mj * mj)

    def cons_jac(z):
        c = z - z.mean()
        mj = ind @ z
        # d var_J / dz_j = 2 (z_j - mean_J) / |J| on J
        return 2.0 * e2 * c / n - s2 * 2.0 * ind * (z[None, :] - mj[:, None])

    def starts():
        yield _staircase_start(depth)
        while True:
            kind = rng.integers(3)
            if kind == 0:
                yield rng.standard_normal(n)
            elif kind == 1:
                yield _staircase_start(depth)[rng.permutation(n)] + 0.3 * rng.standard_normal(n)
            else:
                yield _haar_start(depth, rng)

    best, best_leaves, restarts, stale = -math.inf, None, 0, 0
    for z0 in starts():
        if counter["n"] >= budget or stale >= patience:
            break
        if np.ptp(z0) == 0:
            continue
        restarts += 1
        sol = minimize(obj, z0, jac=True, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                       options={"maxiter": 200, "ftol": 1e-14})
        z = sol.x
        if not np.all(np.isfinite(z)) or np.ptp(z) == 0:
            stale += 1
            continue
        phi, _, _ = phi_of(z)
        if leaves_norm(phi) > eps + 1e-12:
            stale += 1
            continue
        val = float(np.mean(np.exp(phi)))
        stale = 0 if val > best * (1 + 1e-9) else stale + 1
        if val > best:
            best, best_leaves = val, phi
    if best_leaves is None:
        raise NumericalError("oracle found no feasible candidate")
    res = OracleResult(best, best_leaves, counter["n"], restarts)
    return res if details else res.value


def _staircase_start(depth: int) -> np.ndarray:
    n = 1 << depth
    out = np.empty(n)
    for k in range(depth):
        out[(n >> (k + 1)):(n >> k)] = k
    out[0] = depth
    return out


def _haar_start(depth: int, rng) -> np.ndarray:
    n = 1 << depth
    z = np.zeros(n)
    for k in range(depth):
        width = n >> k
        for m in range(1 << k):
            c = rng.standard_normal() * rng.uniform(0.2, 1.0)
            z[m * width:m * width + width // 2] += c
            z[m * width + width // 2:(m + 1) * width] -= c
    return z


# ---------------------------------------------------------------------------
# Finite-difference check of the closed-form derivatives
# ---------------------------------------------------------------------------


def hessian_fd_check(p: BellmanPoint, delta: float, sign, h: float = FD_STEP_SECOND) -> float:
    """Largest discrepancy between closed-form and central-difference derivatives.

    Gradient entries are compared relative to the gradient's max-norm and
    Hessian entries relative to the Hessian's max-norm.
    """
    sign = Sign.parse(sign)
    gap = vertical_gap(p, delta)
    if gap * gap <= 4 * h * (1 + abs(p.x1)):
        raise DomainError(f"gap {gap} too small for step {h}")
    if p.spread <= h * (1 + abs(p.x1)) * 4:
        raise DomainError("point too close to the lower boundary for centred differences")
    d = bellman_derivatives(p, delta, sign)

    def B(x1, x2):
        return bellman_value(BellmanPoint(x1, x2), delta, sign)

    x1, x2 = p.x1, p.x2
    b0 = B(x1, x2)
    g1 = (B(x1 + h, x2) - B(x1 - h, x2)) / (2 * h)
    g2 = (B(x1, x2 + h) - B(x1, x2 - h)) / (2 * h)
    h11 = (B(x1 + h, x2) - 2 * b0 + B(x1 - h, x2)) / (h * h)
    h22 = (B(x1, x2 + h) - 2 * b0 + B(x1, x2 - h)) / (h * h)
    h12 = (B(x1 + h, x2 + h) - B(x1 + h, x2 - h) - B(x1 - h, x2 + h) + B(x1 - h, x2 - h)) / (4 * h * h)
    gs = max(abs(d.grad[0]), abs(d.grad[1]))
    hs = max(abs(d.h11), abs(d.h12), abs(d.h22))
    err_g = max(abs(g1 - d.grad[0]), abs(g2 - d.grad[1])) / gs
    err_h = max(abs(h11 - d.h11), abs(h12 - d.h12), abs(h22 - d.h22)) / hs
    return max(err_g, err_h)


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------


def random_ode_sample(rng):
    """(t, delta, sign) where the step-1e-4 central differences are accurate.

    The truncation error grows like a negative power of sqrt(delta**2 - t)
    and, for PLUS, of 1 - delta; the ranges keep both away from zero.
    """
    sign = Sign.PLUS if rng.random() < 0.5 else Sign.MINUS
    delta = rng.uniform(0.3, 0.8 if sign is Sign.PLUS else 0.99)
    t = rng.uniform(0.02, 0.75) * delta * delta
    return t, delta, sign


def random_interior_point(rng, delta: float, min_gap: float = 0.25, x1_range=(-1.0, 1.0)) -> BellmanPoint:
    """Point with vertical gap in [min_gap, delta) and positive spread."""
    if not delta > min_gap:
        raise ParameterError(f"need delta > min_gap, got {delta} <= {min_gap}")
    x1 = rng.uniform(*x1_range)
    gap = rng.uniform(min_gap, 0.95 * delta)
    return BellmanPoint(x1, x1 * x1 + delta * delta - gap * gap)


def random_point(rng, eps: float, x1_range=(-1.0, 1.0)) -> BellmanPoint:
    x1 = rng.uniform(*x1_range)
    return BellmanPoint(x1, x1 * x1 + rng.uniform(0.0, 1.0) * eps * eps)


def random_triple(rng, eps: float, x1_range=(-1.0, 1.0), max_tries: int = 1000):
    """Random (x-, x+) with x-, x+ and their midpoint in the eps-strip.

    Half of the draws put the endpoints on the strip boundaries, where the
    concavity margin is thinnest.
    """
    strip = ParabolicStrip(eps)
    for _ in range(max_tries):
        x1m = rng.uniform(*x1_range)
        x1p = x1m + rng.uniform(-2 * eps, 2 * eps)
        if rng.random() < 0.5:
            um, up = rng.uniform(0, 1, 2)
        else:
            um, up = rng.integers(0, 2, 2).astype(float)
        xm = BellmanPoint(x1m, x1m * x1m + um * eps * eps)
        xp = BellmanPoint(x1p, x1p * x1p + up * eps * eps)
        mid = BellmanPoint(0.5 * (x1m + x1p), 0.5 * (xm.x2 + xp.x2))
        if contains(strip, mid):
            return xm, xp
    raise NumericalError("could not draw an admissible triple")


def random_dyadic_function(rng, eps: float, depth: int = 6, max_tries: int = 100) -> DyadicStepFunction:
    """Random step function on 2**depth leaves with dyadic norm at most eps.

    Leaves come from random Haar sums, are rescaled so that the norm equals
    eps times a uniform factor in (0, 1], and are re-checked (rejection).
    """
    n = 1 << depth
    for _ in range(max_tries):
        z = _haar_start(depth, rng) if rng.random() < 0.7 else rng.standard_normal(n)
        norm = leaves_norm(z)
        if norm == 0.0:
            continue
        scale = eps * rng.uniform(0.05, 1.0) / norm
        leaves = rng.uniform(-1, 1) + scale * (z - z.mean())
        if leaves_norm(leaves) <= eps * (1 + 1e-12):
            return DyadicStepFunction.from_leaves(leaves)
    raise NumericalError("rejection sampling of a BMO^d function failed")


def random_log_family(rng, eps: float, sign=None) -> PiecewiseFunction:
    """phi_{a,b,gamma} with |gamma| = eps and random a in (0, 1], b."""
    s = Sign.parse(sign).s if sign is not None else (1 if rng.random() < 0.5 else -1)
    a = rng.uniform(0.01, 1.0)
    b = rng.uniform(-1.0, 1.0)
    return PiecewiseFunction.log_family(a, b, s * eps)
