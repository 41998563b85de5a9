"""Geometry of the parabolic strip  x1**2 <= x2 <= x1**2 + eps**2."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, NumericalError, ParameterError, PreconditionError

MEMBER_TOL = 1e-12


class Sign(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def s(self) -> int:
        return self.value

    @classmethod
    def parse(cls, text: "str | Sign") -> "Sign":
        if isinstance(text, Sign):
            return text
        if isinstance(text, int) and text in (1, -1):
            return cls(text)
        key = str(text).strip().lower()
        if key in ("plus", "+", "p", "sup", "upper"):
            return cls.PLUS
        if key in ("minus", "-", "m", "inf", "lower"):
            return cls.MINUS
        raise ParameterError(f"unknown sign {text!r}")


@dataclass(frozen=True)
class BellmanPoint:
    """Averages (<phi>, <phi**2>) over an interval."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise DomainError(f"non-finite point ({self.x1}, {self.x2})")
        if self.x2 < self.x1 * self.x1 - MEMBER_TOL * max(1.0, self.x1 * self.x1):
            raise DomainError(f"point ({self.x1}, {self.x2}) violates x2 >= x1**2")

    @property
    def spread(self) -> float:
        """x2 - x1**2, clipped at zero."""
        return max(self.x2 - self.x1 * self.x1, 0.0)

    def __iter__(self):
        yield self.x1
        yield self.x2


@dataclass(frozen=True)
class ParabolicStrip:
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterError(f"strip width must be positive, got {self.eps}")

    def __contains__(self, p: BellmanPoint) -> bool:
        return contains(self, p)


@dataclass(frozen=True)
class SplitResult:
    alpha_plus: float
    x_minus: BellmanPoint
    x_plus: BellmanPoint
    rho_value: float
    branch: str  # "midpoint" or "tangent"


def contains(strip: ParabolicStrip, p: BellmanPoint) -> bool:
    d = p.x2 - p.x1 * p.x1
    tol = MEMBER_TOL * max(1.0, p.x1 * p.x1)
    return -tol <= d <= strip.eps * strip.eps + tol


def vertical_gap(p: BellmanPoint, delta: float) -> float:
    """sqrt(delta**2 + x1**2 - x2): square root of the vertical distance to the delta-parabola."""
    r = delta * delta + p.x1 * p.x1 - p.x2
    if r < 0:
        if r > -MEMBER_TOL * max(1.0, p.x1 * p.x1, delta * delta):
            return 0.0
        raise DomainError(f"point ({p.x1}, {p.x2}) lies above x2 = x1**2 + {delta}**2")
    return math.sqrt(r)


def tangent_contact(p: BellmanPoint, delta: float, sign) -> float:
    """Abscissa c of the tangency point of the line through p touching x2 = x1**2 + delta**2.

    PLUS picks c >= x1 (segments on which B+ is affine), MINUS picks c <= x1.
    """
    return p.x1 + Sign.parse(sign).s * vertical_gap(p, delta)


def max_spread_on_segment(p, q) -> float:
    """max of x2 - x1**2 over the straight segment [p, q]; the map is a concave quadratic."""
    p1, p2 = p
    q1, q2 = q
    a = p2 - p1 * p1
    d1 = q1 - p1
    b = (q2 - p2) - 2.0 * p1 * d1
    c = d1 * d1
    if c <= 0.0:
        return max(a, q2 - q1 * q1)
    t = min(max(b / (2.0 * c), 0.0), 1.0)
    return a + b * t - c * t * t


def split_interval(phi, eps: float, eps1: float, lo: float = 0.0, hi: float = 1.0,
                   max_iter: int = 200, tol: float = 1e-12) -> SplitResult:
    """Split (lo, hi] so that the moment segment [x-, x+] stays inside the eps1-strip.

    Start from halves.  If the segment leaves the strip, move the far
    endpoint (the one whose half-segment exits) towards the full-interval
    point by bisection on ``alpha_plus = |I+|/|I|`` until the maximal spread
    on [xi, x0] equals ``eps1**2``.
    """
    from .piecewise import moments

    if not eps1 > eps > 0:
        raise ParameterError(f"need eps1 > eps > 0, got eps={eps}, eps1={eps1}")
    width = hi - lo
    m0 = moments(phi, lo, hi)
    x0 = (m0.mean, m0.second)
    target = eps1 * eps1

    def halves(ap: float):
        cut = hi - ap * width
        a, b = moments(phi, lo, cut), moments(phi, cut, hi)
        return (a.mean, a.second), (b.mean, b.second)

    def point(x) -> BellmanPoint:
        return BellmanPoint(x[0], max(x[1], x[0] * x[0]))

    xm, xp = halves(0.5)
    if max_spread_on_segment(xm, xp) <= target:
        rho = max(max_spread_on_segment(xm, x0), max_spread_on_segment(xp, x0))
        return SplitResult(0.5, point(xm), point(xp), rho, "midpoint")

    out_m = max_spread_on_segment(xm, x0) > target
    out_p = max_spread_on_segment(xp, x0) > target
    if out_m and out_p:
        raise NumericalError("both half-segments leave the eps1-strip; "
                             f"spreads {max_spread_on_segment(xm, x0)}, {max_spread_on_segment(xp, x0)}")

    # rho(ap) > target on `bad`, <= target on `good`
    if out_p:
        def rho(ap):
            return max_spread_on_segment(halves(ap)[1], x0)
        bad, good = 0.5, 1.0
    else:
        def rho(ap):
            return max_spread_on_segment(halves(ap)[0], x0)
        bad, good = 0.5, 0.0

    trace = []
    for _ in range(max_iter):
        if abs(good - bad) <= tol:
            break
        mid = 0.5 * (good + bad)
        r = rho(mid)
        trace.append((mid, r))
        if r > target:
            bad = mid
        else:
            good = mid
    else:
        raise NumericalError(f"splitting bisection did not converge; last steps {trace[-5:]}")

    ap = good
    xm, xp = halves(ap)
    r = rho(ap)
    if abs(r - target) > 1e-9:
        raise NumericalError(f"stopping spread {r} differs from eps1**2 = {target}; trace {trace[-5:]}")
    floor = math.sqrt(1.0 - (eps / eps1) ** 2)
    if min(ap, 1.0 - ap) < floor - 1e-9:
        raise PreconditionError(
            f"alpha_plus = {ap} below the guaranteed floor {floor}; is phi in the eps-ball?")
    return SplitResult(ap, point(xm), point(xp), r, "tangent")
