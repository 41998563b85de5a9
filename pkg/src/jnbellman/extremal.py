"""Extremal functions: the logarithmic family phi_{a,b,gamma} (continuous case),
the staircase phi_0 and its digit rearrangements (dyadic case)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import EPS0_CONTINUOUS, EPS0_DYADIC, delta_root
from .domain import BellmanPoint, ParabolicStrip, Sign, contains, tangent_contact
from .errors import DomainError, NumericalError, ParameterError
from .piecewise import (Const, DyadicStepFunction, PiecewiseFunction, Split,
                        Staircase, _exp_staircase, dyadic_digits)

SQRT2 = math.sqrt(2.0)
EQUALITY_TOL = 1e-12


@dataclass(frozen=True)
class ExtremalParams:
    r1: float
    r2: float
    beta: float
    gamma: float
    alpha: float


def _require_in_strip(p: BellmanPoint, eps: float) -> None:
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if not contains(ParabolicStrip(eps), p):
        raise DomainError(f"point ({p.x1}, {p.x2}) is outside the eps-strip, eps = {eps}")


def extremal_params(p: BellmanPoint, eps: float, delta: float) -> ExtremalParams:
    if not delta > eps:
        raise ParameterError(f"need delta > eps, got delta={delta}, eps={eps}")
    _require_in_strip(p, eps)
    r1 = math.sqrt(delta * delta - eps * eps)
    r2 = math.sqrt(max(delta * delta - p.spread, r1 * r1))
    r2 = min(r2, delta)
    alpha = (delta - r2) / (delta - r1)
    return ExtremalParams(r1, r2, r2 - r1, r2 - delta, min(max(alpha, 0.0), 1.0))


def continuous_extremal(p: BellmanPoint, eps: float, sign) -> PiecewiseFunction:
    """phi = gamma*log(a/t) + b on (0, a], b on (a, 1], with gamma = +/-eps.

    Its averages over (0, 1] are (p.x1, p.x2); on the bottom boundary the
    constant p.x1 is returned.
    """
    sign = Sign.parse(sign)
    _require_in_strip(p, eps)
    if sign is Sign.PLUS and eps >= EPS0_CONTINUOUS:
        raise ParameterError(f"PLUS extremal needs eps < 1, got {eps}")
    spread = p.spread
    if spread <= 0.0:
        return PiecewiseFunction.constant(p.x1)
    gamma = sign.s * eps
    a = 1.0 - math.sqrt(max(eps * eps - spread, 0.0)) / eps
    b = p.x1 - gamma * a
    return PiecewiseFunction.log_family(a, b, gamma)


def dyadic_base(eps: float, depth: int) -> DyadicStepFunction:
    """Staircase phi_0 = (k-1)*eps/sqrt2 on (2**-(k+1), 2**-k], k >= 0.

    Blocks down to ``depth`` are stored explicitly, the rest as a closed-form tail.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if depth < 0:
        raise ParameterError(f"depth must be nonnegative, got {depth}")
    a = eps / SQRT2
    node = Staircase((depth - 1) * a, a)
    for k in range(depth, 0, -1):
        node = Split(node, Const((k - 2) * a))
    return DyadicStepFunction(node)


def dyadic_extremal(p: BellmanPoint, eps: float, sign, depth: int = 40) -> DyadicStepFunction:
    """x1 +/- psi, where psi carries, on block (2**-k, 2**-(k-1)], either
    phi_0 + beta (digit 1) or gamma (digit 0); digits are those of alpha.

    Only ``depth`` digits are used; the leftover interval (0, 2**-depth] gets
    the constant gamma and ``truncation_bound`` bounds the resulting error
    in the exponential average.
    """
    sign = Sign.parse(sign)
    _require_in_strip(p, eps)
    if sign is Sign.PLUS and eps >= EPS0_DYADIC:
        raise ParameterError(f"PLUS extremal needs eps < sqrt(2) log 2, got {eps}")
    if depth < 1:
        raise ParameterError(f"depth must be positive, got {depth}")
    s = sign.s
    if p.spread <= 0.0:
        return DyadicStepFunction(Const(p.x1))
    delta = delta_root(eps, sign).root
    prm = extremal_params(p, eps, delta)
    a = eps / SQRT2
    if prm.alpha >= 1.0:
        base = DyadicStepFunction(Staircase(-a, a))
        base = base if s > 0 else base.negated()
        return base.shifted(p.x1)

    digits = dyadic_digits(prm.alpha, depth)
    block_one = Staircase(-a + prm.beta, a)
    block_zero = Const(prm.gamma)
    node = Const(prm.gamma)
    for d in reversed(digits):
        node = Split(node, block_one if d else block_zero)
    psi = DyadicStepFunction(node)
    phi = (psi if s > 0 else psi.negated()).shifted(p.x1)

    if s > 0:
        stair = _exp_staircase(p.x1 + prm.beta - a, a)
    else:
        stair = _exp_staircase(p.x1 - prm.beta + a, -a)
    const = math.exp(p.x1 + s * prm.gamma)
    bound = 2.0 ** (-depth) * abs(stair - const)
    return DyadicStepFunction(phi.root, truncation_bound=bound)


def perspective2_digits(p: BellmanPoint, eps: float, delta: float, n_digits: int) -> list[int]:
    """Digits emitted by moving x* along the tangent line, halving the interval each time.

    The position of x* is tracked through z = (delta - r2)/(delta - r1), which
    obeys the doubling map z -> {2z}; comparing delta + r1 with 2*r2 is the
    same as comparing z with 1/2.  The equality case (tolerance 1e-12) emits
    a final 1 and pads with zeros.
    """
    prm = extremal_params(p, eps, delta)
    if n_digits < 0:
        raise ParameterError(f"n_digits must be nonnegative, got {n_digits}")
    r1 = prm.r1
    c = tangent_contact(p, delta, Sign.PLUS)
    strip = ParabolicStrip(eps)
    z = prm.alpha
    bits: list[int] = []
    for k in range(n_digits):
        r2 = delta - z * (delta - r1)
        x1 = c - r2
        xs = (x1, x1 * x1 + delta * delta - r2 * r2)
        if not contains(strip, BellmanPoint(xs[0], max(xs[1], xs[0] * xs[0]))) or not -1e-12 <= z <= 1 + 1e-12:
            raise NumericalError(f"x* left the eps-strip at iteration {k}: z = {z}")
        lhs, rhs = delta + r1, 2.0 * r2
        if abs(lhs - rhs) <= EQUALITY_TOL * max(1.0, lhs):
            bits.append(1)
            bits.extend([0] * (n_digits - len(bits)))
            break
        if lhs < rhs:
            bits.append(0)
            z = 2.0 * z
        else:
            bits.append(1)
            z = 2.0 * z - 1.0
    return bits
