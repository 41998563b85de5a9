"""Sharp John--Nirenberg constants and the transcendental equations for delta(eps)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .domain import Sign
from .errors import DomainError, NumericalError, ParameterError

SQRT2 = math.sqrt(2.0)
EPS0_CONTINUOUS = 1.0
EPS0_DYADIC = SQRT2 * math.log(2.0)
ROOT_RESIDUAL_TOL = 1e-12
_DENOM_CUTOFF = 1e-14


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    bracket_lo: float
    bracket_hi: float
    iterations: int


def _check_eps(eps: float) -> None:
    if not (eps >= 0 and math.isfinite(eps)):
        raise ParameterError(f"eps must be a finite nonnegative number, got {eps}")


def c_continuous(eps: float) -> float:
    """e**-eps / (1 - eps) below eps = 1, infinite from there on."""
    _check_eps(eps)
    if eps >= EPS0_CONTINUOUS:
        return math.inf
    return math.exp(-eps) / (1.0 - eps)


def c_dyadic(eps: float) -> float:
    """e**(-eps/sqrt2) / (2 - e**(eps/sqrt2)) below eps = sqrt(2) log 2, infinite from there on."""
    _check_eps(eps)
    denom = 2.0 - math.exp(eps / SQRT2)
    if eps >= EPS0_DYADIC or denom <= _DENOM_CUTOFF:
        return math.inf
    return math.exp(-eps / SQRT2) / denom


def g_function(delta: float, eps: float, sign) -> float:
    sign = Sign.parse(sign)
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if delta < eps:
        raise DomainError(f"need delta >= eps, got delta={delta}, eps={eps}")
    r = math.sqrt(delta * delta - eps * eps)
    h = eps / SQRT2
    if sign is Sign.PLUS:
        return (1 - r) * math.exp(r) * (2 - math.exp(h)) - (1 - delta) * math.exp(delta - h)
    return (1 + r) * math.exp(-r) * (2 - math.exp(-h)) - (1 + delta) * math.exp(-delta + h)


def _bracketed_root(f, lo: float, hi: float) -> RootResult:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, lo, hi, 0)
    if fhi == 0.0:
        return RootResult(hi, 0.0, lo, hi, 0)
    if flo * fhi > 0:
        raise NumericalError(f"no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
    root, info = brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200, full_output=True)
    if not info.converged:
        raise NumericalError(f"root search on [{lo}, {hi}] did not converge")
    return RootResult(root, f(root), lo, hi, info.iterations)


def delta_root(eps: float, sign) -> RootResult:
    """The unique delta(eps) with g(delta, eps) = 0.

    PLUS: bracket (eps, min(1, 3 eps / (2 sqrt 2))), needs 0 < eps < sqrt(2) log 2.
    MINUS: bracket (eps, 3 eps / (2 sqrt 2)), any eps > 0.
    """
    sign = Sign.parse(sign)
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if sign is Sign.PLUS and eps >= EPS0_DYADIC:
        raise ParameterError(f"PLUS root exists only for eps < sqrt(2) log 2, got {eps}")
    upper = 3.0 * eps / (2.0 * SQRT2)
    hi = min(1.0, upper) if sign is Sign.PLUS else upper
    res = _bracketed_root(lambda d: g_function(d, eps, sign), eps, hi)
    if abs(res.residual) > ROOT_RESIDUAL_TOL:
        raise NumericalError(f"residual {res.residual} at delta = {res.root} exceeds {ROOT_RESIDUAL_TOL}")
    if not (eps < res.root <= upper * (1 + 1e-15)):
        raise NumericalError(f"root {res.root} outside (eps, 3 eps/(2 sqrt 2)] for eps = {eps}")
    return res


# ---------------------------------------------------------------------------
# Conjectured n-dimensional dyadic formulas
# ---------------------------------------------------------------------------


def _spread_rate(n: int) -> float:
    return 2.0 ** (n / 2) - 2.0 ** (-n / 2)


def eps0_nd(n: int) -> float:
    return n * math.log(2.0) / _spread_rate(n)


def c_nd(eps: float, n: int) -> float:
    _check_eps(eps)
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    if n == 1:
        return c_dyadic(eps)
    denom = 2.0 ** n - math.exp(_spread_rate(n) * eps)
    if eps >= eps0_nd(n) or denom <= _DENOM_CUTOFF:
        return math.inf
    return (2.0 ** n - 1) * math.exp(-eps * 2.0 ** (-n / 2)) / denom


def g_nd(delta: float, eps: float, n: int, sign) -> float:
    """Conjectured n-dimensional analogue of g; reduces to g_function at n = 1 up to a positive factor."""
    s = Sign.parse(sign).s
    r = math.sqrt(max(delta * delta - eps * eps, 0.0))
    k = _spread_rate(n)
    lhs = (1 - s * r) * math.exp(s * r - s * delta) * (2.0 ** n - math.exp(s * k * eps))
    rhs = (1 - s * delta) * (2.0 ** n - 1) * math.exp(-s * eps * 2.0 ** (-n / 2))
    return lhs - rhs


def conjectured_delta(eps: float, n: int, sign, max_widen: int = 40) -> RootResult:
    sign = Sign.parse(sign)
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")

    def f(d):
        return g_nd(d, eps, n, sign)

    if sign is Sign.PLUS:
        res = _bracketed_root(f, eps, 1.0)
    else:
        lo, hi = eps, 2.0 * eps
        for _ in range(max_widen):
            if f(lo) * f(hi) <= 0:
                break
            hi = eps + 2.0 * (hi - eps)
        else:
            raise NumericalError(f"could not bracket the conjectured MINUS root for eps={eps}, n={n}")
        res = _bracketed_root(f, lo, hi)
    if abs(res.residual) > ROOT_RESIDUAL_TOL:
        raise NumericalError(f"residual {res.residual} exceeds {ROOT_RESIDUAL_TOL}")
    return res


@dataclass(frozen=True)
class ConjecturedRecord:
    n: int
    eps: float
    c_nd: float
    eps0_nd: float
    delta_plus_nd: float | None
    delta_minus_nd: float | None
    conjectural: bool = True


def conjectured_nd(eps: float, n: int) -> ConjecturedRecord:
    """CONJECTURAL n-dimensional dyadic constants; roots that cannot be bracketed are None."""
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    c = c_nd(eps, n)
    e0 = eps0_nd(n)
    dp = dm = None
    if eps > 0:
        if eps < e0:
            try:
                dp = conjectured_delta(eps, n, Sign.PLUS).root
            except NumericalError:
                dp = None
        try:
            dm = conjectured_delta(eps, n, Sign.MINUS).root
        except NumericalError:
            dm = None
    return ConjecturedRecord(n, eps, c, e0, dp, dm)
