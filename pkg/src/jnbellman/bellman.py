"""Closed-form Bellman candidates B(+/-)_delta and their derivatives.

With ``g = sqrt(delta**2 + x1**2 - x2)`` and ``s = +1`` (PLUS) or ``-1`` (MINUS)::

    B(x) = (1 - s*g) / (1 - s*delta) * exp(x1 + s*g - s*delta)
         = exp(x1 + w(x2 - x1**2)),
    w(t) = log((1 - s*sqrt(delta**2 - t)) / (1 - s*delta)) + s*sqrt(delta**2 - t) - s*delta.

PLUS is defined for delta < 1 only; for delta >= 1 the supremum is infinite
off the lower boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import BellmanPoint, Sign, vertical_gap
from .errors import DomainError, ParameterError

GAP_CUTOFF = 1e-10
FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-4


@dataclass(frozen=True)
class BellmanDerivatives:
    value: float
    grad: tuple  # (dB/dx1, dB/dx2)
    h11: float
    h12: float
    h22: float

    @property
    def hess(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h12, self.h22]])

    @property
    def det(self) -> float:
        return self.h11 * self.h22 - self.h12 * self.h12


def _check_delta(delta: float, sign: Sign) -> None:
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")


def w_profile(t: float, delta: float, sign) -> float:
    sign = Sign.parse(sign)
    _check_delta(delta, sign)
    if sign is Sign.PLUS and delta >= 1:
        raise ParameterError(f"PLUS profile needs delta < 1, got {delta}")
    d2 = delta * delta
    if t < 0 or t > d2 * (1 + 1e-15):
        raise DomainError(f"t = {t} outside [0, {d2}]")
    if t == 0:
        return 0.0
    s = sign.s
    r = math.sqrt(max(d2 - t, 0.0))
    return math.log((1 - s * r) / (1 - s * delta)) + s * r - s * delta


def bellman_value(p: BellmanPoint, delta: float, sign) -> float:
    """B(+/-)_delta at p; ``math.inf`` for PLUS with delta >= 1 off the lower boundary."""
    sign = Sign.parse(sign)
    _check_delta(delta, sign)
    if sign is Sign.PLUS and delta >= 1:
        if p.x2 - p.x1 * p.x1 <= 1e-15 * max(1.0, p.x1 * p.x1):
            return math.exp(p.x1)
        return math.inf
    g = vertical_gap(p, delta)
    s = sign.s
    return (1 - s * g) / (1 - s * delta) * math.exp(p.x1 + s * g - s * delta)


def bellman_derivatives(p: BellmanPoint, delta: float, sign) -> BellmanDerivatives:
    sign = Sign.parse(sign)
    _check_delta(delta, sign)
    if sign is Sign.PLUS and delta >= 1:
        raise ParameterError(f"PLUS candidate needs delta < 1, got {delta}")
    g = vertical_gap(p, delta)
    if g <= GAP_CUTOFF:
        raise DomainError(f"Hessian is singular on the upper boundary (gap = {g})")
    s = sign.s
    x1 = p.x1
    e = math.exp(x1 + s * g - s * delta)
    k = 1 - s * delta
    c = x1 + s * g
    return BellmanDerivatives(
        value=(1 - s * g) / k * e,
        grad=((1 - x1 - s * g) / k * e, e / (2 * k)),
        h11=-s * c * c / (g * k) * e,
        h12=s * c / (2 * g * k) * e,
        h22=-s / (4 * g * k) * e,
    )


def quadratic_form(p: BellmanPoint, d, delta: float, sign) -> float:
    """-s * d^T Hess(B) d, written as a perfect square; nonnegative."""
    sign = Sign.parse(sign)
    if sign is Sign.PLUS and delta >= 1:
        raise ParameterError(f"PLUS candidate needs delta < 1, got {delta}")
    g = vertical_gap(p, delta)
    if g <= GAP_CUTOFF:
        raise DomainError(f"quadratic form is singular on the upper boundary (gap = {g})")
    s = sign.s
    d1, d2 = d
    lin = (p.x1 + s * g) * d1 - 0.5 * d2
    return lin * lin / (g * (1 - s * delta)) * math.exp(p.x1 + s * g - s * delta)


def ode_residual(t: float, delta: float, sign, h: float = FD_STEP_SECOND) -> float:
    """Residual of (1 - 2w')((w')**2 + w'') = (w')**2 with central differences.

    Also checks the concavity sign condition s*(2w' - 1) >= 0 and raises
    :class:`DomainError` if it fails.
    """
    sign = Sign.parse(sign)
    if not (h < t < delta * delta - h):
        raise DomainError(f"t = {t} too close to 0 or delta**2 for step {h}")
    wm = w_profile(t - h, delta, sign)
    w0 = w_profile(t, delta, sign)
    wp = w_profile(t + h, delta, sign)
    w1 = (wp - wm) / (2 * h)
    w2 = (wp - 2 * w0 + wm) / (h * h)
    if sign.s * (2 * w1 - 1) < 0:
        raise DomainError(f"sign condition fails at t = {t}: w' = {w1}")
    return (1 - 2 * w1) * (w1 * w1 + w2) - w1 * w1
