"""Upper incomplete gamma function with a possibly negative first argument.

Everything is computed in the scaled form

    E(s, z) = Γ̄(s, z) · e^z · z^(-s)

which stays O(1) where Γ̄ itself under- or overflows. For s > 0 we use the
power series (z < s + 1) or the Legendre continued fraction (z >= s + 1);
negative s is reached by the downward recurrence

    E(s, z) = (z · E(s + 1, z) - 1) / s.
"""

from __future__ import annotations

import math

from .errors import IncompleteGammaError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000
# give up when the downward recurrence cancels more digits than this
_MAX_CANCELLATION = 1e8


def _series_scaled(s: float, z: float) -> float:
    # Γ̄ = Γ(s) - γ(s, z),  γ(s, z) = e^-z z^s Σ z^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise IncompleteGammaError(f"series for Γ̄({s}, {z}) did not converge")
    log_lead = math.lgamma(s) + z - s * math.log(z)
    if log_lead > 700:
        raise IncompleteGammaError(f"Γ̄({s}, {z}) scaling overflows")
    return math.exp(log_lead) - total


def _continued_fraction_scaled(s: float, z: float) -> float:
    # modified Lentz on  1/(z+1-s- 1(1-s)/(z+3-s- 2(2-s)/(z+5-s- ...)))
    b = z + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise IncompleteGammaError(f"continued fraction for Γ̄({s}, {z}) did not converge")


def _positive_scaled(s: float, z: float) -> float:
    if z < s + 1.0:
        return _series_scaled(s, z)
    return _continued_fraction_scaled(s, z)


def upper_gamma_scaled(s: float, z: float) -> float:
    """Return Γ̄(s, z) e^z z^(-s) for real s and z > 0."""
    if not z > 0:
        raise IncompleteGammaError(f"need z > 0, got {z}")
    if s > 0:
        return _positive_scaled(s, z)
    n = math.floor(-s) + 1
    top = s + n  # in (0, 1]
    if any(abs(s + j) < 1e-12 for j in range(n)):
        raise IncompleteGammaError(f"recurrence hits s = 0 for s = {s}; use the quadrature route")
    e = _positive_scaled(top, z)
    for j in range(n - 1, -1, -1):
        sj = s + j
        num = z * e - 1.0
        if abs(num) * _MAX_CANCELLATION < max(abs(z * e), 1.0):
            raise IncompleteGammaError(
                f"catastrophic cancellation evaluating Γ̄({s}, {z}); use the quadrature route"
            )
        e = num / sj
    return e


def upper_gamma(s: float, z: float) -> float:
    """Γ̄(s, z) = ∫_z^∞ t^(s-1) e^(-t) dt."""
    return upper_gamma_scaled(s, z) * math.exp(s * math.log(z) - z)
