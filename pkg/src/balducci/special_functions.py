"""Exponential integrals Ei and E1, and the Ei-differences used by the premium formulas.

Ei(y) is the principal-value integral of e^z/z from -inf to y, and for z > 0
Ei(-z) = -E1(z). The premium closed forms multiply Ei-differences by
nu^{-m/q} = e^{m*delta/q}, which overflows long before the product does, so
every difference also comes in a "scaled" flavour with that exponential
folded in analytically.
"""

from __future__ import annotations

import math

from .errors import DomainError, SeriesError

EULER_GAMMA = 0.57721566490153286061

# E1 switches from the power series to the continued fraction at this argument;
# beyond it the alternating series cancels catastrophically.
E1_SERIES_MAX = 1.0
# Ei(y), y > 0: the series has no cancellation up here; the asymptotic
# expansion is accurate to machine precision above it.
EI_SERIES_MAX = 40.0

SERIES_RTOL = 1e-18
MAX_TERMS = 500

_TINY = 1e-300


def _check_finite(value, name):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def _e1_series(z):
    # E1(z) = -gamma - log z - sum_{k>=1} (-z)^k / (k * k!)
    terms = []
    partial = 0.0
    ratio = 1.0
    for k in range(1, MAX_TERMS + 1):
        ratio *= -z / k
        term = ratio / k
        terms.append(term)
        partial += term
        if abs(ratio * z / (k + 1) / (k + 1)) < SERIES_RTOL * abs(partial):
            break
    else:
        raise SeriesError(f"E1 series did not converge at z={z!r}")
    return -EULER_GAMMA - math.log(z) - math.fsum(terms)


def _e1_continued_fraction_scaled(z):
    # Modified Lentz evaluation of e^z E1(z) = 1/(z+1- 1/(z+3- 4/(z+5- ...)))
    b = z + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_TERMS + 1):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        step = c * d
        h *= step
        if abs(step - 1.0) < 1e-16:
            return h
    raise SeriesError(f"E1 continued fraction did not converge at z={z!r}")


def e1_scaled(z: float) -> float:
    """Return e^z * E1(z) for z > 0."""
    _check_finite(z, "z")
    if z <= 0.0:
        raise DomainError(f"E1 requires z > 0, got {z!r}")
    if z <= E1_SERIES_MAX:
        return math.exp(z) * _e1_series(z)
    return _e1_continued_fraction_scaled(z)


def exp_integral_e1(z: float) -> float:
    """Exponential integral E1(z) = int_z^inf e^{-t}/t dt for z > 0.

    Underflows to 0.0 once E1(z) drops below the smallest subnormal.
    """
    _check_finite(z, "z")
    if z <= 0.0:
        raise DomainError(f"E1 requires z > 0, got {z!r}")
    if z <= E1_SERIES_MAX:
        return _e1_series(z)
    return _e1_continued_fraction_scaled(z) * math.exp(-z)


def _ei_series(y):
    # Ei(y) = gamma + log y + sum_{k>=1} y^k / (k * k!), y > 0; all terms positive
    terms = []
    partial = 0.0
    ratio = 1.0
    for k in range(1, MAX_TERMS + 1):
        ratio *= y / k
        term = ratio / k
        terms.append(term)
        partial += term
        if ratio * y / (k + 1) / (k + 1) < SERIES_RTOL * partial:
            break
    else:
        raise SeriesError(f"Ei series did not converge at y={y!r}")
    return EULER_GAMMA + math.log(y) + math.fsum(terms)


def _ei_asymptotic_scaled(y):
    # e^{-y} Ei(y) ~ (1/y) sum_k k!/y^k, truncated at the smallest term
    terms = [1.0]
    term = 1.0
    for k in range(1, MAX_TERMS + 1):
        previous = term
        term *= k / y
        if term >= previous:
            break
        terms.append(term)
        if term < 1e-17 * terms[0]:
            break
    return math.fsum(terms) / y


def exp_integral_ei(y: float) -> float:
    """Principal-value exponential integral Ei(y), y != 0."""
    _check_finite(y, "y")
    if y == 0.0:
        raise DomainError("Ei has a logarithmic singularity at y = 0")
    if y < 0.0:
        return -exp_integral_e1(-y)
    if y <= EI_SERIES_MAX:
        return _ei_series(y)
    try:
        return math.exp(y) * _ei_asymptotic_scaled(y)
    except OverflowError:
        return math.inf


def ei_scaled(y: float) -> float:
    """Return e^{-y} * Ei(y) for y != 0."""
    _check_finite(y, "y")
    if y == 0.0:
        raise DomainError("Ei has a logarithmic singularity at y = 0")
    if y < 0.0:
        return -e1_scaled(-y)
    if y <= EI_SERIES_MAX:
        return math.exp(-y) * _ei_series(y)
    return _ei_asymptotic_scaled(y)


def _check_pq(p, q):
    if not (p > 0.0 and q > 0.0):
        raise DomainError(f"need p > 0 and q > 0, got p={p!r}, q={q!r}")
    if abs(p + q - 1.0) > 1e-12:
        raise DomainError(f"p + q must equal 1, got {p + q!r}")


def ei_difference(p: float, q: float, delta: float) -> float:
    """Ei(-delta*p/q) - Ei(-delta/q): the whole-year Ei term of the premium sums."""
    _check_pq(p, q)
    if delta == 0.0:
        raise DomainError("delta must be non-zero")
    return exp_integral_ei(-delta * p / q) - exp_integral_ei(-delta / q)


def ei_difference_subyear(p: float, q: float, delta: float, d: int, j: int) -> float:
    """Ei(-delta*(p/q + (d+1)/j)) - Ei(-delta*(p/q + d/j)) for period d of j."""
    _check_pq(p, q)
    _check_period(d, j)
    if delta == 0.0:
        raise DomainError("delta must be non-zero")
    ratio = p / q
    return (exp_integral_ei(-delta * (ratio + (d + 1) / j))
            - exp_integral_ei(-delta * (ratio + d / j)))


def ei_difference_scaled(p: float, q: float, delta: float) -> float:
    """e^{delta/q} * ei_difference(p, q, delta), without overflow.

    Uses delta/q - delta*p/q = delta, so the first term carries e^{delta}.
    """
    _check_pq(p, q)
    if delta == 0.0:
        raise DomainError("delta must be non-zero")
    return math.exp(delta) * ei_scaled(-delta * p / q) - ei_scaled(-delta / q)


def ei_difference_subyear_scaled(p: float, q: float, delta: float, d: int, j: int) -> float:
    """e^{delta/q} * ei_difference_subyear(p, q, delta, d, j), without overflow."""
    _check_pq(p, q)
    _check_period(d, j)
    if delta == 0.0:
        raise DomainError("delta must be non-zero")
    ratio = p / q
    upper = (d + 1) / j
    lower = d / j
    return (math.exp(delta * (1.0 - upper)) * ei_scaled(-delta * (ratio + upper))
            - math.exp(delta * (1.0 - lower)) * ei_scaled(-delta * (ratio + lower)))


def _check_period(d, j):
    if j < 1 or not 0 <= d <= j - 1:
        raise DomainError(f"need j >= 1 and 0 <= d <= j-1, got d={d!r}, j={j!r}")
