"""Closed-form moments of discounted lifetime payoffs under Balducci's assumption.

Every operation returns the m-th moment of a payoff restricted to the
deferment window of a ``ContractSpec`` and is assembled as: boundary terms
that telescope across years, plus one summand per year (or per sub-period).
Summands fall back to their exact q -> 0 or p -> 0 limits when the closed
form cannot be evaluated, and those fallbacks are counted in the result.

Ei-differences always appear multiplied by nu^{-m/q}; they are evaluated
through the scaled forms in ``special_functions`` so the product never
overflows. Concretely nu^{m(1+k-1/q)} Ei_k(m delta) = nu^{m(k+1)} * E where
E = ei_difference_scaled(p, q, m*delta).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from scipy import integrate as sp_integrate

from .errors import DomainError, QuadratureError
from .fractional import Assumption, cell_mass
from .mortality import MortalityModel, MortalityTable, kpx, probabilities
from .special_functions import ei_difference_scaled, ei_difference_subyear_scaled

Q_SWITCH = 1e-8
P_SWITCH = 1e-300

# Below these q the closed m = 1 / m = 2 forms of the continuous increasing
# payoff cancel too many digits (relative loss ~ eps/q and eps/q^2); such
# years go through the general-m integral instead.
INCREASING_CLOSED_FORM_MIN_Q = {1: 1e-2, 2: 0.1}

# Per-year tolerance for the one-dimensional integrals.
YEAR_QUAD_ABS = 1e-13
YEAR_QUAD_REL = 1e-13


class _Term(enum.Enum):
    TO_OMEGA = "to-omega"

    def __repr__(self):
        return "TO_OMEGA"


TO_OMEGA = _Term.TO_OMEGA


class Layout(enum.Enum):
    """Which sub-year cells a deferment l*n1 covers.

    PERIODIC: years l..n+l-1 restricted to periods n1..j-1, plus periods
    0..n1-1 of year n+l. WINDOW: every cell of [l + n1/j, n + l + n1/j).
    The two coincide when n1 = 0.
    """

    PERIODIC = "periodic"
    WINDOW = "window"


class Kind(enum.Enum):
    LEVEL = "level"
    LIFETIME = "lifetime"
    INCREASING_CONTINUOUS = "increasing-continuous"
    INCREASING_ANNUAL = "increasing-annual"
    MTHLY = "mthly"
    MTHLY_INCREASING = "mthly-increasing"
    PAYMENT_TIME = "payment-time"


@dataclass(frozen=True)
class InterestEnvironment:
    i: float
    nu: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.i) and self.i > -1.0):
            raise DomainError(f"interest rate must be > -1, got {self.i!r}")
        object.__setattr__(self, "nu", 1.0 / (1.0 + self.i))
        object.__setattr__(self, "delta", math.log1p(self.i))


@dataclass(frozen=True)
class ContractSpec:
    """Issue age x, deferment l (+ n1 periods of 1/j), term n, moment order m."""

    x: int
    l: int = 0
    n: int | _Term = TO_OMEGA
    m: int = 1
    j: int = 1
    n1: int = 0

    def __post_init__(self):
        if self.x < 0 or self.l < 0:
            raise DomainError(f"x and l must be >= 0, got x={self.x}, l={self.l}")
        if self.n is not TO_OMEGA and (not isinstance(self.n, int) or self.n < 1):
            raise DomainError(f"n must be a positive integer or TO_OMEGA, got {self.n!r}")
        if self.m < 0:
            raise DomainError(f"m must be >= 0, got {self.m}")
        if self.j < 1:
            raise DomainError(f"j must be >= 1, got {self.j}")
        if not 0 <= self.n1 < self.j:
            raise DomainError(f"n1 must lie in [0, j-1], got n1={self.n1}, j={self.j}")


@dataclass(frozen=True)
class MomentResult:
    value: float
    truncation_age: int
    limit_branches_used: int = 0
    assumption: Assumption = Assumption.BALDUCCI
    quadrature_years: int = 0


@dataclass
class _Tally:
    limits: int = 0
    quadratures: int = 0


def _require_moment(spec, minimum=1):
    if spec.m < minimum:
        raise DomainError(f"moment order m must be >= {minimum}, got {spec.m}")


def _require_annual(spec):
    if spec.j != 1 or spec.n1 != 0:
        raise DomainError("this payoff is defined for annual periods only (j = 1, n1 = 0)")


def _term_years(model: MortalityModel, spec: ContractSpec, needs_tail=False) -> int:
    """Effective n; for TO_OMEGA, the years up to the model horizon.

    ``needs_tail`` means year n+l is read as well (n1 > 0 cells), so a table
    that stops without reaching l = 0 gives up one year.
    """
    if spec.n is not TO_OMEGA:
        return spec.n
    n = model.horizon_age - spec.x - spec.l
    if needs_tail and isinstance(model, MortalityTable) and not model.is_terminal:
        n -= 1
    if n < 1:
        raise DomainError(f"no whole year between age {spec.x + spec.l} and the model "
                          f"horizon {model.horizon_age}")
    return n


def _year(model, x, k):
    return probabilities(model, x, k)


def _is_zero_p(pr):
    return pr.terminal or pr.p < P_SWITCH


def _scaled_ei(pr, m_delta):
    return ei_difference_scaled(pr.p, pr.q, m_delta)


def _quad(f, a, b, tally):
    value, _err = sp_integrate.quad(f, a, b, epsabs=YEAR_QUAD_ABS, epsrel=YEAR_QUAD_REL,
                                    limit=200)
    tally.quadratures += 1
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite year integral on [{a}, {b}]")
    return value


# -- level: E nu^{mT} on [l, l+n) -------------------------------------------

def _level_summand(pr, k, m, env, tally):
    """m delta nu^{m(1+k-1/q)} (k+1)p/q * Ei_k(m delta)."""
    if _is_zero_p(pr):
        tally.limits += 1
        return 0.0
    if pr.q < Q_SWITCH:
        # small q: the summand tends to nu^{mk} (nu^m - 1) kp
        tally.limits += 1
        return env.nu ** (m * k) * (env.nu ** m - 1.0) * pr.kpx
    md = m * env.delta
    return md * env.nu ** (m * (k + 1)) * pr.k1px / pr.q * _scaled_ei(pr, md)


def term_insurance_moment(model: MortalityModel, env: InterestEnvironment,
                          spec: ContractSpec) -> MomentResult:
    """m-th moment of nu^T paid on death in [l, l+n)."""
    _require_annual(spec)
    _require_moment(spec)
    n = _term_years(model, spec)
    x, l, m = spec.x, spec.l, spec.m
    lp = kpx(model, x, l)
    lnp = kpx(model, x, l + n)
    if env.delta == 0.0:
        return MomentResult(lp - lnp, n)
    tally = _Tally()
    terms = [env.nu ** (m * l) * lp, -env.nu ** (m * (l + n)) * lnp]
    for k in range(l, l + n):
        terms.append(_level_summand(_year(model, x, k), k, m, env, tally))
    return MomentResult(math.fsum(terms), n, tally.limits)


def whole_life_moment(model: MortalityModel, env: InterestEnvironment,
                      spec: ContractSpec) -> MomentResult:
    """Term insurance truncated where the model's survival ends."""
    if spec.n is not TO_OMEGA:
        raise DomainError("whole_life_moment needs n = TO_OMEGA")
    return term_insurance_moment(model, env, spec)


# -- lifetime: E T^m on [l, l+n), no discounting ---------------------------

def _h_over_q2(q):
    """(q + (1-q) log(1-q)) / q^2, stable for small q."""
    if q < 0.05:
        # sum_{n>=2} q^{n-2} / (n(n-1))
        terms = []
        power = 1.0
        n = 2
        while True:
            term = power / (n * (n - 1))
            terms.append(term)
            if term < 1e-18:
                break
            power *= q
            n += 1
        return math.fsum(terms)
    return (q + (1.0 - q) * math.log1p(-q)) / (q * q)


def _lifetime_summand(pr, k, m, tally):
    if _is_zero_p(pr):
        # p = 0 summands vanish
        tally.limits += 1
        return 0.0
    q = pr.q
    if m == 1:
        if q < Q_SWITCH:
            tally.limits += 1
            return pr.k1px  # log p / q -> -1
        return -pr.k1px * math.log1p(-q) / q
    if m == 2:
        if q < Q_SWITCH:
            tally.limits += 1
            return 2.0 * pr.k1px * (0.5 + k)
        # (q + (p - kq) log p)/q^2 = h(q)/q^2 - k log p / q
        return 2.0 * pr.k1px * (_h_over_q2(q) - k * math.log1p(-q) / q)
    integral = _quad(lambda t: t ** (m - 1) / (1.0 - (k + 1 - t) * q), k, k + 1, tally)
    return m * pr.k1px * integral


def lifetime_moment(model: MortalityModel, spec: ContractSpec) -> MomentResult:
    """E T^m 1{l <= T < l+n}; m = 0 gives the window death probability."""
    _require_annual(spec)
    _require_moment(spec, minimum=0)
    n = _term_years(model, spec)
    x, l, m = spec.x, spec.l, spec.m
    lp = kpx(model, x, l)
    lnp = kpx(model, x, l + n)
    if m == 0:
        return MomentResult(lp - lnp, n)
    tally = _Tally()
    terms = [l ** m * lp, -(l + n) ** m * lnp]
    for k in range(l, l + n):
        terms.append(_lifetime_summand(_year(model, x, k), k, m, tally))
    return MomentResult(math.fsum(terms), n, tally.limits, quadrature_years=tally.quadratures)


# -- continuous increasing: E (T nu^T)^m on [l, l+n) -----------------------

def _increasing_general(pr, k, m, env, tally):
    nu_m, delta = env.nu ** m, env.delta
    q = pr.q

    def integrand(t):
        return t ** (m - 1) * nu_m ** t * (1.0 - delta * t) / (1.0 - (k + 1 - t) * q)

    return m * pr.k1px * _quad(integrand, k, k + 1, tally)


def _increasing_summand(pr, k, m, env, tally):
    if _is_zero_p(pr):
        tally.limits += 1
        return 0.0
    q, nu, delta, i = pr.q, env.nu, env.delta, env.i
    if m >= 3 or q < INCREASING_CLOSED_FORM_MIN_Q[m]:
        if m <= 2 and q < Q_SWITCH:
            tally.limits += 1
            if m == 1:
                # q -> 0 limits of the two closed forms
                return nu ** (k + 1) * pr.kpx * (1.0 - i * k)
            return nu ** (2 * k + 2) * pr.kpx * (1.0 + 2 * k - k * k * (i * i + 2 * i))
        return _increasing_general(pr, k, m, env, tally)
    a = 1.0 + k - 1.0 / q
    if m == 1:
        # -i (k+1)p/q nu^{k+1} - (1 - delta A) (k+1)p/q nu^A Ei_k(delta)
        scaled = _scaled_ei(pr, delta)
        return -pr.k1px / q * nu ** (k + 1) * (i + (1.0 - delta * a) * scaled)
    # nu^{2-2/q} [Ei(-2delta/q) - Ei(-2delta p/q)] = -nu^2 * scaled(2 delta)
    nu2 = nu * nu
    d_term = -nu2 * _scaled_ei(pr, 2.0 * delta)
    lead = nu ** (2 * k) / q
    i1 = lead * ((1.0 - nu2) / delta + 2.0 * a * d_term)
    i2 = lead * ((1.0 - nu2) / q
                 + (-1.0 + nu2 + delta * (-2.0 + 4.0 * nu2 + 4.0 * k * (-1.0 + nu2)))
                 / (2.0 * delta)
                 - 2.0 * delta * a * a * d_term)
    return pr.k1px * (i1 + i2)


def increasing_continuous_moment(model: MortalityModel, env: InterestEnvironment,
                                 spec: ContractSpec) -> MomentResult:
    """m-th moment of T nu^T on [l, l+n)."""
    _require_annual(spec)
    _require_moment(spec)
    if env.delta == 0.0:
        return lifetime_moment(model, spec)
    n = _term_years(model, spec)
    x, l, m = spec.x, spec.l, spec.m
    lp = kpx(model, x, l)
    lnp = kpx(model, x, l + n)
    tally = _Tally()
    terms = [l ** m * env.nu ** (m * l) * lp, -(l + n) ** m * env.nu ** (m * (l + n)) * lnp]
    for k in range(l, l + n):
        terms.append(_increasing_summand(_year(model, x, k), k, m, env, tally))
    return MomentResult(math.fsum(terms), n, tally.limits, quadrature_years=tally.quadratures)


# -- annually increasing: E ([T+1] nu^T)^m on [l, l+n) ---------------------

def k_weighted_annual_limit(kp, k, m, nu):
    """A q -> 0 annual-increasing summand weighted k^m instead of (k+1)^m.

    Kept for comparison only; the premium uses the limit of its own sum.
    """
    return kp * k ** m * nu ** (m * k) * (nu ** m - 1.0)


def annually_increasing_moment(model: MortalityModel, env: InterestEnvironment,
                               spec: ContractSpec) -> MomentResult:
    """m-th moment of ([T]+1) nu^T on [l, l+n)."""
    _require_annual(spec)
    _require_moment(spec)
    n = _term_years(model, spec)
    x, l, m = spec.x, spec.l, spec.m
    nu, md = env.nu, m * env.delta
    tally = _Tally()
    terms = []
    for k in range(l, l + n):
        pr = _year(model, x, k)
        weight = (k + 1) ** m
        if env.delta == 0.0:
            terms.append(weight * (pr.kpx - pr.k1px))
            continue
        terms.append(pr.kpx * weight * nu ** (m * k) * (1.0 - pr.p * nu ** m))
        if _is_zero_p(pr):
            tally.limits += 1
        elif pr.q < Q_SWITCH:
            tally.limits += 1
            terms.append(weight * nu ** (m * k) * (nu ** m - 1.0) * pr.kpx)
        else:
            terms.append(md * pr.k1px * weight * nu ** (m * (k + 1)) / pr.q
                         * _scaled_ei(pr, md))
    return MomentResult(math.fsum(terms), n, tally.limits)


# -- j-thly payment, deferment l*n1 ----------------------------------------

def _cells(spec: ContractSpec, n: int, layout: Layout):
    """(year, period) pairs covered by the contract, in ascending order."""
    l, j, n1 = spec.l, spec.j, spec.n1
    layout = Layout(layout)
    for k in range(l, l + n):
        first = n1 if (layout is Layout.PERIODIC or k == l) else 0
        for d in range(first, j):
            yield k, d
    for d in range(n1):
        yield l + n, d


def _grouped_cells(model, spec, n, layout):
    current = None
    pr = None
    for k, d in _cells(spec, n, layout):
        if k != current:
            pr = _year(model, spec.x, k)
            current = k
        yield k, d, pr


def mthly_insurance_moment(model: MortalityModel, env: InterestEnvironment,
                           spec: ContractSpec, layout: Layout = Layout.PERIODIC) -> MomentResult:
    """m-th moment of nu^{(floor(jT)+1)/j}: payment at the end of the death period."""
    _require_moment(spec)
    n = _term_years(model, spec, needs_tail=spec.n1 > 0)
    m, j = spec.m, spec.j
    terms = []
    for k, d, pr in _grouped_cells(model, spec, n, layout):
        if pr.terminal:
            continue
        terms.append(env.nu ** ((k + (d + 1) / j) * m) * cell_mass(pr.kpx, pr.p, pr.q, d, j))
    return MomentResult(math.fsum(terms), n)


def mthly_increasing_moment(model: MortalityModel, env: InterestEnvironment,
                            spec: ContractSpec, layout: Layout = Layout.PERIODIC) -> MomentResult:
    """m-th moment of (floor(jT)+1) nu^T."""
    _require_moment(spec)
    n = _term_years(model, spec, needs_tail=spec.n1 > 0)
    m, j = spec.m, spec.j
    nu, md = env.nu, m * env.delta
    nu_step = nu ** (m / j)
    tally = _Tally()
    terms = []
    for k, d, pr in _grouped_cells(model, spec, n, layout):
        if pr.terminal:
            continue
        weight = (d + j * k + 1) ** m
        if env.delta == 0.0:
            terms.append(weight * cell_mass(pr.kpx, pr.p, pr.q, d, j))
            continue
        if _is_zero_p(pr):
            # The Ei summand vanishes; the Balducci mass is an atom at
            # the year start, which the first cell's boundary term carries.
            tally.limits += 1
            if d == 0:
                terms.append(weight * nu ** (m * k) * pr.kpx)
            continue
        q = pr.q
        terms.append(weight * pr.k1px * nu ** (m * (k + d / j))
                     * (1.0 / (1.0 - (1.0 - d / j) * q)
                        - nu_step / (1.0 - (1.0 - (d + 1) / j) * q)))
        if q < Q_SWITCH:
            # small q: (m delta/q) e^{m delta/q} Ei_k(m delta, d, j)
            #           -> nu^{m(d/j - 1)} (1 - nu^{m/j})
            tally.limits += 1
            terms.append(-weight * pr.kpx * nu ** (m * (1 + k))
                         * nu ** (m * (d / j - 1.0)) * (1.0 - nu_step))
        else:
            scaled = ei_difference_subyear_scaled(pr.p, q, md, d, j)
            terms.append(-md * weight * pr.k1px * nu ** (m * (1 + k)) / q * scaled)
    return MomentResult(math.fsum(terms), n, tally.limits)


def mthly_mean_payment_time(model: MortalityModel, spec: ContractSpec) -> MomentResult:
    """E ((floor(jT)+1)/j)^m over [l, l+n)."""
    _require_moment(spec)
    if spec.n1 != 0:
        raise DomainError("mean payment time is defined for n1 = 0")
    n = _term_years(model, spec)
    m, j = spec.m, spec.j
    terms = []
    for k, d, pr in _grouped_cells(model, spec, n, Layout.PERIODIC):
        if pr.terminal:
            continue
        terms.append((k + (d + 1) / j) ** m * cell_mass(pr.kpx, pr.p, pr.q, d, j))
    return MomentResult(math.fsum(terms), n)


def compute_moment(kind: Kind, model: MortalityModel, env: InterestEnvironment,
                   spec: ContractSpec, layout: Layout = Layout.PERIODIC) -> MomentResult:
    """Dispatch a payoff kind to its closed form."""
    kind = Kind(kind)
    if kind is Kind.LEVEL:
        return term_insurance_moment(model, env, spec)
    if kind is Kind.LIFETIME:
        return lifetime_moment(model, spec)
    if kind is Kind.INCREASING_CONTINUOUS:
        return increasing_continuous_moment(model, env, spec)
    if kind is Kind.INCREASING_ANNUAL:
        return annually_increasing_moment(model, env, spec)
    if kind is Kind.MTHLY:
        return mthly_insurance_moment(model, env, spec, layout)
    if kind is Kind.MTHLY_INCREASING:
        return mthly_increasing_moment(model, env, spec, layout)
    return mthly_mean_payment_time(model, spec)
