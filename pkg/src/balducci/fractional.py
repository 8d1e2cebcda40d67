"""Survival between integer ages under UDD, Balducci and constant-force interpolation.

The ``year_*`` helpers work on a single year's numbers (k p_x, p_{x+k},
q_{x+k}) and a fraction t in [0, 1]; the public functions look those up
from a model first.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationError
from .mortality import MortalityModel, kpx, probabilities


class Assumption(enum.Enum):
    UDD = "udd"
    BALDUCCI = "balducci"
    CONSTANT_FORCE = "constant-force"


@dataclass(frozen=True)
class FractionalAge:
    """Age x + k + t of a life issued at integer age x."""

    x: int
    k: int
    t: float

    def __post_init__(self):
        if self.x < 0 or self.k < 0:
            raise DomainError(f"x and k must be >= 0, got x={self.x}, k={self.k}")
        if not 0.0 <= self.t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {self.t!r}")


def year_survival(assumption, kp, p, q, t):
    """(k+t) p_x within one year."""
    if t == 0.0:
        return kp
    k1p = kp * p
    if t == 1.0:
        return k1p
    if assumption is Assumption.UDD:
        return (1.0 - t) * kp + t * k1p
    if assumption is Assumption.BALDUCCI:
        # 1/s is linear in t: (k+t) p_x = (k+1) p_x / (p + t q)
        return k1p / (p + t * q)
    if p == 0.0:
        return 0.0
    return kp * p ** t


def year_density(assumption, kp, p, q, t):
    """Conditional density f_x(k+t); excludes any atom at t = 0."""
    if kp == 0.0:
        return 0.0
    if assumption is Assumption.UDD:
        return kp * q
    if assumption is Assumption.BALDUCCI:
        if p == 0.0:
            raise DomainError("Balducci density is an atom at t = 0 when q = 1")
        denom = p + t * q
        return kp * p * q / (denom * denom)
    if p == 0.0:
        raise DomainError("constant-force density is an atom at t = 0 when p = 0")
    return -kp * p ** t * math.log(p)


def year_atom(assumption, kp, p):
    """Probability mass sitting exactly at the year start.

    Balducci and constant force put the whole year's deaths at t = 0 when
    p = 0; UDD spreads them uniformly.
    """
    if p == 0.0 and assumption is not Assumption.UDD:
        return kp
    return 0.0


def year_force(assumption, p, q, t):
    if assumption is Assumption.UDD:
        return q / (1.0 - t * q)
    if assumption is Assumption.BALDUCCI:
        return q / (1.0 - (1.0 - t) * q)
    if p == 0.0:
        return math.inf
    return -math.log(p)


def _year(model, assumption, fa):
    pr = probabilities(model, fa.x, fa.k)
    if assumption is Assumption.BALDUCCI and pr.kpx == 0.0 and fa.t < 1.0:
        raise DomainError("Balducci interpolation needs s(x+k) > 0 for t < 1")
    return pr


def survival_fraction(model: MortalityModel, assumption: Assumption, fa: FractionalAge) -> float:
    """(k+t) p_x = s(x+k+t)/s(x) under the chosen interpolation."""
    pr = _year(model, assumption, fa)
    return year_survival(assumption, pr.kpx, pr.p, pr.q, fa.t)


def conditional_density(model: MortalityModel, assumption: Assumption,
                        fa: FractionalAge) -> float:
    pr = _year(model, assumption, fa)
    return year_density(assumption, pr.kpx, pr.p, pr.q, fa.t)


def force_of_mortality(model: MortalityModel, assumption: Assumption,
                       fa: FractionalAge) -> float:
    """mu_{x+k+t}, defined on the open interval 0 < t < 1."""
    if not 0.0 < fa.t < 1.0:
        raise DomainError(f"force of mortality is defined for 0 < t < 1, got t={fa.t!r}")
    pr = probabilities(model, fa.x, fa.k)
    if pr.terminal:
        raise DomainError(f"s({fa.x + fa.k}) = 0: no force of mortality after extinction")
    return year_force(assumption, pr.p, pr.q, fa.t)


def subyear_death_probability(model: MortalityModel, a: int, d: int, j: int, x: int) -> float:
    """(a+d/j) p_x - (a+(d+1)/j) p_x under Balducci, in closed form."""
    if j < 1 or not 0 <= d <= j - 1:
        raise DomainError(f"need j >= 1 and 0 <= d <= j-1, got d={d}, j={j}")
    pr = probabilities(model, x, a)
    return cell_mass(pr.kpx, pr.p, pr.q, d, j)


def cell_mass(kp, p, q, d, j):
    """Probability of dying in [k + d/j, k + (d+1)/j) under Balducci."""
    lower = p + d / j * q
    upper = p + (d + 1) / j * q
    if lower == 0.0:
        # q = 1: the whole year's mass is an atom at the start of period 0
        return kp
    return kp * p * q / j / (lower * upper)


def sample_lifetime(model: MortalityModel, assumption: Assumption, x: int, u: float) -> float:
    """Inverse-CDF draw of T_x: the T with P(T_x >= T) = u."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    t = sample_lifetimes(model, assumption, x, np.array([u]))[0]
    if math.isinf(t):
        raise TruncationError(
            f"mass beyond truncation: u={u!r} is below the survival to age "
            f"{model.horizon_age}")
    return float(t)


class LifetimeSampler:
    """Vectorised inverse-CDF sampler for one (model, assumption, x).

    Draws whose target survival lies below the truncation survival come back
    as +inf; callers decide whether that censoring matters.
    """

    def __init__(self, model: MortalityModel, assumption: Assumption, x: int):
        years = model.horizon_age - x
        if years < 1:
            raise DomainError(f"issue age {x} is at or beyond the model horizon")
        self.assumption = assumption
        kps = np.array([kpx(model, x, k) for k in range(years + 1)])
        ps = np.empty(years)
        qs = np.empty(years)
        for k in range(years):
            if kps[k] == 0.0:
                ps[k], qs[k] = 0.0, 1.0
            else:
                ps[k], qs[k] = model.one_year(x + k)
        self.kps, self.ps, self.qs = kps, ps, qs
        self.years = years

    @property
    def truncation_survival(self) -> float:
        return float(self.kps[-1])

    def __call__(self, u: np.ndarray) -> np.ndarray:
        v = np.asarray(u, dtype=float)
        k = np.searchsorted(-self.kps, -v, side="right") - 1
        out = np.full(v.shape, np.inf)
        inside = k < self.years
        k_in = k[inside]
        v_in = v[inside]
        kp = self.kps[k_in]
        p = self.ps[k_in]
        q = self.qs[k_in]
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.assumption is Assumption.UDD:
                t = (kp - v_in) / (kp * q)
            elif self.assumption is Assumption.BALDUCCI:
                t = (kp * p / v_in - p) / q
            else:
                t = np.log(v_in / kp) / np.log(p)
        t = np.where(v_in >= kp, 0.0, t)
        t = np.where(np.isnan(t), 0.0, t)
        out[inside] = k_in + np.clip(t, 0.0, 1.0)
        return out


def sample_lifetimes(model: MortalityModel, assumption: Assumption, x: int,
                     u: np.ndarray) -> np.ndarray:
    return LifetimeSampler(model, assumption, x)(u)
