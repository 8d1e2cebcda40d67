"""Independent checks of the closed forms.

``quadrature_expectation`` integrates g(t) f_x(t) year by year with the
package's own Gauss-Kronrod rule; ``monte_carlo_expectation`` averages g
over inverse-CDF lifetimes. Neither touches an exponential integral.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, TruncationError
from .fractional import Assumption, LifetimeSampler, year_atom, year_density
from .mortality import MortalityModel, probabilities
from .premiums import ContractSpec, InterestEnvironment, Kind, Layout, _cells, _term_years
from .quadrature import QuadratureConfig, integrate

MC_BLOCK = 1 << 16
ORDERING_SLACK = 1e-10
_SLIVER = 1e-12


class Monotonicity(enum.Enum):
    NON_INCREASING = "non-increasing"
    NON_DECREASING = "non-decreasing"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Payoff:
    """g(t) on years since issue; ``g`` must accept numpy arrays.

    g is assumed smooth between multiples of 1/period_grid, where any
    jumps of floor-type payoffs sit.
    """

    g: Callable[[np.ndarray], np.ndarray]
    monotonicity_hint: Monotonicity = Monotonicity.UNKNOWN
    period_grid: int = 1

    def __call__(self, t):
        return np.asarray(self.g(np.asarray(t, dtype=float)), dtype=float)


@dataclass(frozen=True)
class Window:
    """Issue age plus a union of disjoint half-open intervals [a, b) in years."""

    x: int
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for a, b in self.intervals:
            if not (0 <= a <= b and math.isfinite(b)):
                raise DomainError(f"bad window interval [{a}, {b})")

    @classmethod
    def term(cls, x: int, l: float, n: float) -> "Window":
        return cls(x, ((float(l), float(l + n)),))

    @classmethod
    def for_contract(cls, model: MortalityModel, spec: ContractSpec,
                     layout: Layout = Layout.PERIODIC) -> "Window":
        """Cells a closed form covers, merged into intervals."""
        n = _term_years(model, spec, needs_tail=spec.n1 > 0)
        merged: list[list[float]] = []
        for k, d in _cells(spec, n, layout):
            a, b = k + d / spec.j, k + (d + 1) / spec.j
            if merged and merged[-1][1] == a:
                merged[-1][1] = b
            else:
                merged.append([a, b])
        return cls(spec.x, tuple((a, b) for a, b in merged))

    @property
    def end(self) -> float:
        return max((b for _, b in self.intervals), default=0.0)

    def contains(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (t >= a) & (t < b)
        return inside


def _pieces(window: Window, grid: int):
    """Sub-intervals that never straddle an integer or a 1/grid point."""
    for a, b in window.intervals:
        for k in range(math.floor(a), math.ceil(b)):
            for d in range(grid):
                lo = max(a, k + d / grid)
                hi = min(b, k + (d + 1) / grid)
                if hi - lo > _SLIVER:
                    yield k, lo, hi


def quadrature_expectation(model: MortalityModel, assumption: Assumption, payoff: Payoff,
                           window: Window, config: QuadratureConfig = QuadratureConfig()
                           ) -> float:
    """E g(T_x) 1{T_x in window} as a sum of per-year density integrals.

    When p = 0 under Balducci or constant force the year's deaths form an
    atom at its start; that atom is added as g(k) * kp.
    """
    terms = []
    year_cache = {}
    atoms_done = set()
    for k, lo, hi in _pieces(window, payoff.period_grid):
        if k not in year_cache:
            year_cache[k] = probabilities(model, window.x, k)
        pr = year_cache[k]
        if pr.terminal:
            continue
        atom = year_atom(assumption, pr.kpx, pr.p)
        if atom:
            if lo == k and k not in atoms_done:
                terms.append(float(payoff(np.array([float(k)]))[0]) * atom)
                atoms_done.add(k)
            continue

        def integrand(t, pr=pr, k=k):
            return payoff(t) * year_density(assumption, pr.kpx, pr.p, pr.q, t - k)

        value, _ = integrate(integrand, lo, hi, config)
        terms.append(value)
    return math.fsum(terms)


def _block_uniforms(seed: int, block: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    return 1.0 - rng.random(size)  # (0, 1]


def monte_carlo_expectation(model: MortalityModel, assumption: Assumption, payoff: Payoff,
                            window: Window, samples: int, seed: int,
                            workers: int | None = None) -> tuple[float, float]:
    """Sample mean of g(T) 1{window} and its standard error.

    Sample blocks of fixed size each get their own Philox stream keyed by
    (seed, block index), so the estimate does not depend on ``workers``.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if seed < 0:
        raise DomainError(f"seed must be >= 0, got {seed}")
    sampler = LifetimeSampler(model, assumption, window.x)
    beyond = window.end > sampler.years

    def run(block):
        size = min(MC_BLOCK, samples - block * MC_BLOCK)
        lifetimes = sampler(_block_uniforms(seed, block, size))
        censored = np.isinf(lifetimes)
        if beyond and censored.any():
            raise TruncationError("mass beyond truncation: window extends past the "
                                  f"model horizon age {window.x + sampler.years}")
        inside = window.contains(lifetimes)
        values = np.zeros(size)
        values[inside] = payoff(lifetimes[inside])
        return float(np.sum(values)), float(np.sum(values * values))

    blocks = range((samples + MC_BLOCK - 1) // MC_BLOCK)
    if workers is None or workers <= 1:
        sums = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(run, blocks))
    s1 = math.fsum(s for s, _ in sums)
    s2 = math.fsum(s for _, s in sums)
    mean = s1 / samples
    if samples == 1:
        return mean, math.inf
    variance = max(s2 - s1 * mean, 0.0) / (samples - 1)
    return mean, math.sqrt(variance / samples)


@dataclass(frozen=True)
class OrderingResult:
    balducci: float
    udd: float
    ordering_holds: bool


def ordering_check(model: MortalityModel, payoff: Payoff, window: Window,
                   config: QuadratureConfig = QuadratureConfig()) -> OrderingResult:
    """Compare Balducci and UDD expectations of a monotone payoff.

    Non-increasing g: Balducci >= UDD. Non-decreasing g: Balducci <= UDD.
    """
    hint = payoff.monotonicity_hint
    if hint is Monotonicity.UNKNOWN:
        raise DomainError("ordering_check needs a monotone payoff")
    bal = quadrature_expectation(model, Assumption.BALDUCCI, payoff, window, config)
    udd = quadrature_expectation(model, Assumption.UDD, payoff, window, config)
    if hint is Monotonicity.NON_INCREASING:
        holds = bal >= udd - ORDERING_SLACK
    else:
        holds = bal <= udd + ORDERING_SLACK
    return OrderingResult(bal, udd, holds)


# -- payoffs matching each closed form -------------------------------------

def payoff_for(kind: Kind, env: InterestEnvironment, m: int, j: int = 1) -> Payoff:
    """The g(T) whose expectation each premium operation computes."""
    kind = Kind(kind)
    nu = env.nu
    if kind is Kind.LEVEL:
        hint = Monotonicity.NON_INCREASING if nu <= 1 else Monotonicity.NON_DECREASING
        return Payoff(lambda t: nu ** (m * t), hint)
    if kind is Kind.LIFETIME:
        return Payoff(lambda t: t ** m, Monotonicity.NON_DECREASING)
    if kind is Kind.INCREASING_CONTINUOUS:
        return Payoff(lambda t: (t * nu ** t) ** m)
    if kind is Kind.INCREASING_ANNUAL:
        return Payoff(lambda t: ((np.floor(t) + 1.0) * nu ** t) ** m)
    if kind is Kind.MTHLY:
        return Payoff(lambda t: nu ** (m * (np.floor(t * j) + 1.0) / j), period_grid=j)
    if kind is Kind.MTHLY_INCREASING:
        return Payoff(lambda t: ((np.floor(t * j) + 1.0) * nu ** t) ** m, period_grid=j)
    return Payoff(lambda t: ((np.floor(t * j) + 1.0) / j) ** m, period_grid=j)
