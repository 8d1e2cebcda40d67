import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from balducci import (TO_OMEGA, Assumption, ContractSpec, InterestEnvironment, Kind, Layout,
                      Window, annually_increasing_moment, compute_moment, from_weibull,
                      increasing_continuous_moment, kpx, lifetime_moment, load_table,
                      monte_carlo_expectation, mthly_increasing_moment, mthly_insurance_moment,
                      mthly_mean_payment_time, payoff_for, probabilities,
                      quadrature_expectation, term_insurance_moment,
                      whole_life_moment)
from balducci.errors import DomainError
from balducci.fractional import year_density
from balducci.premiums import k_weighted_annual_limit
from conftest import table_from_qs, tables

ANNUAL_KINDS = [Kind.LEVEL, Kind.LIFETIME, Kind.INCREASING_CONTINUOUS, Kind.INCREASING_ANNUAL]


def oracle(kind, model, env, spec, layout=Layout.PERIODIC):
    return quadrature_expectation(model, Assumption.BALDUCCI, payoff_for(kind, env, spec.m, spec.j),
                                  Window.for_contract(model, spec, layout))


EXAMPLE1 = [
    (Kind.LEVEL, 1, 1, "0.0791388"),
    (Kind.LEVEL, 2, 1, "0.063867"),
    (Kind.LIFETIME, 0, 1, "0.1"),
    (Kind.LIFETIME, 1, 1, "0.499824"),
    (Kind.LIFETIME, 2, 1, "3.33155"),
    (Kind.INCREASING_CONTINUOUS, 1, 1, "0.363507"),
    (Kind.INCREASING_CONTINUOUS, 2, 1, "1.63319"),
    (Kind.INCREASING_ANNUAL, 1, 1, "0.403536"),
    (Kind.INCREASING_ANNUAL, 2, 1, "1.91788"),
    (Kind.MTHLY, 1, 2, "0.0781758"),
    (Kind.MTHLY, 2, 2, "0.062319"),
    (Kind.MTHLY_INCREASING, 1, 2, "0.766813"),
    (Kind.MTHLY_INCREASING, 2, 2, "7.08521"),
]


def half_last_digit(printed):
    return 0.5 * 10.0 ** -len(printed.split(".")[1])


@pytest.mark.parametrize("kind, m, j, printed", EXAMPLE1)
def test_example1(example1, env5, kind, m, j, printed):
    spec = ContractSpec(0, 0, 10, m=m, j=j)
    value = compute_moment(kind, example1, env5, spec).value
    # the 0.1 window probability is exact
    tol = 1e-15 if printed == "0.1" else half_last_digit(printed)
    assert abs(value - float(printed)) <= tol
    if m >= 1:
        assert value == pytest.approx(oracle(kind, example1, env5, spec), rel=1e-9)


def test_example1_mthly_reduction(example1, env5):
    # with j = 2 the level payment is at most half a year later than immediate
    immediate = term_insurance_moment(example1, env5, ContractSpec(0, 0, 10)).value
    half_yearly = mthly_insurance_moment(example1, env5, ContractSpec(0, 0, 10, j=2)).value
    assert immediate * env5.nu ** 0.5 < half_yearly < immediate


def test_example2_level(weibull, env5):
    spec = ContractSpec(0, 1, TO_OMEGA)
    assert whole_life_moment(weibull, env5, spec).value == pytest.approx(0.152212, abs=5e-6)


def test_example2_half_yearly_increasing(weibull, env5):
    # j = 2, n1 = 0 reproduces the published j-thly increasing pair
    r1 = mthly_increasing_moment(weibull, env5, ContractSpec(0, 1, TO_OMEGA, m=1, j=2)).value
    r2 = mthly_increasing_moment(weibull, env5, ContractSpec(0, 1, TO_OMEGA, m=2, j=2)).value
    assert r1 == pytest.approx(10.1107, abs=5e-4)
    assert r2 == pytest.approx(114.207, abs=5e-3)


@pytest.mark.parametrize("kind", ANNUAL_KINDS)
def test_whole_life_truncation_is_stable(env5, kind):
    base = from_weibull(50, 3)
    longer = from_weibull(50, 3, omega_hint=base.omega_hint + 10)
    spec = ContractSpec(0, 1, TO_OMEGA, m=1)
    a = compute_moment(kind, base, env5, spec).value
    b = compute_moment(kind, longer, env5, spec).value
    assert abs(a - b) < 1e-12


def test_whole_life_equals_full_term(example1, env5):
    whole = whole_life_moment(example1, env5, ContractSpec(0, 0, TO_OMEGA)).value
    term = term_insurance_moment(example1, env5, ContractSpec(0, 0, 10)).value
    assert whole == term


def test_whole_life_requires_to_omega(example1, env5):
    with pytest.raises(DomainError):
        whole_life_moment(example1, env5, ContractSpec(0, 0, 5))


def test_zero_interest_reductions(example1):
    env = InterestEnvironment(0.0)
    spec = ContractSpec(0, 2, 5, m=2)
    prob = kpx(example1, 0, 2) - kpx(example1, 0, 7)
    assert term_insurance_moment(example1, env, spec).value == pytest.approx(prob, rel=1e-15)
    assert increasing_continuous_moment(example1, env, spec).value == \
        lifetime_moment(example1, spec).value


def test_one_year_q_one_table():
    # every death happens at the instant of issue under Balducci
    table = load_table([(0, 10), (1, 0)])
    env = InterestEnvironment(0.05)
    spec = ContractSpec(0, 0, 1, m=1)
    assert term_insurance_moment(table, env, spec).value == pytest.approx(1.0, abs=1e-15)
    assert lifetime_moment(table, spec).value == pytest.approx(0.0, abs=1e-15)
    assert annually_increasing_moment(table, env, spec).value == pytest.approx(1.0, abs=1e-15)


def direct_year_integral(table, g, x, k):
    pr = probabilities(table, x, k)
    value, _ = sp_integrate.quad(
        lambda t: g(t) * year_density(Assumption.BALDUCCI, pr.kpx, pr.p, pr.q, t - k),
        k, k + 1, epsabs=0, epsrel=1e-13)
    return value


@pytest.mark.parametrize("kind", ANNUAL_KINDS)
@pytest.mark.parametrize("m", [1, 2])
def test_single_deferred_year_against_direct_integral(kind, m):
    table = table_from_qs([0.02, 0.3, 0.07])
    env = InterestEnvironment(0.04)
    g = payoff_for(kind, env, m)
    spec = ContractSpec(0, 1, 1, m=m)
    expected = direct_year_integral(table, g, 0, 1)
    assert compute_moment(kind, table, env, spec).value == pytest.approx(expected, rel=1e-10)


def test_annual_single_year_equals_level(example1, env5):
    spec = ContractSpec(0, 0, 1, m=1)
    assert annually_increasing_moment(example1, env5, spec).value == pytest.approx(
        term_insurance_moment(example1, env5, spec).value, rel=1e-14)


@pytest.mark.parametrize("m", [1, 2])
def test_j_equal_one_reductions(example1, env5, m):
    spec = ContractSpec(0, 0, 10, m=m, j=1)
    curtate = math.fsum(env5.nu ** (m * (k + 1)) * (kpx(example1, 0, k) - kpx(example1, 0, k + 1))
                        for k in range(10))
    assert mthly_insurance_moment(example1, env5, spec).value == pytest.approx(curtate, rel=1e-14)
    assert mthly_increasing_moment(example1, env5, spec).value == pytest.approx(
        annually_increasing_moment(example1, env5, spec).value, rel=1e-12)


def test_payment_time_annual(example1):
    spec = ContractSpec(0, 0, 10, m=1, j=1)
    expected = math.fsum((k + 1) * (kpx(example1, 0, k) - kpx(example1, 0, k + 1))
                         for k in range(10))
    assert mthly_mean_payment_time(example1, spec).value == pytest.approx(expected, rel=1e-14)


def test_payment_time_half_yearly_monte_carlo(example1, env5):
    spec = ContractSpec(0, 0, 10, m=1, j=2)
    value = mthly_mean_payment_time(example1, spec).value
    window = Window.for_contract(example1, spec)
    mean, se = monte_carlo_expectation(example1, Assumption.BALDUCCI,
                                       payoff_for(Kind.PAYMENT_TIME, env5, 1, 2),
                                       window, 400_000, seed=3)
    assert abs(mean - value) <= 3 * se


def test_payment_time_shrinks_with_finer_periods(example1):
    values = [mthly_mean_payment_time(example1, ContractSpec(0, 0, 10, j=2 ** e)).value
              for e in range(7)]
    assert all(np.diff(values) < 0)
    fine = mthly_mean_payment_time(example1, ContractSpec(0, 0, 10, j=365)).value
    exact = lifetime_moment(example1, ContractSpec(0, 0, 10, m=1)).value
    assert exact < fine <= exact + 0.1 / 365


def test_annual_limit_uses_k_plus_one():
    # one year with q below the switch; a k^m weighted limit would disagree
    # with the quadrature, the (k+1)^m form does not
    qs = [0.01] * 10
    qs[3] = 1e-9
    table = table_from_qs(qs)
    env = InterestEnvironment(0.05)
    spec = ContractSpec(0, 0, 10, m=1)
    result = annually_increasing_moment(table, env, spec)
    assert result.limit_branches_used == 1
    # the limit drops O(q) terms, about 1e-9 here
    assert result.value == pytest.approx(oracle(Kind.INCREASING_ANNUAL, table, env, spec),
                                         abs=5e-9)
    kp = kpx(table, 0, 3)
    k_weighted = k_weighted_annual_limit(kp, 3, 1, env.nu)
    derived = 4 * env.nu ** 3 * (env.nu - 1) * kp
    assert abs(k_weighted - derived) > 1e-3


def test_level_limit_reconciles_with_scaled_form():
    qs = [0.01] * 5
    env = InterestEnvironment(0.05)
    spec = ContractSpec(0, 0, 5, m=1)
    below = term_insurance_moment(table_from_qs(qs[:2] + [0.99e-8] + qs[3:]), env, spec)
    above = term_insurance_moment(table_from_qs(qs[:2] + [1.01e-8] + qs[3:]), env, spec)
    assert below.limit_branches_used == 1 and above.limit_branches_used == 0
    assert abs(below.value - above.value) < 1e-9


@settings(max_examples=30, deadline=None)
@given(tables, st.sampled_from(ANNUAL_KINDS), st.integers(1, 2))
def test_additivity_over_years(table, kind, m):
    env = InterestEnvironment(0.03)
    years = len(table.survivors) - 1
    cut = years // 2
    whole = compute_moment(kind, table, env, ContractSpec(0, 0, years, m=m)).value
    first = compute_moment(kind, table, env, ContractSpec(0, 0, cut, m=m)).value
    second = compute_moment(kind, table, env, ContractSpec(0, cut, years - cut, m=m)).value
    assert whole == pytest.approx(first + second, rel=1e-12, abs=1e-15)


@given(tables)
def test_level_moments_decrease_in_m(table):
    env = InterestEnvironment(0.05)
    years = len(table.survivors) - 1
    values = [term_insurance_moment(table, env, ContractSpec(0, 0, years, m=m)).value
              for m in (1, 2, 3)]
    assert values[0] >= values[1] >= values[2] > 0


@pytest.mark.parametrize("kind", [Kind.MTHLY, Kind.MTHLY_INCREASING])
def test_layouts_agree_without_sub_deferment(example1, env5, kind):
    spec = ContractSpec(0, 1, 8, m=1, j=4)
    periodic = compute_moment(kind, example1, env5, spec, Layout.PERIODIC).value
    window = compute_moment(kind, example1, env5, spec, Layout.WINDOW).value
    assert periodic == window


@pytest.mark.parametrize("layout", list(Layout))
@pytest.mark.parametrize("kind", [Kind.MTHLY, Kind.MTHLY_INCREASING])
def test_sub_deferment_layouts_match_oracle(example1, env5, kind, layout):
    spec = ContractSpec(0, 1, 7, m=2, j=4, n1=3)
    value = compute_moment(kind, example1, env5, spec, layout).value
    assert value == pytest.approx(oracle(kind, example1, env5, spec, layout), rel=1e-9)


def test_periodic_layout_differs_from_window(example1, env5):
    spec = ContractSpec(0, 1, 7, m=1, j=4, n1=3)
    periodic = mthly_insurance_moment(example1, env5, spec, Layout.PERIODIC).value
    window = mthly_insurance_moment(example1, env5, spec, Layout.WINDOW).value
    assert periodic < window


@pytest.mark.parametrize("kind", [k for k in Kind if k is not Kind.PAYMENT_TIME])
@pytest.mark.parametrize("m", [1, 2])
def test_negative_interest_matches_oracle(kind, m):
    table = table_from_qs([0.004, 0.02, 0.15, 0.4, 0.3, 0.08])
    env = InterestEnvironment(-0.02)
    j = 3 if kind in (Kind.MTHLY, Kind.MTHLY_INCREASING) else 1
    spec = ContractSpec(0, 1, 4, m=m, j=j)
    value = compute_moment(kind, table, env, spec).value
    assert value == pytest.approx(oracle(kind, table, env, spec), rel=1e-9)


@pytest.mark.parametrize("kind", list(Kind))
def test_terminal_table_matches_oracle(kind):
    # the last year has p = 0: Balducci puts its deaths at the year start
    table = load_table([(0, 100), (1, 60), (2, 45), (3, 0)])
    env = InterestEnvironment(0.05)
    j = 2 if kind in (Kind.MTHLY, Kind.MTHLY_INCREASING, Kind.PAYMENT_TIME) else 1
    spec = ContractSpec(0, 0, TO_OMEGA, m=1, j=j)
    value = compute_moment(kind, table, env, spec).value
    assert value == pytest.approx(oracle(kind, table, env, spec), rel=1e-10)


def test_limit_branch_counting():
    qs = [0.05, 2e-9, 0.03, 5e-9, 0.1]
    table = table_from_qs(qs)
    env = InterestEnvironment(0.05)
    spec = ContractSpec(0, 0, 5, m=1)
    for kind in ANNUAL_KINDS:
        assert compute_moment(kind, table, env, spec).limit_branches_used == 2
    spec_j = ContractSpec(0, 0, 5, m=1, j=3)
    # three cells in each small-q year
    assert mthly_increasing_moment(table, env, spec_j).limit_branches_used == 6
    assert mthly_insurance_moment(table, env, spec_j).limit_branches_used == 0


def test_no_limit_branches_on_example1(example1, env5):
    for kind in Kind:
        j = 2 if kind in (Kind.MTHLY, Kind.MTHLY_INCREASING, Kind.PAYMENT_TIME) else 1
        assert compute_moment(kind, example1, env5,
                              ContractSpec(0, 0, 10, j=j)).limit_branches_used == 0


@pytest.mark.parametrize("m", [3, 4])
def test_higher_moments_match_oracle(example1, env5, m):
    for kind in (Kind.LIFETIME, Kind.INCREASING_CONTINUOUS, Kind.LEVEL):
        spec = ContractSpec(0, 0, 10, m=m)
        result = compute_moment(kind, example1, env5, spec)
        assert result.value == pytest.approx(oracle(kind, example1, env5, spec), rel=1e-9)


@pytest.mark.parametrize("kind", [Kind.LEVEL, Kind.LIFETIME, Kind.INCREASING_CONTINUOUS,
                                  Kind.INCREASING_ANNUAL])
def test_annual_kinds_reject_periods(example1, env5, kind):
    with pytest.raises(DomainError):
        compute_moment(kind, example1, env5, ContractSpec(0, 0, 10, j=2))


def test_moment_order_validation(example1, env5):
    with pytest.raises(DomainError):
        term_insurance_moment(example1, env5, ContractSpec(0, 0, 10, m=0))
    with pytest.raises(DomainError):
        ContractSpec(0, 0, 10, m=-1)


@pytest.mark.parametrize("kwargs", [dict(x=-1), dict(x=0, l=-1), dict(x=0, n=0),
                                    dict(x=0, j=0), dict(x=0, j=2, n1=2), dict(x=0, n=2.5)])
def test_contract_validation(kwargs):
    with pytest.raises(DomainError):
        ContractSpec(**kwargs)


def test_payment_time_needs_zero_sub_deferment(example1):
    with pytest.raises(DomainError):
        mthly_mean_payment_time(example1, ContractSpec(0, 0, 5, j=2, n1=1))


def test_to_omega_without_whole_year(example1, env5):
    with pytest.raises(DomainError):
        term_insurance_moment(example1, env5, ContractSpec(0, 10, TO_OMEGA))


def test_interest_validation():
    with pytest.raises(DomainError):
        InterestEnvironment(-1.0)
    env = InterestEnvironment(0.05)
    assert env.nu == 1 / 1.05 and env.delta == math.log1p(0.05)
