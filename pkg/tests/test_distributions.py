import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import kstest

from abandonq.distributions import (
    Deterministic,
    Erlang2,
    Exponential,
    Hyperexp2,
    Lognormal,
    Mixture,
    Uniform,
    from_params,
    make_dist,
)
from abandonq.errors import (
    DomainError,
    HazardUnavailable,
    InvalidParams,
    UnsupportedFamily,
)
from abandonq.streams import substream

BENCH_H2 = Hyperexp2(0.6741, (0.1484, 2.761))

ALL_FAMILIES = [
    Deterministic(1.3),
    Exponential(0.7),
    Erlang2(1.1),
    Lognormal(1.0, 1.52),
    BENCH_H2,
]


def test_lognormal_log_params():
    ln = Lognormal(1.0, 1.52)
    assert ln.sigma_log**2 == pytest.approx(0.9242589015233321, abs=1e-12)
    assert ln.mu_log == pytest.approx(-0.46212945076166606, abs=1e-12)
    assert ln.mean == pytest.approx(1.0, abs=1e-12)
    assert ln.scv == pytest.approx(1.52, abs=1e-12)


def test_lognormal_roundtrip_from_log_params():
    ln = Lognormal(2.0, 0.8)
    back = Lognormal.from_log_params(ln.mu_log, ln.sigma_log)
    assert back.mean == pytest.approx(2.0, rel=1e-12)
    assert back.scv == pytest.approx(0.8, rel=1e-12)


def test_benchmark_hyperexp_moments():
    assert BENCH_H2.mean == pytest.approx(1.0, abs=2e-4)
    assert BENCH_H2.scv == pytest.approx(4.0, abs=1e-4)
    assert BENCH_H2.hazard(0.0) == pytest.approx(4.660490, abs=1e-5)


def test_balanced_hyperexp_fit():
    h = Hyperexp2.from_mean_scv(1.0, 4.0)
    assert h.mean == pytest.approx(1.0, rel=1e-12)
    assert h.scv == pytest.approx(4.0, rel=1e-12)
    # each branch carries half the mean
    assert h.p * h.means[0] == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(InvalidParams):
        Hyperexp2.from_mean_scv(1.0, 0.9)


def test_erlang2_convention():
    d = Erlang2(1.0)
    assert d.scv == 0.5
    # two stages each with rate 2/mean
    assert d.pdf(0.0) == 0.0
    assert d.cdf(1e9) == pytest.approx(1.0)


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_moment_identities(dist):
    mean, err = quad(lambda t: dist.sf(t), 0, np.inf, limit=400)
    assert mean == pytest.approx(dist.mean, rel=1e-9)
    second, err = quad(lambda t: 2.0 * t * dist.sf(t), 0, np.inf, limit=400)
    assert second == pytest.approx((dist.scv + 1.0) * dist.mean**2, rel=1e-8)
    third, err = quad(lambda t: 3.0 * t**2 * dist.sf(t), 0, np.inf, limit=400)
    assert third == pytest.approx(dist.third_moment, rel=1e-7)


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_sampling_matches_moments(dist):
    rng = substream(2024, 0, "generic")
    x = np.asarray(dist.sample(rng, 1_000_000))
    se_mean = math.sqrt(max(dist.var, 1e-30) / len(x))
    assert abs(x.mean() - dist.mean) <= max(4.0 * se_mean, 1e-12)
    if dist.scv > 0:
        fourth = np.mean((x - dist.mean) ** 4)
        se_var = math.sqrt(max(fourth - dist.var**2, 0.0) / len(x))
        assert abs(x.var() - dist.var) <= 4.0 * se_var


@pytest.mark.parametrize(
    "dist",
    [Exponential(0.7), Erlang2(1.1), Lognormal(1.0, 1.52), BENCH_H2],
    ids=lambda d: d.family,
)
def test_sampling_ks_against_cdf(dist):
    rng = substream(7, 0, "generic")
    x = np.asarray(dist.sample(rng, 100_000))
    stat = kstest(x, dist.cdf).statistic
    assert stat < 1.63 / math.sqrt(len(x))  # 1% critical value


def test_exponential_hazard_exactly_constant():
    d = Exponential(10.0)
    ts = np.linspace(0.0, 200.0, 2001)
    h = d.hazard(ts)
    assert np.max(np.abs(h - 0.1)) == 0.0


def test_erlang2_hazard_vanishes_at_origin():
    d = Erlang2(1.0)
    assert d.hazard(0.0) == 0.0
    assert d.hazard(1e-9) == pytest.approx(0.0, abs=1e-8)


def test_hazard_unavailable_for_point_mass():
    with pytest.raises(HazardUnavailable):
        Deterministic(1.0).hazard(0.5)


def test_hazard_domain_error_beyond_support():
    with pytest.raises(DomainError):
        Uniform(0.0, 1.0).hazard(1.5)


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_ppf_inverts_cdf(dist):
    for q in [0.01, 0.3, 0.5, 0.9, 0.999]:
        t = dist.ppf(q)
        if dist.family == "deterministic":
            assert t == dist.mean
        else:
            assert dist.cdf(t) == pytest.approx(q, abs=1e-9)
    with pytest.raises(DomainError):
        dist.ppf(1.0)
    with pytest.raises(DomainError):
        dist.ppf(-0.1)


# ---------------------------------------------------------------- equilibrium


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_equilibrium_cdf_matches_quadrature(dist):
    for t in [0.05, 0.3, 1.0, 2.5, 6.0]:
        want, _ = quad(lambda u: dist.sf(u) / dist.mean, 0, t, limit=400)
        assert dist.equilibrium_cdf(t) == pytest.approx(want, rel=1e-8, abs=1e-10)


def test_equilibrium_closed_forms():
    # point mass -> uniform on [0, value]
    eq = Deterministic(2.0).equilibrium()
    assert isinstance(eq, Uniform) and (eq.a, eq.b) == (0.0, 2.0)
    # exponential -> itself
    eq = Exponential(0.7).equilibrium()
    assert isinstance(eq, Exponential) and eq.mean == 0.7
    # erlang2 -> equal mixture of one remaining stage and both stages
    eq = Erlang2(1.0).equilibrium()
    assert isinstance(eq, Mixture) and eq.weights == (0.5, 0.5)
    assert eq.mean == pytest.approx(0.75, rel=1e-12)
    # hyperexp2 -> reweighted branches, same branch means
    eq = BENCH_H2.equilibrium()
    assert isinstance(eq, Hyperexp2) and eq.means == BENCH_H2.means
    assert eq.p == pytest.approx(BENCH_H2.p * BENCH_H2.means[0] / BENCH_H2.mean, rel=1e-12)


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_equilibrium_sampling_mean(dist):
    rng = substream(11, 0, "init")
    eq = dist.equilibrium()
    x = np.asarray(eq.sample(rng, 1_000_000))
    se = math.sqrt(dist.equilibrium_var / len(x))
    assert abs(x.mean() - dist.equilibrium_mean) <= 4.0 * se


def test_lognormal_equilibrium_sampling_benchmark():
    # mean of the stationary excess is (1 + scv) / 2 for a unit-mean service
    ln = Lognormal(1.0, 1.52)
    assert ln.equilibrium_mean == pytest.approx(1.26, abs=1e-12)
    rng = substream(3, 0, "init")
    x = ln.equilibrium().sample(rng, 1_000_000)
    assert abs(x.mean() - 1.26) < 0.008  # ~4 standard errors


def test_lognormal_equilibrium_table_quality():
    tab = Lognormal(1.0, 1.52).equilibrium()
    assert tab.knots >= 4096
    assert tab.tail_mass <= 1e-9
    ln = Lognormal(1.0, 1.52)
    ts = np.linspace(1e-4, float(tab.ts[-1]) * 0.999, 50_000)
    assert np.max(np.abs(tab.cdf(ts) - ln.equilibrium_cdf(ts))) < 2e-10


def test_lognormal_equilibrium_ks():
    ln = Lognormal(1.0, 1.52)
    rng = substream(5, 0, "init")
    x = ln.equilibrium().sample(rng, 100_000)
    stat = kstest(x, lambda t: ln.equilibrium_cdf(t)).statistic
    assert stat < 1.63 / math.sqrt(len(x))


# ---------------------------------------------------------------- validation


def test_invalid_params_rejected():
    with pytest.raises(InvalidParams):
        Exponential(-1.0)
    with pytest.raises(InvalidParams):
        Deterministic(0.0)
    with pytest.raises(InvalidParams):
        Hyperexp2(1.2, (1.0, 2.0))
    with pytest.raises(InvalidParams):
        Lognormal(1.0, -0.5)
    with pytest.raises(UnsupportedFamily):
        make_dist("weibull", mean=1.0)
    with pytest.raises(InvalidParams):
        make_dist("erlang2", mean=1.0, scv=0.7)


def test_make_dist_native_forms():
    assert make_dist("exponential", rate=2.0).mean == 0.5
    assert make_dist("deterministic", value=3.0).mean == 3.0
    ln = make_dist("lognormal", mu_log=-0.46212945076166606, sigma_log=math.sqrt(0.9242589015233321))
    assert ln.mean == pytest.approx(1.0, rel=1e-12)
    h2 = make_dist("hyperexp2", p=(0.6741, 0.3259), means=(0.1484, 2.761))
    assert h2.scv == pytest.approx(4.0, abs=1e-4)


@pytest.mark.parametrize("dist", ALL_FAMILIES, ids=lambda d: d.family)
def test_params_roundtrip(dist):
    back = from_params(dist.to_params())
    assert back == dist
    assert back.mean == pytest.approx(dist.mean, rel=1e-12)
    assert back.scv == pytest.approx(dist.scv, rel=1e-12)


def test_scv_zero_iff_deterministic():
    for dist in ALL_FAMILIES:
        assert (dist.scv == 0.0) == (dist.family == "deterministic")


# ---------------------------------------------------------------- streams


def test_substream_reproducible_and_disjoint():
    a1 = substream(42, 3, "arrivals").random(8)
    a2 = substream(42, 3, "arrivals").random(8)
    assert np.array_equal(a1, a2)
    b = substream(42, 3, "services").random(8)
    c = substream(42, 4, "arrivals").random(8)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)
    with pytest.raises(InvalidParams):
        substream(42, 0, "nope")


# ---------------------------------------------------------------- properties


@settings(max_examples=40, deadline=None)
@given(
    mean=st.floats(0.05, 20.0),
    scv=st.floats(1.05, 12.0),
)
def test_property_balanced_hyperexp_matches_targets(mean, scv):
    h = Hyperexp2.from_mean_scv(mean, scv)
    assert math.isclose(h.mean, mean, rel_tol=1e-10)
    assert math.isclose(h.scv, scv, rel_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(mean=st.floats(0.05, 20.0), scv=st.floats(0.05, 8.0))
def test_property_lognormal_moments(mean, scv):
    ln = Lognormal(mean, scv)
    assert math.isclose(ln.mean, mean, rel_tol=1e-10)
    assert math.isclose(ln.scv, scv, rel_tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    mean=st.floats(0.1, 5.0),
    t=st.floats(0.01, 10.0),
)
def test_property_equilibrium_mean_formula(mean, t):
    for dist in (Exponential(mean), Erlang2(mean)):
        assert math.isclose(
            dist.equilibrium_mean, dist.mean * (1.0 + dist.scv) / 2.0, rel_tol=1e-12
        )
        # equilibrium cdf is continuous, nondecreasing, in [0, 1]
        f1 = dist.equilibrium_cdf(t)
        f2 = dist.equilibrium_cdf(t * 1.01)
        assert 0.0 <= f1 <= f2 <= 1.0
