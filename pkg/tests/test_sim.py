import csv
import math

import numpy as np
import pytest
from scipy import stats

from signreg import ContractError, Design, SimulationError, StructuralError
from signreg.sim import (
    CSV_COLUMNS,
    NoiseModel,
    Scenario,
    gaussian_abs_moment,
    hetero_expected,
    lse_handle,
    mean_T_check,
    monte_carlo_risk,
    replication_seeds,
    sample_noise,
    sample_qbeta,
    scenario_from_dict,
    scenario_hetero,
    sigma2_convergence_check,
    sigma2_on_design,
    sign_estimator_handle,
)


def test_gaussian_abs_moment_matches_quadrature():
    from scipy.integrate import quad

    val, _ = quad(lambda t: abs(t) * stats.norm.pdf(t), -np.inf, np.inf)
    assert gaussian_abs_moment() == pytest.approx(val, rel=1e-10)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_qbeta_distribution(beta):
    xi = sample_qbeta(beta, 200_000, seed=int(beta * 10))
    # 2 log|xi| is Gamma(beta, 1); compare with the reference distribution.
    assert stats.kstest(2 * np.log(np.abs(xi)), stats.gamma(beta).cdf).pvalue > 1e-3
    assert np.all(np.abs(xi) >= 1.0)
    # Sign symmetry: positive fraction is Binomial(count, 1/2).
    frac = np.mean(xi > 0)
    assert abs(frac - 0.5) <= 4 * math.sqrt(0.25 / xi.size)
    # E|xi|^q = (1 - q/2)^(-beta); q = 0.4 has finite variance.
    q = 0.4
    m = np.abs(xi) ** q
    assert abs(m.mean() - (1 - q / 2) ** -beta) <= 4 * m.std(ddof=1) / math.sqrt(m.size)


def test_qbeta_first_absolute_moment():
    xi = sample_qbeta(1.0, 10**6, seed=1)
    # Infinite variance: the first moment converges slowly, so only a loose check of E|xi| = 2.
    assert np.mean(np.abs(xi)) == pytest.approx(2.0, rel=0.05)
    with pytest.raises(ContractError):
        sample_qbeta(0.0, 10, seed=0)


@pytest.mark.parametrize(
    "noise,truth",
    [
        (NoiseModel("gaussian_hetero", (0.5, 1.0, 2.0)), np.zeros(3)),
        (NoiseModel("scaled_iid", (1.0, 3.0, 0.0)), np.zeros(3)),
        (NoiseModel("bernoulli"), np.array([0.1, 0.5, 0.9])),
        (NoiseModel("poisson"), np.array([0.3, 1.0, 7.0])),
    ],
)
def test_noise_centred(noise, truth):
    rng = np.random.default_rng(4)
    draws = np.array([sample_noise(noise, truth, rng) for _ in range(20_000)])
    se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0)) <= 4 * se + 1e-15)


def test_noise_validation():
    with pytest.raises(ContractError):
        sample_noise(NoiseModel("bernoulli"), np.array([1.5]), np.random.default_rng(0))
    with pytest.raises(ContractError):
        sample_noise(NoiseModel("poisson"), np.array([0.0]), np.random.default_rng(0))
    with pytest.raises(ContractError):
        NoiseModel("qbeta", beta=-1.0)
    with pytest.raises(StructuralError):
        NoiseModel("gaussian_hetero")
    with pytest.raises(StructuralError):
        NoiseModel("laplace")


def test_hetero_scenario_shape():
    sc = scenario_hetero(100)
    assert sc.n == 100 and sc.noise.scale[0] == pytest.approx(10 * (1 + math.log(100)))
    assert all(s == 0 for s in sc.noise.scale[1:])
    y = sc.draw(np.random.default_rng(0))
    assert np.array_equal(y[1:], sc.truth[1:])
    # sigma_1 f0(x_1) = n makes the sign coefficient error exactly xi_1 (1 + log n) / sum(f0).
    assert sc.noise.scale[0] * sc.f0[0] == pytest.approx(100, rel=1e-12)
    zero = scenario_hetero(50, a_star=0.0)
    assert np.all(zero.truth == 0)


def test_hetero_expected_constants():
    ex = hetero_expected(10**5)
    assert ex["mean_f0"] == pytest.approx(0.92, rel=0.01)
    # The limit is 1, but the mass of (0, 1/n] is 1 / (1 + log n), so the design average
    # tracks the integral over [1/n, 1] and approaches 1 only logarithmically.
    previous = 0.0
    for n in (10**3, 10**4, 10**5, 10**6):
        sq = hetero_expected(n)["mean_f0_sq"]
        assert abs(sq - (1 - 1 / (1 + math.log(n)))) < 0.01
        assert previous < sq < 1
        previous = sq
    assert ex["sign_risk"] == pytest.approx(math.sqrt(2 / math.pi) * math.log(math.e * 1e5) / math.sqrt(1e5))
    assert ex["lse_risk"] == pytest.approx(ex["c0"] * ex["mean_f0"] / ex["mean_f0_sq"])


def test_replication_seeds_deterministic():
    assert replication_seeds(7, 5) == replication_seeds(7, 5)
    assert replication_seeds(7, 5)[:3] == replication_seeds(7, 3)
    assert len(set(replication_seeds(7, 1000))) == 1000


def test_csv_determinism(tmp_path):
    sc = scenario_hetero(200)
    ests = {"sign": sign_estimator_handle(sc), "lse": lse_handle(sc)}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    r1 = monte_carlo_risk(ests, sc, 50, 3, a)
    r2 = monte_carlo_risk(ests, sc, 50, 3, b)
    assert a.read_bytes() == b.read_bytes()
    assert r1["sign"].mean == r2["sign"].mean
    with a.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 101
    # Any single row is reproducible from its seed.
    rep = rows[5]
    y = sc.draw(np.random.default_rng(int(rep[1])))
    fhat = ests[rep[2]](sc.design, y)
    assert float(rep[4]) == np.mean(np.abs(fhat - sc.truth))


def test_certified_handles_agree():
    sc = scenario_hetero(60)
    fast = monte_carlo_risk({"sign": sign_estimator_handle(sc), "lse": lse_handle(sc)}, sc, 20, 1)
    full = monte_carlo_risk({"sign": sign_estimator_handle(sc, True), "lse": lse_handle(sc, True)}, sc, 20, 1)
    for k in fast:
        assert fast[k].mean == pytest.approx(full[k].mean, rel=1e-12)


def _flaky(fail_first):
    calls = {"n": 0}

    def est(design, y):
        calls["n"] += 1
        if calls["n"] <= fail_first:
            raise RuntimeError("boom")
        return y

    return est


def test_failures_recorded_then_abort():
    sc = scenario_from_dict({"design": {"n": 5}, "truth": "identity", "noise": {"family": "gaussian_hetero", "scale": 1.0}})
    res = monte_carlo_risk({"raw": _flaky(5)}, sc, 1000, 0)["raw"]
    assert res.failures == 5 and np.isnan(res.losses[:5]).all() and not np.isnan(res.mean)
    with pytest.raises(SimulationError):
        monte_carlo_risk({"raw": _flaky(11)}, sc, 1000, 0)


def test_scenario_from_dict_variants():
    sc = scenario_from_dict({"design": {"kind": "midpoint"}, "truth": "one_plus_x", "noise": {"family": "poisson"}}, n=4)
    assert np.allclose(sc.design.points, [0.125, 0.375, 0.625, 0.875]) and np.allclose(sc.truth, 1 + sc.design.points)
    sc = scenario_from_dict({"design": {"kind": "points", "points": [0, 1, 2]}, "truth": [1, 2, 3], "noise": {"family": "qbeta", "beta": 1.0}})
    assert sc.n == 3
    assert scenario_from_dict({"scenario": "hetero"}, n=30).name == "hetero"
    with pytest.raises(StructuralError):
        scenario_from_dict({"design": {"n": 3}, "truth": "cosine"})
    with pytest.raises(ContractError):
        Scenario("bad", Design([0.0, 1.0]), np.array([2.0, 0.5]), NoiseModel("bernoulli"))


def test_mean_T_unbiased():
    sc = scenario_from_dict({"design": {"n": 6}, "truth": [0.5, 1, 2, 3, 1, 0.2], "noise": {"family": "poisson"}})
    f = np.array([1.0, 0.0, 2.0, 2.5, 1.5, 0.0])
    g = np.array([0.0, 1.0, 2.0, 3.0, 1.0, 1.0])
    out = mean_T_check(sc, f, g, 4000, 9)
    assert abs(out["z"]) <= 4


def test_sigma2_examples():
    rows = sigma2_convergence_check("bernoulli", lambda t: t, (10, 1000))
    assert rows[0]["limit"] == pytest.approx(1 / 6, abs=1e-12)
    assert rows[-1]["gap"] < 1e-3 and rows[-1]["gap"] < rows[0]["gap"]
    assert sigma2_on_design("poisson", lambda t: 1 + t, 1000) == pytest.approx(1.5, abs=1e-12)
    assert sigma2_on_design("bernoulli", lambda t: np.ones_like(t), 50) == 0
    with pytest.raises(ContractError):
        sigma2_on_design("bernoulli", lambda t: 2 * t, 10)
    with pytest.raises(StructuralError):
        sigma2_on_design("gamma", lambda t: t, 10)


def test_heteroscedasticity_stress():
    c0 = gaussian_abs_moment()
    sign_means = []
    for n in (100, 1000, 10_000):
        sc = scenario_hetero(n)
        res = monte_carlo_risk({"sign": sign_estimator_handle(sc), "lse": lse_handle(sc)}, sc, 1000, 21)
        sign_means.append(res["sign"].mean)
        assert res["lse"].mean >= 0.5 * c0 * 0.9
    assert sign_means[0] > sign_means[1] > sign_means[2]
