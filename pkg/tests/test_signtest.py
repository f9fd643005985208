import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from signreg import ContractError, Design, RefusalError, ell_s_loss
from signreg.classes import (
    FixedPartitionConstant,
    LinearSpan1D,
    MonotoneEither,
    Nondecreasing,
    Nonincreasing,
    PiecewiseMonotone,
)
from signreg.selftest import (
    SUP_CLASS_KINDS,
    random_sup_instance,
    sandwich_holds,
    sup_instance_agrees,
)
from signreg.signtest import (
    brute_force_sup_T,
    lambda_mean,
    pattern_feasible_max,
    sign_vector,
    sup_T,
    t_statistic,
)

# Multiples of 1/8 keep every sum exact in binary floating point.
eighths = st.integers(-40, 40).map(lambda k: k / 8.0)
triples = st.integers(1, 20).flatmap(lambda n: st.tuples(*[st.lists(eighths, min_size=n, max_size=n) for _ in range(4)]))


def test_sign_vector_examples():
    assert list(sign_vector([1, 0, 2], [0, 0, 3])) == [1, 0, -1]
    assert list(sign_vector([4, 5], [4, 5])) == [0, 0]
    assert list(sign_vector([1e-12, 0], [0, 0], tol=1e-9)) == [0, 0]


def test_t_statistic_examples():
    assert t_statistic([0, 4], [1, 2], [0, 0]) == -1
    assert t_statistic([3, 1], [2, 2], [2, 2]) == 0


def test_lambda_mean_examples():
    assert lambda_mean([0, 0], [1, 1], [0, 0]) == 2
    assert lambda_mean([1, 2], [1, 2], [5, -5]) == 0


@given(triples)
def test_t_identity(t):
    y, f, g, _ = (np.array(v) for v in t)
    assert t_statistic(y, f, g) + t_statistic(y, g, f) == np.sum(np.abs(f - g))
    assert t_statistic(y, f, g) + t_statistic(y, g, f) == pytest.approx(len(y) * ell_s_loss(f, g, 1), rel=1e-12)


@given(triples)
def test_shift_and_scale(t):
    y, f, g, c = (np.array(v) for v in t)
    shift = c[0]
    assert t_statistic(y + shift, f + shift, g + shift) == t_statistic(y, f, g)
    lam = 4.0
    assert t_statistic(lam * y, lam * f, lam * g) == lam * t_statistic(y, f, g)
    assert np.array_equal(sign_vector(lam * f, lam * g), sign_vector(f, g))


@given(triples)
def test_sandwich_property(t):
    fstar, f, g, _ = t
    assert sandwich_holds(fstar, f, g)


def test_pattern_feasible_max_examples():
    d3 = Design([0.0, 1.0, 2.0])
    res = pattern_feasible_max(MonotoneEither(), [1, 2, 3], np.array([-1.0, 2.0, -3.0]), d3)
    assert res.value == 6
    d2 = Design([0.0, 1.0])
    res = pattern_feasible_max(Nondecreasing(), [1, 1], np.array([-2.0, 3.0]), d2)
    assert res.value == 1
    assert list(res.pattern) == [1, 1]
    assert pattern_feasible_max(PiecewiseMonotone(2), [3, 1, 2], np.zeros(3), d3).value == 0


def test_sup_examples_fixed_partition():
    d = Design([0.0, 1.0, 2.0])
    cls = FixedPartitionConstant(((0, 2), (2, 3)))
    y = [1, 3, 7]
    assert sup_T(cls, d, y, [2, 2, 7]).value == 0
    assert sup_T(cls, d, y, [0, 0, 7]).value == 4
    one = FixedPartitionConstant(((0, 3),))
    assert brute_force_sup_T(one, d, [1, 5, -3], [2.5, 2.5, 2.5]).value == pytest.approx(3 * abs(2.5 - 1.0))


def test_sup_example_linear_span():
    cls = LinearSpan1D((1.0, -1.0))
    assert sup_T(cls, Design([0.0, 1.0]), [2, 0], [1, -1]).value == 0


def test_sup_rejects_nonmember():
    with pytest.raises(ContractError):
        sup_T(Nondecreasing(), Design([0.0, 1.0]), [0, 0], [2, 1])


def test_brute_force_cap():
    d = Design(np.arange(13.0))
    with pytest.raises(RefusalError):
        brute_force_sup_T(Nondecreasing(), d, np.zeros(13), np.arange(13.0))


@pytest.mark.parametrize("kind", SUP_CLASS_KINDS)
def test_sup_matches_brute_force(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(150):
        assert sup_instance_agrees(*random_sup_instance(kind, rng))


def test_general_monotone_scan_agrees(rng):
    # The forward-scan route for arbitrary f against the block-rule route.
    for _ in range(200):
        n = int(rng.integers(1, 9))
        d = Design(np.sort(rng.integers(0, n, n)).astype(float))
        groups = d.groups()
        v = np.sort(rng.integers(-3, 4, len(groups)) * 0.5)
        f = np.concatenate([[v[i]] * (b - a) for i, (a, b) in enumerate(groups)])
        y = rng.integers(-4, 5, n) * 0.25
        for cls in (Nondecreasing(), MonotoneEither()):
            fast = sup_T(cls, d, y, f)
            general = sup_T(cls, d, y, f, method="general")
            assert fast.value == general.value
            assert cls.contains(general.witness, d)


def test_sup_dominates_sampled_members(rng):
    d = Design(np.arange(7.0))
    for _ in range(100):
        y = rng.normal(size=7)
        f = np.sort(rng.normal(size=7))
        best = sup_T(Nondecreasing(), d, y, f).value
        assert best >= 0
        for _ in range(10):
            g = np.sort(rng.normal(size=7))
            assert best >= t_statistic(y, f, g) - 1e-12


def test_nonincreasing_oracle(rng):
    d = Design(np.arange(6.0))
    for _ in range(100):
        y = rng.integers(-3, 4, 6) * 0.5
        f = -np.sort(rng.integers(-3, 4, 6) * 0.5)
        assert sup_T(Nonincreasing(), d, y, f).value == brute_force_sup_T(Nonincreasing(), d, y, f).value


def test_unbiasedness_monte_carlo():
    from signreg.sim import mean_T_check, scenario_from_dict

    sc = scenario_from_dict({"design": {"n": 20}, "truth": "square", "noise": {"family": "gaussian_hetero", "scale": 2.0}})
    x = sc.design.points
    out = mean_T_check(sc, x, np.cos(7 * x), reps=10_000, seed=3)
    assert abs(out["z"]) <= 4
