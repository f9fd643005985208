import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from signreg import ContractError, Design, StructuralError
from signreg.approx import (
    Modulus,
    block_mean_approx,
    block_mean_certificate,
    block_sizes,
    interpolant_error_bounds,
    k_linear_interpolation,
    linear_index,
    mean_abs_deviation,
    measure_error,
    modulus_from_design,
    piecewise_constant_approx,
    variation_index,
)
from signreg.battery import DESIGN_KINDS, FUNCTIONS, make_design

SLACK = 1e-4
finite = st.floats(-100, 100, allow_subnormal=False)


def test_mean_abs_deviation_examples():
    assert mean_abs_deviation([0, 1]) == 0.5
    assert mean_abs_deviation([4, 4, 4]) == 0
    assert mean_abs_deviation([0, 0, 0, 3]) == 1.125


@given(st.lists(finite, min_size=1, max_size=40))
def test_mean_abs_deviation_half_range(v):
    assert mean_abs_deviation(v) <= (max(v) - min(v)) / 2 * (1 + 1e-12) + 1e-12


def test_block_mean_examples():
    ap = block_mean_approx([1, 2, 3, 4], 2)
    assert list(ap.values) == [1.5, 1.5, 3.5, 3.5]
    assert np.mean(np.abs(np.array([1, 2, 3, 4]) - ap.values)) == 0.5
    assert block_mean_certificate([1, 2, 3, 4], 2) == 1.125
    v = [0, 1, 5, 9]
    assert list(block_mean_approx(v, 4).values) == v
    assert list(block_mean_approx(v, 10).values) == v
    assert list(block_mean_approx([2, 2, 2], 2).values) == [2, 2, 2]
    with pytest.raises(ContractError):
        block_mean_approx([0, 2, 1], 2)


@given(st.integers(1, 60), st.integers(1, 70))
def test_block_sizes(n, K):
    sizes = block_sizes(n, K)
    assert sum(sizes) == n and len(sizes) == min(n, K)
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes)


@given(st.lists(finite, min_size=1, max_size=40), st.integers(1, 12), st.booleans())
def test_block_mean_certificate_and_shape(v, K, decreasing):
    v = np.sort(v)[::-1] if decreasing else np.sort(v)
    ap = block_mean_approx(v, K).values
    d = np.diff(ap)
    assert np.all(d <= 1e-12 * (1 + np.abs(ap[1:]))) if decreasing else np.all(d >= -1e-12 * (1 + np.abs(ap[1:])))
    assert np.mean(np.abs(v - ap)) <= block_mean_certificate(v, K) + 1e-9


def test_piecewise_constant_examples():
    x = np.linspace(0, 1, 8)
    r = piecewise_constant_approx(x, [(0, 8)], 3.0)
    assert r.measured <= r.certificate
    assert r.n_pieces <= r.max_pieces == 4
    flat = np.array([1.0, 1.0, 1.0, 5.0, 5.0])
    r = piecewise_constant_approx(flat, [(0, 3), (3, 5)], 1.0)
    assert r.measured == 0 and r.n_pieces <= 2
    r = piecewise_constant_approx(x, [(0, 8)], 100.0)
    assert r.measured == 0
    with pytest.raises(ContractError):
        piecewise_constant_approx([0, 2, 1], [(0, 3)], 1.0)
    with pytest.raises(StructuralError):
        piecewise_constant_approx([0, 1, 2], [(0, 2)], 1.0)


@given(st.lists(finite, min_size=2, max_size=40), st.integers(1, 39), st.floats(0.1, 20))
def test_piecewise_constant_properties(v, cut, gamma):
    n = len(v)
    cut = min(cut, n - 1)
    v = np.concatenate([np.sort(v[:cut]), -np.sort(v[cut:])])
    r = piecewise_constant_approx(v, [(0, cut), (cut, n)], gamma)
    assert r.measured <= r.certificate * (1 + 1e-9) + 1e-9
    assert r.n_pieces <= r.max_pieces
    assert r.report.j_variation <= r.report.total_variation * (1 + 1e-12) + 1e-12


def test_linear_index_examples():
    assert linear_index(lambda t: 2 * t + 1, 0, 1).gamma == pytest.approx(0.0, abs=1e-6)
    rep = linear_index(lambda t: t * t, 0, 1, 0.0, 2.0)
    assert rep.gamma == 0.75
    spike = lambda t: (1 - 1e10 * t) if t <= 1e-10 else 0.0
    assert linear_index(spike, 0, 1, -1e10, 0.0).gamma == pytest.approx(1 - 1e-10 / 2, abs=1e-15)
    assert linear_index(math.sqrt, 0, 1, math.inf, 0.5).gamma == pytest.approx(1 - 0.5 * (0.5 + 0.0))
    assert linear_index(lambda t: 3.0, 0, 1).gamma == 0
    with pytest.raises(StructuralError):
        linear_index(math.sqrt, 1, 1)


def test_variation_index_examples():
    d = Design.equispaced(8)
    assert variation_index(lambda t: 3 * t, [0, 0.5, 1], d, [(3, 3), (3, 3)]).W == 0
    single = variation_index(lambda t: t * t, [0, 1], Design(np.linspace(0, 1, 9)), [(0.0, 2.0)])
    assert single.W == pytest.approx(1.0 * 0.75)
    # Two halves, each with V_J = 1 and Gamma_J = 1: W = (2 (1/2)^(1/3))^3 = 4 = Hoelder bound.
    def steps(t):
        if t < 0.5:
            return 2 - 1e12 * t if t <= 1e-12 else 1.0
        return 1 - 1e12 * (t - 0.5) if t <= 0.5 + 1e-12 else 0.0

    rep = variation_index(steps, [0, 0.5, 1], Design([0.1, 0.2, 0.6, 0.7]), [(-1e12, 0.0), (-1e12, 0.0)])
    assert rep.W == pytest.approx(rep.holder_bound * (1 - 5e-13) ** 2, rel=1e-9)
    # Equality case; cube roots round in the last bits.
    assert rep.W <= rep.holder_bound * (1 + 1e-12)


@given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=6), st.integers(0, 10**6))
def test_variation_index_below_holder(slopes, seed):
    rng = np.random.default_rng(seed)
    cum = np.concatenate([[0.0], np.cumsum(slopes)])
    knots = np.linspace(0, 1, len(cum))
    f = lambda t: float(np.interp(t, knots, cum) + 0.3 * t * t)
    bps = np.linspace(0, 1, 4)
    rep = variation_index(f, bps, Design(np.sort(rng.uniform(0, 1, 25)), (0.0, 1.0)))
    assert rep.W <= rep.holder_bound * (1 + 1e-12) + 1e-15


def test_modulus_shapes():
    m = Modulus.affine(0.1, 2.0, 0.5, 4.0)
    assert m(4.0) == pytest.approx(2.1)
    val, _ = quad(lambda t: (m(t) - m.w0) / t, 0, 1.7, epsabs=1e-12)
    assert m.psi(1.7) == pytest.approx(val, rel=1e-8)
    tab = Modulus.tabulated([0, 1, 2], [0.1, 0.6, 0.8])
    assert tab(1.5) == pytest.approx(0.7)
    val, _ = quad(lambda t: (tab(t) - tab.w0) / t, 0, 1.5, points=[1.0], epsabs=1e-12)
    assert tab.psi(1.5) == pytest.approx(val, rel=1e-8)
    with pytest.raises(ContractError):
        Modulus.tabulated([0, 1, 2], [0, 1, 3])
    with pytest.raises(ContractError):
        Modulus.tabulated([0, 1, 2], [0, 1, 0.5])


def _dominates(mod, design, a, b):
    """Every closed interval [x_i, x_j] has empirical mass at most w(x_j - x_i)."""
    x = design.points
    x = x[(x >= a) & (x <= b)]
    n = design.n
    for i in range(len(x)):
        for j in range(i, len(x)):
            mass = np.sum((design.points >= x[i]) & (design.points <= x[j])) / n
            if mass > mod(x[j] - x[i]) + 1e-12:
                return False
    return True


def test_modulus_from_design_examples():
    n = 20
    eq = Design.equispaced(n)
    m = modulus_from_design(eq, 0.0, 1.0)
    assert m.w0 == 1 / n and m.alpha == 1 and m(0.3) == pytest.approx(1 / n + 0.3)
    one = modulus_from_design(Design([0.5], (0.0, 1.0)), 0.0, 1.0)
    assert one.w0 == 1.0
    quadratic = Design((np.arange(1, n + 1) / n) ** 2, (0.0, 1.0))
    fitted = modulus_from_design(quadratic, 0.0, 1.0)
    assert fitted.alpha == pytest.approx(0.5, abs=0.1)
    assert _dominates(fitted, quadratic, 0.0, 1.0)
    gen = modulus_from_design(quadratic, 0.0, 1.0, generator=(1.0, 0.5))
    assert gen.w0 == 1 / n and gen.alpha == 0.5


@pytest.mark.parametrize("kind", DESIGN_KINDS)
def test_fitted_moduli_dominate(kind):
    d = make_design(kind, 40, seed=5)
    assert _dominates(modulus_from_design(d, 0.0, 1.0), d, 0.0, 1.0)


def test_k_linear_interpolation_examples():
    r = k_linear_interpolation(lambda t: t * t, 0.0, 1.0, 2, "uniform", "i", df_right=lambda t: 2 * t, df_left=lambda t: 2 * t)
    assert r.certificate == 0.125
    assert r.measured == pytest.approx(1 / 24, rel=1e-9)
    assert list(r.knots) == [0.0, 0.5, 1.0]
    lin = k_linear_interpolation(lambda t: 3 * t - 1, 0.0, 1.0, 3, "uniform", "ii")
    assert lin.measured == pytest.approx(0.0, abs=1e-12)
    w0 = 0.01
    sq = k_linear_interpolation(math.sqrt, 0.0, 1.0, 3, "uniform", "ii", modulus=Modulus.affine(w0, 1.0, 1.0, 1.0))
    # Without supplied derivatives the one-sided derivatives come from finite differences.
    gamma = linear_index(math.sqrt, 0.0, 1.0).gamma
    assert sq.certificates["linear_index"] == pytest.approx(1.0 * (w0 + gamma / 9), rel=1e-6)
    assert sq.measured <= sq.certificate
    assert sq.n_pieces == 6
    with pytest.raises(StructuralError):
        k_linear_interpolation(math.sqrt, 0.0, 1.0, 0)
    with pytest.raises(ContractError):
        k_linear_interpolation(lambda t: math.sin(6 * t), 0.0, 1.0, 2)
    with pytest.raises(ContractError):
        k_linear_interpolation(math.sqrt, 0.0, 1.0, 2, mode="i", df_right=lambda t: math.inf if t == 0 else 0.5 / math.sqrt(t))


def test_interpolant_error_bound_examples():
    cb = interpolant_error_bounds(lambda t: 2 * t, 0.0, 1.0)
    assert cb.R3 == 0 and cb.measured == pytest.approx(0.0, abs=1e-14)
    cb = interpolant_error_bounds(lambda t: t * t, 0.0, 1.0, df_right=lambda t: 2 * t, df_left=lambda t: 2 * t)
    assert cb.R1 == 0.5 and cb.measured == pytest.approx(1 / 6, rel=1e-10)
    cb = interpolant_error_bounds(math.sqrt, 0.0, 1.0, df_right=lambda t: math.inf if t == 0 else 0.5 / math.sqrt(t), df_left=lambda t: 0.5 / math.sqrt(t))
    # +inf right derivative branch: |f'_l(b) - Delta| (b - a) w((b - a) / 2) with w(u) = u.
    assert cb.R3 == pytest.approx(0.5 * 1.0 * 0.5)
    assert cb.measured <= cb.best
    with pytest.raises(StructuralError):
        interpolant_error_bounds(math.sqrt, 1.0, 1.0)


def test_measure_error_design():
    d = Design([0.0, 0.5, 1.0])
    assert measure_error(lambda t: t * t, lambda t: t, 0.0, 1.0, d) == pytest.approx(0.25 / 3)
    with pytest.raises(StructuralError):
        measure_error(math.sqrt, math.sqrt, 0.0, 1.0, "lebesgue")


@given(st.sampled_from(sorted(FUNCTIONS)), st.floats(0.0, 0.6), st.floats(0.2, 0.4), st.integers(1, 6))
def test_interpolation_certificate_on_subintervals(name, a, width, K):
    f = FUNCTIONS[name]
    b = a + width
    for mode in ("i", "ii"):
        try:
            r = k_linear_interpolation(f, a, b, K, "uniform", mode)
        except ContractError:
            continue
        assert r.measured <= r.certificate + SLACK
        assert len(r.knots) - 1 == (K if mode == "i" else 2 * K)
        assert np.all(np.diff(r.knots) > 0)
        assert r.knots[0] == a and r.knots[-1] == b
