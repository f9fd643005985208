from fractions import Fraction

import numpy as np
import pytest
from oracles import lp_realizable, planar_lp_realizable

from signreg import ContractError, RefusalError, StructuralError
from signreg.vclab import (
    AllFunctions,
    BlockConstant,
    LevelSetFamily,
    PlanarFamily,
    RMonotonePieces,
    alternating_pattern_check,
    degree_upper_check,
    linear_space_degree,
    observed_vc_dimension,
    piecewise_degree_bound,
    planar_realizable_subsets,
    planar_witness,
    r_monotone_det,
    random_piecewise_baseline,
    random_planar_baseline,
    realizable_subsets,
    realize_pattern,
    single_index_bound,
    single_index_degree_check,
    tuple_pattern_realizable,
)


def test_r_monotone_det_examples():
    assert r_monotone_det([3, 5], [1, 4]) == 3
    assert r_monotone_det([0, 1, 2], [0, 1, 4]) == 2
    assert r_monotone_det([0, 1, 2, 3], [1, 2, 5, 10]) == 0  # quadratic, r = 3
    assert r_monotone_det([0, 1, 2, 3], [0, 1, 8, 27]) > 0  # cube is 3-monotone
    with pytest.raises(StructuralError):
        r_monotone_det([0, 0], [1, 2])


def test_r_monotone_det_matches_float_determinant(rng):
    for _ in range(30):
        r = int(rng.integers(1, 5))
        pts = sorted(rng.choice(40, r + 1, replace=False) / 4)
        vals = rng.integers(-9, 10, r + 1)
        mat = np.array([[p**j for j in range(r)] + [v] for p, v in zip(pts, vals)], dtype=float)
        assert float(r_monotone_det(pts, vals)) == pytest.approx(np.linalg.det(mat), rel=1e-8, abs=1e-8)


def test_rays_example():
    fam = LevelSetFamily((1, 2, 3), (0, 0, 0), RMonotonePieces(1, 1, (1,)))
    assert realizable_subsets(fam).subsets() == {frozenset(), frozenset({2}), frozenset({1, 2}), frozenset({0, 1, 2})}
    assert observed_vc_dimension(realizable_subsets(fam)) == 1


def test_all_functions_and_blocks():
    fam = realizable_subsets(LevelSetFamily(range(5), [0] * 5, AllFunctions()))
    assert len(fam) == 32 and observed_vc_dimension(fam) == 5
    blocks = ((0, 2), (2, 3), (3, 5))
    bc = realizable_subsets(LevelSetFamily(range(5), [1, 1, 0, 2, 2], BlockConstant(blocks)))
    assert len(bc) == 8
    for s in bc.subsets():
        assert all(set(range(a, b)) <= s or not set(range(a, b)) & s for a, b in blocks)
    assert observed_vc_dimension(bc) == 3
    with pytest.raises(ContractError):
        LevelSetFamily(range(3), [0, 1, 0], BlockConstant(((0, 3),)))


def test_family_validation():
    with pytest.raises(ContractError):
        LevelSetFamily((0, 1, 2), (2, 1, 0), RMonotonePieces(1, 1, (1,)))
    with pytest.raises(StructuralError):
        LevelSetFamily((0, 0, 2), (0, 1, 2), RMonotonePieces(1, 1, (1,)))
    with pytest.raises(RefusalError):
        RMonotonePieces(3, 1)
    with pytest.raises(RefusalError):
        realizable_subsets(LevelSetFamily(range(21), [0] * 21, AllFunctions()))


@pytest.mark.parametrize("r,k,directions", [(1, 1, (1,)), (1, 1, (1, -1)), (1, 2, (1, -1)), (2, 1, (1, -1)), (2, 2, (1, -1))])
@pytest.mark.parametrize("direction", ["above", "below"])
def test_realizable_matches_lp_oracle(r, k, directions, direction):
    rng = np.random.default_rng(r * 100 + k * 10 + len(directions))
    gen = RMonotonePieces(r, k, directions)
    for _ in range(3):
        pts = sorted(Fraction(int(v), 2) for v in rng.choice(30, 6, replace=False))
        fam = random_piecewise_baseline(gen, pts, int(rng.integers(1, 3)), rng, direction)
        got = {int(m) for m in realizable_subsets(fam).masks}
        assert got == lp_realizable(fam.base_points, fam.fbar, r, k, directions, direction == "above")
        for m in sorted(got)[:: max(1, len(got) // 8)]:
            assert realize_pattern(fam, m) is not None
        missing = sorted(set(range(64)) - got)
        if missing:
            assert realize_pattern(fam, missing[0]) is None


def test_dual_family():
    rng = np.random.default_rng(7)
    gen = RMonotonePieces(2, 2)
    fam = random_piecewise_baseline(gen, list(range(7)), 2, rng, "above")
    below = LevelSetFamily(fam.base_points, fam.fbar, gen, "below")
    assert realizable_subsets(below).subsets() == realizable_subsets(below.dual()).subsets()
    assert below.dual().direction == "above"


def test_generator_enlargement_is_monotone():
    rng = np.random.default_rng(3)
    pts = list(range(8))
    fam1 = random_piecewise_baseline(RMonotonePieces(1, 1), pts, 1, rng)
    small = realizable_subsets(fam1).subsets()
    big = realizable_subsets(LevelSetFamily(fam1.base_points, fam1.fbar, RMonotonePieces(1, 2))).subsets()
    biggest = realizable_subsets(LevelSetFamily(fam1.base_points, fam1.fbar, AllFunctions())).subsets()
    assert small <= big <= biggest


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_alternating_patterns_unrealizable(r):
    out = alternating_pattern_check(r, trials=10, seed=r)
    assert out["holds"]
    assert out["blocked_up"] == [out["alternating_up"]]
    assert out["blocked_down"] == [out["alternating_down"]]


def test_tuple_pattern_examples():
    # r = 1: f(1) >= f(0) forbids f(0) > 0 >= f(1).
    assert not tuple_pattern_realizable([0, 1], [True, False])
    assert tuple_pattern_realizable([0, 1], [False, True])
    assert not tuple_pattern_realizable([0, 1], [False, True], increasing=False)


def test_degree_bounds():
    assert piecewise_degree_bound(1, 1, 1) == 2
    assert piecewise_degree_bound(2, 1, 1) == 3
    assert piecewise_degree_bound(1, 3, 2) == 7
    assert linear_space_degree(3) == 4
    assert single_index_bound(2, 3) == 9
    with pytest.raises(StructuralError):
        piecewise_degree_bound(0, 1, 1)


def test_shattered_certificate_has_witnesses():
    fam = LevelSetFamily(range(4), [0] * 4, RMonotonePieces(1, 1, (1, -1)))
    cert = degree_upper_check(fam, 1)
    assert cert.shattered and not cert.certified
    assert len(cert.witness_patterns) == 4
    ok = degree_upper_check(fam, 2)
    assert ok.certified and ok.observed_dimension == 2
    d = ok.to_dict()
    assert d["certified"] and d["base_size"] == 4


@pytest.mark.parametrize("r,k,K", [(1, 1, 1), (1, 1, 3), (1, 2, 2), (2, 1, 2), (2, 2, 1)])
def test_piecewise_degree_bound_holds(r, k, K):
    rng = np.random.default_rng(r + 10 * k + 100 * K)
    gen = RMonotonePieces(r, k)
    for _ in range(3):
        fam = random_piecewise_baseline(gen, list(range(10)), K, rng, str(rng.choice(["above", "below"])))
        assert degree_upper_check(fam, piecewise_degree_bound(r, k, K)).certified


# Planar single-index families


@pytest.mark.parametrize("direction", ["above", "below"])
def test_planar_matches_lp_oracle(direction):
    rng = np.random.default_rng(11 if direction == "above" else 12)
    for K in (1, 2):
        fam = random_planar_baseline(5, K, rng, direction)
        got = {int(m) for m in planar_realizable_subsets(fam).masks}
        assert got == planar_lp_realizable(fam)
        for m in sorted(got)[:5]:
            assert planar_witness(fam, m) is not None


def test_planar_examples():
    square = ((0, 0), (1, 0), (0, 1), (1, 1))
    fam = PlanarFamily(square, (1, 0), (), (0,))
    # Half-planes cannot produce the diagonal split of a square.
    assert 0b1001 not in planar_realizable_subsets(fam)
    assert single_index_degree_check(fam).certified
    line = PlanarFamily(((0, 0), (1, 1), (2, 2), (3, 3)), (1, 0), (), (0,))
    assert observed_vc_dimension(planar_realizable_subsets(line)) == 2
    with pytest.raises(RefusalError):
        planar_realizable_subsets(PlanarFamily(tuple((i, i * i) for i in range(13)), (1, 0), (), (0,)))
    with pytest.raises(StructuralError):
        PlanarFamily(square, (0, 0), (), (0,))


@pytest.mark.parametrize("K", [1, 2, 3])
def test_planar_degree_bound_holds(K):
    rng = np.random.default_rng(K)
    for _ in range(3):
        fam = random_planar_baseline(9, K, rng, str(rng.choice(["above", "below"])))
        assert single_index_degree_check(fam).certified
