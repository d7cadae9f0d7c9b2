import warnings

import pytest

from flagforms.charpoly import ChernPoly, schur, segre_polys
from flagforms.combinat import complete_sequence
from flagforms.gysin import (
    epsilon_for_rank,
    grassmann_c1c2_pushforward,
    oracle_calibration_sign,
    pushforward_dp,
    pushforward_oracle,
    pushforward_oracle_symmetric,
    schur_via_flag,
)
from flagforms.rootcalc import RootPoly, block_symmetrize, expand_expression


def c(r, j):
    return ChernPoly.gen(r, j)


def mono(r, exps):
    return RootPoly(r, {tuple(exps): 1})


def test_dp_complete_flag_rank2():
    rho = complete_sequence(2)
    assert pushforward_dp(mono(2, (0, 2)), rho) == -c(2, 1)  # s_1
    assert pushforward_dp(mono(2, (1, 1)), rho).is_zero()
    assert pushforward_dp(mono(2, (0, 1)), rho) == ChernPoly.one(2)
    assert pushforward_dp(mono(2, (1, 0)), rho) == -ChernPoly.one(2)


def test_dp_degree_bookkeeping():
    rho = complete_sequence(3)
    low = pushforward_dp(mono(3, (1, 0, 0)), rho)
    assert low.is_zero()  # degree < relative dimension
    out = pushforward_dp(mono(3, (1, 2, 3)), rho)
    assert out.is_zero() or out.degree() == 6 - 3


def test_dp_rank4_identity():
    rho = (0, 1, 4)
    F = expand_expression("c1(Q1)^2*c2(Q1)^2", rho)
    assert pushforward_dp(F, rho) == c(4, 1) ** 3 + 2 * c(4, 1) * c(4, 2) - c(4, 3)


def test_oracle_examples_rank2():
    rho = complete_sequence(2)
    assert pushforward_oracle(mono(2, (0, 1)), rho) == ChernPoly.one(2)
    assert pushforward_oracle(mono(2, (0, 3)), rho) == c(2, 1) ** 2 - c(2, 2)  # s_2
    assert pushforward_oracle(mono(2, (0, 0)), rho).is_zero()  # degree < d


def test_oracle_calibration_sign_is_unit():
    for rho in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (0, 1, 2, 3), (0, 2, 4)]:
        assert oracle_calibration_sign(rho) in (1, -1)


def test_oracle_warns_and_symmetrizes_on_partial_flags():
    rho = (0, 1, 3)
    p = mono(3, (3, 0, 0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = pushforward_oracle(p, rho)
    assert any("block-symmetric" in str(w.message) for w in caught)
    sym = block_symmetrize(p, rho)
    assert out == pushforward_oracle_symmetric(sym, rho)
    assert out == pushforward_dp(sym, rho)


def test_oracle_rejects_large_rank():
    rho = tuple(range(8))
    with pytest.raises(ValueError):
        pushforward_oracle(RootPoly.one(7), rho)


def test_oracle_equals_dp_complete_rank3_sample():
    rho = complete_sequence(3)
    for exps in [(0, 1, 2), (0, 0, 3), (1, 1, 4), (2, 2, 2), (0, 2, 4)]:
        F = mono(3, exps)
        assert pushforward_oracle(F, rho) == pushforward_dp(F, rho)


def test_segre_reproduction_over_hyperplane_bundle():
    # push of c_1(O(1))^{r-1+k} over the bundle of hyperplanes gives the
    # signed Segre polynomial of degree k
    r = 3
    rho = (0, r - 1, r)
    segre = segre_polys(r, 4)
    # O(1) on hyperplanes is the quotient U_2/U_1 of rank 1 carrying the
    # root block {1}: c_1 = -xi_1
    for k in range(0, 4):
        F = expand_expression(f"c1(U2/U1)^{r - 1 + k}", rho)
        pushed = pushforward_dp(F, rho)
        expect = segre[k] * ((-1) ** k)
        assert pushed == expect, f"k={k}: {pushed} vs {expect}"


def test_projection_compatibility_segre_case():
    # the same signed Segre forms arise from the complete flag (through the
    # column partitions (1,...,1)) and from the hyperplane bundle, so the
    # two flag types agree on this family up to the recorded global sign
    r = 3
    rho_hyp = (0, r - 1, r)
    for k in range(0, 4):
        sigma = (1,) * k
        via_flag, report = schur_via_flag(sigma, r)
        F = expand_expression(f"c1(U2/U1)^{r - 1 + k}", rho_hyp)
        via_hyperplane = pushforward_dp(F, rho_hyp)
        assert via_hyperplane == schur(sigma, r)
        assert via_flag == via_hyperplane * report["epsilon"]


@pytest.mark.parametrize("r,expected", [(2, -1), (3, -1), (4, 1)])
def test_epsilon_is_constant_and_matches(r, expected):
    assert epsilon_for_rank(r, max_weight=3) == expected


def test_schur_via_flag_values():
    for r in (2, 3):
        eps = epsilon_for_rank(r, max_weight=2)
        for sigma in [(1,), (1, 1), (2,)]:
            pushed, report = schur_via_flag(sigma, r)
            assert report["epsilon"] == eps
            assert pushed == schur(sigma, r) * eps


def test_schur_via_flag_rejects_bad_partition():
    with pytest.raises(ValueError):
        schur_via_flag((3,), 2)


def test_grassmann_pushforward_builtin_cases():
    cases = {
        (2, 3, 2): c(4, 1) ** 3 - c(4, 3),
        (2, 4, 2): c(4, 1) ** 4 - 3 * c(4, 1) * c(4, 3) + 2 * c(4, 4),
        (1, 2, 2): c(4, 1) ** 3 + 2 * c(4, 1) * c(4, 2) - c(4, 3),
    }
    for (s, alpha, beta), expected in cases.items():
        pushed, vec = grassmann_c1c2_pushforward(4, 4, s, alpha, beta)
        assert pushed == expected
        assert all(coeff > 0 for _, coeff in vec.items())


def test_grassmann_pushforward_constraints():
    with pytest.raises(ValueError):
        grassmann_c1c2_pushforward(4, 4, 2, 3, 3)  # beta > 2
    with pytest.raises(ValueError):
        grassmann_c1c2_pushforward(4, 4, 2, 0, 1)  # alpha + 2 beta < s(r-s)
    with pytest.raises(ValueError):
        grassmann_c1c2_pushforward(4, 4, 2, 9, 0)  # above n + s(r-s)
    with pytest.raises(ValueError):
        grassmann_c1c2_pushforward(4, 4, 4, 1, 1)  # s out of range


def test_oracle_reproduces_rank4_identity_end_to_end():
    # the same push that the determinantal rule computes for the built-in
    # rank-4 identity, through the independent symmetrizer route
    rho = (0, 1, 4)
    F = expand_expression("c1(Q1)^2*c2(Q1)^2", rho)
    expected = c(4, 1) ** 3 + 2 * c(4, 1) * c(4, 2) - c(4, 3)
    assert pushforward_oracle(F, rho) == expected


def test_oracle_equals_dp_rank5_spot_checks():
    # the symmetrizer stays exact beyond the exhaustive rank-4 sweep
    from flagforms.combinat import DimensionSequence
    from flagforms.gysin import pushforward_oracle_symmetric

    rho = DimensionSequence((0, 2, 5))
    for exps in [(6, 0, 0, 0, 0), (2, 2, 2, 1, 0), (0, 0, 3, 2, 2)]:
        F = block_symmetrize(mono(5, exps), rho)
        assert pushforward_oracle_symmetric(F, rho) == pushforward_dp(F, rho)
    rho5 = complete_sequence(5)
    for exps in [(0, 1, 2, 3, 4), (0, 0, 2, 4, 5), (1, 1, 2, 3, 4)]:
        F = mono(5, exps)
        assert pushforward_oracle_symmetric(F, rho5) == pushforward_dp(F, rho5)


def test_oracle_linear():
    rho = complete_sequence(3)
    a = mono(3, (0, 1, 2))
    b = mono(3, (0, 0, 3))
    combo = a * 3 + b * (-2)
    lhs = pushforward_oracle(combo, rho)
    rhs = pushforward_oracle(a, rho) * 3 - pushforward_oracle(b, rho) * 2
    assert lhs == rhs
