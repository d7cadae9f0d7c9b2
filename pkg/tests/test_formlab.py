import json

import numpy as np
import pytest

from flagforms.formlab import (
    CurvatureTensor,
    ExtForm,
    FormMatrix,
    GeneratorSpace,
    TWO_PI,
    base_curvature_matrix,
    chern_forms,
    griffiths_check,
    griffiths_sample,
    positivity_check,
    positivity_values,
    wedge,
)


@pytest.fixture
def space():
    return GeneratorSpace.base(3)


def test_wedge_nilpotent(space):
    dz1 = ExtForm.d(space, "z1")
    assert wedge(dz1, dz1).terms == {}


def test_wedge_anticommute(space):
    dz1 = ExtForm.d(space, "z1")
    dz1b = ExtForm.dbar(space, "z1")
    assert (wedge(dz1, dz1b) + wedge(dz1b, dz1)).terms == {}


def test_even_degree_forms_commute(space):
    a = ExtForm.d(space, "z1") * ExtForm.dbar(space, "z1")
    b = ExtForm.d(space, "z2") * ExtForm.dbar(space, "z2")
    assert (a * b - b * a).terms == {}


def test_wedge_graded_sign(space):
    # a ^ b = (-1)^{deg a deg b} b ^ a for odd-degree forms
    a = ExtForm.d(space, "z1")
    b = ExtForm.dbar(space, "z2")
    assert (a * b + b * a).terms == {}


def test_wedge_rejects_mismatched_spaces(space):
    other = GeneratorSpace.base(2)
    with pytest.raises(ValueError):
        wedge(ExtForm.d(space, "z1"), ExtForm.d(other, "z1"))


def test_conjugation_is_involution(space):
    gamma = (
        ExtForm.d(space, "z1") * ExtForm.dbar(space, "z2") * (2 + 3j)
        + ExtForm.d(space, "z2") * ExtForm.dbar(space, "z2") * 1j
    )
    assert gamma.conj().conj() == gamma


def test_rank1_chern_form(space):
    theta = ExtForm.d(space, "z1") * ExtForm.dbar(space, "z1") * 2.0
    M = FormMatrix(space, [[theta]])
    cf = chern_forms(M)
    assert cf[0] == ExtForm.one(space)
    assert cf[1].allclose(theta * (1j / TWO_PI), 1e-15)


def test_chern_forms_real_and_bidegree():
    C = griffiths_sample(3, 3, terms=4, seed=2)
    cf = chern_forms(base_curvature_matrix(C))
    for s in range(1, 4):
        assert cf[s].is_real(1e-13)
        assert cf[s].bidegree() == (s, s)


def test_c1_is_normalized_trace():
    C = griffiths_sample(2, 3, terms=2, seed=3)
    M = base_curvature_matrix(C)
    cf = chern_forms(M)
    assert cf[1].allclose(M.trace() * (1j / TWO_PI), 1e-14)


def test_whitney_for_block_diagonal():
    Ca = griffiths_sample(3, 2, terms=3, seed=5)
    Cb = griffiths_sample(3, 3, terms=2, seed=7)
    big = np.zeros((3, 3, 5, 5), dtype=complex)
    big[:, :, :2, :2] = Ca.coeffs
    big[:, :, 2:, 2:] = Cb.coeffs
    cf = chern_forms(base_curvature_matrix(CurvatureTensor(big)))
    ca = chern_forms(base_curvature_matrix(Ca))
    cb = chern_forms(base_curvature_matrix(Cb))
    for deg in range(0, 6):
        expect = ExtForm.zero(ca[0].space)
        for i in range(0, min(deg, 2) + 1):
            j = deg - i
            if j <= 3:
                expect = expect + ca[i] * cb[j]
        assert cf[deg].allclose(expect, 1e-12)


def test_splitting_principle_diagonal():
    # diagonal (i/2pi) M = diag(x_1..x_r) gives elementary symmetric forms
    space = GeneratorSpace.base(3)
    xs = [
        ExtForm.d(space, f"z{j}") * ExtForm.dbar(space, f"z{j}") * (-2j * np.pi * w)
        for j, w in ((1, 1.0), (2, 2.0), (3, -1.0))
    ]
    M = FormMatrix(
        space,
        [[xs[i] if i == j else ExtForm.zero(space) for j in range(3)] for i in range(3)],
    )
    cf = chern_forms(M)
    x = [xi * (1j / TWO_PI) for xi in xs]
    assert cf[1].allclose(x[0] + x[1] + x[2], 1e-13)
    assert cf[2].allclose(x[0] * x[1] + x[0] * x[2] + x[1] * x[2], 1e-13)
    assert cf[3].allclose(x[0] * x[1] * x[2], 1e-13)


def test_curvature_tensor_hermitian_validation():
    bad = np.zeros((1, 1, 2, 2), dtype=complex)
    bad[0, 0, 0, 1] = 1.0  # partner (0,0,1,0) left at zero
    with pytest.raises(ValueError):
        CurvatureTensor(bad)


def test_curvature_tensor_json_completion():
    data = {
        "n": 1,
        "r": 2,
        "entries": [
            {"j": 1, "k": 1, "alpha": 1, "beta": 2, "re": 1.0, "im": 0.5},
            {"j": 1, "k": 1, "alpha": 1, "beta": 1, "re": 2.0, "im": 0.0},
        ],
    }
    C = CurvatureTensor.from_json(data)
    assert C.coeffs[0, 0, 1, 0] == 1.0 - 0.5j
    roundtrip = CurvatureTensor.from_json(json.loads(json.dumps(C.to_json())))
    assert np.allclose(roundtrip.coeffs, C.coeffs)


def test_griffiths_sample_passes_check():
    for seed in (0, 1, 2):
        C = griffiths_sample(3, 2, terms=3, seed=seed)
        assert griffiths_check(C, samples=2000, seed=seed) >= -1e-12 * max(C.scale(), 1)


def test_griffiths_flat_and_negative():
    C0 = CurvatureTensor.zero(2, 2)
    assert griffiths_check(C0, samples=100, seed=0) == 0.0
    C = griffiths_sample(2, 2, terms=2, seed=9)
    assert griffiths_check(CurvatureTensor(-C.coeffs), samples=500, seed=1) < 0


def test_griffiths_sum_stays_semipositive():
    a = griffiths_sample(2, 3, terms=2, seed=11)
    b = griffiths_sample(2, 3, terms=2, seed=12)
    assert griffiths_check(a + b, samples=1000, seed=3) >= -1e-12


def test_positivity_calibration_form():
    space = GeneratorSpace.base(2)
    omega = ExtForm.zero(space)
    for j in (1, 2):
        omega = omega + ExtForm.d(space, f"z{j}") * ExtForm.dbar(space, f"z{j}") * 1j
    assert positivity_check(omega**2, samples=300, seed=4) > 0


def test_positivity_c1_of_griffiths_sample_across_seeds():
    for seed in (0, 5, 17):
        C = griffiths_sample(3, 2, terms=3, seed=seed)
        cf = chern_forms(base_curvature_matrix(C))
        assert positivity_check(cf[1], samples=2000, seed=seed) >= -1e-12


def test_positivity_negative_form():
    space = GeneratorSpace.base(2)
    neg = ExtForm.d(space, "z1") * ExtForm.dbar(space, "z1") * (-1j)
    assert positivity_check(neg, samples=200, seed=5) < 0


def test_positivity_of_product_of_positive_11_forms():
    C = griffiths_sample(3, 2, terms=4, seed=21)
    cf = chern_forms(base_curvature_matrix(C))
    vals = positivity_values(cf[1] * cf[1], samples=2000, seed=6)
    assert vals.min() >= -1e-10 * max(1.0, np.abs(vals).max())


def test_positivity_rejects_unbalanced_bidegree():
    space = GeneratorSpace.base(2)
    with pytest.raises(ValueError):
        positivity_check(ExtForm.d(space, "z1"), samples=10, seed=0)


def test_positivity_scalar_case():
    space = GeneratorSpace.base(2)
    assert positivity_check(ExtForm.scalar(space, 2.5), samples=10, seed=0) == 2.5


def test_form_matrix_hermitian_check():
    C = griffiths_sample(2, 2, terms=2, seed=8)
    M = base_curvature_matrix(C)
    assert M.hermitian_defect() <= 1e-13 * max(1.0, M.norm())
    M.check_hermitian()


def test_wedge_graded_commutativity_all_degrees():
    # a ^ b = (-1)^{deg a deg b} b ^ a across pure degrees on 3 generators
    space = GeneratorSpace.base(3)
    forms = {
        1: ExtForm.d(space, "z1") + 2j * ExtForm.dbar(space, "z2"),
        2: ExtForm.d(space, "z1") * ExtForm.dbar(space, "z3")
        + ExtForm.d(space, "z2") * ExtForm.d(space, "z3") * (1 - 1j),
        3: ExtForm.d(space, "z1") * ExtForm.d(space, "z2") * ExtForm.dbar(space, "z1"),
    }
    for p, a in forms.items():
        for q, b in forms.items():
            lhs = a * b
            rhs = b * a * ((-1) ** (p * q))
            assert (lhs - rhs).norm() <= 1e-14


def test_wedge_associative():
    space = GeneratorSpace.base(3)
    a = ExtForm.d(space, "z1") + ExtForm.dbar(space, "z2") * 3j
    b = ExtForm.d(space, "z2") - ExtForm.dbar(space, "z3")
    c = ExtForm.d(space, "z3") * ExtForm.dbar(space, "z1") + ExtForm.one(space)
    assert ((a * b) * c - a * (b * c)).norm() <= 1e-14
