import numpy as np
import pytest

from flagforms.combinat import DimensionSequence, complete_sequence
from flagforms.flagnum import (
    ChartPoint,
    FlagChart,
    SamplerConfig,
    chart_for,
    curvature_at,
    curvature_center,
    frames_eps,
    gram,
    metric_universal,
    pushforward_numeric,
    splitting_u,
    theta_intrinsic,
    verify_main_theorem,
)
from flagforms.formlab import CurvatureTensor, ExtForm, griffiths_sample
from flagforms.rootcalc import UniversalBundleSpec


def random_tensor(n, r, seed):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, n, r, r)) + 1j * rng.standard_normal((n, n, r, r))
    return CurvatureTensor(0.5 * (raw + np.conj(raw.transpose(1, 0, 3, 2))))


def test_chart_layout():
    chart = FlagChart((0, 1, 3), 2)
    assert chart.d == 2
    assert chart.pairs == [(1, 3), (2, 3)]
    assert chart.space.names == ("z1", "z2", "zeta_1_3", "zeta_2_3")
    assert chart.base_mask() == 0b11
    assert chart.vertical_mask() == 0b1100


def test_frames_center_is_identity():
    chart = FlagChart((0, 1, 2, 3), 1)
    V = frames_eps(chart, ChartPoint.center(chart))
    assert np.allclose(V, np.eye(3))


def test_frames_projective_line_example():
    chart = FlagChart((0, 1, 2), 1)
    V = frames_eps(chart, ChartPoint([0.25 + 1j]))
    assert V[0, 1] == 0.25 + 1j
    assert np.allclose(np.diag(V), 1.0)


def test_frames_complete_rank3_structure():
    chart = FlagChart(complete_sequence(3), 1)
    p = ChartPoint([1.0, 2.0, 3.0])  # pairs (1,2), (1,3), (2,3)
    V = frames_eps(chart, p)
    assert V[0, 1] == 1.0 and V[0, 2] == 2.0 and V[1, 2] == 3.0
    assert V[1, 0] == 0 and V[2, 0] == 0 and V[2, 1] == 0


def test_gram_center_identity_and_cross_term():
    chart = FlagChart((0, 1, 2), 1)
    assert np.allclose(gram(chart, ChartPoint.center(chart)), np.eye(2))
    z = 0.3 - 0.7j
    G = gram(chart, ChartPoint([z]))
    assert np.isclose(G[0, 1], np.conj(z))  # <eps_1, eps_2> carries conj(zeta)
    assert np.isclose(G[1, 1], 1 + abs(z) ** 2)


def test_gram_tautological_block():
    rho = DimensionSequence((0, 2, 4))
    chart = FlagChart(rho, 1)
    rng = np.random.default_rng(3)
    zeta = rng.standard_normal(chart.d) + 1j * rng.standard_normal(chart.d)
    G = gram(chart, ChartPoint(zeta))
    V = frames_eps(chart, ChartPoint(zeta))
    # entries (alpha, beta) in the sub-bundle block: delta + sum_l z_la conj(z_lb)
    for a in (2, 3):
        for b in (2, 3):
            expect = (1.0 if a == b else 0.0) + sum(
                V[lam, a] * np.conj(V[lam, b]) for lam in range(2)
            )
            assert np.isclose(G[a, b], expect)


def test_metric_universal_blocks_and_errors():
    rho = DimensionSequence((0, 1, 3))
    C = random_tensor(2, 3, 1)
    chart = FlagChart(rho, 2)
    p = ChartPoint([0.2, -0.4j])
    # full filtration at z = 0 recovers the Gram matrix
    spec_full = UniversalBundleSpec(rho, 0, 2)
    H = metric_universal(spec_full, C, None, p)
    assert np.allclose(H, gram(chart, p))
    # sub-bundle metric is the Gram sub-block
    spec_sub = UniversalBundleSpec(rho, 0, 1)
    H1 = metric_universal(spec_sub, C, None, p)
    assert np.allclose(H1, gram(chart, p)[2:, 2:])
    # large z makes the synthetic ambient metric indefinite
    with pytest.raises(ValueError):
        metric_universal(spec_sub, C, 100.0 * np.ones(2), p)


def test_splitting_first_order():
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C = CurvatureTensor.zero(1, 3)
    chart = chart_for(spec, 1)
    zeta = np.array([0.01 + 0.005j, -0.02j])
    u = splitting_u(spec, C, None, ChartPoint(zeta))
    # u[alpha, mu] ~ -conj(zeta_(alpha,mu)) for the admissible pairs
    assert abs(u[0, 0] + np.conj(zeta[chart.pair_index(1, 3)])) < 1e-3 * abs(zeta[0])
    assert abs(u[1, 0] + np.conj(zeta[chart.pair_index(2, 3)])) < 1e-3 * abs(zeta[1])


def test_splitting_requires_proper_quotient():
    rho = DimensionSequence((0, 1, 3))
    with pytest.raises(ValueError):
        splitting_u(UniversalBundleSpec(rho, 0, 1), CurvatureTensor.zero(1, 3), None, ChartPoint([0, 0]))


def test_curvature_center_flat_examples():
    C0 = CurvatureTensor.zero(1, 2)
    rho = DimensionSequence((0, 1, 2))
    sub = curvature_center(UniversalBundleSpec(rho, 0, 1), C0)
    chart = chart_for(UniversalBundleSpec(rho, 0, 1), 1)
    g = 1 << chart.zeta_gen_index(1, 2)
    assert sub.entries[0][0].coeff(g, g) == -1.0
    quot = curvature_center(UniversalBundleSpec(rho, 1, 2), C0)
    assert quot.entries[0][0].coeff(g, g) == 1.0


def test_curvature_center_trace_telescoping_exact():
    # successive quotients: vertical parts cancel pairwise, leaving the
    # ambient trace
    rho = complete_sequence(3)
    C = random_tensor(2, 3, 7)
    chart = chart_for(UniversalBundleSpec(rho, 0, 1), 2)
    total = ExtForm.zero(chart.space)
    for j in range(1, 4):
        spec = UniversalBundleSpec(rho, j - 1, j)
        total = total + curvature_center(spec, C).trace()
    # the vertical terms cancel pairwise with exact +-1 coefficients
    vert = chart.vertical_mask()
    assert all((s | t) & vert == 0 for s, t in total.terms)
    expect = ExtForm.zero(chart.space)
    for a in range(3):
        for j in range(2):
            for k in range(2):
                v = C.coeffs[j, k, a, a]
                if v != 0:
                    expect = expect + ExtForm(chart.space, {(1 << j, 1 << k): v})
    assert total.allclose(expect, 1e-15)


def test_curvature_center_hermitian():
    C = random_tensor(2, 3, 11)
    for rho, ell, l in [((0, 1, 3), 0, 1), ((0, 1, 3), 1, 2), ((0, 1, 2, 3), 1, 3)]:
        fm = curvature_center(UniversalBundleSpec(DimensionSequence(rho), ell, l), C)
        fm.check_hermitian(1e-12)


def test_curvature_at_center_matches_formula():
    for seed, (rho, ell, l) in enumerate(
        [((0, 1, 2), 0, 1), ((0, 1, 3), 1, 2), ((0, 2, 4), 1, 2), ((0, 1, 2, 3), 1, 2)]
    ):
        spec = UniversalBundleSpec(DimensionSequence(rho), ell, l)
        C = random_tensor(2, spec.rho.r, seed)
        chart = chart_for(spec, 2)
        exact = curvature_center(spec, C)
        fd = curvature_at(spec, C, ChartPoint.center(chart))
        diff = max(
            (exact.entries[b][a] - fd.entries[b][a]).norm()
            for a in range(spec.rank)
            for b in range(spec.rank)
        )
        scale = max(exact.norm(), 1.0)
        assert diff <= 1e-6 * scale


def _flag_orthonormalize(V):
    """Unitary basis spanning the same trailing-column flags."""
    Q, R = np.linalg.qr(V[:, ::-1])
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return Q[:, ::-1]


def test_theta_intrinsic_identity_and_decomposition():
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C = random_tensor(2, 3, 13)
    theta = theta_intrinsic(spec, np.eye(3), C)
    center = curvature_center(spec, C)
    # lo..hi block of the ambient index range carries the bundle
    for b in range(spec.rank):
        for a in range(spec.rank):
            resid = center.entries[b][a] - theta.entries[b][a]
            for (s, t), v in resid.terms.items():
                assert (s | t) & 0b11 == 0, "difference must be purely vertical"


def test_theta_intrinsic_block_unitary_invariance():
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C = random_tensor(1, 3, 17)
    rng = np.random.default_rng(5)
    raw = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    V = np.linalg.qr(raw)[0]
    ref = theta_intrinsic(spec, V, C)
    for _ in range(5):
        U = np.zeros((3, 3), dtype=complex)
        # frame blocks for rho = (0,1,3): columns {0,1} and {2}
        u2 = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
        U[:2, :2] = u2
        U[2, 2] = np.exp(1j * rng.uniform(0, 2 * np.pi))
        other = theta_intrinsic(spec, V @ U, C)
        for b in range(3):
            for a in range(3):
                assert (ref.entries[b][a] - other.entries[b][a]).norm() <= 1e-12


def test_theta_intrinsic_rejects_nonunitary():
    rho = DimensionSequence((0, 1, 2))
    spec = UniversalBundleSpec(rho, 0, 1)
    with pytest.raises(ValueError):
        theta_intrinsic(spec, 2.0 * np.eye(2), CurvatureTensor.zero(1, 2))


def test_fd_horizontal_block_matches_intrinsic_tensor():
    # at a fiber point away from the center, the dz/dzbar block of the
    # finite-difference curvature, rewritten in the unitary frame spanning
    # the same flag, equals the intrinsic horizontal tensor
    for rho, ell, l in [((0, 1, 2), 1, 2), ((0, 1, 3), 1, 2), ((0, 1, 3), 0, 1)]:
        rho = DimensionSequence(rho)
        spec = UniversalBundleSpec(rho, ell, l)
        r = rho.r
        C = random_tensor(2, r, 23)
        chart = chart_for(spec, 2)
        rng = np.random.default_rng(29)
        zeta = 0.6 * (rng.standard_normal(chart.d) + 1j * rng.standard_normal(chart.d))
        p = ChartPoint(zeta)
        fd = curvature_at(spec, C, p)
        eps = frames_eps(chart, p)
        V = _flag_orthonormalize(eps)
        lo = r - rho[l]
        hi = r - rho[ell]
        block = slice(lo, hi)
        T = (np.conj(V.T) @ eps)[block, block]
        Tinv = np.linalg.inv(T)
        for j in range(2):
            for k in range(2):
                E = np.array(
                    [
                        [fd.entries[b][a].coeff((j,), (k,)) for a in range(spec.rank)]
                        for b in range(spec.rank)
                    ]
                )
                got = T @ E @ Tinv
                want = (np.conj(V.T) @ C.coeffs[j, k].T @ V)[block, block]
                assert np.abs(got - want).max() <= 1e-6 * max(1.0, np.abs(want).max())


def test_curvature_at_mixed_blocks_small():
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C = random_tensor(2, 3, 31)
    chart = chart_for(spec, 2)
    p = ChartPoint(np.array([0.5 - 0.1j, 0.3j]))
    fm = curvature_at(spec, C, p)
    base = chart.base_mask()
    worst = 0.0
    for b in range(spec.rank):
        for a in range(spec.rank):
            for (s, t), v in fm.entries[b][a].terms.items():
                if bool(s & base) != bool(t & base):
                    worst = max(worst, abs(v))
    assert worst <= 1e-6 * fm.norm()


def test_pushforward_numeric_fs_calibration_small():
    chart = FlagChart((0, 1, 2), 1)
    C0 = CurvatureTensor.zero(1, 2)
    est = pushforward_numeric(
        chart, "0 - c1(U1)", C0, SamplerConfig(num_samples=20000, seed=11)
    )
    val = complex(est.form.coeff(0, 0))
    assert abs(val - 1.0) < 1e-6
    assert est.n_nonfinite == 0


def test_pushforward_numeric_low_degree_is_exact_zero():
    chart = FlagChart((0, 1, 3), 2)
    C = griffiths_sample(2, 3, terms=2, seed=1)
    est = pushforward_numeric(chart, "c1(E)", C, SamplerConfig(num_samples=100, seed=3))
    assert est.form.terms == {}
    assert est.n_samples == 0


def test_pushforward_numeric_top_fiber_class_any_tensor():
    # push of the top power of the line-bundle class is 1 whatever the
    # ambient curvature
    chart = FlagChart((0, 1, 3), 1)
    C = griffiths_sample(1, 3, terms=3, seed=5)
    est = pushforward_numeric(
        chart, "c1(U1)^2", C, SamplerConfig(num_samples=30000, seed=4)
    )
    val = complex(est.form.coeff(0, 0))
    se = est.stderr[(0, 0)]
    assert abs(val - 1.0) <= max(4 * se, 2e-4)


def test_pushforward_numeric_is_reproducible():
    chart = FlagChart((0, 1, 2), 2)
    C = griffiths_sample(2, 2, terms=2, seed=6)
    cfg = SamplerConfig(num_samples=5000, seed=42)
    a = pushforward_numeric(chart, "c1(U2/U1)^3", C, cfg)
    b = pushforward_numeric(chart, "c1(U2/U1)^3", C, cfg)
    assert a.form.terms == b.form.terms
    assert a.stderr == b.stderr


def test_pushforward_numeric_linear_in_expression():
    chart = FlagChart((0, 1, 2), 1)
    C = griffiths_sample(1, 2, terms=2, seed=8)
    cfg = SamplerConfig(num_samples=20000, seed=9)
    single = pushforward_numeric(chart, "c1(U1)", C, cfg)
    double = pushforward_numeric(chart, "2*c1(U1)", C, cfg)
    val1 = complex(single.form.coeff(0, 0))
    val2 = complex(double.form.coeff(0, 0))
    assert abs(val2 - 2 * val1) <= 1e-10 * max(1.0, abs(val1))


def test_pushforward_rejects_inhomogeneous():
    chart = FlagChart((0, 1, 2), 1)
    C0 = CurvatureTensor.zero(1, 2)
    with pytest.raises(ValueError):
        pushforward_numeric(
            chart, "c1(U1) + c1(U1)^2", C0, SamplerConfig(num_samples=10, seed=0)
        )


def test_sampler_config_from_dict_and_proposal_guard():
    chart = FlagChart((0, 1, 2, 3), 1)
    C0 = CurvatureTensor.zero(1, 3)
    with pytest.raises(ValueError):
        pushforward_numeric(
            chart,
            "c1(U1)^3",
            C0,
            {"num_samples": 10, "seed": 0, "proposal": "projective"},
        )
    est = pushforward_numeric(
        chart, "c1(U1)^3", C0, {"num_samples": 256, "seed": 0}
    )
    assert est.n_requested == 256


def test_verify_main_theorem_smoke():
    chart = FlagChart((0, 1, 2), 2)
    C = griffiths_sample(2, 2, terms=3, seed=14)
    rep = verify_main_theorem(
        chart, "c1(U2/U1)^3", C, SamplerConfig(num_samples=30000, seed=12)
    )
    assert rep.residual_rel <= 0.05
    assert rep.consistent_within <= 4.0
    data = rep.to_json()
    assert data["n_samples"] == 30000


def test_verify_main_theorem_flat_tensor_zero_both_sides():
    chart = FlagChart((0, 1, 2), 2)
    C0 = CurvatureTensor.zero(2, 2)
    rep = verify_main_theorem(
        chart, "c1(U2/U1)^3", C0, SamplerConfig(num_samples=2000, seed=13)
    )
    assert rep.truth.norm() <= 1e-14
    assert rep.residual_abs <= 1e-9


def test_pushforward_numeric_trivial_fiber_is_identity():
    # a one-step dimension sequence has a point fiber: the push-forward of
    # c_1 of the pulled-back bundle is the base first Chern form itself
    chart = FlagChart((0, 2), 2)
    assert chart.d == 0
    C = griffiths_sample(2, 2, terms=2, seed=19)
    est = pushforward_numeric(chart, "c1(E)", C, SamplerConfig(num_samples=64, seed=2))
    from flagforms.formlab import TWO_PI, base_curvature_matrix

    truth = base_curvature_matrix(C).trace() * (1j / TWO_PI)
    assert est.form.allclose(truth, 1e-9)


def test_offcenter_quotient_curvature_exact_values():
    # hand-derived curvature of the rank-2 quotient over the plane of lines
    # in C^3 at the fiber point (t, 0): with s = 1 + t^2 the only nonzero
    # fiber coefficients are
    #   entry(1,1)[dz1 ^ dz1~] = 1/s^2            entry(2,2)[dz2 ^ dz2~] = 1/s
    #   entry(1,2)[dz1 ^ dz2~] = 1/s              entry(2,1)[dz2 ^ dz1~] = 1/s^2
    # (zeta_1_3 and zeta_2_3 abbreviated to 1, 2)
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C0 = CurvatureTensor.zero(1, 3)
    chart = chart_for(spec, 1)
    t = 0.7
    s = 1 + t * t
    fm = curvature_at(spec, C0, ChartPoint([t, 0.0]))
    g1 = 1 << chart.zeta_gen_index(1, 3)
    g2 = 1 << chart.zeta_gen_index(2, 3)
    expected = {
        (0, 0, g1, g1): 1 / s**2,
        (1, 1, g2, g2): 1 / s,
        (0, 1, g1, g2): 1 / s,
        (1, 0, g2, g1): 1 / s**2,
    }
    for (b, a, gs, gt), want in expected.items():
        got = fm.entries[b][a].coeff(gs, gt)
        assert abs(got - want) <= 1e-9, (b, a, got, want)
    # everything else in the fiber block vanishes
    for b in range(2):
        for a in range(2):
            for (gs, gt), v in fm.entries[b][a].terms.items():
                if (b, a, gs, gt) not in expected:
                    assert abs(v) <= 1e-9


def test_curvature_at_rejects_unsuitable_step():
    # rounding noise scales like eps/h^2, so a far-too-small step drives the
    # Hermitian defect past the guard (central stencils keep the truncation
    # error itself Hermitian, so oversized steps surface as inaccuracy
    # against the exact center formula instead)
    rho = DimensionSequence((0, 1, 3))
    spec = UniversalBundleSpec(rho, 1, 2)
    C = random_tensor(2, 3, 41)
    with pytest.raises(ArithmeticError):
        curvature_at(spec, C, ChartPoint([0.4, -0.2j]), fd_step=1e-6)


def test_pushforward_rejects_degree_above_base():
    chart = FlagChart((0, 1, 2), 1)
    C0 = CurvatureTensor.zero(1, 2)
    with pytest.raises(ValueError):
        pushforward_numeric(
            chart, "c1(U1)^4", C0, SamplerConfig(num_samples=10, seed=0)
        )


def test_pushforward_numeric_stderr_scales_like_inverse_sqrt_n():
    chart = FlagChart((0, 1, 2), 2)
    C = griffiths_sample(2, 2, terms=3, seed=14)
    key = (0b11, 0b11)
    ses = []
    for n_samples in (4000, 16000, 64000):
        est = pushforward_numeric(
            chart, "c1(U2/U1)^3", C, SamplerConfig(num_samples=n_samples, seed=21)
        )
        ses.append(est.stderr[key])
    # quadrupling the sample count should halve the reported error
    assert 1.6 <= ses[0] / ses[1] <= 2.4
    assert 1.6 <= ses[1] / ses[2] <= 2.4


def test_pushforward_numeric_fiber_volume_ignores_base_curvature():
    # the push of the fiber volume class is 1 whatever the ambient
    # curvature; the scalar extraction must not pick up horizontal terms
    chart = FlagChart((0, 1, 2), 2)
    C = griffiths_sample(2, 2, terms=4, seed=33)
    est = pushforward_numeric(
        chart, "0 - c1(U1)", C, SamplerConfig(num_samples=20000, seed=5)
    )
    assert abs(complex(est.form.coeff(0, 0)) - 1.0) < 1e-6
    for (s, t), v in est.form.terms.items():
        if (s, t) != (0, 0):
            assert abs(v) < 1e-12
