"""Flag-bundle charts, induced metrics of universal bundles, pointwise
curvature, and Monte Carlo fiber integration.

All pointwise work happens over the chart center of the base (z = 0); the
ambient metric is the synthetic truncation delta - sum c[j,k,a,b] z_j
conj(z_k), exactly quadratic in z, so z-derivatives of metrics are
analytic while fiber-direction derivatives use fourth-order central
finite differences.

Monte Carlo samples are drawn in fixed-size chunks with per-chunk
counter-keyed random streams, so an estimate is bit-reproducible for a
given seed no matter how the chunks would be distributed over workers.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprs
from .combinat import admissible_pairs, as_dimension_sequence
from .formlab import (
    ExtForm,
    FormMatrix,
    GeneratorSpace,
    TWO_PI,
    _merge_sign,
    base_curvature_matrix,
    chern_forms,
    wedge_det,
)
from .gysin import pushforward_dp
from .rootcalc import bundles_in_expression, expand_expression

#: default fourth-order finite-difference step in the fiber coordinates
FD_STEP = 1e-3
#: relative tolerance on the pre-symmetrization Hermitian defect of the
#: finite-difference curvature before the step is declared too large
FD_HERMITIAN_TOL = 1e-6
#: Monte Carlo chunk size (fixed so results never depend on a worker split)
MC_CHUNK = 65536


class FlagChart:
    """Chart of a flag bundle over the center point of the base.

    Coordinates are z_1..z_n on the base and one zeta per admissible index
    pair, in lexicographic pair order; the generator space carries both
    families, base first.
    """

    __slots__ = ("rho", "n", "pairs", "d", "space", "_pair_index")

    def __init__(self, rho, n):
        self.rho = as_dimension_sequence(rho)
        self.n = int(n)
        self.pairs = admissible_pairs(self.rho)
        self.d = len(self.pairs)
        names = [f"z{j}" for j in range(1, self.n + 1)]
        names += [f"zeta_{lam}_{mu}" for lam, mu in self.pairs]
        self.space = GeneratorSpace(names)
        self._pair_index = {p: i for i, p in enumerate(self.pairs)}

    @property
    def r(self):
        return self.rho.r

    def pair_index(self, lam, mu):
        return self._pair_index[(lam, mu)]

    def zeta_gen_index(self, lam, mu):
        """Index of the zeta_(lam,mu) generator inside the chart space."""
        return self.n + self._pair_index[(lam, mu)]

    def base_mask(self):
        return (1 << self.n) - 1

    def vertical_mask(self):
        return ((1 << self.d) - 1) << self.n

    def __repr__(self):
        return f"FlagChart(rho={self.rho.rho}, n={self.n}, d={self.d})"


@dataclass
class ChartPoint:
    """A point of the center fiber, given by its zeta coordinates."""

    zeta: np.ndarray

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=complex)
        if not np.all(np.isfinite(self.zeta)):
            raise ValueError("chart point has non-finite coordinates")

    @classmethod
    def center(cls, chart):
        return cls(np.zeros(chart.d, dtype=complex))


_CHART_CACHE = {}


def chart_for(spec, n):
    key = (spec.rho.rho, n)
    if key not in _CHART_CACHE:
        _CHART_CACHE[key] = FlagChart(spec.rho, n)
    return _CHART_CACHE[key]


# -- frames and metrics ------------------------------------------------------


def _frames_batch(chart, zeta):
    """Frame coefficient matrices: column alpha holds epsilon_alpha in the
    ambient basis, i.e. the identity plus zeta_(lam,mu) at (lam-1, mu-1)."""
    zeta = np.asarray(zeta, dtype=complex)
    r = chart.r
    shape = zeta.shape[:-1]
    V = np.zeros(shape + (r, r), dtype=complex)
    V[...] = np.eye(r)
    for idx, (lam, mu) in enumerate(chart.pairs):
        V[..., lam - 1, mu - 1] = zeta[..., idx]
    return V


def frames_eps(chart, p):
    """Frame coefficients at a chart point (unit diagonal, zeta entries at
    the admissible positions)."""
    zeta = p.zeta if isinstance(p, ChartPoint) else np.asarray(p, dtype=complex)
    return _frames_batch(chart, zeta)


def _ambient_metric(C, z):
    """Synthetic ambient metric delta - sum c[j,k,a,b] z_j conj(z_k)."""
    z = np.asarray(z, dtype=complex)
    He = np.zeros(z.shape[:-1] + (C.r, C.r), dtype=complex)
    He[...] = np.eye(C.r)
    if np.any(z != 0):
        He = He - np.einsum("...j,...k,jkab->...ab", z, np.conj(z), C.coeffs)
    return He


def gram(chart, p, C=None, z=None):
    """Gram matrix G[a,b] = <eps_a, eps_b> of the frame at a chart point;
    the metric of the ambient basis is flat unless (C, z) are supplied."""
    V = frames_eps(chart, p)
    if C is None or z is None or not np.any(np.asarray(z)):
        return np.einsum("...la,...lb->...ab", V, np.conj(V))
    He = _ambient_metric(C, np.asarray(z, dtype=complex))
    return np.einsum("...la,...lm,...mb->...ab", V, He, np.conj(V))


def _bundle_slices(spec):
    """0-based frame index lists: the quotient block and the sub block."""
    r = spec.rho.r
    lo = r - spec.rho[spec.l]
    mid = r - spec.rho[spec.ell]
    return list(range(lo, mid)), list(range(mid, r))


def _metric_from_gram(G, q_idx, s_idx):
    """Sub-bundle metric is a Gram sub-block; a proper quotient metric is
    the Schur complement of the sub block."""
    if not s_idx:
        return G[..., q_idx, :][..., :, q_idx]
    A = G[..., q_idx, :][..., :, q_idx]
    B = G[..., q_idx, :][..., :, s_idx]
    D = G[..., s_idx, :][..., :, s_idx]
    X = np.linalg.solve(D, np.conj(np.swapaxes(B, -1, -2)))
    return A - B @ X


def _metric_batch(spec, C, z, zeta):
    chart = chart_for(spec, C.n)
    G = gram(chart, zeta, C, z)
    q_idx, s_idx = _bundle_slices(spec)
    return _metric_from_gram(G, q_idx, s_idx)


def metric_universal(spec, C, z, p):
    """Induced metric of the universal bundle at base offset z and fiber
    point p; raises when the synthetic ambient metric stops being positive
    definite (z too large)."""
    z = np.zeros(C.n, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    He = _ambient_metric(C, z)
    try:
        np.linalg.cholesky(He)
    except np.linalg.LinAlgError:
        raise ValueError(
            "synthetic ambient metric is not positive definite at this z"
        ) from None
    zeta = p.zeta if isinstance(p, ChartPoint) else np.asarray(p, dtype=complex)
    return _metric_batch(spec, C, z, zeta)


def splitting_u(spec, C, z, p):
    """Coefficients u[alpha, mu] of the smooth orthogonal splitting of the
    quotient projection: the lift of the alpha-th quotient frame vector is
    eps_alpha + sum_mu u[alpha, mu] eps_mu over the sub-bundle frame.  To
    first order at the chart center, u[alpha, mu] = -conj(zeta_(alpha,mu))."""
    if spec.ell == 0:
        raise ValueError("splitting coefficients need a proper quotient (ell >= 1)")
    chart = chart_for(spec, C.n)
    z = np.zeros(C.n, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    G = gram(chart, p, C, z)
    q_idx, s_idx = _bundle_slices(spec)
    B = G[..., q_idx, :][..., :, s_idx]
    D = G[..., s_idx, :][..., :, s_idx]
    X = np.linalg.solve(D, np.conj(np.swapaxes(B, -1, -2)))
    return -np.conj(np.swapaxes(X, -1, -2))


# -- curvature ---------------------------------------------------------------

_W1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))  # f' stencil, / 12h
_W2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))  # f'', / 12h^2


def _herm_t(X):
    return np.conj(np.swapaxes(X, -1, -2))


class _MetricEvaluator:
    """Evaluates the universal-bundle metric at offsets of (z, zeta) around
    a batch of fiber points, for the finite-difference stencils.

    Steps are relative: the effective step in every fiber coordinate is
    fd_step * sqrt(1 + |zeta|^2) per sample, the scale on which the induced
    metrics vary around that point.  With an absolute step, the curvature
    coefficients (which decay like inverse powers of |zeta|) would drown in
    rounding noise exactly where the importance weights of the Monte Carlo
    integration are largest; with the relative step the finite-difference
    error stays uniformly small relative to the local curvature scale.
    """

    def __init__(self, spec, C, zeta, fd_step):
        self.spec = spec
        self.C = C
        self.chart = chart_for(spec, C.n)
        self.zeta = np.asarray(zeta, dtype=complex)
        self.q_idx, self.s_idx = _bundle_slices(spec)
        base = np.array(fd_step, dtype=float)
        scale = np.sqrt(1.0 + np.sum(np.abs(self.zeta) ** 2, axis=-1))
        self.h_zeta = [base * scale for _ in range(self.chart.d)]
        self.h_z = [base for _ in range(self.chart.n)]

    def _h(self, kind, coord):
        return self.h_zeta[coord] if kind == "v" else self.h_z[coord]

    def at(self, zeta_offsets=(), z_offsets=()):
        """Metric at zeta + sum(offsets); offsets are (coord, shift) with
        shift a scalar or per-sample array."""
        zeta = self.zeta
        if zeta_offsets:
            zeta = zeta.copy()
            for coord, shift in zeta_offsets:
                zeta[..., coord] = zeta[..., coord] + shift
        z = np.zeros(self.zeta.shape[:-1] + (self.C.n,), dtype=complex)
        for coord, shift in z_offsets:
            z[..., coord] = z[..., coord] + shift
        chart = self.chart
        V = _frames_batch(chart, zeta)
        if z_offsets:
            He = _ambient_metric(self.C, z)
            G = np.einsum("...la,...lm,...mb->...ab", V, He, np.conj(V))
        else:
            G = np.einsum("...la,...lb->...ab", V, np.conj(V))
        return _metric_from_gram(G, self.q_idx, self.s_idx)

    @staticmethod
    def _div(arr, h):
        h = np.asarray(h)
        return arr / h[..., None, None] if h.ndim else arr / h

    def d1(self, kind, coord):
        """Fourth-order Wirtinger first derivative along a zeta ('v') or
        z ('z') coordinate."""
        h = self._h(kind, coord)
        key = "zeta_offsets" if kind == "v" else "z_offsets"
        dx = self._div(
            sum(w * self.at(**{key: ((coord, m * h),)}) for m, w in _W1), 12 * h
        )
        dy = self._div(
            sum(w * self.at(**{key: ((coord, m * h * 1j),)}) for m, w in _W1),
            12 * h,
        )
        return 0.5 * (dx - 1j * dy)

    def d2_mixed(self, kind_a, coord_a, kind_b, coord_b):
        """Fourth-order mixed derivative d/d(coord_a) d/dconj(coord_b)."""
        if kind_a == kind_b and coord_a == coord_b:
            h = self._h(kind_a, coord_a)
            key = "zeta_offsets" if kind_a == "v" else "z_offsets"
            dxx = self._div(
                sum(w * self.at(**{key: ((coord_a, m * h),)}) for m, w in _W2),
                12 * h * h,
            )
            dyy = self._div(
                sum(w * self.at(**{key: ((coord_a, m * h * 1j),)}) for m, w in _W2),
                12 * h * h,
            )
            return 0.25 * (dxx + dyy)

        h_a = self._h(kind_a, coord_a)
        h_b = self._h(kind_b, coord_b)

        def offset_pair(mult_a, dir_a, mult_b, dir_b):
            za, zb = [], []
            entry_a = (coord_a, mult_a * h_a * dir_a)
            entry_b = (coord_b, mult_b * h_b * dir_b)
            (za if kind_a == "v" else zb).append(entry_a)
            (za if kind_b == "v" else zb).append(entry_b)
            return self.at(zeta_offsets=tuple(za), z_offsets=tuple(zb))

        def mixed(dir_a, dir_b):
            acc = 0.0
            for ma, wa in _W1:
                for mb, wb in _W1:
                    acc = acc + wa * wb * offset_pair(ma, dir_a, mb, dir_b)
            return self._div(acc, 144 * h_a * h_b)

        return 0.25 * (
            mixed(1, 1)
            + 1j * mixed(1, 1j)
            - 1j * mixed(1j, 1)
            + mixed(1j, 1j)
        )


def _z_hessian(spec, C, zeta):
    """Analytic coefficient of z_j conj(z_k) in the metric at z = 0,
    shaped (..., n, n, rk, rk)."""
    chart = chart_for(spec, C.n)
    V = _frames_batch(chart, zeta)
    Ghat = -np.einsum("...la,jklm,...mb->...jkab", V, C.coeffs, np.conj(V))
    q_idx, s_idx = _bundle_slices(spec)
    Gqq = Ghat[..., q_idx, :][..., :, q_idx]
    if not s_idx:
        return Gqq
    G0 = gram(chart, zeta)
    B0 = G0[..., q_idx, :][..., :, s_idx]
    D0 = G0[..., s_idx, :][..., :, s_idx]
    X = np.linalg.solve(D0, _herm_t(B0))  # (s, q)
    Xh = _herm_t(X)  # (q, s) = B0 D0^{-1}
    Gqs = Ghat[..., q_idx, :][..., :, s_idx]
    Gsq = Ghat[..., s_idx, :][..., :, q_idx]
    Gss = Ghat[..., s_idx, :][..., :, s_idx]
    # einsum over the trailing matrix axes, keeping (..., n, n) in place
    return (
        Gqq
        - np.einsum("...jkab,...bc->...jkac", Gqs, X)
        - np.einsum("...ab,...jkbc->...jkac", Xh, Gsq)
        + np.einsum("...ab,...jkbc,...cd->...jkad", Xh, Gss, X)
    )


def _curvature_coeffs(spec, C, zeta, fd_step=FD_STEP, include_mixed=True):
    """Coefficient arrays of the curvature at z = 0 over a batch of fiber
    points.

    Returns (coeffs, H0, H0inv): a dict keyed by generator-index pairs
    (a, b) of the chart with values shaped (..., rk, rk) -- the coefficient
    of dg_a ^ dgbar_b of the matrix-valued (1,1)-form dbar(dH H^-1), whose
    (alpha, beta) entry feeds the FormMatrix entry (beta, alpha) -- plus
    the metric and its inverse at the points (needed downstream for the
    frame-weighted Hermitian symmetrization).
    """
    chart = chart_for(spec, C.n)
    zeta = np.asarray(zeta, dtype=complex)
    ev = _MetricEvaluator(spec, C, zeta, fd_step)
    n, d = chart.n, chart.d
    H0 = ev.at()
    H0inv = np.linalg.inv(H0)

    Pv = [ev.d1("v", p) for p in range(d)]
    coeffs = {}

    # vertical block dzeta_p ^ dzetabar_q
    for p in range(d):
        for q in range(p, d):
            S = ev.d2_mixed("v", p, "v", q)
            M_pq = -(S @ H0inv) + Pv[p] @ H0inv @ _herm_t(Pv[q]) @ H0inv
            coeffs[(n + p, n + q)] = M_pq
            if q != p:
                Sqp = _herm_t(S)
                M_qp = -(Sqp @ H0inv) + Pv[q] @ H0inv @ _herm_t(Pv[p]) @ H0inv
                coeffs[(n + q, n + p)] = M_qp

    # horizontal block dz_j ^ dzbar_k (analytic: the metric is exactly
    # quadratic in z and its first z-derivatives vanish at z = 0)
    Hhat = _z_hessian(spec, C, zeta)
    for j in range(n):
        for k in range(n):
            coeffs[(j, k)] = -(Hhat[..., j, k, :, :] @ H0inv)

    # mixed blocks, honestly by finite differences in both variables
    if include_mixed:
        Pz = [ev.d1("z", j) for j in range(n)]
        for j in range(n):
            for q in range(d):
                A = ev.d2_mixed("z", j, "v", q)
                coeffs[(j, n + q)] = -(A @ H0inv) + Pz[j] @ H0inv @ _herm_t(
                    Pv[q]
                ) @ H0inv
        for p in range(d):
            for k in range(n):
                B = ev.d2_mixed("v", p, "z", k)
                coeffs[(n + p, k)] = -(B @ H0inv) + Pv[p] @ H0inv @ _herm_t(
                    Pz[k]
                ) @ H0inv
    return coeffs, H0, H0inv


def _symmetrize_coeffs(coeffs, H0, H0inv):
    """Enforce the Hermitian symmetry of a Chern curvature in a holomorphic
    frame, M[b,a] = H M[a,b]^H H^-1 (the plain conjugate-transpose relation
    holds only in frames that are unitary at the point).  Returns the
    symmetrized dict and the worst pre-symmetrization defect relative to
    the overall scale."""
    scale = max(
        (float(np.abs(v).max()) for v in coeffs.values() if v.size), default=0.0
    )
    defect = 0.0
    out = {}
    for (a, b), M_ab in coeffs.items():
        M_ba = coeffs.get((b, a))
        if M_ba is None:
            out[(a, b)] = M_ab
            continue
        partner = H0 @ _herm_t(M_ba) @ H0inv
        defect = max(defect, float(np.abs(M_ab - partner).max()))
        out[(a, b)] = 0.5 * (M_ab + partner)
    rel = defect / scale if scale > 0 else 0.0
    return out, rel


def _form_matrix_from_coeffs(chart, rank, coeffs):
    """Assemble the FormMatrix (entry (beta, alpha) collects the (alpha,
    beta) coefficient entries) from M-coefficient arrays at a single point."""
    entries = [
        [dict() for _ in range(rank)] for _ in range(rank)
    ]
    for (a, b), M in coeffs.items():
        key = (1 << a, 1 << b)
        for alpha in range(rank):
            for beta in range(rank):
                v = complex(M[alpha, beta])
                if v != 0:
                    entries[beta][alpha][key] = entries[beta][alpha].get(key, 0.0) + v
    return FormMatrix(
        chart.space,
        [[ExtForm(chart.space, entries[b][a]) for a in range(rank)] for b in range(rank)],
    )


def curvature_at(spec, C, p, fd_step=FD_STEP, with_report=False):
    """Full curvature matrix at a fiber point by finite differences on the
    induced metric (fiber directions) and the analytic z-Hessian (base
    directions); Hermiticity is symmetrized and the pre-symmetrization
    defect reported as a quality metric."""
    chart = chart_for(spec, C.n)
    zeta = p.zeta if isinstance(p, ChartPoint) else np.asarray(p, dtype=complex)
    coeffs, H0, H0inv = _curvature_coeffs(spec, C, zeta, fd_step)
    coeffs, defect = _symmetrize_coeffs(coeffs, H0, H0inv)
    if defect > FD_HERMITIAN_TOL:
        raise ArithmeticError(
            f"finite-difference curvature defect {defect:g} exceeds tolerance; "
            "the step is unsuitable for this configuration (rounding dominates)"
        )
    matrix = _form_matrix_from_coeffs(chart, spec.rank, coeffs)
    if with_report:
        return matrix, {"hermitian_defect": defect, "fd_step": fd_step}
    return matrix


def curvature_center(spec, C):
    """Exact curvature matrix at the chart center: the ambient curvature
    block, minus the sub-side vertical sum, plus the quotient-side one."""
    chart = chart_for(spec, C.n)
    r = chart.r
    rho = spec.rho
    lo = r - rho[spec.l]  # block is lo+1 .. hi (1-based)
    hi = r - rho[spec.ell]
    rank = spec.rank
    entries = []
    for b_local in range(rank):
        beta = lo + b_local + 1
        row = []
        for a_local in range(rank):
            alpha = lo + a_local + 1
            terms = {}
            for j in range(chart.n):
                for k in range(chart.n):
                    v = C.coeffs[j, k, alpha - 1, beta - 1]
                    if v != 0:
                        terms[(1 << j, 1 << k)] = v
            for lam in range(1, lo + 1):
                sa = 1 << chart.zeta_gen_index(lam, alpha)
                tb = 1 << chart.zeta_gen_index(lam, beta)
                terms[(sa, tb)] = terms.get((sa, tb), 0.0) - 1.0
            for mu in range(hi + 1, r + 1):
                sb = 1 << chart.zeta_gen_index(beta, mu)
                ta = 1 << chart.zeta_gen_index(alpha, mu)
                terms[(sb, ta)] = terms.get((sb, ta), 0.0) + 1.0
            row.append(ExtForm(chart.space, terms))
        entries.append(row)
    return FormMatrix(chart.space, entries)


def theta_intrinsic(spec, V, C):
    """Horizontal curvature tensor of the universal bundle at the flag
    spanned by the trailing column blocks of the unitary matrix V, returned
    as the full r x r matrix Pi Theta Pi in the ambient frame (Pi the
    orthogonal projector onto the bundle's column block).  Invariant under
    right multiplication of V by block-diagonal unitaries, which is exactly
    frame independence of the underlying tensor."""
    V = np.asarray(V, dtype=complex)
    r = spec.rho.r
    if V.shape != (r, r):
        raise ValueError(f"expected a {r} x {r} matrix")
    if np.abs(V @ _herm_t(V) - np.eye(r)).max() > 1e-10:
        raise ValueError("matrix is not unitary within 1e-10")
    chart = chart_for(spec, C.n)
    lo = r - spec.rho[spec.l]
    hi = r - spec.rho[spec.ell]
    P = np.zeros((r, r), dtype=complex)
    P[lo:hi, lo:hi] = np.eye(hi - lo)
    Pi = V @ P @ _herm_t(V)
    projected = {
        (j, k): Pi @ C.coeffs[j, k].T @ Pi
        for j in range(chart.n)
        for k in range(chart.n)
    }
    entries = []
    for b in range(r):
        row = []
        for a in range(r):
            terms = {}
            for (j, k), theta_jk in projected.items():
                v = theta_jk[b, a]
                if v != 0:
                    terms[(1 << j, 1 << k)] = v
            row.append(ExtForm(chart.space, terms))
        entries.append(row)
    return FormMatrix(chart.space, entries)


# -- Monte Carlo fiber integration -------------------------------------------


class _BatchForm:
    """Exterior-algebra element whose coefficients are per-sample arrays."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = terms or {}

    @classmethod
    def scalar(cls, value):
        return cls({(0, 0): value})

    def __add__(self, other):
        if not isinstance(other, _BatchForm):
            return NotImplemented
        terms = dict(self.terms)
        for key, arr in other.terms.items():
            terms[key] = terms[key] + arr if key in terms else arr
        return _BatchForm(terms)

    def __neg__(self):
        return _BatchForm({k: -v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.ndarray)):
            return _BatchForm({k: v * other for k, v in self.terms.items()})
        if not isinstance(other, _BatchForm):
            return NotImplemented
        terms = {}
        for (s1, t1), c1 in self.terms.items():
            n_t1 = t1.bit_count()
            for (s2, t2), c2 in other.terms.items():
                if s1 & s2 or t1 & t2:
                    continue
                sign = _merge_sign(s1, s2) * _merge_sign(t1, t2)
                if (n_t1 * s2.bit_count()) & 1:
                    sign = -sign
                key = (s1 | s2, t1 | t2)
                piece = c1 * c2 if sign > 0 else -(c1 * c2)
                terms[key] = terms[key] + piece if key in terms else piece
        return _BatchForm(terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        result = _BatchForm.scalar(1.0 + 0j)
        for _ in range(n):
            result = result * self
        return result


def _batch_chern_forms(chart, rank, coeffs, count):
    """Chern forms of a batched curvature, as _BatchForm elements."""
    one = _BatchForm.scalar(np.ones(count, dtype=complex))
    zero = _BatchForm({})
    scale = 1j / TWO_PI
    entry = [[zero for _ in range(rank)] for _ in range(rank)]
    for (a, b), M in coeffs.items():
        for alpha in range(rank):
            for beta in range(rank):
                col = M[..., alpha, beta]
                if np.any(col):
                    key = (1 << a, 1 << b)
                    cur = entry[beta][alpha]
                    add = _BatchForm({key: scale * col})
                    entry[beta][alpha] = cur + add
    from itertools import combinations

    out = [one]
    for s in range(1, rank + 1):
        acc = zero
        for subset in combinations(range(rank), s):
            sub = [[entry[i][j] for j in subset] for i in subset]
            acc = acc + wedge_det(sub, one, zero)
        out.append(acc)
    return out


@dataclass
class SamplerConfig:
    num_samples: int
    seed: int
    chunk: int = MC_CHUNK
    fd_step: float = FD_STEP
    proposal: str = "auto"  # "auto" | "projective" | "product"

    def to_json(self):
        return {
            "num_samples": self.num_samples,
            "seed": self.seed,
            "chunk": self.chunk,
            "fd_step": self.fd_step,
            "proposal": self.proposal,
        }


def _as_sampler(sampler):
    if isinstance(sampler, SamplerConfig):
        return sampler
    if isinstance(sampler, dict):
        return SamplerConfig(
            num_samples=int(sampler["num_samples"]),
            seed=int(sampler["seed"]),
            chunk=int(sampler.get("chunk", MC_CHUNK)),
            fd_step=float(sampler.get("fd_step", FD_STEP)),
            proposal=str(sampler.get("proposal", "auto")),
        )
    raise TypeError("sampler must be a SamplerConfig or a dict")


def _is_projective_fiber(rho):
    """Whether the fiber is a projective space in the standard affine chart
    (lines or hyperplanes), where the chart coordinates jointly carry the
    invariant Fubini-Study density."""
    return rho.m == 2 and (rho[1] == 1 or rho[1] == rho.r - 1)


def _pick_proposal(cfg, chart):
    if cfg.proposal == "auto":
        return "projective" if _is_projective_fiber(chart.rho) else "product"
    if cfg.proposal not in ("projective", "product"):
        raise ValueError(f"unknown proposal {cfg.proposal!r}")
    if cfg.proposal == "projective" and not _is_projective_fiber(chart.rho):
        raise ValueError("projective proposal needs a projective fiber")
    return cfg.proposal


def _draw_fs(rng, count, d, kind):
    """Fubini-Study style proposals built from ratios of standard complex
    Gaussians; returns (points, importance_weights).

    * "product": independent per coordinate, density
      1/(pi (1+|w|^2)^2) each.  The importance ratio against a smooth form
      on the fiber is unbounded for non-projective charts of dimension
      >= 2, so this proposal can be heavy-tailed; standard errors remain
      honest.
    * "projective": the invariant chart density d!/(pi^d (1+|zeta|^2)^{d+1})
      of projective space, sampled as u_i / u_0 with a common denominator;
      for projective fibers the importance ratio is bounded.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "projective":
            u = rng.standard_normal((count, d + 1)) + 1j * rng.standard_normal(
                (count, d + 1)
            )
            zeta = u[:, 1:] / u[:, :1]
            norm2 = np.sum(np.abs(zeta) ** 2, axis=1)
            weight = (np.pi**d / math.factorial(d)) * (1.0 + norm2) ** (d + 1)
            return zeta, weight
        u = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
        v = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
        zeta = u / v
        weight = np.prod(np.pi * (1.0 + np.abs(zeta) ** 2) ** 2, axis=1)
        return zeta, weight


@dataclass
class PushforwardEstimate:
    """Monte Carlo fiber integral with per-coefficient standard errors."""

    form: ExtForm
    stderr: dict
    n_samples: int
    n_requested: int
    n_nonfinite: int
    degree: int
    fiber_dim: int
    mixed_block_defect: float = 0.0

    def stderr_total(self):
        return math.sqrt(sum(se**2 for se in self.stderr.values()))

    def to_json(self):
        coefficients = []
        for (s, t), val in sorted(self.form.terms.items()):
            val = complex(val)
            coefficients.append(
                {
                    "holo": _mask_indices(s),
                    "anti": _mask_indices(t),
                    "re": val.real,
                    "im": val.imag,
                    "stderr": self.stderr.get((s, t), 0.0),
                }
            )
        return {
            "coefficients": coefficients,
            "n_samples": self.n_samples,
            "n_requested": self.n_requested,
            "n_nonfinite": self.n_nonfinite,
            "degree": self.degree,
            "fiber_dim": self.fiber_dim,
            "mixed_block_defect": self.mixed_block_defect,
        }


def _mask_indices(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def pushforward_numeric(chart, F_expr, C, sampler):
    """Monte Carlo fiber integral of a polynomial in the Chern forms of
    universal bundles, as a (k, k)-form on the base generators.

    Per sample, the fiber point is drawn from the product Fubini-Study
    proposal, every universal curvature in the expression is built by
    finite differences, Chern forms are wedged per the expression, the
    coefficient of each dz_J ^ dzbar_K against the canonical vertical
    volume prod_p (i/2) dzeta_p ^ dzetabar_p is extracted, importance
    weighted, and averaged.  Mixed base-fiber curvature blocks vanish
    identically at z = 0 in this metric model; they are audited by finite
    differences on the first chunk and set to zero elsewhere.
    """
    cfg = _as_sampler(sampler)
    if isinstance(F_expr, str):
        F_expr = exprs.parse(F_expr)
    rho = chart.rho
    degs = exprs.degrees(F_expr)
    if len(degs) != 1:
        raise ValueError(f"expression is not weighted-homogeneous: degrees {sorted(degs)}")
    deg = next(iter(degs))
    d = chart.d
    n = chart.n
    k = deg - d
    base_space = GeneratorSpace.base(n)
    if k < 0:
        return PushforwardEstimate(
            form=ExtForm.zero(base_space),
            stderr={},
            n_samples=0,
            n_requested=cfg.num_samples,
            n_nonfinite=0,
            degree=deg,
            fiber_dim=d,
        )
    if k > n:
        raise ValueError(f"output degree {k} exceeds base dimension {n}")
    specs = bundles_in_expression(F_expr, rho)

    from itertools import combinations

    keys = [
        (_bits_of(J), _bits_of(K))
        for J in combinations(range(n), k)
        for K in combinations(range(n), k)
    ]
    vmask = chart.vertical_mask()
    sums = {key: 0.0 + 0.0j for key in keys}
    sumsq = {key: 0.0 for key in keys}
    n_finite = 0
    n_nonfinite = 0
    mixed_defect = 0.0

    total = cfg.num_samples
    n_chunks = (total + cfg.chunk - 1) // cfg.chunk
    extract_sign = {}
    for key in keys:
        _, K = key
        kk = K.bit_count()
        extract_sign[key] = ((-2j) ** d) * ((-1.0) ** ((d * (d - 1)) // 2 + kk * d))

    proposal = _pick_proposal(cfg, chart)
    for chunk_idx in range(n_chunks):
        count = min(cfg.chunk, total - chunk_idx * cfg.chunk)
        rng = np.random.Generator(
            np.random.Philox(key=np.array([cfg.seed, chunk_idx], dtype=np.uint64))
        )
        zeta, weight = _draw_fs(rng, count, d, proposal)

        curv = {}
        for spec in specs:
            coeffs, H0, H0inv = _curvature_coeffs(
                spec, C, zeta, cfg.fd_step, include_mixed=False
            )
            coeffs, _ = _symmetrize_coeffs(coeffs, H0, H0inv)
            if chunk_idx == 0:
                audit, _, _ = _curvature_coeffs(
                    spec, C, zeta[: min(count, 64)], cfg.fd_step, include_mixed=True
                )
                scale = max(
                    (float(np.abs(v).max()) for v in audit.values()), default=1.0
                )
                worst = max(
                    (
                        float(np.abs(v).max())
                        for (a, b), v in audit.items()
                        if (a < n) != (b < n)
                    ),
                    default=0.0,
                )
                mixed_defect = max(mixed_defect, worst / max(scale, 1e-300))
            curv[spec] = _batch_chern_forms(chart, spec.rank, coeffs, count)

        def chern_atom(j, ref):
            from .rootcalc import _resolve_bundle

            spec = _resolve_bundle(ref, rho)
            return curv[spec][j]

        value = exprs.evaluate(
            F_expr,
            const=lambda q: _BatchForm.scalar(
                complex(q) * np.ones(count, dtype=complex)
            ),
            chern=chern_atom,
        )

        contrib = {}
        finite = np.isfinite(weight)
        for key in keys:
            J, K = key
            full = (J | vmask, K | vmask)
            arr = value.terms.get(full)
            if arr is None:
                contrib[key] = np.zeros(count, dtype=complex)
            else:
                contrib[key] = arr * extract_sign[key] * weight
            finite &= np.isfinite(contrib[key])
        n_bad = int(count - finite.sum())
        n_nonfinite += n_bad
        n_finite += int(finite.sum())
        for key in keys:
            vals = np.where(finite, contrib[key], 0.0)
            sums[key] += complex(vals.sum())
            sumsq[key] += float((np.abs(vals) ** 2).sum())

    if mixed_defect > 1e-6:
        raise ArithmeticError(
            f"mixed base-fiber curvature blocks do not vanish (defect {mixed_defect:g}); "
            "the pointwise model assumption is violated"
        )

    terms = {}
    stderr = {}
    for key in keys:
        if n_finite == 0:
            continue
        mean = sums[key] / n_finite
        var = max(sumsq[key] / n_finite - abs(mean) ** 2, 0.0)
        se = math.sqrt(var / n_finite)
        if mean != 0 or se != 0:
            terms[key] = mean
        stderr[key] = se
    return PushforwardEstimate(
        form=ExtForm(base_space, terms),
        stderr=stderr,
        n_samples=n_finite,
        n_requested=cfg.num_samples,
        n_nonfinite=n_nonfinite,
        degree=deg,
        fiber_dim=d,
        mixed_block_defect=mixed_defect,
    )


def _bits_of(indices):
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass
class MainTheoremReport:
    """Comparison of the Monte Carlo fiber integral against the symbolic
    push-forward evaluated in the base Chern forms."""

    estimate: PushforwardEstimate
    truth: ExtForm
    residual_abs: float
    residual_rel: float
    stderr_total: float
    per_coefficient: list = field(default_factory=list)

    @property
    def consistent_within(self):
        """Residual measured in units of the total Monte Carlo error."""
        if self.stderr_total == 0:
            return 0.0 if self.residual_abs == 0 else math.inf
        return self.residual_abs / self.stderr_total

    def to_json(self):
        return {
            "residual_abs": self.residual_abs,
            "residual_rel": self.residual_rel,
            "stderr_total": self.stderr_total,
            "residual_over_stderr": self.consistent_within,
            "n_samples": self.estimate.n_samples,
            "per_coefficient": self.per_coefficient,
        }


def verify_main_theorem(chart, F_expr, C, sampler):
    """Check that fiber integration of a universal Chern-form polynomial
    reproduces the symbolic push-forward evaluated in the Chern forms of
    the base metric, and report the residual against the Monte Carlo
    standard error."""
    if isinstance(F_expr, str):
        F_expr = exprs.parse(F_expr)
    rho = chart.rho
    phi = pushforward_dp(expand_expression(F_expr, rho), rho)
    base_space = GeneratorSpace.base(chart.n)
    cf = chern_forms(base_curvature_matrix(C, base_space))
    truth = ExtForm.zero(base_space)
    for exps, coeff in phi.terms.items():
        piece = ExtForm.scalar(base_space, complex(coeff))
        for j, a in enumerate(exps, start=1):
            for _ in range(a):
                piece = piece.wedge(cf[j])
        truth = truth + piece
    est = pushforward_numeric(chart, F_expr, C, sampler)

    keys = set(est.form.terms) | set(truth.terms) | set(est.stderr)
    diff_sq = 0.0
    truth_sq = 0.0
    per_coeff = []
    for key in sorted(keys):
        e = est.form.terms.get(key, 0.0)
        t = truth.terms.get(key, 0.0)
        se = est.stderr.get(key, 0.0)
        diff_sq += abs(e - t) ** 2
        truth_sq += abs(t) ** 2
        per_coeff.append(
            {
                "holo": _mask_indices(key[0]),
                "anti": _mask_indices(key[1]),
                "estimate": [complex(e).real, complex(e).imag],
                "truth": [complex(t).real, complex(t).imag],
                "stderr": se,
            }
        )
    residual_abs = math.sqrt(diff_sq)
    truth_norm = math.sqrt(truth_sq)
    residual_rel = residual_abs / truth_norm if truth_norm > 0 else residual_abs
    return MainTheoremReport(
        estimate=est,
        truth=truth,
        residual_abs=residual_abs,
        residual_rel=residual_rel,
        stderr_total=est.stderr_total(),
        per_coefficient=per_coeff,
    )
