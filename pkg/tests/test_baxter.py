"""Baxter machinery.

The true transfer-matrix eigenvalues do not solve the fixed-gauge
functional equation, so the Q construction is exercised on the
"pseudo-spectrum": real even Laurent polynomials t with det D = 0 for the
same gauge pair, found by ``functional_equation_solutions``.
"""

from dataclasses import replace

import numpy as np
import pytest

from sgsov import baxter as bx
from sgsov import sov, suites
from sgsov.errors import ConstructionError
from sgsov.laurent import LaurentPoly, from_samples, sample_points
from sgsov.model import sample_params


@pytest.fixture(scope="module", params=[1, 2, 3])
def pseudo(request):
    P = sample_params(1, request.param, 7)
    ctx = suites.Context(P)
    recs = bx.functional_equation_solutions(P, ctx.gauge, starts=100 if request.param == 3 else 300)
    fams = [bx.DMatrixFamily.build(r.t, ctx.gauge) for r in recs]
    Qs = [bx.construct_Q(f, r.theta_k) for f, r in zip(fams, recs)]
    return ctx, recs, fams, Qs


def test_pseudo_spectrum_nonempty(pseudo):
    ctx, recs, _, _ = pseudo
    assert recs
    assert all(r.t.parity == "even" and np.allclose(r.t.coeffs.imag, 0) for r in recs)


def test_detD_vanishes(pseudo):
    _, _, fams, _ = pseudo
    assert max(bx.detD_norm(f) for f in fams) < 1e-9


def test_cofactor_structure(pseudo):
    _, _, fams, _ = pseudo
    for f in fams:
        res = bx.cofactor_residuals(f)
        assert max(res.values()) < 1e-10


def test_tq_bethe_roundtrip(pseudo):
    ctx, recs, _, Qs = pseudo
    G = bx.GaugePair.from_gauge(ctx.gauge)
    for r, Q in zip(recs, Qs):
        assert bx.tq_residual(r.t, Q, G) < 1e-10
        assert max(bx.bethe_residuals(Q, G), default=0.0) < 1e-8
        assert bx.t_from_Q(Q, G).distance(r.t) < 1e-10 * r.t.norm()


def test_roots_self_conjugate(pseudo):
    _, _, _, Qs = pseudo
    for Q in Qs:
        vals = Q.roots.values()
        for z in vals:
            assert min(abs(np.conj(z) - w) for w in vals) < 1e-6 * abs(z)


def test_unique_kernel_line(pseudo):
    ctx, recs, _, Qs = pseudo
    G = bx.GaugePair.from_gauge(ctx.gauge)
    for r in recs:
        assert bx.p_string_free_lines(r.t, G) == 1


def test_factorized_wavefunction_solves_separated_system(pseudo):
    ctx, recs, _, Qs = pseudo
    for r, Q in zip(recs, Qs):
        psi = bx.factorized_wavefunction(ctx.basis, Q, r.theta_k)
        assert sov.discrete_baxter_residual(ctx.basis, ctx.gauge, r.t, psi, r.theta_k) < 1e-10


def test_factorization_residual_detects_model(pseudo):
    ctx, recs, _, Qs = pseudo
    r, Q = recs[0], Qs[0]
    psi = bx.factorized_wavefunction(ctx.basis, Q, r.theta_k)
    vec = ctx.basis.dual() @ (2.5j * psi)
    rec = replace(r, eigvec=vec)
    assert bx.wavefunction_factorization_residual(rec, Q, ctx.basis) < 1e-10
    if len(Qs) > 1:
        assert bx.wavefunction_factorization_residual(rec, Qs[1], ctx.basis) > 1e-3


def test_asymptotic_orientation_even_chain():
    # Q(lambda q)/Q(lambda) tends to q^{-k} at 0 and q^{2N+k} at infinity
    P = sample_params(1, 2, 7)
    ctx = suites.Context(P)
    for r in bx.functional_equation_solutions(P, ctx.gauge):
        Q = bx.construct_Q(bx.DMatrixFamily.build(r.t, ctx.gauge), r.theta_k)
        lo, hi = bx.asymptotic_ratios(Q, P.q)
        assert abs(lo - P.qpow(-r.theta_k)) < 1e-9
        assert abs(hi - P.qpow(2 * P.N + r.theta_k)) < 1e-9
        assert (Q.a_t + r.theta_k) % P.p == 0
        assert (Q.b_t + r.theta_k + 2 * P.N) % P.p == 0


def test_detD_expansion_and_parity(p3n2):
    ctx = suites.Context(p3n2)
    rng = np.random.default_rng(2)
    t = LaurentPoly.from_dict({-2: rng.normal(), 0: rng.normal(), 2: rng.normal()}, "even")
    fam = bx.DMatrixFamily.build(t, ctx.gauge)
    for lam in (0.8 + 0.3j, 1.2 - 0.7j):
        direct = np.linalg.det(bx.build_D(fam, lam))
        assert abs(direct - bx.detD_expansion(fam, lam)) < 1e-10 * bx.detD_scale(fam)
    poly = bx.detD_poly(fam)
    assert poly.parity == "even"
    assert poly.k_max <= p3n2.Nbar


def test_closed_form_cofactor_p3(p3n2):
    ctx = suites.Context(p3n2)
    fam = bx.DMatrixFamily.build(ctx.records[0].t, ctx.gauge)
    lam = 0.9 + 0.4j
    assert abs(bx.cofactor(fam, lam, 1, 1) - bx.closed_form_C11_p3(fam, lam)) < 1e-10 * bx.detD_scale(fam)


def test_construct_Q_rejects_non_solution(pseudo):
    ctx, recs, _, _ = pseudo
    t = recs[0].t + LaurentPoly.constant(0.3)
    with pytest.raises(ConstructionError) as err:
        bx.construct_Q(bx.DMatrixFamily.build(t, ctx.gauge), recs[0].theta_k)
    assert "detD" in err.value.diagnostics


def test_negative_controls(pseudo):
    ctx, recs, _, Qs = pseudo
    G = bx.GaugePair.from_gauge(ctx.gauge)
    t = recs[0].t + LaurentPoly.constant(0.3)
    assert bx.tq_residual(t, Qs[0], G) > 1e-4
    assert bx.p_string_free_lines(t, G) == 0


def test_p_string_multiples_in_kernel(pseudo):
    ctx, recs, _, _ = pseudo
    G = bx.GaugePair.from_gauge(ctx.gauge)
    cap = bx.default_degree_cap(G)
    t = recs[0].t
    # multiplying by one p-string adds exactly one kernel line per p degrees
    assert bx.q_kernel_dimension(t, G, cap + ctx.params.p) == bx.q_kernel_dimension(t, G, cap) + 1


def test_q_operator_on_synthetic_spectrum():
    P = sample_params(1, 2, 7)
    ctx = suites.Context(P)
    recs = bx.functional_equation_solutions(P, ctx.gauge)
    Qs = [bx.construct_Q(bx.DMatrixFamily.build(r.t, ctx.gauge), r.theta_k) for r in recs]
    rng = np.random.default_rng(0)
    V, _ = np.linalg.qr(rng.normal(size=(P.dim, P.dim)) + 1j * rng.normal(size=(P.dim, P.dim)))
    V = V[:, :len(recs)]
    recs = [replace(r, eigvec=V[:, j]) for j, r in enumerate(recs)]

    def T(lam):
        return (V * np.array([r.t(lam) for r in recs])) @ V.conj().T

    th = (V * np.array([P.qpow(r.theta_k) for r in recs])) @ V.conj().T
    op = bx.assemble_q_operator(P, recs, Qs, ctx.gauge, transfer_op=T, theta_op=th)
    assert op.degree == 2 * P.l * (P.Nbar + 1)
    assert max(op.residuals.values()) < 1e-9
    y = 0.7 + 0.2j
    for j, (r, Q) in enumerate(zip(recs, Qs)):
        val = V[:, j].conj() @ op(y ** 0.5) @ V[:, j]
        assert abs(val - bx.q_bar(Q, P.p)(y ** 0.5)) < 1e-9 * max(abs(val), 1)


def test_q_operator_needs_orthonormal_vectors(p3n2):
    from sgsov.errors import NotApplicableError
    ctx = suites.Context(p3n2)
    recs = [replace(r, eigvec=2 * r.eigvec) for r in ctx.records]
    with pytest.raises(NotApplicableError):
        bx.assemble_q_operator(p3n2, recs, [None] * len(recs), ctx.gauge)


# the gauge defect on the true spectrum -----------------------------------------

@pytest.mark.parametrize("N", [1, 2, 3])
def test_true_spectrum_solves_fusion_but_not_fixed_gauge(N):
    P = sample_params(1, N, 7)
    ctx = suites.Context(P)
    for r in ctx.records:
        assert bx.fusion_residual(P, r.t, ctx.avg) < 1e-10
        assert bx.detD_norm(bx.DMatrixFamily.build(r.t, ctx.gauge)) > 1e-3


def test_fusion_rejects_perturbed_eigenvalue(p3n2):
    ctx = suites.Context(p3n2)
    t = ctx.records[0].t + LaurentPoly.constant(0.2)
    assert bx.fusion_residual(p3n2, t, ctx.avg) > 1e-4


def test_gauge_pair_transform():
    a = LaurentPoly.from_dict({-1: 1.0, 1: 2.0}, "odd")
    d = a.conj()
    q = np.exp(-2j * np.pi / 3)
    G = bx.GaugePair(a, d, q, 3)
    f = lambda x: 1 + x * x  # noqa: E731
    H = G.transformed(f)
    x = 0.7 + 0.1j
    assert abs(H.a(x) - a(x) * f(x / q) / f(x)) < 1e-12
    assert abs(H.d(x) - d(x) * f(x * q) / f(x)) < 1e-12


def test_t_from_Q_inverts_construction_on_interpolated_data(pseudo):
    ctx, recs, _, Qs = pseudo
    G = bx.GaugePair.from_gauge(ctx.gauge)
    r, Q = recs[-1], Qs[-1]
    xs = sample_points(2 * ctx.params.N + 3, 1.0, "even", 0.4)
    t = from_samples(xs, [r.t(x) for x in xs], r.t.window, "even")
    assert bx.t_from_Q(Q, G).distance(t) < 1e-9 * t.norm()
