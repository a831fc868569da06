"""Numerical separation of variables: the B-eigenbasis and its matrix elements.

States are labelled by ``h = (h_1, ..., h_N)`` with ``eta_a = zeta_a q**h_a``,
where ``zeta_a`` is the principal p-th root of the a-th zero of the average of
B (for even N, ``zeta_N`` is the principal root of the leading datum).  The
shift ``T_a^-`` maps ``h_a -> h_a - 1 (mod p)``.
"""

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .averages import _symmetric_roots, average_monodromy, principal_root
from .config import DEFAULT_TOL
from .errors import ConsistencyError, DegeneracyError, SovFormError
from .model import build_monodromy, qdet_scalar, theta_operator


@dataclass(frozen=True, eq=False)
class SovBasis:
    covectors: np.ndarray
    labels: tuple
    eta: tuple
    zeta: tuple
    Z: tuple
    residual: float
    params: object = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "index", {h: j for j, h in enumerate(self.labels)})

    @property
    def size(self):
        return len(self.labels)

    @property
    def nsep(self):
        """Number of separated variables ``[N]``."""
        return self.params.Nbracket

    def dual(self):
        return np.linalg.inv(self.covectors)

    def shift(self, j, a, step):
        """Index of ``T_a^{+-}`` applied to state ``j`` (``a`` is 1-based)."""
        h = list(self.labels[j])
        h[a - 1] = (h[a - 1] + step) % self.params.p
        return self.index[tuple(h)]

    def rescaled(self, factors):
        """Basis with covector ``j`` multiplied by ``factors[j]``."""
        f = np.asarray(factors)[:, None]
        return replace(self, covectors=self.covectors * f)

    def to_json(self):
        return {"labels": [list(h) for h in self.labels],
                "eta": [[[float(z.real), float(z.imag)] for z in e] for e in self.eta],
                "residual": self.residual}


@dataclass(frozen=True, eq=False)
class SovCoefficients:
    a_vals: dict
    d_vals: dict
    projection_residual: float


def _fix_phase(v):
    j = int(np.argmax(np.abs(v) > 0.5 * np.abs(v).max()))
    return v / np.linalg.norm(v) * (abs(v[j]) / v[j])


def _nearest_power(params, ratio):
    dist = [abs(ratio - params.qpow(k)) for k in range(params.p)]
    k = int(np.argmin(dist))
    return k, dist[k]


def _label_state(params, bpoly, Zs, zeta, Z_lead, tol):
    N, p = params.N, params.p
    pref = np.prod(np.array(params.kappa) / 1j)
    reps, lead = _symmetric_roots(bpoly, tol)
    if len(reps) != params.Nbracket:
        raise ConsistencyError("B eigenvalue has the wrong number of zeros")
    eta = [None] * params.Nbracket
    flips = 0
    for r in reps:
        a = int(np.argmin([min(abs(r ** p - Z), abs(r ** p + Z)) / abs(Z) for Z in Zs]))
        if eta[a] is not None:
            raise DegeneracyError("two B zeros map to the same average zero")
        if abs(r ** p + Zs[a]) < abs(r ** p - Zs[a]):
            r, flips = -r, flips + 1
        if abs(r ** p - Zs[a]) > 1e-7 * abs(Zs[a]):
            raise ConsistencyError("p-th power of a B zero misses the average zeros")
        eta[a] = r
    lead = lead * (-1) ** flips
    if N % 2 == 0:
        eta.append(lead / pref)
        if abs(eta[-1] ** p - Z_lead) > 1e-7 * abs(Z_lead):
            raise ConsistencyError("leading B datum inconsistent with the average")
    elif abs(lead - pref) > 1e-7 * abs(pref):
        raise ConsistencyError("B eigenvalue prefactor differs from prod kappa/i")
    labels = []
    for e, z in zip(eta, zeta):
        k, dist = _nearest_power(params, e / z)
        if dist > 1e-6:
            raise ConsistencyError("eta is not on the q-orbit of its reference root")
        labels.append(k)
    return tuple(labels), tuple(complex(z * params.qpow(k)) for z, k in zip(zeta, labels))


def b_eigenbasis(params, seed=0, retries=4, tol=DEFAULT_TOL):
    """Simultaneous left eigenbasis of the Laurent coefficients of B."""
    from .laurent import LaurentPoly

    avg = average_monodromy(params, tol)
    B = build_monodromy(params)[0][1]
    ks = sorted(B.coeffs)
    coeffs = [B.coeffs[k] for k in ks]
    rng = np.random.default_rng(seed)
    dim = params.dim
    for _ in range(retries):
        mix = sum(rng.normal() * c for c in coeffs)
        vals, vecs = np.linalg.eig(mix.T)
        W = np.array([_fix_phase(vecs[:, j]) for j in range(dim)])
        sv = np.linalg.svd(W, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            continue
        Winv = np.linalg.inv(W)
        diag = []
        ok = True
        for c in coeffs:
            Y = W @ c @ Winv
            d = np.diag(Y).copy()
            off = np.abs(Y - np.diag(d)).max() / max(np.abs(c).max(), 1e-300)
            if off > 1e-8:
                ok = False
                break
            diag.append(d)
        if ok:
            break
    else:
        raise ConsistencyError("B coefficients could not be simultaneously diagonalised")
    diag = np.array(diag)
    Zs = list(avg.Z_list)
    zeta = [principal_root(Z, params.p) for Z in Zs]
    if params.N % 2 == 0:
        zeta.append(principal_root(avg.Z_lead, params.p))
    states = []
    for j in range(dim):
        b = LaurentPoly.from_dict(dict(zip(ks, diag[:, j])), "odd")
        h, eta = _label_state(params, b, Zs, zeta, avg.Z_lead, tol)
        states.append((h, eta, W[j]))
    states.sort(key=lambda s: s[0])
    labels = tuple(s[0] for s in states)
    if len(set(labels)) != dim:
        raise DegeneracyError("B spectrum is not simple")
    covectors = np.array([s[2] for s in states])
    basis = SovBasis(covectors, labels, tuple(s[1] for s in states), tuple(zeta), tuple(Zs),
                     0.0, params)
    return replace(basis, residual=eigen_residual(basis))


def b_eigenvalue(params, eta):
    """``eta_N^{e_N} b_eta(lambda)`` as a callable."""
    pref = np.prod(np.array(params.kappa) / 1j)
    sep = eta[:params.Nbracket]
    lead = eta[-1] if params.N % 2 == 0 else 1.0

    def f(lam):
        return lead * pref * np.prod([lam / e - e / lam for e in sep])
    return f


def eigen_residual(basis, points=(0.91 + 0.37j, 1.13 - 0.52j, -0.7 + 0.8j)):
    params = basis.params
    B = build_monodromy(params)[0][1]
    worst = 0.0
    for lam in points:
        Bl = B(lam)
        s = np.abs(Bl).max()
        for w, eta in zip(basis.covectors, basis.eta):
            worst = max(worst, np.abs(w @ Bl - b_eigenvalue(params, eta)(lam) * w).max() / s)
    return float(worst)


def completeness(basis):
    sv = np.linalg.svd(basis.covectors, compute_uv=False)
    return float(sv[-1] / sv[0])


def _project(row, dual, target, W, scale):
    c = row @ dual
    val = c[target]
    resid = np.abs(row - val * W[target]).max() / scale
    return complex(val), float(resid)


def sov_matrix_elements(params, basis, tol=1e-7):
    """Measured ``a(eta_a)``, ``d(eta_a)`` from the action of A and D at B zeros."""
    M = build_monodromy(params)
    A, D = M[0][0], M[1][1]
    W = basis.covectors
    dual = basis.dual()
    a_vals, d_vals = {}, {}
    worst = 0.0
    for j, eta in enumerate(basis.eta):
        for a in range(1, basis.nsep + 1):
            x = eta[a - 1]
            for op, step, store in ((A, -1, a_vals), (D, +1, d_vals)):
                mat = op(x)
                scale = np.abs(mat).max() * np.abs(W[j]).max()
                val, res = _project(W[j] @ mat, dual, basis.shift(j, a, step), W, scale)
                store[(j, a)] = val
                worst = max(worst, res)
    if worst > tol:
        raise SovFormError(f"A/D action at B zeros is not a single shift (residual {worst:.3g})")
    return SovCoefficients(a_vals, d_vals, worst)


def theta_coefficients(params, basis, tol=1e-7):
    """``<eta| Theta = c_eta <T_N^+ eta|`` for even chains."""
    th = theta_operator(params)
    W = basis.covectors
    dual = basis.dual()
    out, worst = {}, 0.0
    for j in range(basis.size):
        scale = np.abs(th).max() * np.abs(W[j]).max()
        val, res = _project(W[j] @ th, dual, basis.shift(j, params.N, +1), W, scale)
        out[j] = val
        worst = max(worst, res)
    if worst > tol:
        raise SovFormError(f"Theta is not a shift of eta_N in the SOV basis ({worst:.3g})")
    return out


def addet_residual(params, basis, coeffs):
    """``a(eta_r) d(eta_r/q) = det_q(eta_r)`` along each T_r^- edge."""
    qd = qdet_scalar(params)
    worst = 0.0
    for (j, a), av in coeffs.a_vals.items():
        jm = basis.shift(j, a, -1)
        lhs = av * coeffs.d_vals[(jm, a)]
        rhs = qd(basis.eta[j][a - 1])
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return float(worst)


def adaver_residual(params, basis, coeffs, avg=None):
    """Orbit products of measured coefficients against the averages on ``Z_r``."""
    avg = avg if avg is not None else average_monodromy(params)
    p = params.p
    worst = 0.0
    for j in range(basis.size):
        for a in range(1, basis.nsep + 1):
            for vals, step, target in ((coeffs.a_vals, -1, avg.A_at_Z[a - 1]),
                                       (coeffs.d_vals, +1, avg.D_at_Z[a - 1])):
                prod, cur = 1.0 + 0j, j
                for _ in range(p):
                    prod *= vals[(cur, a)]
                    cur = basis.shift(cur, a, step)
                worst = max(worst, abs(prod - target) / max(abs(prod), abs(target), 1e-300))
    return float(worst)


def predicted_rescaling(basis, coeffs, factors):
    """Coefficients after ``<eta|' = f_eta <eta|``: ``a' = a f_eta / f_{T^- eta}``."""
    a_new = {(j, a): v * factors[j] / factors[basis.shift(j, a, -1)]
             for (j, a), v in coeffs.a_vals.items()}
    d_new = {(j, a): v * factors[j] / factors[basis.shift(j, a, +1)]
             for (j, a), v in coeffs.d_vals.items()}
    return SovCoefficients(a_new, d_new, coeffs.projection_residual)


def coefficient_distance(c1, c2):
    worst = 0.0
    for store1, store2 in ((c1.a_vals, c2.a_vals), (c1.d_vals, c2.d_vals)):
        for key, v in store1.items():
            w = store2[key]
            worst = max(worst, abs(v - w) / max(abs(v), abs(w), 1e-300))
    return float(worst)


def qdet_in_basis_residual(params, basis, points=(0.87 + 0.29j, 1.19 - 0.33j)):
    """Quantum-determinant relation conjugated into the SOV basis."""
    M = build_monodromy(params)
    W = basis.covectors
    Winv = basis.dual()
    qd = qdet_scalar(params)
    q = params.q
    worst = 0.0
    for lam in points:
        X = M[0][0](lam) @ M[1][1](lam / q) - M[0][1](lam) @ M[1][0](lam / q)
        Y = W @ X @ Winv
        worst = max(worst, np.abs(Y - qd(lam) * np.eye(params.dim)).max() / abs(qd(lam)))
    return float(worst)


@dataclass(frozen=True, eq=False)
class AnchorReport:
    basis: SovBasis
    coeffs: SovCoefficients
    factors: np.ndarray
    a_mismatch: float
    d_mismatch: float
    theta_mismatch: float


def anchor_gauge(params, basis, coeffs, gauge, theta=None):
    """Rescale covectors so the measured a-coefficients equal ``gauge.a(eta_a)``.

    The factors are propagated along ``T_a^-`` edges from state 0, and for
    even chains along the Theta edges with coefficient ``theta``.  What is left
    over is reported: ``a_mismatch`` measures cycle inconsistency, and
    ``d_mismatch`` is the distance between the anchored d-coefficients and
    ``gauge.d(eta_a)``.
    """
    n = basis.size
    factors = np.zeros(n, dtype=complex)
    factors[0] = 1.0
    thc = theta_coefficients(params, basis) if params.N % 2 == 0 else None
    queue = deque([0])
    while queue:
        j = queue.popleft()
        for a in range(1, basis.nsep + 1):
            jm = basis.shift(j, a, -1)
            if factors[jm] == 0:
                # a' = a f_j / f_jm must equal gauge.a(eta_a)
                factors[jm] = coeffs.a_vals[(j, a)] * factors[j] / gauge.a(basis.eta[j][a - 1])
                queue.append(jm)
        if thc is not None:
            jp = basis.shift(j, params.N, +1)
            if factors[jp] == 0:
                factors[jp] = thc[j] * factors[j] / theta
                queue.append(jp)
    if np.any(factors == 0):
        raise ConsistencyError("state graph is not connected")
    new = predicted_rescaling(basis, coeffs, factors)
    a_mis = max(abs(v - gauge.a(basis.eta[j][a - 1])) / abs(v) for (j, a), v in new.a_vals.items())
    d_mis = max(abs(v - gauge.d(basis.eta[j][a - 1])) / max(abs(v), 1e-300)
                for (j, a), v in new.d_vals.items())
    th_mis = 0.0
    if thc is not None:
        th_mis = max(abs(thc[j] * factors[j] / factors[basis.shift(j, params.N, +1)] - theta) / abs(theta)
                     for j in range(n))
    return AnchorReport(basis.rescaled(factors), new, factors, float(a_mis), float(d_mis), float(th_mis))


def _coefficient_lookup(source, basis):
    if isinstance(source, SovCoefficients):
        return (lambda j, a: source.a_vals[(j, a)]), (lambda j, a: source.d_vals[(j, a)])
    return ((lambda j, a: source.a(basis.eta[j][a - 1])),
            (lambda j, a: source.d(basis.eta[j][a - 1])))


def discrete_baxter_residual(basis, coeffs, t, psi, k=None):
    """Residual of the separated Baxter system for a wave-function ``psi``.

    ``coeffs`` may be measured :class:`SovCoefficients` or any object with
    ``a`` and ``d`` callables (gauge functions evaluated at ``eta_r``).
    For even chains the ``eta_N`` equation uses the sector ``k``: with the
    grading of this representation ``psi(T_N^+ eta) = q**k psi(eta)``.
    """
    params = basis.params
    psi = np.asarray(psi, dtype=complex)
    get_a, get_d = _coefficient_lookup(coeffs, basis)
    worst, scale = 0.0, 0.0
    for j in range(basis.size):
        for a in range(1, basis.nsep + 1):
            x = basis.eta[j][a - 1]
            terms = (t(x) * psi[j], get_a(j, a) * psi[basis.shift(j, a, -1)],
                     get_d(j, a) * psi[basis.shift(j, a, +1)])
            worst = max(worst, abs(terms[0] - terms[1] - terms[2]))
            scale = max(scale, *(abs(v) for v in terms))
    out = worst / max(scale, 1e-300)
    if params.N % 2 == 0:
        if k is None:
            raise ValueError("sector k is required for even chains")
        qk = params.qpow(k)
        top = max(np.abs(psi).max(), 1e-300)
        res2 = max(abs(psi[basis.shift(j, params.N, +1)] - qk * psi[j]) for j in range(basis.size)) / top
        out = max(out, res2)
    return float(out)


def overlaps(basis, vec):
    """Wave-function ``<eta|t>`` on every basis state."""
    return basis.covectors @ vec
