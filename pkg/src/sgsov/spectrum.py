"""Exact diagonalisation of the transfer matrix."""

from dataclasses import dataclass

import numpy as np

from .averages import principal_root
from .config import DEFAULT_TOL
from .errors import ConsistencyError, DegeneracyError
from .laurent import LaurentPoly, from_samples, is_real, sample_points
from .model import qdet_zeros, theta_average, theta_operator, transfer


@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    t: LaurentPoly
    eigvec: np.ndarray
    theta_k: int | None
    gap: float
    residual: float = 0.0

    def to_json(self):
        return {"t": self.t.to_json(), "theta_k": self.theta_k, "gap": self.gap,
                "residual": self.residual}


def _choose_real_point(params, rng):
    bad = [abs(m) for pair in qdet_zeros(params) for m in pair]
    for _ in range(100):
        lam = rng.uniform(0.7, 1.4)
        if all(abs(lam - b) > 1e-3 for b in bad):
            return lam
    raise DegeneracyError("could not find a real sample point away from quantum-determinant zeros")


def _clusters(values, tol):
    groups, cur = [], [0]
    for i in range(1, len(values)):
        if abs(values[i] - values[cur[-1]]) <= tol:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    groups.append(cur)
    return groups


def _fix_phase(v):
    j = int(np.argmax(np.abs(v) > 0.5 * np.abs(v).max()))
    return v * (abs(v[j]) / v[j])


def _split_by_theta(params, sub):
    """Orthonormal Theta eigenvectors spanning a degenerate subspace."""
    th = sub.conj().T @ theta_operator(params) @ sub
    w, R = np.linalg.eig(th)
    order = np.argsort(np.angle(w) % (2 * np.pi))
    w, R = w[order], R[:, order]
    out = np.zeros_like(R)
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[start]) > 1e-8:
            Qm, _ = np.linalg.qr(R[:, start:i])
            out[:, start:i] = Qm
            start = i
    return sub @ out


def _eigenbasis(params, rng, sep, allow_degenerate=False):
    T = transfer(params)
    lam0 = _choose_real_point(params, rng)
    H = T(lam0)
    H = 0.5 * (H + H.conj().T)
    w, V = np.linalg.eigh(H)
    scale = max(np.abs(w).max(), 1.0)
    for group in _clusters(w, sep * scale):
        if len(group) == 1:
            continue
        sub = V[:, group]
        lam1 = _choose_real_point(params, rng)
        H1 = sub.conj().T @ T(lam1) @ sub
        w1, R = np.linalg.eigh(0.5 * (H1 + H1.conj().T))
        if np.min(np.diff(w1)) <= sep * max(np.abs(w1).max(), 1.0):
            if not allow_degenerate:
                raise DegeneracyError("transfer-matrix degeneracy persists at a second point")
            V[:, group] = _split_by_theta(params, sub) if params.N % 2 == 0 else sub
            continue
        V[:, group] = sub @ R
    return V


def theta_label(params, vec):
    """Sector index ``k`` with ``Theta v = q**k theta v`` (``theta`` the principal root)."""
    th = principal_root(theta_average(params), params.p)
    val = np.vdot(vec, theta_operator(params) @ vec) / np.vdot(vec, vec)
    dist = [abs(val - params.qpow(k) * th) for k in range(params.p)]
    k = int(np.argmin(dist))
    if dist[k] > 1e-6 * abs(th):
        raise ConsistencyError("eigenvector is not a Theta eigenvector")
    return k


def diagonalize_transfer(params, seed=0, sep=1e-8, tol=DEFAULT_TOL, allow_degenerate=False):
    """All eigenvalue polynomials ``t(lambda)`` with their eigenvectors.

    Eigenvalues are matched across sample points through the fixed eigenbasis
    of ``T(lambda0)``, not by sorting values.  Genuine degeneracies (expected
    for untwisted even chains) raise unless ``allow_degenerate`` is set, in
    which case they show up as vanishing gaps.
    """
    rng = np.random.default_rng(seed)
    V = _eigenbasis(params, rng, sep, allow_degenerate)
    T = transfer(params)
    N = params.N
    window = (-N, N)
    xs = sample_points(N + 1 if N % 2 == 0 else N, radius=1.0, parity="even", phase=0.17)
    mats = [T(x) for x in xs]
    check = [0.93 + 0.31j, 1.21 - 0.44j]
    th = theta_average(params) if N % 2 == 0 else None
    raw = []
    for j in range(V.shape[1]):
        v = _fix_phase(V[:, j])
        ys = [np.vdot(v, M @ v) for M in mats]
        t = from_samples(xs, ys, window, "even")
        if not is_real(t, tol.with_overrides(abs=0.0, rel=1e-9)):
            raise ConsistencyError("eigenvalue polynomial has non-real coefficients")
        t = t.real()
        res = max(np.abs(T(x) @ v - t(x) * v).max() / max(np.abs(T(x)).max(), 1e-300) for x in check)
        k = theta_label(params, v) if N % 2 == 0 else None
        raw.append((t, v, k, float(res)))
    raw.sort(key=lambda r: tuple(np.round(r[0].padded(-N, N).coeffs.real, 9)))
    records = []
    for i, (t, v, k, res) in enumerate(raw):
        gap = min((t.distance(o[0]) for j, o in enumerate(raw) if j != i), default=np.inf)
        records.append(SpectrumRecord(t, v, k, float(gap), res))
    if th is not None:
        _check_grading(params, records)
    return records


def grading_residual(params, record):
    """Leading coefficients of ``t`` against ``(prod kappa xi^{+-1}/i)(q^k theta + 1/(q^k theta))``."""
    N = params.N
    th = principal_root(theta_average(params), params.p) * params.qpow(record.theta_k)
    pk = np.prod(np.array(params.kappa) / 1j)
    Xi = np.prod(params.xi)
    c = th + 1 / th
    lo = pk * Xi * c
    hi = pk / Xi * c
    return max(abs(record.t.coeff(-N) - lo) / abs(lo), abs(record.t.coeff(N) - hi) / abs(hi))


def _check_grading(params, records):
    worst = max(grading_residual(params, r) for r in records)
    if worst > 1e-8:
        raise ConsistencyError(f"Theta grading inconsistent with leading coefficients ({worst:.3g})")


def simplicity_gap(records):
    """Smallest coefficient distance between distinct eigenvalue polynomials."""
    return min((r.gap for r in records), default=np.inf)


def sector_sizes(records, p):
    sizes = [0] * p
    for r in records:
        if r.theta_k is not None:
            sizes[r.theta_k] += 1
    return sizes


def coefficient_eigen_residual(params, records):
    """Max relative residual of each record against every Laurent coefficient of T."""
    T = transfer(params)
    worst = 0.0
    for k, C in T.coeffs.items():
        s = max(np.abs(C).max(), 1e-300)
        for r in records:
            v = r.eigvec
            lam = r.t.coeff(k)
            worst = max(worst, np.abs(C @ v - lam * v).max() / s)
    return float(worst)
