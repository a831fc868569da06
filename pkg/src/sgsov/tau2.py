"""The tau2-model Lax operator and its comparison with the SG chain."""

from dataclasses import dataclass

import numpy as np

from .errors import NotApplicableError
from .model import OperatorLaurent, build_lax, build_weyl, transfer, weyl_inverses


@dataclass(frozen=True)
class Tau2Params:
    """Per-site tau2 couplings identified with an SG chain.

    ``d`` and ``f`` carry the spectral parameter linearly and are stored as the
    coefficient of ``lambda`` (``d_plus = -i lambda v_n / xi_n``); ``lambda_n``
    is ``lambda / xi_n``.
    """

    d_plus: tuple
    f_plus: tuple
    h_minus: tuple
    h_plus: tuple
    g_minus: tuple
    g_plus: tuple
    u: tuple

    @classmethod
    def from_model(cls, params):
        qh = params.q_half
        d, f, hm, hp, gm, gp = [], [], [], [], [], []
        for k, x, v in zip(params.kappa, params.xi, params.v):
            d.append(-1j * v / x)
            f.append(-1j / (v * x))
            hm.append(qh * k * v)
            hp.append(1 / (qh * k * v))
            gp.append(qh * k / v)
            gm.append(v / (qh * k))
        return cls(tuple(d), tuple(f), tuple(hm), tuple(hp), tuple(gm), tuple(gp), params.u)

    def constraint_residual(self, lam=1.0):
        """Distance from ``g_+ = f_+ d_-/h_+`` and ``g_- = f_- d_+/h_-``."""
        worst = 0.0
        for n in range(len(self.d_plus)):
            dp, fp = self.d_plus[n] * lam, self.f_plus[n] * lam
            dm, fm = 1 / dp, 1 / fp
            worst = max(worst, abs(self.g_plus[n] - fp * dm / self.h_plus[n]) / abs(self.g_plus[n]),
                        abs(self.g_minus[n] - fm * dp / self.h_minus[n]) / abs(self.g_minus[n]))
        return worst


def normalized_weyl(params, n):
    """``(X_n, Y_n) = (v_n / v_n-average, u_n / u_n-average)`` with ``X**p = Y**p = 1``."""
    u_op, v_op = build_weyl(params, n)
    return v_op / params.v[n - 1], u_op / params.u[n - 1]


def weyl_power_residual(params, n):
    X, Y = normalized_weyl(params, n)
    eye = np.eye(params.dim)
    p = params.p
    return max(np.abs(np.linalg.matrix_power(X, p) - eye).max(),
               np.abs(np.linalg.matrix_power(Y, p) - eye).max())


def weyl_relation_residual(params, n):
    """``Y X = q X Y`` checked on the normalised generators."""
    X, Y = normalized_weyl(params, n)
    return float(np.abs(Y @ X - params.q * X @ Y).max())


def tau2_lax(params, n, tau=None):
    """Site-``n`` tau2 Lax operator, a 2x2 tuple of :class:`OperatorLaurent`.

    The displayed form is multiplied by ``kappa_n`` so that it equals the SG
    Lax operator times ``sigma_1`` exactly; the scalar does not affect any
    spectral comparison up to the overall factor ``prod kappa_n``.
    """
    tau = tau if tau is not None else Tau2Params.from_model(params)
    X, Y = normalized_weyl(params, n)
    Xi = np.linalg.inv(X)
    Yi = np.linalg.inv(Y)
    i = n - 1
    k = params.kappa[i]
    un = params.u[i]
    dim = params.dim
    dp, fp = tau.d_plus[i], tau.f_plus[i]
    # D = d_+ X + d_- X^-1 with d_- = 1/d_+ and d_+ linear in lambda
    D = OperatorLaurent({1: k * dp * X, -1: k / dp * Xi}, dim, "odd")
    F = OperatorLaurent({1: k * fp * Xi, -1: k / fp * X}, dim, "odd")
    H = OperatorLaurent({0: k * un * (tau.h_minus[i] * X + tau.h_plus[i] * Xi) @ Y}, dim, "even")
    G = OperatorLaurent({0: k / un * (tau.g_minus[i] * X + tau.g_plus[i] * Xi) @ Yi}, dim, "even")
    return ((D, H), (G, F))


def _prod2(X, Y):
    return tuple(tuple(X[r][0] @ Y[0][c] + X[r][1] @ Y[1][c] for c in range(2)) for r in range(2))


def tau2_monodromy(params, tau=None):
    M = tau2_lax(params, 1, tau)
    for n in range(2, params.N + 1):
        M = _prod2(tau2_lax(params, n, tau), M)
    return M


def tau2_transfer(params, tau=None):
    M = tau2_monodromy(params, tau)
    return M[0][0] + M[1][1]


def lax_relation_residual(params, points=(0.77 + 0.31j, 1.21 - 0.5j, -0.6 + 1.1j)):
    """Max relative distance between the tau2 Lax matrix and ``L_SG sigma_1``."""
    worst = 0.0
    for n in range(1, params.N + 1):
        Lt = tau2_lax(params, n)
        Ls = build_lax(params, n)
        for lam in points:
            s = max(np.abs(Ls[r][c](lam)).max() for r in range(2) for c in range(2))
            for r in range(2):
                for c in range(2):
                    diff = Lt[r][c](lam) - Ls[r][1 - c](lam)
                    worst = max(worst, np.abs(diff).max() / s)
    return float(worst)


def u_gauge_residuals(params, phase=np.exp(0.7j), points=(0.9, 1.3, 0.6 + 0.2j)):
    """Effect of a uniform change of the u-averages on both transfer matrices.

    Returns ``(tau2_change, sg_change)``; the first should vanish.
    """
    moved = params.replace_sites(u=[w * phase for w in params.u])
    T0, T1 = tau2_transfer(params), tau2_transfer(moved)
    S0, S1 = transfer(params), transfer(moved)
    tau_change = max(np.abs(T0(x) - T1(x)).max() / np.abs(T0(x)).max() for x in points)
    sg_change = max(np.abs(S0(x) - S1(x)).max() / np.abs(S0(x)).max() for x in points)
    return float(tau_change), float(sg_change)


def omega(params, n):
    """``|z_n> -> |1/z_n>`` on the u-eigenbasis of site ``n``."""
    p = params.p
    loc = np.zeros((p, p))
    for k in range(p):
        loc[(-k) % p, k] = 1.0
    left = np.eye(p ** (n - 1))
    right = np.eye(p ** (params.N - n))
    return np.kron(np.kron(left, loc), right)


def local_inversion(params, n, tol=1e-10):
    """Unitary ``S`` with ``S u_n S^-1 = u_n^-1`` and ``S v_n S^-1 = v_n^-1``.

    It exists exactly when ``u_n**2`` and ``v_n**2`` are powers of q; it is
    searched among ``u_n^j' v_n^j Omega_n``.
    """
    u_op, v_op = build_weyl(params, n)
    u_inv, v_inv = weyl_inverses(params, n)
    Om = omega(params, n)
    p = params.p
    for j in range(p):
        for jp in range(p):
            S = np.linalg.matrix_power(u_op, jp) @ np.linalg.matrix_power(v_op, j) @ Om
            Si = np.linalg.inv(S)
            if (np.abs(S @ u_op @ Si - u_inv).max() < tol
                    and np.abs(S @ v_op @ Si - v_inv).max() < tol):
                # drop the scalar so that S is unitary
                return S / abs(np.linalg.det(S)) ** (1.0 / S.shape[0])
    raise NotApplicableError(f"site {n}: the inversion of the Weyl pair is not a similarity (twisted)")


def flipped_params(params):
    """Even-site inhomogeneities multiplied by ``-epsilon``."""
    eps = params.epsilon
    xi = [x * (-eps) if (i + 1) % 2 == 0 else x for i, x in enumerate(params.xi)]
    return params.replace_sites(xi=xi)


def pi_tau2(params):
    """Product of the even-site inversions; twisted sites raise."""
    out = np.eye(params.dim, dtype=complex)
    for n in range(2, params.N + 1, 2):
        out = out @ local_inversion(params, n)
    return out


def _sorted_eigs(M):
    w = np.linalg.eigvals(M)
    return np.array(sorted(w, key=lambda z: (round(z.real, 8), round(z.imag, 8))))


def spectral_distance(Ta, Tb, grid):
    """Max over the grid of the distance between sorted eigenvalue tuples."""
    worst = 0.0
    for x in grid:
        a, b = _sorted_eigs(Ta(x)), _sorted_eigs(Tb(x))
        scale = max(np.abs(a).max(), 1e-300)
        worst = max(worst, float(np.abs(a - b).max() / scale))
    return worst


def real_grid(N, lo=0.6, hi=1.6):
    return np.linspace(lo, hi, 2 * N + 1)


@dataclass(frozen=True)
class Tau2Report:
    untwisted: bool
    distance: float
    operator_residual: float | None
    lax_residual: float

    def verdict(self, match_tol=1e-8):
        return {"untwisted_match": bool(self.untwisted and self.distance < match_tol),
                "twisted_separation": float(self.distance)}

    def to_json(self):
        return {"untwisted": self.untwisted, "distance": self.distance,
                "operator_residual": self.operator_residual,
                "lax_residual": self.lax_residual, "verdict": self.verdict()}


def spectra_compare(params):
    """Compare the tau2 transfer matrix with the SG one after the inhomogeneity flip.

    For untwisted parameters the operator identity through ``pi_tau2`` is
    checked as well; for twisted ones only the spectra are compared.
    """
    if params.N % 2:
        raise NotApplicableError("the tau2 comparison is defined for even chains")
    flipped = flipped_params(params)
    T_tau = tau2_transfer(params)
    T_sg = transfer(flipped)
    grid = real_grid(params.N)
    dist = spectral_distance(T_tau, T_sg, grid)
    op_res = None
    untwisted = not params.twisted
    if untwisted:
        Pi = pi_tau2(flipped)
        Pii = np.linalg.inv(Pi)
        op_res = max(float(np.abs(T_tau(x) - Pi @ T_sg(x) @ Pii).max() / np.abs(T_tau(x)).max())
                     for x in grid)
    return Tau2Report(untwisted, dist, op_res, lax_relation_residual(params))
