"""Cyclic representation of the lattice Sine-Gordon Yang-Baxter algebra.

Basis conventions: the tensor basis ``|z_1, ..., z_N>`` has site 1 as the
slowest index and ``z_n = q**(2 k_n)``.  The shift ``z -> q z`` therefore
moves ``k_n -> k_n + (p + 1) / 2 (mod p)``.
"""

import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import gcd

import numpy as np

from .config import DEFAULT_TOL, dim_cap
from .errors import NotApplicableError, ParameterError, SizeError
from .laurent import LaurentPoly

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)


def _as_complex_tuple(values):
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class ModelParams:
    l: int
    lprime: int
    kappa: tuple
    xi: tuple
    u: tuple
    v: tuple
    seed: int | None = None

    def __post_init__(self):
        for name in ("kappa", "xi", "u", "v"):
            object.__setattr__(self, name, _as_complex_tuple(getattr(self, name)))
        n = len(self.kappa)
        if n < 1 or any(len(getattr(self, s)) != n for s in ("xi", "u", "v")):
            raise ParameterError("site parameter lists must be non-empty and of equal length")
        if self.l < 1 or self.lprime < 1:
            raise ParameterError("l and l' must be positive integers")
        if gcd(self.lprime, self.p) != 1:
            raise ParameterError("q must be a primitive p-th root of unity (gcd(l', p) = 1)")
        tol = 1e-10
        for k, x in zip(self.kappa, self.xi):
            if k == 0 or x == 0:
                raise ParameterError("kappa_n and xi_n must be nonzero")
            if abs((k * k).imag) > tol * abs(k * k) or abs((x * x).imag) > tol * abs(x * x):
                raise ParameterError("kappa_n**2 and xi_n**2 must be real")
        for w in self.u + self.v:
            if abs(abs(w) - 1.0) > tol:
                raise ParameterError("u_n and v_n must be unimodular")
        eps = [-(k * x) / (k * x).conjugate() for k, x in zip(self.kappa, self.xi)]
        if max(abs(e - eps[0]) for e in eps) > 1e-8:
            raise ParameterError("epsilon = -(kappa xi)/(kappa xi)^* must be uniform along the chain")

    # derived data -------------------------------------------------------
    @property
    def N(self):
        return len(self.kappa)

    @property
    def p(self):
        return 2 * self.l + 1

    @property
    def pprime(self):
        return 2 * self.lprime

    @property
    def dim(self):
        return self.p ** self.N

    @property
    def e_N(self):
        return 1 if self.N % 2 == 0 else 0

    @property
    def Nbar(self):
        return self.N + self.e_N - 1

    @property
    def Nbracket(self):
        return self.N - self.e_N

    def qpow(self, k):
        """Exact ``q**k`` for integer ``k`` with ``q = exp(-i pi p'/p)``."""
        m = (self.pprime * int(k)) % (2 * self.p)
        return complex(np.exp(-1j * np.pi * m / self.p))

    @property
    def q(self):
        return self.qpow(1)

    @property
    def q_half(self):
        # the square root of q that is itself a p-th root of unity
        return self.qpow(self.l + 1)

    @property
    def epsilon(self):
        k, x = self.kappa[0], self.xi[0]
        e = -(k * x) / (k * x).conjugate()
        return complex(np.round(e.real, 12) + 1j * np.round(e.imag, 12))

    @property
    def twisted(self):
        tol = 1e-9
        return any(abs(w ** (2 * self.p) - 1) > tol for w in self.u + self.v)

    @property
    def K(self):
        return np.array(self.kappa) ** self.p

    @property
    def X(self):
        return np.array(self.xi) ** self.p

    @property
    def U(self):
        return np.array(self.u) ** self.p

    @property
    def V(self):
        return np.array(self.v) ** self.p

    def subchain(self, start, stop):
        """Parameters of sites ``start..stop`` (1-based, inclusive)."""
        sl = slice(start - 1, stop)
        return ModelParams(self.l, self.lprime, self.kappa[sl], self.xi[sl],
                           self.u[sl], self.v[sl], self.seed)

    def replace_sites(self, **changes):
        fields = {"kappa": self.kappa, "xi": self.xi, "u": self.u, "v": self.v}
        fields.update(changes)
        return ModelParams(self.l, self.lprime, seed=self.seed, **fields)

    # serialisation ------------------------------------------------------
    def to_json(self):
        def pair(z):
            return [float(z.real), float(z.imag)]
        sites = [{"kappa": pair(k), "xi": pair(x), "u": pair(a), "v": pair(b)}
                 for k, x, a, b in zip(self.kappa, self.xi, self.u, self.v)]
        return {"l": self.l, "lprime": self.lprime, "N": self.N,
                "sites": sites, "seed": self.seed}

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        sites = doc["sites"]
        if "N" in doc and doc["N"] != len(sites):
            raise ParameterError("N does not match the number of sites")

        def get(name):
            return [complex(*s[name]) for s in sites]
        return cls(doc["l"], doc["lprime"], get("kappa"), get("xi"), get("u"), get("v"),
                   doc.get("seed"))


def sample_params(l, N, seed, lprime=1, twisted=True, margin=1e-2):
    """Random admissible parameters: positive kappa, xi and unimodular u, v."""
    rng = np.random.default_rng(seed)
    p = 2 * l + 1
    kappa = rng.uniform(0.5, 1.5, N)
    xi = rng.uniform(0.5, 1.5, N)
    if twisted:
        def phase():
            while True:
                w = np.exp(2j * np.pi * rng.uniform())
                if abs(w ** (2 * p) - 1) > margin:
                    return w
    else:
        def phase():
            return np.exp(1j * np.pi * rng.integers(0, 2 * p) / p)
    u = [phase() for _ in range(N)]
    v = [phase() for _ in range(N)]
    return ModelParams(l, lprime, kappa, xi, u, v, seed)


# operators ------------------------------------------------------------------

def _embed(op, n, p, N):
    left = np.eye(p ** (n - 1))
    right = np.eye(p ** (N - n))
    return np.kron(np.kron(left, op), right)


@lru_cache(maxsize=64)
def _site_operators(params):
    p, N = params.p, params.N
    if params.dim > dim_cap():
        raise SizeError(f"dimension p**N = {params.dim} exceeds cap {dim_cap()}")
    step = (p + 1) // 2
    ops = []
    for n in range(1, N + 1):
        u_loc = np.diag([params.u[n - 1] * params.qpow(2 * k) for k in range(p)])
        v_loc = np.zeros((p, p), dtype=complex)
        for k in range(p):
            v_loc[(k + step) % p, k] = params.v[n - 1]
        u_op = _embed(u_loc, n, p, N)
        v_op = _embed(v_loc, n, p, N)
        u_inv = _embed(np.diag(1 / np.diag(u_loc)), n, p, N)
        v_inv = _embed(v_loc.conj().T / abs(params.v[n - 1]) ** 2, n, p, N)
        for a in (u_op, v_op, u_inv, v_inv):
            a.setflags(write=False)
        ops.append((u_op, v_op, u_inv, v_inv))
    return tuple(ops)


def build_weyl(params, n):
    """The pair ``(u_n, v_n)`` acting on the full chain (``n`` is 1-based)."""
    u_op, v_op, _, _ = _site_operators(params)[n - 1]
    return u_op, v_op


def weyl_inverses(params, n):
    _, _, u_inv, v_inv = _site_operators(params)[n - 1]
    return u_inv, v_inv


@dataclass(frozen=True, eq=False)
class OperatorLaurent:
    """Laurent polynomial in one variable with matrix coefficients."""

    coeffs: dict
    dim: int
    parity: str | None = None

    def window(self):
        ks = sorted(self.coeffs)
        return (ks[0], ks[-1]) if ks else (0, 0)

    def coefficient(self, k):
        c = self.coeffs.get(k)
        return c if c is not None else np.zeros((self.dim, self.dim), dtype=complex)

    def __call__(self, lam):
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k, c in self.coeffs.items():
            out = out + c * complex(lam) ** k
        return out

    def __add__(self, other):
        coeffs = dict(self.coeffs)
        for k, c in other.coeffs.items():
            coeffs[k] = coeffs[k] + c if k in coeffs else c
        parity = self.parity if self.parity == other.parity else None
        return OperatorLaurent(coeffs, self.dim, parity)

    def __matmul__(self, other):
        coeffs = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                term = a @ b
                coeffs[i + j] = coeffs[i + j] + term if i + j in coeffs else term
        parity = None
        if self.parity and other.parity:
            parity = "even" if self.parity == other.parity else "odd"
        return OperatorLaurent(coeffs, self.dim, parity)

    def scale(self, c):
        return OperatorLaurent({k: v * c for k, v in self.coeffs.items()}, self.dim, self.parity)

    def norm(self):
        return max((np.abs(c).max() for c in self.coeffs.values()), default=0.0)

    def parity_violation(self):
        """Largest coefficient of the wrong parity relative to the norm."""
        if self.parity is None:
            return 0.0
        want = 0 if self.parity == "even" else 1
        bad = [np.abs(c).max() for k, c in self.coeffs.items() if k % 2 != want]
        return max(bad, default=0.0) / max(self.norm(), 1e-300)


def _mat2_product(X, Y):
    return tuple(tuple(X[i][0] @ Y[0][j] + X[i][1] @ Y[1][j] for j in range(2))
                 for i in range(2))


def build_lax(params, n):
    """Lax matrix of site ``n`` as a 2x2 tuple of :class:`OperatorLaurent`."""
    u_op, v_op = build_weyl(params, n)
    u_inv, v_inv = weyl_inverses(params, n)
    k = params.kappa[n - 1]
    x = params.xi[n - 1]
    qh = params.q_half
    d = params.dim
    L11 = k * u_op @ (k / qh * v_op + qh / k * v_inv)
    L22 = k * u_inv @ (qh / k * v_op + k / qh * v_inv)
    c = k / 1j
    return ((OperatorLaurent({0: L11}, d, "even"),
             OperatorLaurent({1: c * v_op / x, -1: -c * x * v_inv}, d, "odd")),
            (OperatorLaurent({1: c * v_inv / x, -1: -c * x * v_op}, d, "odd"),
             OperatorLaurent({0: L22}, d, "even")))


def lax_at(params, n, lam):
    L = build_lax(params, n)
    return tuple(tuple(e(lam) for e in row) for row in L)


@lru_cache(maxsize=32)
def build_monodromy(params):
    """``M = L_N ... L_1`` with entries ``((A, B), (C, D))``."""
    M = build_lax(params, 1)
    for n in range(2, params.N + 1):
        M = _mat2_product(build_lax(params, n), M)
    return M


def monodromy_at(params, lam):
    M = build_monodromy(params)
    return tuple(tuple(e(lam) for e in row) for row in M)


@lru_cache(maxsize=32)
def transfer(params):
    M = build_monodromy(params)
    return M[0][0] + M[1][1]


def transfer_at(params, lam):
    return transfer(params)(lam)


def qdet_scalar(params):
    """Quantum determinant as an even Laurent polynomial in lambda."""
    out = LaurentPoly.constant(1.0)
    qh = params.q_half
    for k, x in zip(params.kappa, params.xi):
        for mu in (1j * k * qh * x, -1j / k * qh * x):
            out = out * LaurentPoly.from_dict({1: 1 / mu, -1: -mu}, "odd") * k
    return out


def qdet_zeros(params):
    qh = params.q_half
    return [(1j * k * qh * x, -1j / k * qh * x) for k, x in zip(params.kappa, params.xi)]


def _sample_lambdas(count, seed=12345):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.6, 1.5, count)
    return r * np.exp(2j * np.pi * rng.uniform(size=count))


def _rel(x, scale):
    return float(np.abs(x).max() / max(scale, 1e-300))


def lax_hermiticity_residual(params, n, lam):
    """Entrywise ``L(lam)^dagger`` against ``sigma1 L(eps lam*) sigma1``."""
    L = lax_at(params, n, lam)
    R = lax_at(params, n, params.epsilon * np.conj(lam))
    flipped = ((R[1][1], R[1][0]), (R[0][1], R[0][0]))
    scale = max(np.abs(e).max() for row in L for e in row)
    return max(_rel(L[i][j].conj().T - flipped[i][j], scale) for i in range(2) for j in range(2))


def monodromy_hermiticity_residual(params, lam):
    M = monodromy_at(params, lam)
    eps = params.epsilon
    target = ((monodromy_at(params, np.conj(lam))[1][1], monodromy_at(params, eps * np.conj(lam))[1][0]),
              (monodromy_at(params, eps * np.conj(lam))[0][1], monodromy_at(params, np.conj(lam))[0][0]))
    scale = max(np.abs(e).max() for row in M for e in row)
    return max(_rel(M[i][j].conj().T - target[i][j], scale) for i in range(2) for j in range(2))


def r_matrix(params, x):
    q = params.q
    a = q * x - 1 / (q * x)
    b = x - 1 / x
    c = q - 1 / q
    return np.array([[a, 0, 0, 0], [0, b, c, 0], [0, c, b, 0], [0, 0, 0, a]], dtype=complex)


def _lift(M, slot, dim):
    """Embed a 2x2 operator matrix into aux1 (x) aux2 (x) quantum space."""
    big = np.zeros((4 * dim, 4 * dim), dtype=complex)
    for i in range(2):
        for j in range(2):
            for a in range(2):
                if slot == 1:
                    r, c = 2 * i + a, 2 * j + a
                else:
                    r, c = 2 * a + i, 2 * a + j
                big[r * dim:(r + 1) * dim, c * dim:(c + 1) * dim] = M[i][j]
    return big


def ybe_residual(params, lam, mu):
    """Relative defect of ``R(l/m) M1(l) M2(m) = M2(m) M1(l) R(l/m)``."""
    d = params.dim
    R = np.kron(r_matrix(params, lam / mu), np.eye(d))
    M1 = _lift(monodromy_at(params, lam), 1, d)
    M2 = _lift(monodromy_at(params, mu), 2, d)
    lhs = R @ M1 @ M2
    rhs = M2 @ M1 @ R
    scale = np.abs(R).max() * np.abs(M1).max() * np.abs(M2).max()
    return _rel(lhs - rhs, scale)


def quantum_determinant_residual(params, samples=8):
    """Max relative defect of ``A(l)D(l/q) - B(l)C(l/q) = det_q(l) Id``."""
    qd = qdet_scalar(params)
    q = params.q
    worst = 0.0
    for lam in _sample_lambdas(samples):
        M1 = monodromy_at(params, lam)
        M2 = monodromy_at(params, lam / q)
        AD = M1[0][0] @ M2[1][1]
        BC = M1[0][1] @ M2[1][0]
        scale = np.abs(AD).max() + np.abs(BC).max()
        worst = max(worst, _rel(AD - BC - qd(lam) * np.eye(params.dim), scale))
    return worst


def _commutator_rel(X, Y):
    return _rel(X @ Y - Y @ X, np.abs(X).max() * np.abs(Y).max())


def transfer_commutator_residual(params, lam, mu):
    T = transfer(params)
    return _commutator_rel(T(lam), T(mu))


def transfer_hermiticity_residual(params, lam):
    """``T(lam)^dagger - T(conj(lam))`` relative to the norm."""
    T = transfer(params)
    A = T(lam)
    return _rel(A.conj().T - T(np.conj(lam)), np.abs(A).max())


def site_product(params, exponent_rule):
    """``prod_a v_a**exponent_rule(a)`` (1-based sites)."""
    out = np.eye(params.dim, dtype=complex)
    for a in range(1, params.N + 1):
        v_op, v_inv = build_weyl(params, a)[1], weyl_inverses(params, a)[1]
        out = out @ (v_op if exponent_rule(a) > 0 else v_inv)
    return out


@dataclass(frozen=True, eq=False)
class ThetaCharge:
    operator: np.ndarray
    residuals: dict
    average: complex
    power_residual: float


def theta_operator(params):
    if params.N % 2:
        raise NotApplicableError("the Theta charge is defined for even chains only")
    return site_product(params, lambda a: (-1) ** (1 + a))


def theta_average(params):
    V = params.V
    return complex(np.prod([V[a - 1] ** ((-1) ** (1 + a)) for a in range(1, params.N + 1)]))


def theta_charge(params, samples=4):
    """Theta operator with its commutation residuals against the Yang-Baxter generators.

    With ``u v = q v u`` and ``v: z -> q z`` the grading reads
    ``Theta C = q^{-1} C Theta`` and ``B Theta = q^{-1} Theta B``; those are
    the ``"C"`` and ``"B"`` residuals.
    """
    th = theta_operator(params)
    q = 1 / params.q
    M = build_monodromy(params)
    T = transfer(params)
    res = {"T": 0.0, "A": 0.0, "D": 0.0, "C": 0.0, "B": 0.0}
    for lam in _sample_lambdas(samples, seed=7):
        A, B = M[0][0](lam), M[0][1](lam)
        C, D = M[1][0](lam), M[1][1](lam)
        s = np.abs(th).max()
        res["T"] = max(res["T"], _commutator_rel(th, T(lam)))
        res["A"] = max(res["A"], _commutator_rel(th, A))
        res["D"] = max(res["D"], _commutator_rel(th, D))
        res["C"] = max(res["C"], _rel(th @ C - q * C @ th, s * np.abs(C).max()))
        res["B"] = max(res["B"], _rel(B @ th - q * th @ B, s * np.abs(B).max()))
    avg = theta_average(params)
    power = np.linalg.matrix_power(th, params.p)
    return ThetaCharge(th, res, avg, _rel(power - avg * np.eye(params.dim), abs(avg)))


def leading_operators(params):
    """Closed-form leading coefficients ``{(entry, +/-N): operator}``."""
    N = params.N
    pref = np.prod(np.array(params.kappa) / 1j)
    Xi = np.prod(params.xi)
    even = site_product(params, lambda a: (-1) ** a)      # prod v_a^{(-1)^a}
    odd = site_product(params, lambda a: (-1) ** (1 + a))  # prod v_a^{(-1)^{1+a}}
    if N % 2:
        return {("B", N): pref * odd / Xi, ("B", -N): -pref * Xi * even,
                ("C", N): pref * even / Xi, ("C", -N): -pref * Xi * odd}
    return {("A", N): pref * even / Xi, ("A", -N): pref * Xi * odd,
            ("D", N): pref * odd / Xi, ("D", -N): pref * Xi * even}


def asymptotics_check(params):
    """Relative residuals of the leading coefficients of the generators."""
    M = build_monodromy(params)
    entries = {"A": M[0][0], "B": M[0][1], "C": M[1][0], "D": M[1][1]}
    out = {}
    for (name, k), op in leading_operators(params).items():
        got = entries[name].coefficient(k)
        out[f"{name}[{k:+d}]"] = _rel(got - op, np.abs(op).max())
    if params.N % 2 == 0:
        th = theta_operator(params)
        both = th + np.linalg.inv(th)
        pref = np.prod(np.array(params.kappa) / 1j)
        Xi = np.prod(params.xi)
        T = transfer(params)
        for k, f in ((-params.N, Xi), (params.N, 1 / Xi)):
            target = pref * f * both
            out[f"T[{k:+d}]"] = _rel(T.coefficient(k) - target, np.abs(target).max())
    out["max"] = max(out.values())
    return out
