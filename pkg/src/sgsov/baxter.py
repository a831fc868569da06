"""Baxter equation machinery built on the cyclic p x p matrix D(lambda).

A *gauge* here is any object with callables ``a`` and ``d`` plus the
attributes ``q`` and ``p`` (both :class:`~sgsov.averages.GaugeCoefficients`
and :class:`GaugePair` qualify).  Coefficient-space operations additionally
need ``a`` and ``d`` to be :class:`LaurentPoly` instances.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import least_squares, linear_sum_assignment

from .averages import average_monodromy, principal_root
from .config import DEFAULT_TOL
from .errors import (ConsistencyError, ConstructionError, DomainError, NotApplicableError,
                     NumericError)
from .laurent import LaurentPoly, RootMultiset, _cluster, exponents, from_samples, sample_points
from .model import qdet_scalar, theta_average, theta_operator, transfer
from .spectrum import SpectrumRecord


@dataclass(frozen=True, eq=False)
class GaugePair:
    """Explicit coefficient pair; ``a`` and ``d`` may be arbitrary callables."""

    a: object
    d: object
    q: complex
    p: int
    window: tuple | None = None

    @classmethod
    def from_gauge(cls, g):
        return cls(g.a, g.d, g.q, g.p, _t_window(g))

    def transformed(self, f):
        """Gauge-equivalent pair ``(a f(x/q)/f(x), d f(xq)/f(x))``."""
        a, d, q = self.a, self.d, self.q
        return GaugePair(lambda x: a(x) * f(x / q) / f(x),
                         lambda x: d(x) * f(x * q) / f(x), q, self.p, _t_window(self))


def _t_window(gauge):
    w = getattr(gauge, "window", None)
    if w is not None:
        return tuple(w)
    if isinstance(gauge.a, LaurentPoly):
        hi = max(abs(k) for k in gauge.a.trim().window)
        return (-hi, hi)
    raise ValueError("gauge does not determine the eigenvalue window; pass window explicitly")


def _l(p):
    return (p - 1) // 2


@dataclass(frozen=True, eq=False)
class DMatrixFamily:
    t: object
    a: object
    d: object
    p: int
    q: complex
    nbar: int

    @classmethod
    def build(cls, t, gauge):
        nbar = _t_window(gauge)[1]
        return cls(t, gauge.a, gauge.d, gauge.p, complex(gauge.q), nbar)

    def __call__(self, lam):
        return build_D(self, lam)

    @property
    def l(self):
        return _l(self.p)


def build_D(fam, lam):
    """Cyclic tridiagonal matrix: row i carries ``t, -a, -d`` at ``lam q**i``."""
    if lam == 0:
        raise DomainError("D(lambda) is defined for lambda != 0")
    p, q = fam.p, fam.q
    D = np.zeros((p, p), dtype=complex)
    for i in range(p):
        x = lam * q ** i
        D[i, i] += fam.t(x)
        D[i, (i + 1) % p] -= fam.d(x)
        D[i, (i - 1) % p] -= fam.a(x)
    return D


def _row_bound(fam, lam):
    """Product of absolute row sums: a Hadamard-type bound on |det D|."""
    p, q = fam.p, fam.q
    out = 1.0
    for i in range(p):
        x = lam * q ** i
        out *= abs(fam.t(x)) + abs(fam.a(x)) + abs(fam.d(x))
    return out


def detD_scale(fam, n=16):
    """Size of the individual terms of det D on the unit circle."""
    lams = np.exp(2j * np.pi * (np.arange(n) + 0.31) / (n * fam.p))
    return max(_row_bound(fam, x) for x in lams)


def _minor(D, rows, cols):
    keep_r = [i for i in range(D.shape[0]) if i not in rows]
    keep_c = [j for j in range(D.shape[1]) if j not in cols]
    sub = D[np.ix_(keep_r, keep_c)]
    return complex(np.linalg.det(sub)) if sub.size else 1.0 + 0j


def detD_expansion(fam, lam):
    """Value of det D from the first-row expansion in terms of the averages.

    ``A_bar = prod_k a(lam q**k)`` and ``D_bar = prod_k d(lam q**k)`` enter with
    the sign fixed by the odd p-cycle of the corner entries.
    """
    p, q = fam.p, fam.q
    D = build_D(fam, lam)
    xs = [lam * q ** k for k in range(p)]
    A_bar = np.prod([fam.a(x) for x in xs])
    D_bar = np.prod([fam.d(x) for x in xs])
    m11 = _minor(D, [0], [0])
    m12 = _minor(D, [0, 1], [0, 1])
    m1p = _minor(D, [0, p - 1], [0, p - 1])
    return (-(A_bar + D_bar) - fam.a(lam) * fam.d(lam / q) * m1p
            - fam.a(lam * q) * fam.d(lam) * m12 + fam.t(lam) * m11)


def _lam_of(Lam, p):
    return principal_root(Lam, p)


def detD_values(fam, Lams):
    return np.array([np.linalg.det(build_D(fam, _lam_of(L, fam.p))) for L in Lams])


def detD_poly(fam, extra=4, check=1e-9, expansion_check=True):
    """det D as an even Laurent polynomial in ``Lambda = lambda**p``.

    The fit uses ``extra`` held-out nodes, and a further set of points on a
    different branch of the p-th root; both must agree with the fit.
    """
    window = (-fam.nbar, fam.nbar)
    n = len(exponents(window, "even"))
    Lams = sample_points(n + extra, 1.0, "even", 0.23)
    ys = detD_values(fam, Lams)
    poly, resid = from_samples(Lams, ys, window, "even", full=True)
    scale = max(detD_scale(fam), 1e-300)
    worst = resid
    rng = np.random.default_rng(97)
    for _ in range(3):
        lam = np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.8, 1.25)
        branch = lam * np.exp(2j * np.pi * rng.integers(1, fam.p) / fam.p)
        val = np.linalg.det(build_D(fam, branch))
        worst = max(worst, abs(val - poly(lam ** fam.p)))
        if expansion_check:
            alt = detD_expansion(fam, lam)
            if abs(alt - val) > check * scale:
                raise ConsistencyError(f"det D disagrees with its row expansion ({abs(alt - val) / scale:.3g})")
    if worst > check * scale:
        raise ConsistencyError(f"det D is not a Laurent polynomial in lambda**p on {window} "
                               f"(relative misfit {worst / scale:.3g})")
    return poly


def detD_norm(fam):
    """Relative coefficient norm of det D, the quantity the functional equation zeroes."""
    return detD_poly(fam).norm() / max(detD_scale(fam), 1e-300)


def detD_asymptotics(fam):
    """Relative size of the ``Lambda**(+-N)`` coefficients of det D."""
    poly = detD_poly(fam)
    s = max(detD_scale(fam), 1e-300)
    return abs(poly.coeff(-fam.nbar)) / s, abs(poly.coeff(fam.nbar)) / s


# cofactors -------------------------------------------------------------

def cofactor(fam, lam, i, j):
    """``(-1)**(i+j)`` times the minor of D(lam) without row i and column j (1-based)."""
    D = build_D(fam, lam)
    return (-1) ** (i + j) * _minor(D, [i - 1], [j - 1])


def _interp_cofactor(fam, i, j, extra=4):
    hi = 2 * fam.l * fam.nbar
    window = (-hi, hi)
    n = len(exponents(window, "even"))
    xs = sample_points(n + extra, 1.0, "even", 0.19)
    ys = np.array([cofactor(fam, x, i, j) for x in xs])
    poly, resid = from_samples(xs, ys, window, "even", full=True)
    scale = max(np.abs(ys).max(), 1e-300)
    if resid > 1e-8 * scale:
        raise ConsistencyError(f"cofactor C[{i},{j}] is not an even Laurent polynomial on {window}")
    return poly.trim(1e-13 * poly.norm())


def cofactor_polys(fam):
    """The cofactors ``C11, C12, C1p`` as even Laurent polynomials in lambda."""
    return (_interp_cofactor(fam, 1, 1), _interp_cofactor(fam, 1, 2),
            _interp_cofactor(fam, 1, fam.p))


def cofactor_residuals(fam, polys=None, points=(0.83 + 0.41j, 1.12 - 0.27j, -0.66 + 0.95j)):
    """Shift, conjugation and rank-one residuals of the cofactor matrix.

    The rank-one residual is only expected to vanish when det D does.
    """
    C11, C12, C1p = polys if polys is not None else cofactor_polys(fam)
    q, p = fam.q, fam.p
    shift = conj = rank1 = 0.0
    for lam in points:
        c22 = cofactor(fam, lam, 2, 2)
        shift = max(shift, abs(c22 - C11(lam * q)) / max(abs(c22), 1e-300))
        D = build_D(fam, lam)
        C = np.array([[(-1) ** (i + j) * _minor(D, [i], [j]) for j in range(p)] for i in range(p)])
        s = np.abs(C).max() ** 2
        for i in range(p):
            for k in range(p):
                rank1 = max(rank1, float(np.abs(C[i, 0] * C[k, :] - C[k, 0] * C[i, :]).max()) / s)
    conj = C11.distance(C11.conj()) / max(C11.norm(), 1e-300)
    return {"shift": float(shift), "conjugation": float(conj), "rank_one": float(rank1)}


def closed_form_C11_p3(fam, lam):
    """``t(lq) t(lq^2) - a(lq^2) d(lq)``, the p = 3 value of C11."""
    q = fam.q
    return fam.t(lam * q) * fam.t(lam * q * q) - fam.a(lam * q * q) * fam.d(lam * q)


# Q construction ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QPolynomial:
    Q: LaurentPoly
    a_t: int
    b_t: int
    roots: RootMultiset
    phi: complex
    N11: int
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.Q(x)

    @property
    def y_roots(self):
        """Roots of ``Q`` in ``lambda**2``."""
        return self.diagnostics.get("y_roots", ())

    def to_json(self):
        return {"Q": self.Q.to_json(), "a_t": self.a_t, "b_t": self.b_t,
                "roots": self.roots.to_json(),
                "phi": [float(self.phi.real), float(self.phi.imag)], "N11": self.N11}


def _y_data(C):
    """Split an even Laurent polynomial into ``c * lam**e * prod(lam**2 - y)``."""
    C = C.trim(1e-12 * C.norm())
    cy = C.coeffs[::2]
    ys = npoly.polyroots(cy) if cy.size > 1 else np.array([], dtype=complex)
    return complex(cy[-1]), C.k_min, [complex(y) for y in ys]


def _match(ys1, ys2, rel):
    """Indices of ``ys1`` paired with some root of ``ys2`` (optimal assignment)."""
    if not ys1 or not ys2:
        return set()
    cost = np.array([[abs(a - b) / max(abs(a), abs(b), 1e-300) for b in ys2] for a in ys1])
    rows, cols = linear_sum_assignment(cost)
    return {int(r) for r, c in zip(rows, cols) if cost[r, c] <= rel}


def _has_p_string(ys, q, p, rel=1e-6):
    """True if some orbit ``y q**(2k)``, k = 0..p-1, lies inside ``ys``."""
    for y in ys:
        if all(any(abs(y * q ** (2 * k) - z) <= rel * abs(y) for z in ys) for k in range(1, p)):
            return True
    return False


def _poly_from_y(a_t, ys):
    cy = npoly.polyfromroots(ys) if ys else np.ones(1)
    cy = np.asarray(cy, dtype=complex)
    c = np.zeros(2 * (cy.size - 1) + 1, dtype=complex)
    c[::2] = cy
    return LaurentPoly(a_t, c, "even" if a_t % 2 == 0 else "odd")


def _sample_off(Q, rng, count, lo=0.6, hi=1.5):
    """Random points not too close to the roots of a callable ``Q``."""
    out = []
    while len(out) < count:
        x = rng.uniform(lo, hi) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out.append(complex(x))
    return out


def construct_Q(fam, theta_k=None, tol=DEFAULT_TOL, detD_tol=1e-7, match_rel=1e-6):
    """Polynomial Baxter solution from the cofactors of D(lambda).

    Raises :class:`ConstructionError` (with the diagnostics gathered so far)
    when det D does not vanish, the common-root structure is ambiguous, the
    phase does not snap to a p-th root of unity, or the result fails the
    reality or Baxter-equation checks.
    """
    p, q, l, nbar = fam.p, fam.q, fam.l, fam.nbar
    diag = {}
    norm = detD_norm(fam)
    diag["detD"] = norm
    if norm > detD_tol:
        raise ConstructionError(f"det D does not vanish (relative norm {norm:.3g})", diag)
    C11, C12, C1p = cofactor_polys(fam)
    c11, e11, y11 = _y_data(C11)
    c12, e12, y12 = _y_data(C12)
    _, e1p, y1p = _y_data(C1p)
    deg = 2 * l * nbar
    a11, a12 = (e11 + deg) // 2, (e12 + deg) // 2
    b11, b12 = deg - a11 - len(y11), deg - a12 - len(y12)
    diag.update(a11=a11, a12=a12, b11=b11, b12=b12)
    if (a11, b11) != (a12, b12):
        raise ConstructionError("cofactor degree data of C11 and C12 differ", diag)
    common2 = _match(y11, y12, match_rel)
    common_p = _match(y11, y1p, match_rel)
    diag["common"] = len(common2)
    if common2 != common_p:
        raise ConstructionError("roots shared with C12 and with C1p differ", diag)
    ybar = [y for i, y in enumerate(y11) if i not in common2]
    n11 = len(ybar)
    if _has_p_string(ybar, q, p):
        raise ConstructionError("stripped cofactor contains a p-string", diag)

    def cbar(x):
        return np.prod([x * x - y for y in ybar]) if ybar else 1.0

    rng = np.random.default_rng(5)
    ratios = []
    for lam in _sample_off(cbar, rng, 6):
        num = C11(lam) / cbar(lam)
        den = C12(lam) / (q ** (-2 * n11) * cbar(lam * q))
        ratios.append(num / den)
    ratios = np.array(ratios)
    phi = complex(np.median(ratios.real) + 1j * np.median(ratios.imag))
    diag["phi_spread"] = float(np.abs(ratios - phi).max() / abs(phi))
    if diag["phi_spread"] > 1e-6:
        raise ConstructionError("cofactor ratio is not constant", diag)
    m = int(np.round(np.angle(phi) / (2 * np.pi / p))) % p
    snapped = np.exp(2j * np.pi * m / p)
    diag["phi_snap"] = float(abs(phi - snapped))
    if diag["phi_snap"] > 1e-6:
        raise ConstructionError(f"phase {phi} is not a p-th root of unity", diag)
    target = q ** (2 * n11) * snapped
    a_t = min(range(p), key=lambda a: abs(q ** (-a) - target))
    if abs(q ** (-a_t) - target) > 1e-8:
        raise ConstructionError("no admissible a_t matches the phase", diag)
    b_t = deg - n11
    Qc = _poly_from_y(a_t, ybar)
    imag = float(np.abs(Qc.coeffs.imag).max())
    diag["reality"] = imag / max(Qc.norm(), 1e-300)
    if diag["reality"] > 1e-8:
        raise ConstructionError("constructed Q has non-real coefficients", diag)
    Q = Qc.real()
    ys_sorted = sorted(ybar, key=lambda y: (round(y.real, 10), round(y.imag, 10)))
    conjs = _match(ys_sorted, [np.conj(y) for y in ys_sorted], 1e-6)
    diag["self_conjugate"] = len(conjs) == len(ys_sorted)
    if not diag["self_conjugate"]:
        raise ConstructionError("root set is not closed under conjugation", diag)
    gauge = GaugePair(fam.a, fam.d, q, p, (-nbar, nbar))
    diag["tq"] = tq_residual(fam.t, Q, gauge)
    if diag["tq"] > 1e-8:
        raise ConstructionError(f"Baxter equation residual {diag['tq']:.3g}", diag)
    diag["y_roots"] = tuple(ys_sorted)
    if theta_k is not None:
        diag["theta_k"] = int(theta_k)
        diag["q_even"] = bool(a_t == theta_k and b_t % p == theta_k % p)
    pm = []
    for y in ys_sorted:
        r = complex(np.sqrt(y))
        pm += [r, -r]
    roots_ms = RootMultiset(a_t, tuple(_cluster(pm, tol.root_cluster)))
    return QPolynomial(Q, a_t, b_t, roots_ms, complex(phi), n11, diag)


def asymptotic_ratios(Q, q):
    """Limits of ``Q(lambda q)/Q(lambda)`` at 0 and at infinity."""
    Q = Q.Q if isinstance(Q, QPolynomial) else Q
    Q = Q.trim(1e-14 * Q.norm())
    return complex(q ** Q.k_min), complex(q ** Q.k_max)


def _qcall(Q):
    return Q.Q if isinstance(Q, QPolynomial) else Q


def tq_residual(t, Q, gauge, count=20, seed=0):
    """Max relative residual of ``t Q = a Q(x/q) + d Q(x q)`` at seeded points."""
    Qf = _qcall(Q)
    q = gauge.q
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in _sample_off(Qf, rng, count):
        terms = (t(x) * Qf(x), gauge.a(x) * Qf(x / q), gauge.d(x) * Qf(x * q))
        scale = max(abs(v) for v in terms)
        worst = max(worst, abs(terms[0] - terms[1] - terms[2]) / max(scale, 1e-300))
    return float(worst)


def bethe_residuals(Q, gauge, singular=1e-10):
    """Bethe-equation residual at each root ``lambda_k**2`` of Q.

    The product runs over every root (with multiplicity), the ``h = k`` factor
    included, so the expression equals ``a/d + Q(x q)/Q(x/q)`` at ``x = lambda_k``.
    """
    q = gauge.q
    ys = list(Q.y_roots) if Q.y_roots else [r * r for r in Q.roots.values()][::2]
    out = []
    for yk in ys:
        lam = complex(np.sqrt(yk))
        dv = gauge.d(lam)
        av = gauge.a(lam)
        if abs(dv) <= singular * max(abs(av), 1.0):
            raise DomainError(f"root {lam} of Q sits on a zero of d")
        prod = q ** (2 * Q.a_t)
        for yh in ys:
            prod *= (q * q * yk - yh) / (yk / (q * q) - yh)
        ratio = av / dv
        out.append(float(abs(ratio + prod) / max(abs(ratio), 1.0)))
    return out


def t_from_Q(Q, gauge, window=None, extra=4, check=1e-8):
    """Eigenvalue ``(a Q(x/q) + d Q(x q)) / Q(x)`` recovered as an even Laurent polynomial."""
    Qf = _qcall(Q)
    q = gauge.q
    window = tuple(window) if window is not None else _t_window(gauge)
    n = len(exponents(window, "even"))
    rng = np.random.default_rng(11)
    for _ in range(4):
        radius = rng.uniform(0.8, 1.25)
        xs = sample_points(n + extra, radius, "even", rng.uniform(0, 1))
        qv = np.array([Qf(x) for x in xs])
        if np.abs(qv).min() > 1e-8 * np.abs(qv).max():
            break
    else:
        raise NumericError("could not place nodes away from the roots of Q")
    ys = np.array([(gauge.a(x) * Qf(x / q) + gauge.d(x) * Qf(x * q)) / Qf(x) for x in xs])
    poly, resid = from_samples(xs, ys, window, "even", full=True)
    scale = max(np.abs(ys).max(), 1e-300)
    if resid > check * scale:
        raise ConsistencyError(f"TQ quotient is not an even Laurent polynomial on {window} "
                               f"(misfit {resid / scale:.3g})")
    if np.abs(poly.coeffs.imag).max() > 1e-8 * max(poly.norm(), 1e-300):
        raise ConsistencyError("recovered eigenvalue has non-real coefficients")
    return poly.real()


# uniqueness ----------------------------------------------------------------

def default_degree_cap(gauge):
    nbar = _t_window(gauge)[1]
    l = _l(gauge.p)
    return 2 * (2 * l * nbar) + 2 * l


def tq_map(t, gauge, degree):
    """Matrix of ``Q -> t Q - a Q(x/q) - d Q(x q)`` on polynomials of degree <= ``degree``."""
    if not (isinstance(gauge.a, LaurentPoly) and isinstance(gauge.d, LaurentPoly)):
        raise TypeError("the TQ map needs Laurent-polynomial coefficients")
    q = gauge.q
    cols = []
    for j in range(degree + 1):
        img = (t - gauge.a * q ** (-j) - gauge.d * q ** j).shifted(j)
        cols.append(img)
    lo = min(c.k_min for c in cols)
    hi = max(c.k_max for c in cols)
    M = np.zeros((hi - lo + 1, degree + 1), dtype=complex)
    for j, c in enumerate(cols):
        M[c.k_min - lo:c.k_max - lo + 1, j] = c.coeffs
    return M


def q_kernel_dimension(t, gauge, degree=None, rel=1e-8):
    """Numerical kernel dimension of the TQ map up to the degree cap."""
    degree = default_degree_cap(gauge) if degree is None else degree
    if degree < 0:
        return 0
    s = np.linalg.svd(tq_map(t, gauge, degree), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return degree + 1
    small = int(np.sum(s < rel * s[0]))
    return small + max(0, degree + 1 - s.size)


def p_string_free_lines(t, gauge, degree=None, rel=1e-8):
    """Kernel lines not obtained by multiplying a lower solution by a p-string."""
    degree = default_degree_cap(gauge) if degree is None else degree
    return q_kernel_dimension(t, gauge, degree, rel) - q_kernel_dimension(t, gauge, degree - gauge.p, rel)


# gauge-invariant diagnostics --------------------------------------------------

def fusion_determinant(params, t, lam, avg=None):
    """Gauge-independent form of det D built from the quantum determinant.

    The hopping entries are replaced by ``1`` and ``det_q(lam q**(i+1))``, whose
    products are what the pointwise relation ``a(x q)d(x) = det_q(x q)`` fixes;
    the corner cycles are then removed and replaced by the average trace.
    """
    avg = avg if avg is not None else average_monodromy(params)
    p, q = params.p, params.q
    dq = qdet_scalar(params)
    D = np.zeros((p, p), dtype=complex)
    for i in range(p):
        x = lam * q ** i
        D[i, i] = t(x)
        D[i, (i - 1) % p] -= 1.0
        D[i, (i + 1) % p] -= dq(x * q)
    Lam = lam ** p
    cyc = np.prod([dq(lam * q ** k) for k in range(p)])
    return complex(np.linalg.det(D) + 1 + cyc - (avg.A(Lam) + avg.D(Lam)))


def fusion_residual(params, t, avg=None, points=(0.81 + 0.2j, 1.17j, 0.55 + 0.62j, 1.3)):
    avg = avg if avg is not None else average_monodromy(params)
    p, q = params.p, params.q
    dq = qdet_scalar(params)
    worst = 0.0
    for lam in points:
        scale = 1.0
        for i in range(p):
            x = lam * q ** i
            scale *= abs(t(x)) + 1 + abs(dq(x * q))
        scale = max(scale, abs(avg.A(lam ** p)) + abs(avg.D(lam ** p)))
        worst = max(worst, abs(fusion_determinant(params, t, lam, avg)) / scale)
    return float(worst)


# solutions of the functional equation ---------------------------------------

def _edge_coefficients(params, k):
    th = principal_root(theta_average(params), params.p) * params.qpow(k)
    pk = np.prod(np.array(params.kappa) / 1j)
    Xi = np.prod(params.xi)
    c = th + 1 / th
    return (pk * Xi * c).real, (pk / Xi * c).real


class _DetSampler:
    """det D coefficients for many ``t`` with the gauge values cached at fixed nodes."""

    def __init__(self, gauge, nbar):
        p, q = gauge.p, gauge.q
        self.window = (-nbar, nbar)
        self.Lams = sample_points(len(exponents(self.window, "even")), 1.0, "even", 0.23)
        lams = np.array([_lam_of(L, p) for L in self.Lams])
        self.xs = lams[:, None] * q ** np.arange(p)[None, :]
        self.av = np.vectorize(gauge.a)(self.xs)
        self.dv = np.vectorize(gauge.d)(self.xs)
        self.p = p
        self.scale = max(float(np.prod(np.abs(self.av) + np.abs(self.dv) + 1.0, axis=1).max()), 1e-300)

    def poly(self, t):
        p = self.p
        tv = t(self.xs)
        D = np.zeros((len(self.Lams), p, p), dtype=complex)
        idx = np.arange(p)
        D[:, idx, idx] = tv
        D[:, idx, (idx + 1) % p] -= self.dv
        D[:, idx, (idx - 1) % p] -= self.av
        return from_samples(self.Lams, np.linalg.det(D), self.window, "even")


def functional_equation_solutions(params, gauge, seed=0, starts=300, tol=1e-10):
    """Real even ``t`` with ``det D == 0`` for the given gauge.

    For even chains the extreme coefficients are fixed sector by sector from
    the Theta grading and only the inner ones are solved for.  With one
    unknown the determinant is a degree-p polynomial in it and is solved
    exactly; otherwise a seeded multistart least-squares search is used.
    Returns :class:`SpectrumRecord` objects without eigenvectors.
    """
    N, p = params.N, params.p
    nbar = _t_window(gauge)[1]
    exps = exponents((-nbar, nbar), "even")
    sectors = range(p) if N % 2 == 0 else [None]
    found = []
    for k in sectors:
        if k is None:
            free, fixed = exps, {}
            eq_exps = exps
        else:
            lo, hi = _edge_coefficients(params, k)
            fixed = {-nbar: lo, nbar: hi}
            free = [e for e in exps if e not in fixed]
            eq_exps = free

        def make_t(x, fixed=fixed, free=free):
            terms = dict(fixed)
            terms.update({e: float(v) for e, v in zip(free, x)})
            return LaurentPoly.from_dict(terms, "even").padded(-nbar, nbar)

        sampler = _DetSampler(gauge, nbar)

        def equations(x, make_t=make_t, eq_exps=eq_exps, sampler=sampler):
            poly = sampler.poly(make_t(x))
            return np.array([poly.coeff(e) for e in eq_exps]) / sampler.scale

        sols = []
        if len(free) == 1:
            grid = np.linspace(-1.0, 1.0, p + 1) * 3.0
            vals = [equations([g])[0] for g in grid]
            coef = np.polyfit(grid, np.real(vals), p)
            for r in np.roots(coef):
                if abs(r.imag) < 1e-7 * max(1.0, abs(r)):
                    sols.append(np.array([r.real]))
        else:
            rng = np.random.default_rng(seed)
            span = 3.0 * max(1.0, max(abs(v) for v in fixed.values()) if fixed else 1.0)
            for _ in range(starts):
                x0 = rng.normal(size=len(free)) * span
                res = least_squares(lambda x: np.real(equations(x)), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
                if np.abs(res.fun).max() < 1e-9 and not any(np.abs(res.x - s).max() < 1e-6 for s in sols):
                    sols.append(res.x)
        for x in sols:
            t = make_t(x)
            fam = DMatrixFamily.build(t, gauge)
            try:
                r = detD_norm(fam)
            except ConsistencyError:
                continue
            if r < tol ** 0.5 * 1e-2:
                found.append((t, k, r))
    found.sort(key=lambda item: tuple(np.round(item[0].padded(-nbar, nbar).coeffs.real, 9)))
    records = []
    for i, (t, k, r) in enumerate(found):
        gap = min((t.distance(o[0]) for j, o in enumerate(found) if j != i), default=np.inf)
        records.append(SpectrumRecord(t, None, k, float(gap), float(r)))
    return records


# the Q-operator ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QOperator:
    coefficients: tuple
    qbars: tuple
    degree: int
    residuals: dict

    def __call__(self, lam):
        y = lam * lam
        out = np.zeros_like(self.coefficients[0])
        for c in self.coefficients[::-1]:
            out = out * y + c
        return out


def q_bar(Q, p):
    """``Q`` times ``lambda**p`` when ``a_t`` is odd, making it even in lambda."""
    return Q.Q.shifted(p) if Q.a_t % 2 else Q.Q


def assemble_q_operator(params, records, qpolys, gauge, transfer_op=None, theta_op=None,
                        points=((0.83 + 0.21j, 1.14 - 0.4j), (-0.7 + 0.9j, 0.95 + 0.05j))):
    """Spectral assembly of the operator family Q(lambda) and its checks.

    ``records`` must carry orthonormal eigenvectors.  ``transfer_op`` and
    ``theta_op`` default to the operators of ``params``; overriding them lets
    the assembly run on a synthetic spectrum.
    """
    p, N = params.p, params.N
    if len(records) != len(qpolys):
        raise ValueError("one Q polynomial per record is required")
    V = np.column_stack([r.eigvec for r in records])
    gram = V.conj().T @ V
    if np.abs(gram - np.eye(V.shape[1])).max() > 1e-8:
        raise NotApplicableError("eigenvectors are not orthonormal; the spectrum must be simple")
    T = transfer_op if transfer_op is not None else transfer(params)
    l, nbar = params.l, params.Nbar
    top = 2 * l * (nbar + 1)
    bars = [q_bar(Q, p) for Q in qpolys]
    for b in bars:
        if b.parity != "even" or b.k_min < 0 or b.k_max > 2 * top:
            raise ConsistencyError("Q-bar is not an even polynomial within the degree bound")
    coeffs = []
    for n in range(top + 1):
        vals = np.array([b.coeff(2 * n) for b in bars])
        coeffs.append((V * vals) @ V.conj().T)
    op = QOperator(tuple(coeffs), tuple(bars), 0, {})
    norms = [np.abs(c).max() for c in coeffs]
    big = max(norms)
    degree = max(n for n, v in enumerate(norms) if v > 1e-12 * big)

    def comm(X, Y):
        return np.abs(X @ Y - Y @ X).max() / max(np.abs(X).max() * np.abs(Y).max(), 1e-300)

    q = params.q
    res = {"commute_T": 0.0, "commute_Q": 0.0, "tq": 0.0}
    for lam, mu in points:
        Ql, Qm, Tm, Tl = op(lam), op(mu), T(mu), T(lam)
        res["commute_T"] = max(res["commute_T"], comm(Ql, Tm))
        res["commute_Q"] = max(res["commute_Q"], comm(Ql, Qm))
        lhs = Tl @ Ql
        rhs = gauge.a(lam) * op(lam / q) + gauge.d(lam) * op(lam * q)
        scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
        res["tq"] = max(res["tq"], float(np.abs(lhs - rhs).max() / scale))
    if N % 2 == 0:
        th = theta_op if theta_op is not None else theta_operator(params)
        res["theta"] = max(comm(op(lam), th) for lam, _ in points)
    res["self_adjoint"] = max(float(np.abs(c - c.conj().T).max() / max(np.abs(c).max(), 1e-300))
                              for c in coeffs)
    return QOperator(tuple(coeffs), tuple(bars), int(degree), {k: float(v) for k, v in res.items()})


# separated wave functions ----------------------------------------------------------

def factorized_wavefunction(basis, Q, k=None):
    """``prod_r Q(eta_r)``, times ``eta_N**k`` for even chains."""
    Qf = _qcall(Q)
    params = basis.params
    out = np.empty(basis.size, dtype=complex)
    for j, eta in enumerate(basis.eta):
        val = np.prod([Qf(x) for x in eta[:basis.nsep]])
        if params.N % 2 == 0:
            if k is None:
                raise ValueError("sector k is required for even chains")
            val *= eta[params.N - 1] ** k
        out[j] = val
    return out


def wavefunction_factorization_residual(record, Q, basis, floor=1e-6):
    """Max relative deviation of ``<eta|t>`` from the factorized form after one global fit."""
    from .sov import overlaps
    psi = overlaps(basis, record.eigvec)
    model = factorized_wavefunction(basis, Q, record.theta_k)
    mm = np.vdot(model, model)
    if mm == 0:
        return float("inf")
    c = np.vdot(model, psi) / mm
    top = np.abs(psi).max()
    keep = np.abs(psi) > floor * top
    dev = np.abs(psi - c * model)[keep] / np.abs(psi)[keep]
    return float(dev.max()) if dev.size else float("inf")
