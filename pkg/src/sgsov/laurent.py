"""Complex Laurent polynomials in one variable.

A :class:`LaurentPoly` stores a dense coefficient vector starting at exponent
``k_min`` together with an optional parity flag.  Everything here is a pure
function of immutable values.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import DEFAULT_TOL
from .errors import ConditioningError, ConsistencyError, DomainError, NumericError

PARITIES = ("even", "odd", None)
MAX_CONDITION = 1e12


def _parity_of(k):
    return "even" if k % 2 == 0 else "odd"


def _matches(k, parity):
    return parity is None or _parity_of(k) == parity


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    k_min: int
    coeffs: np.ndarray
    parity: str | None = None

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        if self.parity is not None:
            wrong = np.array([not _matches(self.k_min + j, self.parity)
                              for j in range(c.size)])
            if wrong.any():
                scale = np.abs(c).max()
                if np.abs(c[wrong]).max() > 1e-12 * max(scale, 1e-300):
                    raise ValueError("coefficients inconsistent with parity flag")
                c[wrong] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "k_min", int(self.k_min))
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, terms, parity=None):
        terms = {int(k): complex(v) for k, v in terms.items()}
        if not terms:
            return cls.zero(parity)
        lo, hi = min(terms), max(terms)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for k, v in terms.items():
            c[k - lo] += v
        return cls(lo, c, parity)

    @classmethod
    def zero(cls, parity=None):
        return cls(0, np.zeros(1), parity)

    @classmethod
    def constant(cls, value):
        return cls(0, np.array([value]), "even")

    @classmethod
    def monomial(cls, k, value=1.0):
        return cls(k, np.array([value]), _parity_of(k))

    @classmethod
    def from_roots(cls, roots, lead=1.0, shift=0):
        """``lead * x**shift * prod(x - r)`` for the given roots."""
        c = npoly.polyfromroots(list(roots)) if len(roots) else np.ones(1)
        return cls(shift, lead * np.asarray(c, dtype=complex))

    # basic properties ---------------------------------------------------
    @property
    def k_max(self):
        return self.k_min + self.coeffs.size - 1

    @property
    def window(self):
        return (self.k_min, self.k_max)

    def coeff(self, k):
        j = k - self.k_min
        if 0 <= j < self.coeffs.size:
            return self.coeffs[j]
        return 0.0j

    def terms(self):
        return {self.k_min + j: c for j, c in enumerate(self.coeffs) if c != 0}

    def norm(self):
        return float(np.abs(self.coeffs).max())

    def is_zero(self, tol=0.0):
        return self.norm() <= tol

    # evaluation ---------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        if self.k_min < 0 and np.any(x == 0):
            raise DomainError("Laurent polynomial with negative exponents evaluated at 0")
        val = np.zeros_like(x)
        for c in self.coeffs[::-1]:
            val = val * x + c
        if self.k_min:
            val = val * x ** self.k_min
        return val if val.ndim else complex(val)

    # algebra ------------------------------------------------------------
    def _aligned(self, other):
        lo = min(self.k_min, other.k_min)
        hi = max(self.k_max, other.k_max)
        a = np.zeros(hi - lo + 1, dtype=complex)
        b = np.zeros(hi - lo + 1, dtype=complex)
        a[self.k_min - lo:self.k_max - lo + 1] = self.coeffs
        b[other.k_min - lo:other.k_max - lo + 1] = other.coeffs
        return lo, a, b

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(other)
        lo, a, b = self._aligned(other)
        parity = self.parity if self.parity == other.parity else None
        return LaurentPoly(lo, a + b, parity)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.k_min, -self.coeffs, self.parity)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            c = np.convolve(self.coeffs, other.coeffs)
            parity = None
            if self.parity and other.parity:
                parity = "even" if self.parity == other.parity else "odd"
            return LaurentPoly(self.k_min + other.k_min, c, parity)
        return LaurentPoly(self.k_min, self.coeffs * complex(other), self.parity)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return LaurentPoly(self.k_min, self.coeffs / complex(scalar), self.parity)

    def __pow__(self, n):
        out = LaurentPoly.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def conj(self):
        """The polynomial ``x -> conj(f(conj(x)))``."""
        return LaurentPoly(self.k_min, self.coeffs.conj(), self.parity)

    def scaled(self, c):
        """The polynomial ``x -> f(c*x)``."""
        k = np.arange(self.k_min, self.k_max + 1)
        return LaurentPoly(self.k_min, self.coeffs * complex(c) ** k, self.parity)

    def shifted(self, m):
        """Multiply by ``x**m``."""
        parity = self.parity
        if parity is not None and m % 2:
            parity = "odd" if parity == "even" else "even"
        return LaurentPoly(self.k_min + m, self.coeffs, parity)

    def real(self):
        return LaurentPoly(self.k_min, self.coeffs.real, self.parity)

    def trim(self, tol=0.0):
        """Drop edge coefficients with modulus at most ``tol``."""
        nz = np.flatnonzero(np.abs(self.coeffs) > tol)
        if nz.size == 0:
            return LaurentPoly.zero(self.parity)
        return LaurentPoly(self.k_min + nz[0], self.coeffs[nz[0]:nz[-1] + 1], self.parity)

    def padded(self, k_min, k_max):
        """Same polynomial stored on the window ``[k_min, k_max]``."""
        if k_min > self.k_min or k_max < self.k_max:
            trimmed = self.trim()
            if k_min > trimmed.k_min or k_max < trimmed.k_max:
                raise ValueError("window does not contain the populated exponents")
            return trimmed.padded(k_min, k_max)
        c = np.zeros(k_max - k_min + 1, dtype=complex)
        c[self.k_min - k_min:self.k_max - k_min + 1] = self.coeffs
        return LaurentPoly(k_min, c, self.parity)

    def distance(self, other):
        _, a, b = self._aligned(other)
        return float(np.abs(a - b).max())

    def to_json(self):
        return {"k_min": self.k_min,
                "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
                "parity": self.parity}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["k_min"], [complex(re, im) for re, im in doc["coeffs"]],
                   doc.get("parity"))

    def __repr__(self):
        body = ", ".join(f"{k}: {c:.6g}" for k, c in self.terms().items())
        return f"LaurentPoly({{{body}}}, parity={self.parity!r})"


@dataclass(frozen=True)
class RootMultiset:
    zero_order: int
    roots: tuple

    def values(self):
        """Roots repeated according to multiplicity."""
        return [r for r, m in self.roots for _ in range(m)]

    def degree(self):
        return sum(m for _, m in self.roots) + self.zero_order

    def to_json(self):
        return {"zero_order": self.zero_order,
                "roots": [[[float(r.real), float(r.imag)], m] for r, m in self.roots]}


def evaluate(f, x):
    """Value of ``f`` at ``x``."""
    return f(x)


def exponents(window, parity=None):
    lo, hi = window
    return [k for k in range(lo, hi + 1) if _matches(k, parity)]


def sample_points(n, radius=1.0, parity=None, phase=0.0):
    """Interpolation nodes giving a DFT-like Vandermonde system.

    With a parity constraint the free variable is ``x**2``, so the nodes are
    square roots of scaled ``n``-th roots of unity.
    """
    s = 2 if parity else 1
    y = radius ** s * np.exp(2j * np.pi * (np.arange(n) + phase) / n)
    return y ** (1.0 / s)


def from_samples(xs, ys, window, parity=None, full=False):
    """Least-squares Laurent fit of ``ys`` at nodes ``xs`` on a window.

    The fit is exact when the number of nodes equals the number of free
    coefficients.  With ``full=True`` the maximal residual is also returned.
    """
    xs = np.asarray(xs, dtype=complex)
    ys = np.asarray(ys, dtype=complex)
    if np.any(xs == 0):
        raise DomainError("interpolation nodes must be nonzero")
    ks = exponents(window, parity)
    if len(np.unique(np.round(xs, 14))) < len(ks):
        raise ConditioningError("fewer distinct nodes than free coefficients")
    if not np.any(ys):
        poly = LaurentPoly(window[0], np.zeros(window[1] - window[0] + 1), parity)
        return (poly, 0.0) if full else poly
    vander = xs[:, None] ** np.array(ks)[None, :]
    cond = np.linalg.cond(vander)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ConditioningError(f"Vandermonde condition number {cond:.3g}", cond)
    sol, *_ = np.linalg.lstsq(vander, ys, rcond=None)
    resid = float(np.abs(vander @ sol - ys).max())
    c = np.zeros(window[1] - window[0] + 1, dtype=complex)
    for k, v in zip(ks, sol):
        c[k - window[0]] = v
    poly = LaurentPoly(window[0], c, parity)
    return (poly, resid) if full else poly


def interpolate(fn, window, parity=None, radius=1.0, phase=0.13, extra=0,
                rng=None, retries=4):
    """Reconstruct a Laurent polynomial from a callable.

    ``extra`` adds held-out nodes; the fit residual on them is returned so
    that callers can detect functions that are not Laurent polynomials on the
    claimed window.  On conditioning failure the radius is redrawn in
    (0.5, 2).
    """
    n = len(exponents(window, parity))
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(retries):
        xs = sample_points(n + extra, radius, parity, phase)
        ys = np.array([fn(x) for x in xs])
        try:
            return from_samples(xs, ys, window, parity, full=True)
        except ConditioningError:
            radius = rng.uniform(0.5, 2.0)
    raise ConditioningError("interpolation failed after radius resampling")


def _cluster(values, rel):
    order = sorted(range(len(values)), key=lambda j: (abs(values[j]), np.angle(values[j])))
    clusters = []
    for j in order:
        v = values[j]
        for cl in clusters:
            ref = np.mean(cl)
            if abs(v - ref) <= rel * max(abs(ref), abs(v), 1e-300):
                cl.append(v)
                break
        else:
            clusters.append([v])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


def roots(f, tol=DEFAULT_TOL, trim=1e-13, check=1e-8):
    """Nonzero roots of ``f`` with multiplicities.

    With a parity flag the roots are found in the squared variable and
    returned as ``+/-`` pairs.
    """
    g = f.trim(trim * f.norm())
    if g.is_zero():
        raise NumericError("roots of the zero polynomial are undefined")
    zero_order = g.k_min
    c = g.coeffs
    stride = 2 if f.parity is not None else 1
    reduced = c[::stride]
    if stride == 2 and np.any(np.abs(c[1::2]) > trim * f.norm()):
        raise NumericError("parity flag inconsistent with coefficients")
    try:
        ys = npoly.polyroots(reduced) if reduced.size > 1 else np.array([])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"companion eigen-solve failed: {exc}") from exc
    if stride == 2:
        sq = np.sqrt(ys.astype(complex))
        found = list(sq) + list(-sq)
    else:
        found = list(ys.astype(complex))
    clustered = _cluster(found, tol.root_cluster)
    absc = np.abs(f.coeffs)
    ks = np.arange(f.k_min, f.k_max + 1)
    for r, _ in clustered:
        scale = float(np.sum(absc * np.abs(r) ** ks))
        if abs(f(r)) > check * scale:
            raise NumericError(f"root {r} fails residual check")
    return RootMultiset(zero_order, tuple(clustered))


def average(f, p):
    """Orbit product ``F(x**p) = prod_k f(w**k x)`` over the p-th roots ``w``.

    The orbit of a primitive p-th root of unity is the full group, so the
    result does not depend on which primitive root is meant.
    """
    w = np.exp(2j * np.pi / p)
    ks = np.arange(f.k_min, f.k_max + 1)
    prod = np.ones(1, dtype=complex)
    for k in range(1, p + 1):
        prod = np.convolve(prod, f.coeffs * w ** (k * ks))
    lo = p * f.k_min
    idx = np.arange(prod.size)
    keep = (lo + idx) % p == 0
    scale = max(np.abs(prod).max(), 1e-300)
    if np.abs(prod[~keep]).max(initial=0.0) > 1e-9 * scale:
        raise ConsistencyError("orbit product depends on more than x**p")
    return LaurentPoly(f.k_min, prod[keep], f.parity)


def is_real(f, tol=DEFAULT_TOL):
    """True when all coefficients are real within tolerance."""
    return float(np.abs(f.coeffs.imag).max()) <= tol.abs + tol.rel * f.norm()
