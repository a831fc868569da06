"""Central averages of the monodromy entries and the SOV gauge functions.

The average of an operator family ``O(lambda)`` is the orbit product
``prod_k O(q**k lambda)``; it is a scalar Laurent polynomial in
``Lambda = lambda**p``.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL
from .errors import CentralityError, ConsistencyError, DegeneracyError, GaugeError
from .laurent import LaurentPoly, average, interpolate, roots
from .model import ModelParams, qdet_scalar, theta_average

_I = 1j


def _cmp_scale(x, y):
    return max(abs(x), abs(y), 1e-300)


def average_lax(params, n):
    """Closed-form 2x2 average of the Lax matrix of site ``n`` (1-based)."""
    p = params.p
    K, X, U, V = (params.K[n - 1], params.X[n - 1], params.U[n - 1], params.V[n - 1])
    ip = _I ** p
    L11 = LaurentPoly.constant(U * (K * K * V + 1 / V))
    L22 = LaurentPoly.constant((K * K / V + V) / U)
    L12 = LaurentPoly.from_dict({1: K * V / X / ip, -1: -K * X / V / ip}, "odd")
    L21 = LaurentPoly.from_dict({1: K / (X * V) / ip, -1: -K * X * V / ip}, "odd")
    return ((L11, L12), (L21, L22))


def _mul2(X, Y):
    return tuple(tuple(X[i][0] * Y[0][j] + X[i][1] * Y[1][j] for j in range(2)) for i in range(2))


def classical_product(params):
    M = average_lax(params, 1)
    for n in range(2, params.N + 1):
        M = _mul2(average_lax(params, n), M)
    return M


def _canonical_sign(z):
    """Representative of ``{z, -z}`` with positive real part (or positive imaginary part)."""
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        return -z
    return z


def _symmetric_roots(f, tol=DEFAULT_TOL):
    """Roots ``Z`` of ``f = c prod (L/Z - Z/L)`` (one per +/- pair) and ``c``."""
    rs = roots(f, tol)
    found = []
    for r, m in rs.roots:
        found.extend([r] * m)
    # roots come in +/- pairs; keep one representative of each
    reps = []
    used = [False] * len(found)
    for i, r in enumerate(found):
        if used[i]:
            continue
        j = min((k for k in range(len(found)) if not used[k] and k != i),
                key=lambda k: abs(found[k] + r), default=None)
        if j is None or abs(found[j] + r) > 1e-6 * max(abs(r), 1e-300):
            raise ConsistencyError("roots of an expected parity-symmetric polynomial are not paired")
        used[i] = used[j] = True
        reps.append(_canonical_sign(r))
    reps.sort(key=lambda z: (round(abs(z), 12), np.angle(z)))
    lead = f.coeff(f.k_max) * np.prod(reps) if reps else f.coeff(f.k_max)
    return reps, complex(lead)


def symmetric_form(lead, zs):
    """``lead * prod (x/z - z/x)`` as a Laurent polynomial."""
    out = LaurentPoly.constant(lead)
    for z in zs:
        out = out * LaurentPoly.from_dict({1: 1 / z, -1: -z}, "odd")
    return out


@dataclass(frozen=True, eq=False)
class AverageMonodromy:
    A: LaurentPoly
    B: LaurentPoly
    C: LaurentPoly
    D: LaurentPoly
    Z_list: tuple
    Z_A: complex | None
    Z_D: complex | None
    A_at_Z: tuple
    D_at_Z: tuple
    Z_lead: complex | None = None
    params: ModelParams | None = field(default=None, repr=False)

    def matrix(self):
        return ((self.A, self.B), (self.C, self.D))

    def to_json(self):
        def pairs(zs):
            return [[float(z.real), float(z.imag)] for z in zs]
        doc = {k: getattr(self, k).to_json() for k in ("A", "B", "C", "D")}
        doc.update(Z_list=pairs(self.Z_list), A_at_Z=pairs(self.A_at_Z), D_at_Z=pairs(self.D_at_Z))
        for k in ("Z_A", "Z_D", "Z_lead"):
            v = getattr(self, k)
            doc[k] = None if v is None else pairs([v])[0]
        return doc


def average_monodromy(params, tol=DEFAULT_TOL):
    """Average monodromy from the ordered product of one-site averages."""
    (A, B), (C, D) = classical_product(params)
    if B.is_zero(1e-14 * max(A.norm(), D.norm(), 1.0)):
        raise DegeneracyError("average of B vanishes identically; resample parameters")
    p = params.p
    ipK = np.prod(params.K / _I ** p)
    Zs, _ = _symmetric_roots(B, tol)
    lead = None
    if params.N % 2 == 0:
        # B = Z_N * prod(K/i^p) * prod(L/Z_a - Z_a/L)
        lead = B.coeff(B.k_max) * np.prod(Zs) / ipK
    else:
        # the sign of the product of representatives is fixed by B itself
        ref = symmetric_form(ipK, Zs)
        ratio = B.coeff(B.k_max) / ref.coeff(ref.k_max)
        if abs(ratio + 1) < 1e-6:
            Zs[-1] = -Zs[-1]
        elif abs(ratio - 1) > 1e-6:
            raise ConsistencyError("average of B does not have the expected product form")
    if len(set(np.round(Zs, 8))) != len(Zs):
        raise DegeneracyError("zeros of the average of B are not distinct; resample parameters")
    Z_A = Z_D = None
    if params.N % 2 == 0:
        th = theta_average(params)
        Z_A = complex(th * np.prod(params.X) / np.prod(Zs))
        Z_D = Z_A / th ** 2
    return AverageMonodromy(A, B, C, D, tuple(complex(z) for z in Zs), Z_A, Z_D,
                           tuple(complex(A(z)) for z in Zs), tuple(complex(D(z)) for z in Zs),
                           None if lead is None else complex(lead), params)


def _commute_check(family, points):
    mats = [family(x) for x in points]
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            X, Y = mats[i], mats[j]
            scale = max(np.abs(X).max() * np.abs(Y).max(), 1e-300)
            if np.abs(X @ Y - Y @ X).max() > 1e-8 * scale:
                raise ConsistencyError("operator family does not commute at distinct points")


def operator_average(family, p, tol=1e-8):
    """Orbit product of an operator family, checked to be a multiple of the identity.

    ``family`` is a :class:`~sgsov.model.OperatorLaurent`; the family is assumed
    commuting (this is checked at a few points), so the order of the factors and
    the choice of primitive root do not matter.
    """
    w = np.exp(2j * np.pi / p)
    _commute_check(family, [0.83 + 0.21j, 1.17 - 0.4j, -0.6 + 0.9j])
    eye = np.eye(family.dim)
    worst = [0.0]

    def scalar(Lam):
        lam = complex(Lam) ** (1.0 / p)
        prod = eye
        for k in range(1, p + 1):
            prod = prod @ family(w ** k * lam)
        c = np.trace(prod) / family.dim
        off = np.abs(prod - c * eye).max() / max(np.abs(prod).max(), 1e-300)
        worst[0] = max(worst[0], off)
        return c

    lo, hi = family.window()
    poly, _ = interpolate(scalar, (lo, hi), family.parity, phase=0.29)
    if worst[0] > tol:
        raise CentralityError(f"orbit product is not scalar (off-scalar residual {worst[0]:.3g})")
    return poly


def averaged_qdet(params):
    """``prod_k det_q(q**k lambda)`` as a Laurent polynomial in ``Lambda``."""
    return average(qdet_scalar(params), params.p)


def averaged_qdet_closed(params):
    p = params.p
    out = LaurentPoly.constant(1.0)
    for K, X in zip(params.K, params.X):
        for h in (1, -1):
            mu = h * _I ** p * K ** h * X
            out = out * LaurentPoly.from_dict({1: 1 / mu, -1: -mu}, "odd") * K
    return out


def _poly_rel(f, g):
    return f.distance(g) / max(f.norm(), g.norm(), 1e-300)


def conjugation_residual(avg):
    """``(A(L))* = D(L*)`` and ``(B(L))* = C(eps L*)`` coefficientwise."""
    eps = avg.params.epsilon
    r1 = _poly_rel(avg.A.conj(), avg.D)
    r2 = _poly_rel(avg.B.conj(), avg.C.scaled(eps))
    return max(r1, r2)


def qdet_average_residual(avg):
    lhs = avg.A * avg.D - avg.B * avg.C
    return _poly_rel(lhs, averaged_qdet_closed(avg.params))


def recursion_report(params, M_split, tol=DEFAULT_TOL):
    """Residuals of the subchain recursion for averages.

    Subchain 2 holds the last ``M_split`` sites and multiplies from the left.
    The full-chain averages are measured as operator orbit products, the
    subchain ones come from the classical product, so the comparison is not
    tautological.
    """
    from .model import build_monodromy

    N = params.N
    if not 1 <= M_split < N:
        raise ValueError("M_split must satisfy 1 <= M < N")
    sub1 = params.subchain(1, N - M_split)
    sub2 = params.subchain(N - M_split + 1, N)
    m1 = average_monodromy(sub1, tol)
    m2 = average_monodromy(sub2, tol)
    ops = build_monodromy(params)
    p = params.p
    full = {name: operator_average(ops[i][j], p)
            for name, (i, j) in {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}.items()}
    A1, B1, C1, D1 = m1.A, m1.B, m1.C, m1.D
    A2, B2, C2, D2 = m2.A, m2.B, m2.C, m2.D
    rec = {"B": A2 * B1 + B2 * D1, "C": D2 * C1 + C2 * A1,
           "A": A2 * A1 + B2 * C1, "D": D2 * D1 + C2 * B1}
    out = {f"lemma_{k}": _poly_rel(full[k], rec[k]) for k in rec}

    avg = average_monodromy(params, tol)
    ipK = np.prod(params.K / _I ** p)
    lead = avg.Z_lead if N % 2 == 0 else 1.0
    rhs = symmetric_form(lead * ipK, avg.Z_list)
    out["CB_prime"] = _poly_rel(rec["B"], rhs)

    dq1 = averaged_qdet_closed(sub1)
    dq2 = averaged_qdet_closed(sub2)
    worst_D = worst_A = 0.0
    for Z in avg.Z_list:
        dval = -dq2(Z) * B1(Z) / B2(Z)
        aval = -dq1(Z) * B2(Z) / B1(Z)
        worst_D = max(worst_D, abs(full["D"](Z) - dval) / _cmp_scale(full["D"](Z), dval))
        worst_A = max(worst_A, abs(full["A"](Z) - aval) / _cmp_scale(full["A"](Z), aval))
    out["exrec_D"] = worst_D
    out["exrec_A"] = worst_A
    if N % 2 == 0:
        out["exrec_ZD"] = _zd_recursion_residual(params, avg, m1, m2, sub1, sub2)
    out["max"] = max(out.values())
    return out


def _chi_data(sub_avg, sub, extra):
    """Z-data of a subchain: its B zeros plus, for even length, ``Z_A`` or ``Z_D``."""
    chis = list(sub_avg.Z_list)
    if sub.N % 2 == 0:
        chis.append(sub_avg.Z_A if extra == "A" else sub_avg.Z_D)
    return chis


def _zd_recursion_residual(params, avg, m1, m2, sub1, sub2):
    # Product over subchain 2 taken over its M sites; for even subchains the
    # extra datum is Z_D of subchain 1 and Z_A of subchain 2 (see notes).
    M = sub2.N
    chi1 = _chi_data(m1, sub1, "D")
    chi2 = _chi_data(m2, sub2, "A")
    X = params.X
    Nm = params.N - M
    val = np.prod(chi1) / np.prod(avg.Z_list)
    for b in range(1, M + 1):
        val *= X[Nm + b - 1] ** 2 / chi2[b - 1]
    return float(abs(val - avg.Z_D) / _cmp_scale(val, avg.Z_D))


def recursion_residual(params, M_split, tol=DEFAULT_TOL):
    return recursion_report(params, M_split, tol)["max"]


# gauge -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaugeCoefficients:
    a: LaurentPoly
    d: LaurentPoly
    z_roots: tuple
    Z_roots: tuple
    a_lead: complex
    theta: complex | None
    prescriptions: tuple
    residuals: dict
    q: complex = 1.0
    p: int = 1

    def to_json(self):
        def pairs(zs):
            return [[float(z.real), float(z.imag)] for z in zs]
        return {"a": self.a.to_json(), "d": self.d.to_json(),
                "z_roots": pairs(self.z_roots), "Z_roots": pairs(self.Z_roots),
                "a_lead": pairs([self.a_lead])[0],
                "theta": None if self.theta is None else pairs([self.theta])[0],
                "prescriptions": list(self.prescriptions),
                "residuals": dict(self.residuals)}


def principal_root(z, p):
    """p-th root with the smallest nonnegative argument."""
    r = abs(z) ** (1.0 / p)
    phi = np.angle(z) % (2 * np.pi)
    return complex(r * np.exp(1j * phi / p))


def _classify(Zs, rel=1e-7):
    """Assign a prescription label to each zero: real/imaginary, multiple, conjugate, generic."""
    n = len(Zs)
    labels = [None] * n
    partner = [None] * n
    mult_group = [None] * n
    for i in range(n):
        for j in range(i):
            if abs(Zs[i] - Zs[j]) <= rel * abs(Zs[i]):
                mult_group[i] = mult_group[j] if mult_group[j] is not None else j
                mult_group[j] = mult_group[i]
    for i in range(n):
        z2 = Zs[i] ** 2
        if mult_group[i] is not None:
            labels[i] = "b"
        elif abs(z2.imag) <= rel * abs(z2):
            labels[i] = "a"
    for i in range(n):
        if labels[i] is not None:
            continue
        for j in range(n):
            if j != i and labels[j] is None and partner[j] is None and \
                    abs(np.conj(Zs[i]) - Zs[j]) <= rel * abs(Zs[i]):
                partner[i], partner[j] = j, i
                labels[i] = labels[j] = "c"
                break
        if labels[i] is None:
            labels[i] = "generic"
    return labels, partner, mult_group


def gauge_coefficients(params, avg=None, tol=DEFAULT_TOL):
    """Fix the twisted SOV gauge ``a(lambda)``, ``d(lambda) = a(lambda*)*``."""
    avg = avg if avg is not None else average_monodromy(params, tol)
    p, q = params.p, params.q
    if avg.A.distance(avg.D) <= 1e-10 * max(avg.A.norm(), 1e-300):
        raise DegeneracyError("average values of A and D coincide; the twisted gauge needs A != D")
    Zs, A_lead = _symmetric_roots(avg.A, tol)
    labels, partner, mult_group = _classify(Zs, tol.root_cluster)
    zs = [None] * len(Zs)
    for i, Z in enumerate(Zs):
        if labels[i] == "a":
            # the unique p-th root with z**2 / q real
            x = np.real(Z ** 2) ** (1.0 / p) if np.real(Z ** 2) >= 0 else -abs(np.real(Z ** 2)) ** (1.0 / p)
            z = np.sqrt(q * x + 0j)
            zs[i] = complex(z if abs(z ** p - Z) < abs(-z ** p - Z) else -z)
        elif labels[i] == "b" and mult_group[i] < i:
            zs[i] = zs[mult_group[i]]
        elif labels[i] == "c" and partner[i] < i:
            zs[i] = complex(np.conj(zs[partner[i]] / q))
        else:
            zs[i] = principal_root(Z, p)
    theta = None
    if params.N % 2 == 0:
        base = np.prod([_I * k for k in params.kappa]) * params.qpow(params.N)
        s = A_lead / base ** p
        if abs(abs(s) - 1) > 1e-6 or abs(s.imag) > 1e-6:
            raise ConsistencyError(f"leading coefficient of the A average is not +-(prod i kappa)^p: ratio {s}")
        s = float(np.sign(s.real))
        a_lead = s * base
        theta = principal_root(theta_average(params), p)
        target = s * theta * np.prod(params.xi) * params.qpow(-params.N)
        ratio = target / np.prod(zs)
        k = int(np.round(np.angle(ratio) / (2 * np.pi / p))) % p
        if abs(ratio - np.exp(2j * np.pi * k / p)) > 1e-6 * abs(ratio):
            raise ConsistencyError("root product cannot match the asymptotic normalisation")
        if k:
            free = [i for i, lab in enumerate(labels) if lab == "generic"]
            groups = {}
            for i, lab in enumerate(labels):
                if lab == "b":
                    groups.setdefault(mult_group[i], []).append(i)
            if free:
                zs[free[-1]] *= np.exp(2j * np.pi * k / p)
            else:
                for members in groups.values():
                    r = len(members)
                    if np.gcd(r, p) == 1:
                        j = next(j for j in range(p) if (j * r) % p == k)
                        for i in members:
                            zs[i] *= np.exp(2j * np.pi * j / p)
                        break
                else:
                    raise GaugeError("no free root to meet the asymptotic normalisation", tuple(Zs))
    else:
        a_lead = principal_root(A_lead, p)
    a = symmetric_form(a_lead, zs)
    d = a.conj()
    g = GaugeCoefficients(a, d, tuple(complex(z) for z in zs), tuple(Zs), complex(a_lead),
                          None if theta is None else complex(theta), tuple(labels), {}, complex(q), p)
    res = gauge_residuals(params, avg, g, tol)
    object.__setattr__(g, "residuals", res)
    if res["R2"] > 0 or res["R3"] > 0:
        raise GaugeError("gauge zeros violate p-string freedom or disjointness", tuple(Zs))
    for key in ("average_a", "average_d", "R1"):
        if res[key] > 1e-8:
            raise ConsistencyError(f"gauge invariant {key} fails: {res[key]:.3g}")
    return g


def _zero_set(f, tol):
    rs = roots(f, tol)
    return [r for r, _ in rs.roots]


def gauge_residuals(params, avg, g, tol=DEFAULT_TOL):
    p, q = params.p, params.q
    out = {"average_a": _poly_rel(average(g.a, p), avg.A),
           "average_d": _poly_rel(average(g.d, p), avg.D),
           "R1": _poly_rel(g.a.conj(), g.d)}
    za = _zero_set(g.a, tol)
    rel = 1e-7
    strings = 0
    for r in za:
        for k in range(1, p):
            if any(abs(q ** k * r - s) <= rel * abs(r) for s in za):
                strings += 1
    out["R2"] = strings
    dz = []
    for h in range(p - 1):
        dz.extend(z / q ** h for z in _zero_set(g.d, tol))
    out["R3"] = sum(1 for r in za for s in dz if abs(r - s) <= rel * abs(r))
    if params.N % 2 == 0:
        N = params.N
        kap, xi = np.array(params.kappa), np.array(params.xi)
        at0 = g.a.coeff(-N)  # lambda^N a(lambda) as lambda -> 0
        atinf = g.a.coeff(N)
        want0 = np.prod(_I * kap * xi) * g.theta
        wantinf = np.prod(_I * kap / xi) / g.theta * params.qpow(2 * N)
        out["asymptotics"] = max(abs(at0 - want0) / abs(want0), abs(atinf - wantinf) / abs(wantinf))
    return out


def a_neq_d_gap(avg):
    """Smallest relative gap between the averages of A and D on the zeros of B."""
    if not avg.Z_list:
        A0, D0 = avg.A.coeff(0), avg.D.coeff(0)
        return abs(A0 - D0) / _cmp_scale(A0, D0)
    return min(abs(a - d) / _cmp_scale(a, d) for a, d in zip(avg.A_at_Z, avg.D_at_Z))
