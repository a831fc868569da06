import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgsov import averages as av
from sgsov import model as mdl
from sgsov.errors import CentralityError, DegeneracyError
from sgsov.laurent import average
from sgsov.model import OperatorLaurent, sample_params


@pytest.mark.parametrize("entry", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_operator_average_matches_classical(p3n2, entry):
    avg = av.average_monodromy(p3n2)
    op = mdl.build_monodromy(p3n2)[entry[0]][entry[1]]
    measured = av.operator_average(op, p3n2.p)
    want = avg.matrix()[entry[0]][entry[1]]
    assert measured.distance(want) < 1e-9 * want.norm()


def test_operator_average_rejects_non_central():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 3))
    fam = OperatorLaurent({0: X, 1: np.eye(3)}, 3)
    with pytest.raises(CentralityError):
        av.operator_average(fam, 3)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3, 4]))
def test_recursion_all_splits(seed, N):
    P = sample_params(1, N, seed)
    for m in range(1, N):
        assert av.recursion_residual(P, m) < 1e-10


def test_conjugation_and_qdet(p3n3):
    avg = av.average_monodromy(p3n3)
    assert av.conjugation_residual(avg) < 1e-9
    assert av.qdet_average_residual(avg) < 1e-9
    closed = av.averaged_qdet_closed(p3n3)
    assert av.averaged_qdet(p3n3).distance(closed) < 1e-9 * closed.norm()


def test_zeros_of_B_average(p3n3):
    avg = av.average_monodromy(p3n3)
    assert len(avg.Z_list) == p3n3.Nbracket
    for Z in avg.Z_list:
        assert abs(avg.B(Z)) < 1e-9 * avg.B.norm() * max(abs(Z), 1 / abs(Z)) ** p3n3.N


@pytest.mark.parametrize("N", [1, 2, 3])
def test_gauge_coefficients(N):
    P = sample_params(1, N, 7)
    g = av.gauge_coefficients(P)
    avg = av.average_monodromy(P)
    assert average(g.a, P.p).distance(avg.A) < 1e-8 * avg.A.norm()
    assert average(g.d, P.p).distance(avg.D) < 1e-8 * avg.D.norm()
    assert g.a.conj().distance(g.d) < 1e-10 * g.a.norm()
    assert g.residuals["R2"] == 0 and g.residuals["R3"] == 0
    if N % 2 == 0:
        assert g.residuals["asymptotics"] < 1e-8


def test_gauge_needs_twist(p3n2_untwisted):
    with pytest.raises(DegeneracyError):
        av.gauge_coefficients(p3n2_untwisted)


def test_principal_root():
    z = 2.0 * np.exp(1.1j)
    r = av.principal_root(z, 5)
    assert abs(r ** 5 - z) < 1e-12
