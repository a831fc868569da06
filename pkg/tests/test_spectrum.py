import numpy as np
import pytest

from sgsov import model as mdl
from sgsov.averages import principal_root
from sgsov import spectrum as sp
from sgsov.errors import DegeneracyError
from sgsov.laurent import is_real
from sgsov.model import sample_params


@pytest.mark.parametrize("l, N", [(1, 1), (1, 2), (1, 3), (2, 2)])
def test_records(l, N):
    P = sample_params(l, N, 7)
    recs = sp.diagonalize_transfer(P)
    assert len(recs) == P.dim
    assert all(is_real(r.t) for r in recs)
    assert all(r.t.parity == "even" for r in recs)
    assert max(r.residual for r in recs) < 1e-10
    assert sp.simplicity_gap(recs) > 1e-6
    assert sp.coefficient_eigen_residual(P, recs) < 1e-10


def test_eigenvalues_match_dense_spectrum(p3n2):
    recs = sp.diagonalize_transfer(p3n2)
    lam = 1.07
    dense = np.sort(np.linalg.eigvalsh(mdl.transfer(p3n2)(lam)))
    ours = np.sort([r.t(lam).real for r in recs])
    assert np.abs(dense - ours).max() < 1e-10 * np.abs(dense).max()


def test_theta_sectors(p3n2):
    recs = sp.diagonalize_transfer(p3n2)
    assert sum(sp.sector_sizes(recs, p3n2.p)) == p3n2.dim
    assert max(sp.grading_residual(p3n2, r) for r in recs) < 1e-8
    th = mdl.theta_operator(p3n2)
    root = principal_root(mdl.theta_average(p3n2), p3n2.p)
    for r in recs:
        want = root * p3n2.qpow(r.theta_k)
        assert np.abs(th @ r.eigvec - want * r.eigvec).max() < 1e-10
        assert sp.theta_label(p3n2, r.eigvec) == r.theta_k


def test_seed_independence(p3n2):
    a = sp.diagonalize_transfer(p3n2, seed=0)
    b = sp.diagonalize_transfer(p3n2, seed=5)
    for x, y in zip(a, b):
        assert x.t.distance(y.t) < 1e-9 * x.t.norm()


def test_untwisted_even_chain_is_degenerate(p3n2_untwisted):
    with pytest.raises(DegeneracyError):
        sp.diagonalize_transfer(p3n2_untwisted)
    recs = sp.diagonalize_transfer(p3n2_untwisted, allow_degenerate=True)
    assert len(recs) == p3n2_untwisted.dim
    assert sp.simplicity_gap(recs) < 1e-6
