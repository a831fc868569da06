import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgsov import model as mdl
from sgsov.errors import NotApplicableError, ParameterError
from sgsov.model import ModelParams, sample_params


def test_weyl_pair_relation(p3n2):
    for n in (1, 2):
        u, v = mdl.build_weyl(p3n2, n)
        assert np.abs(u @ v - p3n2.q * v @ u).max() < 1e-12


def test_q_is_primitive_root():
    P = sample_params(2, 1, 0, lprime=2)
    assert P.p == 5
    assert abs(P.q ** 5 - 1) < 1e-12
    assert all(abs(P.q ** k - 1) > 1e-3 for k in range(1, 5))
    assert abs(P.q_half ** 2 - P.q) < 1e-12


@pytest.mark.parametrize("kwargs, message", [
    (dict(kappa=[1.0], xi=[1.0, 2.0], u=[1.0], v=[1.0]), "equal length"),
    (dict(kappa=[1.0], xi=[1.0], u=[1.1], v=[1.0]), "unimodular"),
    (dict(kappa=[0.0], xi=[1.0], u=[1.0], v=[1.0]), "nonzero"),
    (dict(kappa=[np.exp(0.3j)], xi=[1.0], u=[1.0], v=[1.0]), "real"),
])
def test_parameter_validation(kwargs, message):
    with pytest.raises(ParameterError, match=message):
        ModelParams(1, 1, **kwargs)


def test_lprime_must_be_coprime():
    with pytest.raises(ParameterError):
        ModelParams(1, 3, [1.0], [1.0], [1.0], [1.0])


def test_epsilon_uniformity():
    with pytest.raises(ParameterError):
        ModelParams(1, 1, [1.0, 1j], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0])


def test_json_round_trip(p3n2):
    Q = ModelParams.from_json(p3n2.to_json())
    assert Q == p3n2


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6), st.complex_numbers(min_magnitude=0.5, max_magnitude=2, allow_nan=False,
                                                     allow_infinity=False))
def test_yang_baxter_random(seed, mu):
    P = sample_params(1, 2, seed)
    assert mdl.ybe_residual(P, 0.9 + 0.4j, mu) < 1e-10


def test_quantum_determinant(p3n3, p5n2):
    assert mdl.quantum_determinant_residual(p3n3) < 1e-11
    assert mdl.quantum_determinant_residual(p5n2) < 1e-11


def test_transfer_commutes_and_is_hermitian(p3n3):
    assert mdl.transfer_commutator_residual(p3n3, 0.8 + 0.2j, 1.3 - 0.6j) < 1e-11
    assert mdl.transfer_hermiticity_residual(p3n3, 1.1) < 1e-11


def test_hermiticity(p3n2):
    assert mdl.lax_hermiticity_residual(p3n2, 1, 0.7 + 0.5j) < 1e-12
    assert mdl.monodromy_hermiticity_residual(p3n2, 0.7 + 0.5j) < 1e-11


@pytest.mark.parametrize("N", [1, 2, 3])
def test_asymptotics(N):
    assert mdl.asymptotics_check(sample_params(1, N, 4))["max"] < 1e-11


def test_theta_grading(p3n2):
    th = mdl.theta_charge(p3n2)
    assert max(th.residuals.values()) < 1e-11
    assert th.power_residual < 1e-11


def test_theta_requires_even_chain(p3n3):
    with pytest.raises(NotApplicableError):
        mdl.theta_operator(p3n3)


def test_monodromy_entry_parities(p3n3):
    M = mdl.build_monodromy(p3n3)
    for row in M:
        for entry in row:
            assert entry.parity is not None
            assert entry.parity_violation() < 1e-12


def test_qdet_zeros_are_zeros(p3n2):
    qd = mdl.qdet_scalar(p3n2)
    for pair in mdl.qdet_zeros(p3n2):
        for z in pair:
            assert abs(qd(z)) < 1e-9 * qd.norm()
