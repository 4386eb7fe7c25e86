import math

import numpy as np
import pytest

from twinprobe.dynamics import (
    ProbeParams,
    UnstableRegimeError,
    coupling_strength,
    entangled_covariance,
    is_entangled,
    mode_rotation,
    occupation_from_temperature,
    prepare,
    relative_mode_frequency,
    rotate,
    squeeze_ratio,
    thermal_covariance,
    transfer_matrix,
)
from twinprobe.gaussian import congruence, validate


def test_param_validation():
    with pytest.raises(ValueError):
        ProbeParams(omega=0.0)
    with pytest.raises(ValueError):
        ProbeParams(omega=1.0, n_th=-1.0)
    with pytest.raises(ValueError):
        ProbeParams(omega=1.0, gamma_mech=-0.1)
    with pytest.raises(ValueError):
        ProbeParams.from_coupling(1.0, 1.5, delta=0.0)
    with pytest.raises(ValueError):
        ProbeParams.from_coupling(1.0, 1.5, delta=-2.0)
    with pytest.raises(ValueError):
        ProbeParams.from_squeeze_ratio(1.0, 0.5)


def test_mode_frequency_examples():
    # raw parameters: 2*G*|beta| = 1, delta = 2 -> coupling 0.5 -> sqrt(2)
    p = ProbeParams(omega=1.0, g_opt=0.5, beta_abs=1.0, delta=2.0)
    assert coupling_strength(p) == pytest.approx(0.5)
    assert relative_mode_frequency(p) == pytest.approx(math.sqrt(2.0))
    p = ProbeParams.from_coupling(1.0, 1.5)
    assert relative_mode_frequency(p) == pytest.approx(2.0)
    assert squeeze_ratio(p) == pytest.approx(2.0)


def test_squeeze_ratio_roundtrip():
    for ratio in (1.0, math.sqrt(2.0), 2.0, 10.0):
        p = ProbeParams.from_squeeze_ratio(1.0, ratio)
        assert squeeze_ratio(p) == pytest.approx(ratio, rel=1e-12)


def test_unstable_regime_raises():
    # omega + 2*coupling <= 0 has no real relative-mode frequency
    with pytest.raises(UnstableRegimeError):
        relative_mode_frequency(ProbeParams.from_coupling(1.0, -0.9, delta=-1.0))
    with pytest.raises(UnstableRegimeError):
        relative_mode_frequency(ProbeParams.from_coupling(1.0, -0.5, delta=-1.0))


def test_transfer_identity_at_zero():
    p = ProbeParams.from_squeeze_ratio(1.0, 2.0)
    assert np.allclose(transfer_matrix(p, 0.0), np.eye(4), atol=1e-14)


def test_transfer_momentum_rows_are_position_derivatives():
    # p_j = qdot_j / omega, checked against central differences
    eps = 1e-6
    for ratio in (1.0, 2.0, 10.0):
        p = ProbeParams.from_squeeze_ratio(1.0, ratio)
        for t in (0.3, 1.0, 2.8):
            plus = transfer_matrix(p, t + eps)
            minus = transfer_matrix(p, t - eps)
            deriv = (plus[[0, 2], :] - minus[[0, 2], :]) / (2 * eps)
            assert np.max(np.abs(transfer_matrix(p, t)[[1, 3], :] - deriv)) < 1e-8


def test_transfer_is_symplectic():
    j = np.zeros((4, 4))
    j[0, 1] = j[2, 3] = 1.0
    j[1, 0] = j[3, 2] = -1.0
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = ProbeParams.from_squeeze_ratio(1.0, rng.uniform(1.0, 10.0))
        m = transfer_matrix(p, rng.uniform(0.0, 10.0))
        assert np.max(np.abs(m @ j @ m.T - j)) < 1e-10


def test_transfer_at_switchoff_reproduces_entangled_covariance():
    # holds exactly for any value of omega*t at switch-off, irrational too
    for ratio in (1.0, math.sqrt(2.0), 2.0, 10.0):
        for n_th in (0.0, 20.0):
            p = ProbeParams.from_squeeze_ratio(1.0, ratio, n_th=n_th)
            theta = relative_mode_frequency(p)
            m = transfer_matrix(p, math.pi / (2.0 * theta))
            got = congruence(thermal_covariance(n_th), m)
            want = entangled_covariance(ratio, n_th)
            assert np.max(np.abs(got.matrix - want.matrix)) < 1e-12 * max(
                1.0, np.max(np.abs(want.matrix))
            )


def test_thermal_covariance_values():
    assert np.allclose(thermal_covariance(0.0).matrix, 0.5 * np.eye(4))
    assert np.allclose(thermal_covariance(1000.0).matrix, 1000.5 * np.eye(4))
    with pytest.raises(ValueError):
        thermal_covariance(-1.0)


def test_occupation_from_temperature():
    # printed conversion formula; T -> 0 limit gives 1 by construction
    assert occupation_from_temperature(0.0, 1.0) == 1.0
    assert occupation_from_temperature(0.5, 1.0) == pytest.approx(
        1.15651764274966565, rel=1e-14
    )
    assert occupation_from_temperature(50.0, 1.0) == pytest.approx(
        50.5016666555556614, rel=1e-14
    )
    # hbar_over_kb rescales the temperature argument
    assert occupation_from_temperature(1.0, 1.0, hbar_over_kb=2.0) == pytest.approx(
        occupation_from_temperature(0.5, 1.0)
    )
    with pytest.raises(ValueError):
        occupation_from_temperature(-1.0, 1.0)


def test_entangled_covariance_frozen_example():
    c = entangled_covariance(2.0, 0.0).matrix
    want = np.array(
        [
            [0.3125, 0.0, 0.1875, 0.0],
            [0.0, 1.25, 0.0, -0.75],
            [0.1875, 0.0, 0.3125, 0.0],
            [0.0, -0.75, 0.0, 1.25],
        ]
    )
    assert np.max(np.abs(c - want)) < 1e-12


def test_entangled_covariance_epr_variances():
    q_minus = np.array([1.0, 0.0, -1.0, 0.0])
    p_plus = np.array([0.0, 1.0, 0.0, 1.0])
    for ratio in (1.0, 2.0, 10.0):
        for n_th in (0.0, 20.0, 1000.0):
            c = entangled_covariance(ratio, n_th)
            heat = 1.0 + 2.0 * n_th
            assert c.quadratic_form(q_minus) == pytest.approx(heat / ratio**2, rel=1e-12)
            assert c.quadratic_form(p_plus) == pytest.approx(heat, rel=1e-12)
            assert validate(c).passed


def test_rotation_properties():
    r = mode_rotation(0.3)
    assert np.allclose(mode_rotation(0.0), np.eye(4))
    assert np.allclose(r @ mode_rotation(-0.3), np.eye(4))
    c = entangled_covariance(2.0, 1.0)
    assert np.allclose(rotate(rotate(c, 0.7), -0.7).matrix, c.matrix)
    assert np.allclose(rotate(c, 2 * math.pi).matrix, c.matrix)
    assert validate(rotate(c, 0.7)).passed


def test_entanglement_verdicts():
    assert is_entangled(2.0, 0.0).entangled
    assert not is_entangled(2.0, 20.0).entangled
    assert is_entangled(50.0, 1000.0).entangled
    assert not is_entangled(1.0, 0.0).entangled  # margin exactly zero


def test_entanglement_margins_and_product():
    rep = is_entangled(2.0, 0.0)
    assert rep.relative_q_variance == pytest.approx(0.25)
    assert rep.total_p_variance == pytest.approx(1.0)
    assert rep.variance_product == pytest.approx(0.25)
    assert rep.product_criterion
    # at n_th > 0 the two diagnostics genuinely part ways: the squeeze
    # margin can be positive while the EPR product is still above 1
    rep = is_entangled(2.0, 1.0)
    assert rep.squeeze_margin == pytest.approx(1.0)
    assert rep.entangled
    assert rep.variance_product == pytest.approx(2.25)
    assert not rep.product_criterion


def test_prepare_pipeline():
    p = ProbeParams.from_squeeze_ratio(1.0, 2.0, n_th=0.0)
    out = prepare(p)
    assert out.mode_frequency == pytest.approx(2.0)
    assert out.ratio == pytest.approx(2.0)
    assert out.switch_off_time == pytest.approx(math.pi / 4.0)
    assert out.report.entangled
    assert validate(out.covariance).passed
