import math

import numpy as np
import pytest

from guidecloak.coefficients import (
    SIGN_SIGMA,
    Fly,
    FlyConfig,
    capacity_sphere,
    evaluate_u1,
    s1_coefficients,
    s2_coefficients,
)
from guidecloak.errors import InvariantError
from guidecloak.modal import mode_value


def test_capacity_sphere():
    assert capacity_sphere(1.0) == 1.0
    assert capacity_sphere(0.5) == 0.5
    tau, eps = 3.0, 0.01
    assert Fly.sphere((0.3, 0.3, 0), 0.5).scaled(1 + tau * eps).capacity == pytest.approx((1 + tau * eps) * 0.5)
    with pytest.raises(ValueError):
        capacity_sphere(0.0)


def test_fly_rejects_nonpositive_capacity():
    with pytest.raises(ValueError):
        Fly((0.3, 0.3, 0.0), -1.0)


def test_config_validation(square):
    FlyConfig((Fly((0.3, 0.3, 0.0), 1.0),), 0.01).validate(square)
    with pytest.raises(InvariantError, match="fly 0"):
        FlyConfig((Fly((0.005, 0.3, 0.0), 1.0),), 0.01).validate(square)
    with pytest.raises(InvariantError, match="flies 0 and 1 overlap"):
        FlyConfig((Fly((0.3, 0.3, 0.0), 1.0), Fly((0.3, 0.3, 0.015), 1.0)), 0.01).validate(square)


def test_empty_config_gives_zero(square_basis, square_ev):
    cfg = FlyConfig((), 0.01)
    assert np.all(s1_coefficients(cfg, square_basis).minus == 0)
    assert np.all(s2_coefficients(cfg, square_basis, square_ev).minus == 0)


def test_single_fly_first_order(square_basis):
    cfg = FlyConfig((Fly((0.3, 0.3, 0.0), 1.0),), 0.01)
    s1 = s1_coefficients(cfg, square_basis).minus[0, 0]
    assert abs(s1) == pytest.approx(3.3611, abs=1e-4)
    assert abs(s1) == pytest.approx(4 * math.pi * 0.267466, rel=1e-5)


def test_paired_flies_cancel_first_order(square_basis):
    z2 = math.pi / (2 * square_basis.beta_of(1).real)
    cfg = FlyConfig((Fly((0.3, 0.3, 0.0), 1.0), Fly((0.3, 0.3, z2), 1.0)), 0.01)
    s1 = s1_coefficients(cfg, square_basis)
    assert abs(s1.minus[0, 0]) < 1e-15
    assert abs(s1.plus[0, 0]) > 1


def test_monomodal_s1_plus_imaginary(square_basis):
    cfg = FlyConfig((Fly((0.3, 0.3, 0.0), 1.0), Fly((0.6, 0.2, 0.7), 0.5)), 0.01)
    sp = s1_coefficients(cfg, square_basis).plus[0, 0]
    w = [mode_value(square_basis, 1, "+", f.center) for f in cfg.flies]
    expected = SIGN_SIGMA * 4 * math.pi * (abs(w[0]) ** 2 + 0.5 * abs(w[1]) ** 2)
    assert sp.real == pytest.approx(0, abs=1e-14)
    assert sp.imag == pytest.approx(expected, rel=1e-13)


def test_translation_covariance_and_scaling(square_basis):
    beta = square_basis.beta_of(1).real
    flies = (Fly((0.3, 0.3, 0.0), 1.0), Fly((0.6, 0.2, 0.7), 0.5))
    cfg = FlyConfig(flies, 0.01)
    shift = 0.37
    moved = cfg.with_flies([f.moved((f.center[0], f.center[1], f.center[2] + shift)) for f in flies])
    s = s1_coefficients(cfg, square_basis).minus[0, 0]
    s_moved = s1_coefficients(moved, square_basis).minus[0, 0]
    assert s_moved == pytest.approx(s * np.exp(2j * beta * shift), rel=1e-13)
    doubled = cfg.with_flies([f.scaled(2.0) for f in flies])
    assert s1_coefficients(doubled, square_basis).minus[0, 0] == pytest.approx(2 * s, rel=1e-14)


def test_multimodal_s1_symmetric(rect_basis):
    cfg = FlyConfig((Fly((0.3, 0.2, 0.0), 1.0), Fly((0.7, 0.3, 0.4), 0.7)), 0.01)
    s1 = s1_coefficients(cfg, rect_basis).minus
    assert s1.shape == (2, 2)
    np.testing.assert_allclose(s1, s1.T, atol=1e-15)


def test_single_fly_u1_and_s2(square_basis, square_ev):
    m = (0.3, 0.3, 0.0)
    cfg = FlyConfig((Fly(m, 1.0),), 0.01)
    w = mode_value(square_basis, 1, "+", m)
    g = square_ev.green_reg(m)
    u1 = evaluate_u1(cfg, square_basis, square_ev, 1)
    assert u1[0] == pytest.approx(4 * math.pi * w * g, rel=1e-13)
    s2 = s2_coefficients(cfg, square_basis, square_ev).minus[0, 0]
    assert s2 == pytest.approx(SIGN_SIGMA * 4j * math.pi * 4 * math.pi * g * w**2, rel=1e-13)


def test_far_flies_u1_cross_term(square_basis, square_ev):
    a, b = (0.3, 0.3, 0.0), (0.6, 0.4, 10.0)
    cfg = FlyConfig((Fly(a, 1.0), Fly(b, 1.0)), 0.01)
    u1 = evaluate_u1(cfg, square_basis, square_ev, 1)
    wa = mode_value(square_basis, 1, "+", a)
    wb = mode_value(square_basis, 1, "+", b)
    # only the propagating term of G survives ten units apart
    g_ab = -1j * mode_value(square_basis, 1, "+", b) * mode_value(square_basis, 1, "-", a)
    cross = 4 * math.pi * wb * g_ab
    self_part = 4 * math.pi * wa * square_ev.green_reg(a)
    assert u1[0] == pytest.approx(self_part + cross, abs=1e-11)
