import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from guidecloak.errors import CoincidentPointsError, NonConvergentError
from guidecloak.green import GreenEvaluator, cutoff_for, neville_to_zero, tail_bound
from guidecloak.modal import mode_value


def _interior(rng, cs, n, margin=0.1):
    y1 = rng.uniform(margin * cs.a, (1 - margin) * cs.a, n)
    y2 = rng.uniform(margin * cs.b, (1 - margin) * cs.b, n)
    z = rng.uniform(-0.5, 0.5, n)
    return np.column_stack([y1, y2, z])


def test_tail_bound_decreases_and_cutoff_meets_tol():
    vals = [tail_bound(lam, 30.0, 0.05) for lam in (1e3, 1e4, 1e5)]
    assert vals[0] > vals[1] > vals[2]
    lam = cutoff_for(30.0, 0.05, 1e-13)
    assert tail_bound(lam, 30.0, 0.05) <= 1e-13
    assert tail_bound(30.0, 30.0, 0.05) == math.inf


def test_tail_bound_dominates_actual_tail(square_ev):
    # brute-force tail of the modal sum at coincident y
    d, lam_cut = 0.3, 400.0
    cs = square_ev.basis.cross_section
    tail = 0.0
    for p in range(1, 200):
        for q in range(1, 200):
            lam = cs.eigenvalue(p, q)
            if lam > lam_cut:
                kap = math.sqrt(lam - 30.0)
                tail += cs.phi(p, q, (0.3, 0.3)) ** 2 * math.exp(-kap * d) / (2 * kap)
    assert tail <= tail_bound(lam_cut, 30.0, d)


def test_neville_exact_on_quadratic():
    h = np.array([0.4, 0.2, 0.1, 0.05])
    value, diag = neville_to_zero(h, 3.0 + 2.0 * h - 5.0 * h**2)
    assert value == pytest.approx(3.0, abs=1e-13)
    assert len(diag) == 4


def test_symmetry(square_ev, rng):
    pts = _interior(rng, square_ev.basis.cross_section, 12)
    for x, xs in zip(pts[:6], pts[6:]):
        assert square_ev.green(x, xs) == pytest.approx(square_ev.green(xs, x), abs=1e-12)


def test_wall_zero_and_linear(square_ev):
    src = (0.4, 0.6, 0.0)
    assert abs(square_ev.green((0.0, 0.3, 0.2), src)) < 1e-12
    g1 = square_ev.green((1e-3, 0.3, 0.2), src)
    g2 = square_ev.green((2e-3, 0.3, 0.2), src)
    assert abs(g2 / g1) == pytest.approx(2.0, rel=1e-2)


def test_far_field_single_mode(square_ev, square_basis):
    x = (0.3, 0.4, 10.0)
    xs = (0.6, 0.7, 0.0)
    expected = -1j * mode_value(square_basis, 1, "+", x) * mode_value(square_basis, 1, "-", xs)
    assert square_ev.green(x, xs) == pytest.approx(expected, abs=1e-12)
    assert square_ev.green(xs, x) == pytest.approx(expected, abs=1e-12)


def test_coincident_and_too_close(square_ev):
    with pytest.raises(CoincidentPointsError):
        square_ev.green((0.3, 0.3, 0.0), (0.3, 0.3, 0.0))
    with pytest.raises(NonConvergentError):
        square_ev.green((0.3, 0.3, 0.0), (0.3, 0.3 + 1e-4, 1e-4))


def test_small_dz_fallback_matches_modal(square_ev):
    # |dz| just under the fallback threshold versus just above it
    a = square_ev.green((0.3, 0.3, 0.0), (0.5, 0.35, 0.0124))
    b = square_ev.green((0.3, 0.3, 0.0), (0.5, 0.35, 0.0126))
    assert abs(a - b) < 5e-3  # smooth in dz; the difference is the genuine variation


def test_im_green_reg_closed_form(square_ev, rng):
    for m in _interior(rng, square_ev.basis.cross_section, 6):
        assert square_ev.green_reg(m).imag == pytest.approx(square_ev.green_reg_imag_exact(m), abs=1e-8)


def test_im_green_reg_multimodal(rect_ev):
    m = (0.31, 0.17, 0.0)
    assert rect_ev.green_reg(m).imag == pytest.approx(rect_ev.green_reg_imag_exact(m), abs=1e-8)


def test_green_reg_reflection_symmetry(square_ev):
    g = square_ev.green_reg((0.27, 0.41, 0.0))
    assert square_ev.green_reg((1 - 0.27, 0.41, 0.0)) == pytest.approx(g, abs=1e-10)


def test_offset_schedules_agree(square_basis):
    ev1 = GreenEvaluator(square_basis, reg_offsets=tuple(0.1 * 0.5**i for i in range(4)))
    ev2 = GreenEvaluator(square_basis, reg_offsets=tuple(0.08 * 0.5**i for i in range(4)))
    m = (0.3, 0.3, 0.0)
    assert ev1.green_reg(m) == pytest.approx(ev2.green_reg(m), abs=1e-7)
    assert ev1.green_reg_detail(m).error_estimate < 1e-6


def test_green_reg_near_wall_scales_offsets(square_ev):
    det = square_ev.green_reg_detail((0.05, 0.5, 0.0))
    assert det.offsets[0] <= 0.05
    assert det.value.imag == pytest.approx(square_ev.green_reg_imag_exact((0.05, 0.5)), abs=1e-8)


def test_green_reg_depends_only_on_y(square_ev):
    assert square_ev.green_reg((0.3, 0.3, 5.0)) == square_ev.green_reg((0.3, 0.3, -1.0))


def test_concurrent_green_reg(square_basis):
    ev = GreenEvaluator(square_basis)
    pts = [(0.2 + 0.05 * i, 0.35, 0.0) for i in range(6)] * 3
    with ThreadPoolExecutor(max_workers=6) as pool:
        par = list(pool.map(ev.green_reg, pts))
    ser = [GreenEvaluator(square_basis).green_reg(p) for p in pts[:6]]
    assert par[:6] == ser
    assert par[6:12] == par[:6]


def test_interaction_matrix(square_ev):
    pts = np.array([[0.3, 0.3, 0.0], [0.6, 0.4, 0.3], [0.5, 0.5, 1.0]])
    A = square_ev.interaction_matrix(pts)
    assert np.array_equal(A, A.T)
    assert A[0, 0] == square_ev.green_reg(pts[0])


@pytest.mark.parametrize("offs", [(0.1,), (0.05, 0.1), (0.1, -0.05)])
def test_bad_offsets(square_basis, offs):
    with pytest.raises(ValueError):
        GreenEvaluator(square_basis, reg_offsets=offs)


def test_bad_cutoff(square_basis):
    with pytest.raises(ValueError):
        GreenEvaluator(square_basis, mode_cutoff=0.0)
