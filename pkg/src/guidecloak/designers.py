"""Reflection-invisibility design by fixed-point iteration.

All three designers follow the same pattern.  The flies are placed so that the
order-eps reflection vanishes identically.  A small real perturbation (the
position of one fly, or the sizes of a few) is parameterized affinely by
``kappa`` so that the normalized order-eps^2 term equals ``kappa`` (stacked as
real and imaginary parts).  Cancelling the reflection is then the fixed-point
problem ``kappa = -eps * remainder(tau(kappa))``, where ``remainder`` is the
eps^3-scaled part of the oracle reflection that the first two orders miss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coefficients import Fly, FlyConfig, SIGN_SIGMA, s1_coefficients, s2_coefficients
from .errors import (
    DegenerateGammaError,
    GradientVanishesError,
    MaxIterError,
    NodalPointError,
    NonContractionError,
    RegimeError,
    SearchExhaustedError,
    SingularBError,
)
from .foldy import FoldySystem, remainder
from .green import GreenEvaluator
from .modal import ModeBasis, mode_value

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100
NODE_FLOOR = 0.05
GRAD_FLOOR = 1e-8

RemainderFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class DesignReport:
    kind: str
    epsilon: float
    kappa: np.ndarray
    tau: np.ndarray
    tau0: np.ndarray
    iterations: int
    steps: list[float]
    contraction: float
    residual: float
    residual_unperturbed: float
    config: FlyConfig
    trace: list[np.ndarray] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def kappa_norm(self) -> float:
        return float(np.linalg.norm(self.kappa))

    @property
    def c0(self) -> float:
        """``|kappa_sol| / eps``; bounded uniformly in eps."""
        return self.kappa_norm / self.epsilon


def _iterate(
    F: Callable[[np.ndarray], np.ndarray],
    kappa0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, list[np.ndarray], list[float], float]:
    kappa = np.array(kappa0, dtype=float)
    trace = [kappa.copy()]
    steps: list[float] = []
    for _ in range(max_iter):
        new = np.asarray(F(kappa), dtype=float)
        step = float(np.linalg.norm(new - kappa))
        kappa = new
        trace.append(kappa.copy())
        steps.append(step)
        if step <= tol:
            break
        if len(steps) >= 4 and all(b >= a for a, b in zip(steps[-4:], steps[-3:])):
            raise NonContractionError(f"iterates diverge: last steps {[f'{x:.3g}' for x in steps[-4:]]}")
    else:
        raise MaxIterError(f"fixed point not reached in {max_iter} iterations (last step {steps[-1]:.3g})")
    contraction = _contraction(steps, kappa, tol)
    if contraction >= 1.0:
        raise NonContractionError(f"empirical contraction factor {contraction:.3g} >= 1")
    return kappa, trace, steps, contraction


def _contraction(steps: Sequence[float], kappa: np.ndarray, tol: float) -> float:
    # ratios are only meaningful while both steps sit well above round-off
    floor = max(100.0 * tol, 1e-12 * (1.0 + float(np.linalg.norm(kappa))))
    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > floor and b > floor]
    return max(ratios) if ratios else 0.0


# ---------------------------------------------------------------------------
# position perturbation, one propagating mode
# ---------------------------------------------------------------------------
@dataclass
class PositionDesign:
    basis: ModeBasis
    m1: np.ndarray
    m2: np.ndarray
    capacity: float = 1.0
    m: int = 0

    @property
    def y(self) -> np.ndarray:
        return self.m1[:2]

    def flies(self, tau: np.ndarray | None = None, epsilon: float = 0.0) -> list[Fly]:
        m1 = self.m1 if tau is None else self.m1 + epsilon * np.asarray(tau)
        return [Fly(tuple(m1), self.capacity), Fly(tuple(self.m2), self.capacity)]


def _require_monomodal(basis: ModeBasis) -> float:
    if basis.n_propagating != 1:
        raise RegimeError(f"design needs exactly one propagating mode, found {basis.n_propagating}")
    return basis.beta_of(1).real


def choose_positions_monomodal(basis: ModeBasis, m: int = 0, y_choice: Sequence[float] | None = None,
                               capacity: float = 1.0) -> PositionDesign:
    """Two flies at ``(y, 0)`` and ``(y, (2m+1) pi / (2 beta_1))``."""
    beta = _require_monomodal(basis)
    cs = basis.cross_section
    y = np.array((0.3 * cs.a, 0.3 * cs.b) if y_choice is None else y_choice, dtype=float)
    if not cs.contains(y):
        raise ValueError(f"y={tuple(y)} is not inside the cross-section")
    if m < 0:
        raise ValueError("m must be a nonnegative integer")
    grad = basis.grad_phi(1, y)
    scale = (2.0 / math.sqrt(cs.a * cs.b)) * math.pi / min(cs.a, cs.b)
    if np.linalg.norm(grad) < GRAD_FLOOR * scale:
        raise GradientVanishesError(f"grad phi_1 vanishes at y={tuple(y)} (extremum of phi_1)")
    z2 = (2 * m + 1) * math.pi / (2.0 * beta)
    return PositionDesign(basis, np.array([y[0], y[1], 0.0]), np.array([y[0], y[1], z2]), capacity, m)


def first_order_sum(basis: ModeBasis, centers: np.ndarray, j: int = 1, jp: int = 1) -> complex:
    """``sum_n w_j^+(M_n) w_j'^+(M_n)``."""
    return complex(sum(mode_value(basis, j, "+", c) * mode_value(basis, jp, "+", c) for c in centers))


def solve_position_fixed_point(
    design: PositionDesign,
    epsilon: float,
    ev: GreenEvaluator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kappa0: Sequence[float] | None = None,
    remainder_fn: RemainderFn | None = None,
) -> DesignReport:
    """Move the first fly to ``M_1 + eps tau(kappa)`` so that the oracle reflection vanishes."""
    basis = design.basis
    beta = _require_monomodal(basis)
    cap = design.capacity
    norm = SIGN_SIGMA * 4j * math.pi * cap
    base = FlyConfig(design.flies(), epsilon)
    centers = base.centers
    first = first_order_sum(basis, centers)
    second0 = complex(s2_coefficients(base, basis, ev).minus[0, 0] / norm)

    y1 = design.y
    phi = basis.phi(1, y1)
    grad = basis.grad_phi(1, y1)
    g2 = float(grad @ grad)
    w1 = mode_value(basis, 1, "+", design.m1)
    grad_w1 = np.array([*(w1 / phi * grad), 1j * beta * w1])

    def tau_of(kappa):
        ty = (beta / phi) * (kappa[0] - second0.real) * grad / g2
        tz = (kappa[1] - second0.imag) / phi**2
        return np.array([ty[0], ty[1], tz])

    def oracle(tau):
        cfg = FlyConfig(design.flies(tau, epsilon), epsilon)
        return complex(FoldySystem(cfg, basis, ev).scattering_matrix().s_minus[0, 0])

    def s_tilde(tau):
        if remainder_fn is not None:
            return complex(remainder_fn(tau))
        second = 2.0 * w1 * complex(tau @ grad_w1) + second0
        return complex(remainder(oracle(tau), first, second, epsilon, norm))

    def F(kappa):
        st = s_tilde(tau_of(kappa))
        return -epsilon * np.array([st.real, st.imag])

    k0 = np.zeros(2) if kappa0 is None else np.asarray(kappa0, float)
    kappa, trace, steps, contraction = _iterate(F, k0, tol, max_iter)
    tau = tau_of(kappa)
    final = FlyConfig(design.flies(tau, epsilon), epsilon)
    return DesignReport(
        kind="position",
        epsilon=epsilon,
        kappa=kappa,
        tau=tau,
        tau0=tau_of(np.zeros(2)),
        iterations=len(steps),
        steps=steps,
        contraction=contraction,
        residual=abs(oracle(tau)),
        residual_unperturbed=abs(oracle(np.zeros(3))),
        config=final,
        trace=trace,
        extra={"first_order_sum": abs(first), "second_order_base": second0},
    )


# ---------------------------------------------------------------------------
# size perturbation, one propagating mode
# ---------------------------------------------------------------------------
@dataclass
class SizeDesign:
    basis: ModeBasis
    centers: np.ndarray  # (n, 3); the first two are the resized flies
    capacity: float = 1.0
    variant: str = "four-fly"
    n_sized: int = 2

    def flies(self, tau: np.ndarray | None = None, epsilon: float = 0.0) -> list[Fly]:
        out = []
        for n, c in enumerate(self.centers):
            f = Fly(tuple(c), self.capacity)
            if tau is not None and n < self.n_sized:
                f = _resized(f, 1.0 + tau[n] * epsilon, n)
            out.append(f)
        return out


def _check_node(basis: ModeBasis, y, modes: Sequence[int], node_floor: float) -> None:
    cs = basis.cross_section
    peak = 2.0 / math.sqrt(cs.a * cs.b)
    for j in modes:
        if abs(basis.phi(j, y)) < node_floor * peak:
            raise NodalPointError(f"|phi_{j}(y)| < {node_floor} * max|phi| at y={tuple(y)}")


def choose_positions_size_design(
    basis: ModeBasis,
    m: int = 0,
    y_choice: Sequence[float] | None = None,
    variant: str = "four-fly",
    capacity: float = 1.0,
    node_floor: float = NODE_FLOOR,
) -> SizeDesign:
    """Fly placement whose order-eps phasors ``exp(2 i beta_1 z_n)`` sum to zero.

    ``four-fly``: phases ``1, i, -1, -i`` (two resized, two passive flies).
    ``three-fly``: phases ``1, e^{2i pi/3}, e^{4i pi/3}`` (one passive fly).
    """
    beta = _require_monomodal(basis)
    cs = basis.cross_section
    y = np.array((0.3 * cs.a, 0.3 * cs.b) if y_choice is None else y_choice, dtype=float)
    if not cs.contains(y):
        raise ValueError(f"y={tuple(y)} is not inside the cross-section")
    _check_node(basis, y, [1], node_floor)
    if variant == "four-fly":
        z1 = 0.0
        z2 = math.pi / (4.0 * beta)
        shift = (2 * m + 1) * math.pi / (2.0 * beta)
        zs = [z1, z2, z1 + shift, z2 + shift]
    elif variant == "three-fly":
        zs = [n * math.pi / (3.0 * beta) for n in range(3)]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    centers = np.array([[y[0], y[1], z] for z in zs])
    return SizeDesign(basis, centers, capacity, variant)


def solve_size_fixed_point(
    design: SizeDesign,
    epsilon: float,
    ev: GreenEvaluator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kappa0: Sequence[float] | None = None,
    remainder_fn: RemainderFn | None = None,
) -> DesignReport:
    """Resize the first two flies, ``cap_n -> cap_n (1 + tau_n eps)``, to cancel the reflection."""
    basis = design.basis
    _require_monomodal(basis)
    norm = SIGN_SIGMA * 4j * math.pi * design.capacity
    base = FlyConfig(design.flies(), epsilon)
    A = ev.interaction_matrix(base.centers)
    first = first_order_sum(basis, design.centers)
    second0 = complex(s2_coefficients(base, basis, ev, A).minus[0, 0] / norm)
    w2 = np.array([mode_value(basis, 1, "+", c) ** 2 for c in design.centers[: design.n_sized]])
    # real 2x2 map tau -> (Re, Im) sum_n tau_n w_n^2
    Mw = np.vstack([w2.real, w2.imag])
    Mw_inv = np.linalg.inv(Mw)

    def tau_of(kappa):
        return Mw_inv @ (np.asarray(kappa) - np.array([second0.real, second0.imag]))

    def oracle(tau):
        cfg = FlyConfig(design.flies(tau, epsilon), epsilon)
        return complex(FoldySystem(cfg, basis, ev, A).scattering_matrix().s_minus[0, 0])

    def s_tilde(tau):
        if remainder_fn is not None:
            return complex(remainder_fn(tau))
        second = complex(np.sum(tau * w2)) + second0
        return complex(remainder(oracle(tau), first, second, epsilon, norm))

    def F(kappa):
        st = s_tilde(tau_of(kappa))
        return -epsilon * np.array([st.real, st.imag])

    k0 = np.zeros(2) if kappa0 is None else np.asarray(kappa0, float)
    kappa, trace, steps, contraction = _iterate(F, k0, tol, max_iter)
    tau = tau_of(kappa)
    return DesignReport(
        kind=f"size/{design.variant}",
        epsilon=epsilon,
        kappa=kappa,
        tau=tau,
        tau0=tau_of(np.zeros(2)),
        iterations=len(steps),
        steps=steps,
        contraction=contraction,
        residual=abs(oracle(tau)),
        residual_unperturbed=abs(oracle(np.zeros(design.n_sized))),
        config=FlyConfig(design.flies(tau, epsilon), epsilon),
        trace=trace,
        extra={"first_order_sum": abs(first), "max_size_change": float(np.max(np.abs(tau)) * epsilon)},
    )


# ---------------------------------------------------------------------------
# several propagating modes
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Gamma:
    value: float
    j: int
    jp: int


def compute_gammas(basis: ModeBasis, gamma_gap_tol: float | None = None) -> list[Gamma]:
    """Sorted sums ``beta_j + beta_j'`` over ``1 <= j <= j' <= J``; ``J(J+1)/2`` values."""
    J = basis.n_propagating
    if J < 1:
        raise ValueError("no propagating mode")
    beta = basis.propagating_beta()
    out = [Gamma(float(beta[i] + beta[k]), basis.n_pro[i], basis.n_pro[k]) for i in range(J) for k in range(i, J)]
    out.sort(key=lambda g: g.value)
    tol = 1e-9 * math.sqrt(basis.k2) if gamma_gap_tol is None else gamma_gap_tol
    for a, b in zip(out, out[1:]):
        if b.value - a.value < tol:
            raise DegenerateGammaError(
                f"beta_{a.j}+beta_{a.jp} and beta_{b.j}+beta_{b.jp} coincide within {tol:g}"
            )
    return out


def phase_matrix(gammas: Sequence[float], z: Sequence[float], rows: int | None = None) -> np.ndarray:
    """Rows ``cos(gamma_p z_n), sin(gamma_p z_n)`` interleaved, truncated to ``rows``."""
    g = np.asarray(gammas, dtype=float)[:, None]
    z = np.asarray(z, dtype=float)[None, :]
    B = np.empty((2 * g.shape[0], z.shape[1]))
    B[0::2] = np.cos(g * z)
    B[1::2] = np.sin(g * z)
    return B if rows is None else B[:rows]


def _smin(M: np.ndarray) -> float:
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def default_d_min(gammas: Sequence[float]) -> float:
    return 1e-3 * 2.0 * math.pi / max(gammas)


#: axial spacing floor relative to ``min(a, b)`` used by :func:`build_multimodal_design`;
#: keeps the scaled flies disjoint and the modal Green's series short.
D_MIN_SECTION = 0.05

#: base capacity of the multimodal flies.  The order-eps^2 self-interaction of
#: the whole array grows like ``N cap``, so unit flies would need size changes
#: larger than the flies themselves.
MULTI_CAPACITY = 0.02


def _resized(f: Fly, factor: float, n: int) -> Fly:
    if not factor > 0:
        raise RegimeError(f"fly {n}: size factor {factor:.3g} <= 0; reduce epsilon or the base capacity")
    return f.scaled(factor)


def build_invertible_B(
    gammas: Sequence[float],
    grid_size: int = 256,
    svd_floor: float = 1e-3,
    d_min: float | None = None,
    seed: int = 0,
    max_attempts: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy column-by-column construction of ``z_1..z_2P`` with an invertible phase matrix.

    ``z_1 = 0``; each further ``z`` maximizes the smallest singular value of the
    square leading block over a uniform grid on ``[0, 2 pi / gamma_1)``.
    Random jitter is used only when the grid gives nothing above ``svd_floor``.
    """
    g = np.asarray(gammas, dtype=float)
    P = len(g)
    d_min = default_d_min(g) if d_min is None else d_min
    period = 2.0 * math.pi / g[0]
    grid = np.arange(grid_size) * period / grid_size
    rng = np.random.default_rng(seed)
    z = [0.0]
    for n in range(2, 2 * P + 1):
        best, best_s = None, -1.0
        for cand in grid:
            if min(abs(cand - zz) for zz in z) < d_min:
                continue
            s = _smin(phase_matrix(g, z + [cand], rows=n))
            if s > best_s + 1e-15:
                best, best_s = cand, s
        if best is None or best_s < svd_floor:
            for _ in range(max_attempts):
                cand = rng.uniform(0.0, period)
                if min(abs(cand - zz) for zz in z) < d_min:
                    continue
                s = _smin(phase_matrix(g, z + [cand], rows=n))
                if s > best_s:
                    best, best_s = cand, s
                if best_s >= svd_floor:
                    break
        if best is None or best_s < svd_floor:
            raise SearchExhaustedError(f"column {n}: best sigma_min {best_s:.3g} below floor {svd_floor:g}")
        z.append(float(best))
    z_arr = np.array(z)
    B = phase_matrix(g, z_arr)
    if _smin(B) < svd_floor:
        raise SearchExhaustedError("final phase matrix below svd_floor")
    return z_arr, B


def doubling_placement(gammas: Sequence[float], z_seed: Sequence[float], d_min: float | None = None) -> np.ndarray:
    """Append shifted copies so that ``sum_n exp(i gamma_p z_n) = 0`` for every ``p``.

    Round ``p`` appends ``z + (2 m_p + 1) pi / gamma_p`` for every current ``z``
    with the smallest ``m_p >= 0`` that keeps all points ``d_min`` apart.
    Ends with ``N = 2^P * len(z_seed)`` points (``2^(P+1) P`` for a full seed).
    """
    g = np.asarray(gammas, dtype=float)
    d_min = default_d_min(g) if d_min is None else d_min
    z = np.asarray(z_seed, dtype=float)
    if len(np.unique(z)) != len(z):
        raise ValueError("seed positions must be distinct")
    for gp in g:
        m = 0
        while True:
            shifted = z + (2 * m + 1) * math.pi / gp
            allz = np.sort(np.concatenate([z, shifted]))
            if np.min(np.diff(allz)) >= d_min:
                break
            m += 1
        z = np.concatenate([z, shifted])
    return z


def fly_count(J: int) -> int:
    """Number of flies of the doubling construction, ``2^(P+1) P`` with ``P = J(J+1)/2``."""
    P = J * (J + 1) // 2
    return 2 ** (P + 1) * P


def choose_transverse_point(basis: ModeBasis, modes: Sequence[int] | None = None, n_grid: int = 101,
                            margin: float = 0.1) -> np.ndarray:
    """Grid point maximizing ``min_j |phi_j(y)|`` over the propagating modes."""
    cs = basis.cross_section
    modes = basis.n_pro if modes is None else modes
    t = np.linspace(margin, 1.0 - margin, n_grid)
    Y1, Y2 = np.meshgrid(t * cs.a, t * cs.b, indexing="ij")
    score = np.full(Y1.shape, np.inf)
    for j in modes:
        p, q = int(basis.p[j - 1]), int(basis.q[j - 1])
        val = np.abs(np.sin(p * math.pi * Y1 / cs.a) * np.sin(q * math.pi * Y2 / cs.b))
        score = np.minimum(score, val)
    i, k = np.unravel_index(np.argmax(score), score.shape)
    return np.array([Y1[i, k], Y2[i, k]])


@dataclass
class MultiDesign:
    basis: ModeBasis
    gammas: list[Gamma]
    y: np.ndarray
    z: np.ndarray  # all N axial positions; the first 2P flies are resized
    B: np.ndarray
    capacity: float = 1.0

    @property
    def J(self) -> int:
        return self.basis.n_propagating

    @property
    def P(self) -> int:
        return len(self.gammas)

    @property
    def N(self) -> int:
        return len(self.z)

    @property
    def centers(self) -> np.ndarray:
        return np.column_stack([np.full(self.N, self.y[0]), np.full(self.N, self.y[1]), self.z])

    def flies(self, tau: np.ndarray | None = None, epsilon: float = 0.0) -> list[Fly]:
        out = []
        for n, c in enumerate(self.centers):
            f = Fly(tuple(c), self.capacity)
            if tau is not None and n < 2 * self.P:
                f = _resized(f, 1.0 + tau[n] * epsilon, n)
            out.append(f)
        return out

    def phasor_sums(self) -> np.ndarray:
        return np.array([abs(np.sum(np.exp(1j * g.value * self.z))) for g in self.gammas])


def build_multimodal_design(
    basis: ModeBasis,
    y_choice: Sequence[float] | None = None,
    capacity: float = MULTI_CAPACITY,
    grid_size: int = 256,
    svd_floor: float = 1e-3,
    d_min: float | None = None,
    node_floor: float = NODE_FLOOR,
    seed: int = 0,
) -> MultiDesign:
    gammas = compute_gammas(basis)
    gv = [g.value for g in gammas]
    y = choose_transverse_point(basis) if y_choice is None else np.asarray(y_choice, float)
    if not basis.cross_section.contains(y):
        raise ValueError(f"y={tuple(y)} is not inside the cross-section")
    _check_node(basis, y, basis.n_pro, node_floor)
    if d_min is None:
        cs = basis.cross_section
        d_min = max(default_d_min(gv), D_MIN_SECTION * min(cs.a, cs.b))
    z_seed, B = build_invertible_B(gv, grid_size, svd_floor, d_min, seed)
    z = doubling_placement(gv, z_seed, d_min)
    return MultiDesign(basis, gammas, y, z, B, capacity)


def solve_multimodal_fixed_point(
    design: MultiDesign,
    epsilon: float,
    ev: GreenEvaluator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kappa0: Sequence[float] | None = None,
    remainder_fn: RemainderFn | None = None,
    svd_floor: float = 1e-12,
) -> DesignReport:
    """Resize the first ``2P`` flies so that every ``s^{eps-}_{jj'}`` vanishes.

    Iterates ``kappa <- -eps B^{-1} D^{-1} U(kappa)`` where ``U`` stacks real and
    imaginary parts of the remainders ``s~_{jj'}`` ordered like the rows of
    ``B`` and ``D`` holds the pair weights ``phi_j phi_j' / (2 sqrt(beta_j beta_j'))``.
    """
    basis = design.basis
    P = design.P
    B = design.B
    if B.shape != (2 * P, 2 * P) or _smin(B) < svd_floor:
        raise SingularBError("phase matrix is singular")
    idx = {j: i for i, j in enumerate(basis.n_pro)}
    pairs = [(idx[g.j], idx[g.jp]) for g in design.gammas]
    norm = SIGN_SIGMA * 4j * math.pi * design.capacity

    base = FlyConfig(design.flies(), epsilon)
    A = ev.interaction_matrix(base.centers)
    first = s1_coefficients(base, basis).minus / norm
    second0 = s2_coefficients(base, basis, ev, A).minus / norm
    wp = np.array([[mode_value(basis, j, "+", c) for c in design.centers[: 2 * P]] for j in basis.n_pro])
    d = np.array([(wp[a, 0] * wp[b, 0] / np.exp(1j * g.value * design.z[0])).real for (a, b), g in zip(pairs, design.gammas)])
    D = np.repeat(d, 2)
    S = np.array([[second0[a, b].real, second0[a, b].imag] for a, b in pairs]).ravel()
    BD_inv = np.linalg.solve(B, np.diag(1.0 / D))

    def tau_of(kappa):
        return np.asarray(kappa) - BD_inv @ S

    def oracle(tau):
        cfg = FlyConfig(design.flies(tau, epsilon), epsilon)
        return FoldySystem(cfg, basis, ev, A).scattering_matrix().s_minus

    def U_of(tau):
        if remainder_fn is not None:
            return np.asarray(remainder_fn(tau), dtype=float)
        sec = second0 + (wp[:, : 2 * P] * tau) @ wp[:, : 2 * P].T
        st = remainder(oracle(tau), first, sec, epsilon, norm)
        return np.array([[st[a, b].real, st[a, b].imag] for a, b in pairs]).ravel()

    def F(kappa):
        return -epsilon * (BD_inv @ U_of(tau_of(kappa)))

    k0 = np.zeros(2 * P) if kappa0 is None else np.asarray(kappa0, float)
    kappa, trace, steps, contraction = _iterate(F, k0, tol, max_iter)
    tau = tau_of(kappa)
    s_final = oracle(tau)
    return DesignReport(
        kind="multimodal",
        epsilon=epsilon,
        kappa=kappa,
        tau=tau,
        tau0=tau_of(np.zeros(2 * P)),
        iterations=len(steps),
        steps=steps,
        contraction=contraction,
        residual=float(np.max(np.abs(s_final))),
        residual_unperturbed=float(np.max(np.abs(oracle(np.zeros(2 * P))))),
        config=FlyConfig(design.flies(tau, epsilon), epsilon),
        trace=trace,
        extra={
            "first_order_max": float(np.max(np.abs(first * norm))),
            "N": design.N,
            "P": P,
            "sigma_min_B": _smin(B),
            "phasor_sums": design.phasor_sums().tolist(),
            "max_size_change": float(np.max(np.abs(tau)) * epsilon),
        },
    )
