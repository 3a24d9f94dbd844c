"""Foldy-Lax point-scatterer oracle.

Each fly radiates ``a_n G(x, M_n)``.  Imposing ``u = 0`` on a sphere of radius
``4 pi cap_n eps`` around ``M_n`` (to leading order) closes the system::

    a_n (1/(4 pi cap_n eps) - G_reg(M_n)) - sum_{m != n} G(M_n, M_m) a_m = u_inc(M_n)

``Im(1/(4 pi cap eps)) = 0``, so the self term carries exactly the radiative
part of ``G_reg`` and the model conserves flux.  Far-field amplitudes follow
from ``G(x, M) -> -i w_j^+(M) w_j^-(x)`` as ``z -> -inf`` (and the mirror at
``+inf``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coefficients import FlyConfig, s1_coefficients, s2_coefficients
from .errors import SingularSystemError
from .green import GreenEvaluator
from .modal import ModeBasis, mode_values

RESONANCE_RTOL = 1e-10
TRUST_REGION = 0.1


@dataclass
class FoldySystem:
    cfg: FlyConfig
    basis: ModeBasis
    ev: GreenEvaluator
    interaction: np.ndarray | None = None
    t_inverse: np.ndarray = field(init=False)
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.cfg)
        if self.interaction is None:
            self.interaction = self.ev.interaction_matrix(self.cfg.centers) if n else np.zeros((0, 0), complex)
        A = np.asarray(self.interaction, dtype=complex)
        if A.shape != (n, n):
            raise ValueError(f"interaction matrix has shape {A.shape}, expected {(n, n)}")
        self.t_inverse = 1.0 / (4.0 * math.pi * self.cfg.capacities * self.cfg.epsilon) - np.diag(A)
        M = -A.copy()
        M[np.diag_indices(n)] = self.t_inverse
        self.matrix = M
        if n:
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] < RESONANCE_RTOL * sv[0]:
                raise SingularSystemError(
                    f"Foldy matrix is near-singular (sigma_min/sigma_max = {sv[-1] / sv[0]:.3g}); point-model resonance"
                )

    @property
    def trust_parameter(self) -> float:
        """``eps k max(cap)``; the point model is trusted below ``TRUST_REGION``."""
        caps = self.cfg.capacities
        return self.cfg.epsilon * self.ev.k * (caps.max() if len(caps) else 0.0)

    def solve_amplitudes(self, j: int, sign: str = "+") -> np.ndarray:
        """Amplitudes for the incident mode ``w_j^sign`` (``+``: incident from ``-inf``)."""
        if len(self.cfg) == 0:
            return np.zeros(0, dtype=complex)
        rhs = mode_values(self.basis, sign, self.cfg.centers, modes=[j])[0]
        return np.linalg.solve(self.matrix, rhs)

    def scattering_matrix(self) -> "ScatterReport":
        modes = self.basis.n_pro
        J = len(modes)
        n = len(self.cfg)
        if n == 0:
            zero = np.zeros((J, J), dtype=complex)
            return ScatterReport(zero, zero.copy(), zero.copy(), zero.copy(), self.cfg.epsilon, modes)
        wp = mode_values(self.basis, "+", self.cfg.centers)
        wm = mode_values(self.basis, "-", self.cfg.centers)
        Minv_wp = np.linalg.solve(self.matrix, wp.T)  # columns: amplitudes for w_j^+
        Minv_wm = np.linalg.solve(self.matrix, wm.T)
        # left incidence (w_j^+): row j
        s_minus = -1j * Minv_wp.T @ wp.T
        s_plus = -1j * Minv_wp.T @ wm.T
        # right incidence (w_j^-): reflected toward +inf, transmitted toward -inf
        r_right = -1j * Minv_wm.T @ wm.T
        t_right = -1j * Minv_wm.T @ wp.T
        return ScatterReport(s_minus, s_plus, r_right, t_right, self.cfg.epsilon, modes)


@dataclass
class ScatterReport:
    """Scattering data over propagating modes; row index = incident mode."""

    s_minus: np.ndarray
    s_plus: np.ndarray
    s_minus_right: np.ndarray
    s_plus_right: np.ndarray
    epsilon: float
    modes: tuple[int, ...] = ()

    @property
    def R(self) -> np.ndarray:
        return self.s_minus

    @property
    def T(self) -> np.ndarray:
        return np.eye(len(self.s_plus)) + self.s_plus

    def full_matrix(self) -> np.ndarray:
        """``2J x 2J`` propagating S-matrix, rows = incident (left then right)."""
        J = len(self.s_minus)
        I = np.eye(J)
        return np.block([[self.s_minus, I + self.s_plus], [I + self.s_plus_right, self.s_minus_right]])

    @property
    def reciprocity_residual(self) -> float:
        if self.s_minus.size == 0:
            return 0.0
        return float(np.max(np.abs(self.s_minus - self.s_minus.T)))

    @property
    def unitarity_residual(self) -> float:
        S = self.full_matrix()
        if S.size == 0:
            return 0.0
        return float(np.max(np.abs(S @ S.conj().T - np.eye(len(S)))))

    @property
    def energy_residual(self) -> np.ndarray:
        """Per incident mode: ``sum_j' |R_jj'|^2 + |T_jj'|^2 - 1``."""
        return np.sum(np.abs(self.R) ** 2, axis=1) + np.sum(np.abs(self.T) ** 2, axis=1) - 1.0


def scattering_matrix(sys: FoldySystem) -> ScatterReport:
    return sys.scattering_matrix()


def solve_amplitudes(sys: FoldySystem, j: int) -> np.ndarray:
    return sys.solve_amplitudes(j)


def oracle_s_minus(cfg: FlyConfig, basis: ModeBasis, ev: GreenEvaluator, interaction=None) -> np.ndarray:
    return FoldySystem(cfg, basis, ev, interaction).scattering_matrix().s_minus


def remainder(
    s_oracle: np.ndarray | complex,
    first: np.ndarray | complex,
    second: np.ndarray | complex,
    epsilon: float,
    norm: complex = 1.0,
) -> np.ndarray | complex:
    """``eps^-3 [s_oracle / norm - eps first - eps^2 second]``.

    ``first`` and ``second`` are already divided by ``norm``; the designers pass
    ``norm = sigma 4 i pi cap`` to match the normalized expansions they cancel.
    """
    return (np.asarray(s_oracle) / norm - epsilon * np.asarray(first) - epsilon**2 * np.asarray(second)) / epsilon**3


def calibrate_sign_sigma(basis: ModeBasis, ev: GreenEvaluator, center=None, capacity: float = 1.0) -> int:
    """Fix the global sign from the small-eps slope of a single fly's reflection."""
    from .coefficients import Fly

    cs = basis.cross_section
    if center is None:
        center = (0.3 * cs.a, 0.3 * cs.b, 0.0)
    eps = 1e-4
    cfg = FlyConfig((Fly(tuple(center), capacity),), eps, sign_sigma=1)
    slope = oracle_s_minus(cfg, basis, ev)[0, 0] / eps
    formula = s1_coefficients(cfg, basis).minus[0, 0]
    return 1 if (slope / formula).real > 0 else -1


def expansion_errors(cfg: FlyConfig, basis: ModeBasis, ev: GreenEvaluator, interaction=None) -> dict:
    """Oracle reflection versus its one- and two-term expansions (entrywise max)."""
    if interaction is None and len(cfg):
        interaction = ev.interaction_matrix(cfg.centers)
    rep = FoldySystem(cfg, basis, ev, interaction).scattering_matrix()
    s1 = s1_coefficients(cfg, basis)
    s2 = s2_coefficients(cfg, basis, ev, interaction)
    eps = cfg.epsilon
    d1 = rep.s_minus - eps * s1.minus
    d2 = d1 - eps**2 * s2.minus
    return {
        "epsilon": eps,
        "s_minus": float(np.max(np.abs(rep.s_minus))) if rep.s_minus.size else 0.0,
        "err1": float(np.max(np.abs(d1))) if d1.size else 0.0,
        "err2": float(np.max(np.abs(d2))) if d2.size else 0.0,
        "energy_residual": float(np.max(np.abs(rep.energy_residual))) if rep.s_minus.size else 0.0,
        "report": rep,
    }


def loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


SystemBuilder = Callable[[np.ndarray], FoldySystem]
