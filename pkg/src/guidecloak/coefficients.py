"""First- and second-order asymptotic scattering coefficients of small flies.

For flies ``M_n`` with capacities ``cap_n`` and scale ``eps``::

    s^{eps-}_{jj'} = eps s1m_{jj'} + eps^2 s2m_{jj'} + O(eps^3)
    s1m_{jj'} = sigma 4 i pi sum_n cap_n w_j^+(M_n) w_j'^+(M_n)
    s1p_{jj'} = sigma 4 i pi sum_n cap_n w_j^+(M_n) w_j'^-(M_n)
    s2m_{jj'} = sigma 4 i pi sum_n cap_n u_{j,1}(M_n) w_j'^+(M_n)

with ``u_{j,1}(M_m) = 4 pi sum_n cap_n w_j^+(M_n) Ghat_{mn}``, where ``Ghat`` is
``G`` off the diagonal and ``G_reg`` on it.  ``sigma`` is a global sign fixed
once against the point-scatterer oracle (see :data:`SIGN_SIGMA`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvariantError
from .green import GreenEvaluator
from .modal import CrossSection, ModeBasis, mode_values

#: Calibrated against :func:`guidecloak.foldy.calibrate_sign_sigma`.
SIGN_SIGMA = -1


def capacity_sphere(radius: float) -> float:
    """Harmonic capacity of a ball, normalized so that ``W(xi) ~ cap/|xi|``."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    return float(radius)


@dataclass(frozen=True)
class Fly:
    """Point obstacle: center ``(y1, y2, z)``, capacity and bounding radius of the unscaled shape."""

    center: tuple[float, float, float]
    capacity: float
    radius: float | None = None

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius is None:
            object.__setattr__(self, "radius", float(self.capacity))

    @classmethod
    def sphere(cls, center: Sequence[float], radius: float) -> "Fly":
        return cls(tuple(center), capacity_sphere(radius), float(radius))

    def scaled(self, factor: float) -> "Fly":
        """The fly with shape ``factor * O`` (capacity is 1-homogeneous)."""
        return Fly(self.center, self.capacity * factor, self.radius * factor)

    def moved(self, center: Sequence[float]) -> "Fly":
        return Fly(tuple(center), self.capacity, self.radius)


@dataclass(frozen=True)
class FlyConfig:
    flies: tuple[Fly, ...]
    epsilon: float
    sign_sigma: int = SIGN_SIGMA

    def __post_init__(self):
        object.__setattr__(self, "flies", tuple(self.flies))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.sign_sigma not in (1, -1):
            raise ValueError("sign_sigma must be +1 or -1")

    def __len__(self) -> int:
        return len(self.flies)

    @property
    def centers(self) -> np.ndarray:
        return np.array([f.center for f in self.flies], dtype=float).reshape(-1, 3)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([f.capacity for f in self.flies], dtype=float)

    def with_flies(self, flies: Sequence[Fly]) -> "FlyConfig":
        return replace(self, flies=tuple(flies))

    def with_epsilon(self, epsilon: float) -> "FlyConfig":
        return replace(self, epsilon=epsilon)

    def validate(self, cs: CrossSection) -> None:
        """Check that every scaled obstacle sits inside the guide and that they are disjoint."""
        eps = self.epsilon
        for n, f in enumerate(self.flies):
            y = f.center[:2]
            if not cs.contains(y, clearance=eps * f.radius):
                raise InvariantError(
                    f"fly {n}: center y={y} not inside the cross-section with clearance {eps * f.radius:.3g}"
                )
        c = self.centers
        for m in range(len(c)):
            for n in range(m + 1, len(c)):
                gap = float(np.linalg.norm(c[m] - c[n]))
                need = eps * (self.flies[m].radius + self.flies[n].radius)
                if gap <= need:
                    raise InvariantError(f"flies {m} and {n} overlap: distance {gap:.3g} <= {need:.3g}")


@dataclass
class FirstOrder:
    minus: np.ndarray
    plus: np.ndarray
    modes: tuple[int, ...] = field(default=())


def _weighted(cfg: FlyConfig, basis: ModeBasis):
    pts = cfg.centers
    wp = mode_values(basis, "+", pts) if len(pts) else np.zeros((basis.n_propagating, 0), complex)
    wm = mode_values(basis, "-", pts) if len(pts) else np.zeros((basis.n_propagating, 0), complex)
    return wp, wm


def s1_coefficients(cfg: FlyConfig, basis: ModeBasis) -> FirstOrder:
    """Order-eps coefficients over the propagating modes (``J x J`` matrices)."""
    wp, wm = _weighted(cfg, basis)
    c = cfg.capacities
    pref = cfg.sign_sigma * 4j * math.pi
    minus = pref * (wp * c) @ wp.T
    plus = pref * (wp * c) @ wm.T
    return FirstOrder(minus, plus, basis.n_pro)


def evaluate_u1(
    cfg: FlyConfig,
    basis: ModeBasis,
    ev: GreenEvaluator,
    j: int,
    interaction: np.ndarray | None = None,
) -> np.ndarray:
    """``u_{j,1}`` at every fly center, singular self-part removed through ``G_reg``."""
    if len(cfg) == 0:
        return np.zeros(0, dtype=complex)
    A = ev.interaction_matrix(cfg.centers) if interaction is None else interaction
    w = mode_values(basis, "+", cfg.centers, modes=[j])[0]
    return 4.0 * math.pi * A @ (cfg.capacities * w)


@dataclass
class SecondOrder:
    minus: np.ndarray
    plus: np.ndarray
    u1: np.ndarray  # (J, N): u_{j,1}(M_n)


def s2_coefficients(
    cfg: FlyConfig,
    basis: ModeBasis,
    ev: GreenEvaluator,
    interaction: np.ndarray | None = None,
) -> SecondOrder:
    J = basis.n_propagating
    n = len(cfg)
    if n == 0:
        z = np.zeros((J, J), dtype=complex)
        return SecondOrder(z, z.copy(), np.zeros((J, 0), dtype=complex))
    A = ev.interaction_matrix(cfg.centers) if interaction is None else interaction
    wp, wm = _weighted(cfg, basis)
    c = cfg.capacities
    u1 = 4.0 * math.pi * (wp * c) @ A  # row j: u_{j,1}(M_m), A symmetric
    pref = cfg.sign_sigma * 4j * math.pi
    minus = pref * (u1 * c) @ wp.T
    plus = pref * (u1 * c) @ wm.T
    return SecondOrder(minus, plus, u1)
