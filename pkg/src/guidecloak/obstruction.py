"""Why transmission cannot be made perfect, plus energy diagnostics.

For obstacles inside the slab ``omega x (-L, L)`` the bound ``mu1 = min(lambda_1 +
pi^2/(2L)^2, lambda_2)`` is the first eigenvalue of a mixed problem on the slab
(Dirichlet on the walls, Neumann on the two faces for the first transverse
mode).  Below it, ``T = 1`` is impossible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import FlyConfig
from .foldy import ScatterReport
from .modal import ModeBasis, enumerate_modes, mode_values


@dataclass(frozen=True)
class ObstructionBound:
    L: float
    mu1: float
    k2: float

    @property
    def verdict(self) -> bool:
        """True when ``k2 < mu1``: perfect transmission is ruled out."""
        return self.k2 < self.mu1


def slab_half_length(cfg: FlyConfig) -> float:
    """Half-length of the smallest slab, centered on the configuration, holding every scaled fly."""
    if len(cfg) == 0:
        raise ValueError("slab of an empty configuration is undefined")
    z = cfg.centers[:, 2]
    mid = 0.5 * (z.min() + z.max())
    radii = np.array([f.radius for f in cfg.flies])
    return float(np.max(np.abs(z - mid) + cfg.epsilon * radii))


def transmission_bound(basis: ModeBasis, L: float) -> ObstructionBound:
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    lam1, lam2 = _first_two(basis)
    mu1 = min(lam1 + (math.pi / (2.0 * L)) ** 2, lam2)
    return ObstructionBound(float(L), float(mu1), basis.k2)


def _first_two(basis: ModeBasis) -> tuple[float, float]:
    cs = basis.cross_section
    lam = enumerate_modes(cs, cs.eigenvalue(2, 2))[0]
    return float(lam[0]), float(lam[1])


def mixed_spectrum(basis: ModeBasis, L: float, count: int) -> np.ndarray:
    """The ``count`` smallest eigenvalues of the mixed slab problem, ascending."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if count < 1:
        raise ValueError("count must be >= 1")
    cs = basis.cross_section
    lam1, _ = _first_two(basis)
    n = np.arange(count)
    fam_a = lam1 + ((2 * n + 1) * math.pi / (2.0 * L)) ** 2
    # everything above the count-th member of the first family is irrelevant
    lam_all = enumerate_modes(cs, float(fam_a[-1]))[0]
    fam_b = [lj + (m * math.pi / L) ** 2 for lj in lam_all[1:] for m in range(count)]
    vals = np.sort(np.concatenate([fam_a, np.asarray(fam_b, dtype=float)]))
    return vals[:count]


@dataclass(frozen=True)
class TransmissionDiagnostics:
    abs_T_minus_1: float
    im_s_plus: float
    energy_residual: float
    first_order_scale: float  # 4 pi sum cap |w^+|^2, so |T - 1| ~ eps * this
    epsilon: float
    holds: bool


def transmission_deviation(report: ScatterReport, cfg: FlyConfig | None = None, basis: ModeBasis | None = None,
                           safety: float = 0.5) -> TransmissionDiagnostics:
    """Monomodal ``|T - 1|`` against its first-order size ``eps * 4 pi sum cap |w^+|^2``.

    The check passes when ``|T - 1| >= safety * eps * scale``; the first-order
    estimate is asymptotically sharp, hence the default ``safety = 0.5``.
    """
    if report.s_plus.shape != (1, 1):
        raise ValueError("transmission diagnostics need a monomodal report")
    s_plus = complex(report.s_plus[0, 0])
    dev = abs(s_plus)
    energy = float(report.energy_residual[0])
    scale = 0.0
    if cfg is not None and basis is not None and len(cfg):
        w = mode_values(basis, "+", cfg.centers)[0]
        scale = float(4.0 * math.pi * np.sum(cfg.capacities * np.abs(w) ** 2))
    holds = dev >= safety * report.epsilon * scale if scale > 0 else dev == 0.0
    return TransmissionDiagnostics(dev, s_plus.imag, energy, scale, report.epsilon, bool(holds))
