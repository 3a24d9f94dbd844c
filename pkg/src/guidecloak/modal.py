"""Spectral data of a rectangular cross-section and the waveguide modes.

The waveguide is ``omega x R`` with ``omega = (0, a) x (0, b)`` and Dirichlet
walls.  Transverse eigenpairs are closed form::

    lambda_pq = pi^2 (p^2/a^2 + q^2/b^2)
    phi_pq(y) = 2/sqrt(ab) sin(p pi y1/a) sin(q pi y2/b)

and the modes are ``w_j^pm(y, z) = (2|beta_j|)^(-1/2) exp(+-i beta_j z) phi_j(y)``
with ``beta_j = sqrt(k^2 - lambda_j)`` taken on the branch ``Im >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NearCutoffError, OutOfSectionError

DEFAULT_CUTOFF_FACTOR = 50.0
DEFAULT_GAP_REL = 1e-8


@dataclass(frozen=True)
class CrossSection:
    """Rectangle ``(0, width_a) x (0, height_b)``."""

    width_a: float
    height_b: float

    def __post_init__(self):
        if not (self.width_a > 0 and self.height_b > 0):
            raise ValueError(f"cross-section sides must be positive, got ({self.width_a}, {self.height_b})")

    @property
    def a(self) -> float:
        return self.width_a

    @property
    def b(self) -> float:
        return self.height_b

    def eigenvalue(self, p: int, q: int) -> float:
        return math.pi**2 * (p**2 / self.a**2 + q**2 / self.b**2)

    def contains(self, y: Sequence[float], clearance: float = 0.0) -> bool:
        y1, y2 = float(y[0]), float(y[1])
        return clearance < y1 < self.a - clearance and clearance < y2 < self.b - clearance

    def wall_distance(self, y: Sequence[float]) -> float:
        y1, y2 = float(y[0]), float(y[1])
        return min(y1, self.a - y1, y2, self.b - y2)

    def phi(self, p: int, q: int, y: Sequence[float]) -> float:
        """Normalized eigenfunction ``phi_pq`` at ``y`` (no bounds check)."""
        return (
            2.0
            / math.sqrt(self.a * self.b)
            * math.sin(p * math.pi * y[0] / self.a)
            * math.sin(q * math.pi * y[1] / self.b)
        )

    def grad_phi(self, p: int, q: int, y: Sequence[float]) -> np.ndarray:
        c = 2.0 / math.sqrt(self.a * self.b)
        u1 = p * math.pi / self.a
        u2 = q * math.pi / self.b
        return np.array(
            [
                c * u1 * math.cos(u1 * y[0]) * math.sin(u2 * y[1]),
                c * u2 * math.sin(u1 * y[0]) * math.cos(u2 * y[1]),
            ]
        )


def eigenpair(cs: CrossSection, p: int, q: int) -> tuple[float, Callable[[float, float], float]]:
    """Return ``(lambda_pq, phi_pq)`` for the Dirichlet Laplacian on the rectangle.

    The evaluator is L2-normalized on the cross-section.
    """
    if int(p) != p or int(q) != q or p < 1 or q < 1:
        raise ValueError(f"mode indices must be positive integers, got ({p}, {q})")
    p, q = int(p), int(q)

    def phi(y1: float, y2: float) -> float:
        return cs.phi(p, q, (y1, y2))

    return cs.eigenvalue(p, q), phi


def principal_sqrt(c: complex) -> complex:
    """Square root on the branch ``Im sqrt(c) >= 0``.

    For real ``c`` this is ``sqrt(c)`` when ``c > 0`` and ``i sqrt(-c)`` otherwise.
    """
    r = np.sqrt(complex(c))
    if r.imag < 0 or (r.imag == 0 and r.real < 0):
        r = -r
    return complex(r)


def enumerate_modes(cs: CrossSection, lam_max: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All ``(lambda, p, q)`` with ``lambda <= lam_max``, sorted by ``(lambda, p, q)``."""
    p_max = max(1, int(math.floor(cs.a * math.sqrt(max(lam_max, 0.0)) / math.pi)) + 1)
    q_max = max(1, int(math.floor(cs.b * math.sqrt(max(lam_max, 0.0)) / math.pi)) + 1)
    p = np.arange(1, p_max + 1)
    q = np.arange(1, q_max + 1)
    P, Q = np.meshgrid(p, q, indexing="ij")
    lam = math.pi**2 * (P**2 / cs.a**2 + Q**2 / cs.b**2)
    mask = lam <= lam_max
    lam, P, Q = lam[mask], P[mask], Q[mask]
    order = np.lexsort((Q, P, lam))
    return lam[order], P[order], Q[order]


@dataclass(frozen=True)
class ModeBasis:
    """Sorted transverse eigenpairs together with the axial exponents."""

    cross_section: CrossSection
    k2: float
    eigenvalues: np.ndarray
    p: np.ndarray
    q: np.ndarray
    beta: np.ndarray
    n_pro: tuple[int, ...] = field(default=())
    n_exp: tuple[int, ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_propagating(self) -> int:
        return len(self.n_pro)

    @property
    def index_pairs(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.p, self.q)]

    def phi(self, j: int, y: Sequence[float]) -> float:
        """``phi_j(y)``; ``j`` is 1-based as in the mode ordering."""
        return self.cross_section.phi(int(self.p[j - 1]), int(self.q[j - 1]), y)

    def grad_phi(self, j: int, y: Sequence[float]) -> np.ndarray:
        return self.cross_section.grad_phi(int(self.p[j - 1]), int(self.q[j - 1]), y)

    def beta_of(self, j: int) -> complex:
        return complex(self.beta[j - 1])

    def propagating_beta(self) -> np.ndarray:
        return np.array([self.beta[j - 1].real for j in self.n_pro])


def build_mode_basis(
    cs: CrossSection,
    k2: float,
    j_max: int | None = None,
    *,
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR,
    spectral_gap_tol: float | None = None,
) -> ModeBasis:
    """Build the modal basis at squared wavenumber ``k2``.

    By default every mode with ``lambda_j <= cutoff_factor * k2`` is kept;
    ``j_max`` instead keeps the first ``j_max`` modes (at least every
    propagating one is always retained).

    Raises
    ------
    NearCutoffError
        If ``|k2 - lambda_j| <= spectral_gap_tol`` for a retained mode.
    """
    if not k2 > 0:
        raise ValueError(f"k2 must be positive, got {k2}")
    tol = DEFAULT_GAP_REL * k2 if spectral_gap_tol is None else spectral_gap_tol
    lam_max = cutoff_factor * k2
    lam, p, q = enumerate_modes(cs, lam_max)
    while j_max is not None and len(lam) < j_max:
        lam_max *= 2.0
        lam, p, q = enumerate_modes(cs, lam_max)
    if j_max is not None:
        n_keep = max(int(j_max), int(np.sum(lam < k2)) + 1)
        lam, p, q = lam[:n_keep], p[:n_keep], q[:n_keep]
    if len(lam) == 0:
        lam, p, q = enumerate_modes(cs, cs.eigenvalue(1, 1))

    near = np.abs(k2 - lam) <= tol
    if np.any(near):
        j = int(np.argmax(near)) + 1
        raise NearCutoffError(f"k2={k2!r} is within {tol:.3g} of lambda_{j}={lam[j - 1]!r} (threshold case excluded)")

    beta = np.array([principal_sqrt(k2 - lj) for lj in lam])
    n_pro = tuple(int(j) + 1 for j in np.flatnonzero(lam < k2))
    n_exp = tuple(int(j) + 1 for j in np.flatnonzero(lam > k2))
    return ModeBasis(cs, float(k2), lam, p.astype(int), q.astype(int), beta, n_pro, n_exp)


def mode_value(basis: ModeBasis, j: int, sign: int | str, point: Sequence[float]) -> complex:
    """Evaluate ``w_j^sign`` at ``point = (y1, y2, z)``."""
    if sign in ("+", 1, +1):
        s = 1
    elif sign in ("-", -1):
        s = -1
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if not 1 <= j <= basis.n_modes:
        raise IndexError(f"mode index {j} outside 1..{basis.n_modes}")
    y = (float(point[0]), float(point[1]))
    z = float(point[2])
    cs = basis.cross_section
    if not (0.0 <= y[0] <= cs.a and 0.0 <= y[1] <= cs.b):
        raise OutOfSectionError(f"point y={y} is outside the cross-section (0,{cs.a})x(0,{cs.b})")
    beta = basis.beta_of(j)
    return (2.0 * abs(beta)) ** -0.5 * np.exp(s * 1j * beta * z) * basis.phi(j, y)


def mode_values(basis: ModeBasis, sign: int | str, points: np.ndarray, modes: Sequence[int] | None = None) -> np.ndarray:
    """Vectorized ``w_j^sign(M_n)``; returns shape ``(len(modes), len(points))``."""
    modes = basis.n_pro if modes is None else modes
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(modes), len(pts)), dtype=complex)
    for i, j in enumerate(modes):
        for n, pt in enumerate(pts):
            out[i, n] = mode_value(basis, j, sign, pt)
    return out
