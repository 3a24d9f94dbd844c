"""Outgoing Dirichlet Green's function of the empty rectangular waveguide.

``G`` solves ``(Delta + k^2) G = delta`` with the outgoing condition and is
evaluated from its modal series::

    G(x, x') = sum_j phi_j(y) phi_j(y') exp(i beta_j |z - z'|) / (2 i beta_j)

Near the source ``G ~ -1/(4 pi r) + G_reg``.  ``G_reg`` is obtained by
evaluating the smooth, even function ``f(delta) = G(M + delta e_z, M) -
Phi_k(delta)`` at a few axial offsets and extrapolating to ``delta = 0`` in
the variable ``delta^2``; ``Phi_k(r) = -exp(ikr)/(4 pi r)``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CoincidentPointsError, ExtrapolationDivergedError, NonConvergentError
from .modal import ModeBasis

DEFAULT_TAIL_TOL = 1e-13
DEFAULT_OFFSET_FACTORS = (0.1, 0.05, 0.025, 0.0125)
_CACHE_DIGITS = 12


def tail_bound(lam_cut: float, k2: float, d: float) -> float:
    """Upper bound of ``sum_{lambda_j > lam_cut} |phi_j(y) phi_j(y')| e^{-kappa_j d} / (2 kappa_j)``.

    Uses ``|phi_j| <= 2/sqrt(ab)`` and the Weyl-type count
    ``#{lambda_j <= L} <= ab L / (4 pi)`` valid for Dirichlet rectangles, so the
    bound does not depend on the cross-section::

        (1/pi) * (lam_cut / (2 kappa) + 1/d) * exp(-kappa d),  kappa = sqrt(lam_cut - k2)
    """
    if lam_cut <= k2:
        return math.inf
    kappa = math.sqrt(lam_cut - k2)
    return (lam_cut / (2.0 * kappa) + 1.0 / d) * math.exp(-kappa * d) / math.pi


def cutoff_for(k2: float, d: float, tol: float) -> float:
    """Smallest ``lam_cut`` (up to a bisection bracket) with ``tail_bound <= tol``."""
    if d <= 0:
        raise NonConvergentError("modal series needs a nonzero axial separation")
    lo = k2
    hi = k2 + (max(1.0, 40.0 / d)) ** 2
    while tail_bound(hi, k2, d) > tol:
        hi = k2 + 4.0 * (hi - k2)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if tail_bound(mid, k2, d) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def neville_to_zero(h: np.ndarray, f: np.ndarray) -> tuple[complex, np.ndarray]:
    """Polynomial extrapolation of ``f(h)`` to ``h = 0``.

    Returns the full-order value and the diagonal of the Neville tableau
    (``diag[m]`` uses the first ``m + 1`` samples).
    """
    n = len(h)
    T = np.array(f, dtype=complex)
    diag = [T[0]]
    cur = T.copy()
    for m in range(1, n):
        nxt = np.empty(n - m, dtype=complex)
        for i in range(n - m):
            nxt[i] = (h[i] * cur[i + 1] - h[i + m] * cur[i]) / (h[i] - h[i + m])
        cur = nxt
        diag.append(cur[0])
    return complex(cur[0]), np.array(diag)


@dataclass
class RegularizedValue:
    value: complex
    error_estimate: float
    offsets: tuple[float, ...]


@dataclass
class GreenEvaluator:
    """Evaluates ``G`` and ``G_reg`` for one :class:`ModeBasis`.

    Parameters
    ----------
    basis : ModeBasis
        Only ``k2`` and the cross-section are used; the evaluator builds its
        own (much longer) eigenvalue table as the tail bound demands.
    mode_cutoff : float
        Target absolute bound of the truncated modal tail.
    reg_offsets : sequence of float, optional
        Strictly decreasing axial offsets used by :meth:`green_reg`; default
        ``(0.1, 0.05, 0.025, 0.0125) * min(a, b)``.
    """

    basis: ModeBasis
    mode_cutoff: float = DEFAULT_TAIL_TOL
    reg_offsets: Sequence[float] | None = None
    coincident_tol: float = 1e-9
    _beta_grid: np.ndarray | None = field(default=None, init=False, repr=False)
    _lam_grid: np.ndarray | None = field(default=None, init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if not self.mode_cutoff > 0:
            raise ValueError("mode_cutoff must be positive")
        cs = self.basis.cross_section
        if self.reg_offsets is None:
            scale = min(cs.a, cs.b)
            self.reg_offsets = tuple(f * scale for f in DEFAULT_OFFSET_FACTORS)
        offs = tuple(float(d) for d in self.reg_offsets)
        if len(offs) < 2 or any(d <= 0 for d in offs) or any(x <= y for x, y in zip(offs, offs[1:])):
            raise ValueError(f"reg_offsets must be positive and strictly decreasing, got {offs}")
        self.reg_offsets = offs

    @property
    def k2(self) -> float:
        return self.basis.k2

    @property
    def k(self) -> float:
        return math.sqrt(self.basis.k2)

    # -- modal table -----------------------------------------------------
    def _grids(self, lam_cut: float) -> tuple[int, int]:
        cs = self.basis.cross_section
        n_p = int(cs.a * math.sqrt(lam_cut) / math.pi) + 1
        n_q = int(cs.b * math.sqrt(lam_cut) / math.pi) + 1
        with self._lock:
            have = self._lam_grid
            if have is None or have.shape[0] < n_p or have.shape[1] < n_q:
                gp = max(n_p, 0 if have is None else have.shape[0])
                gq = max(n_q, 0 if have is None else have.shape[1])
                p = np.arange(1, gp + 1)[:, None]
                q = np.arange(1, gq + 1)[None, :]
                lam = math.pi**2 * (p**2 / cs.a**2 + q**2 / cs.b**2)
                diff = (self.k2 - lam).astype(complex)
                beta = np.sqrt(diff)
                # branch Im >= 0; np.sqrt already returns it for real input
                beta = np.where(beta.imag < 0, -beta, beta)
                self._lam_grid, self._beta_grid = lam, beta
        return n_p, n_q

    def _transverse(self, y: Sequence[float], yp: Sequence[float], n_p: int, n_q: int) -> np.ndarray:
        cs = self.basis.cross_section
        p = np.arange(1, n_p + 1)
        q = np.arange(1, n_q + 1)
        sp = np.sin(p * math.pi * y[0] / cs.a) * np.sin(p * math.pi * yp[0] / cs.a)
        sq = np.sin(q * math.pi * y[1] / cs.b) * np.sin(q * math.pi * yp[1] / cs.b)
        return (4.0 / (cs.a * cs.b)) * np.outer(sp, sq)

    def _modal_sums(self, y, yp, dists: Sequence[float]) -> np.ndarray:
        """``sum_j phi_j(y) phi_j(y') e^{i beta_j d}/(2 i beta_j)`` for each ``d``."""
        d_min = min(dists)
        lam_cut = cutoff_for(self.k2, d_min, self.mode_cutoff)
        n_p, n_q = self._grids(lam_cut)
        lam = self._lam_grid[:n_p, :n_q]
        beta = self._beta_grid[:n_p, :n_q]
        mask = lam <= lam_cut
        weights = self._transverse(y, yp, n_p, n_q)[mask] / (2j * beta[mask])
        b = beta[mask]
        return np.array([np.sum(weights * np.exp(1j * b * d)) for d in dists])

    # -- public API --------------------------------------------------------
    def green(self, x: Sequence[float], x_src: Sequence[float]) -> complex:
        """Outgoing Green's function ``G(x, x_src)`` (symmetric in its arguments)."""
        x = np.asarray(x, dtype=float)
        xs = np.asarray(x_src, dtype=float)
        r = float(np.linalg.norm(x - xs))
        scale = min(self.basis.cross_section.a, self.basis.cross_section.b)
        if r < self.coincident_tol * scale:
            raise CoincidentPointsError(f"|x - x_src| = {r:.3g}; use green_reg for the self-interaction")
        dz = abs(float(x[2] - xs[2]))
        # order the arguments canonically so G(x,x') == G(x',x) bit for bit
        ya, yb = sorted([tuple(x[:2]), tuple(xs[:2])])
        if dz >= self.reg_offsets[-1]:
            return complex(self._modal_sums(ya, yb, [dz])[0])
        dy = float(np.linalg.norm(x[:2] - xs[:2]))
        if dy < 4.0 * self.reg_offsets[-1]:
            raise NonConvergentError(
                f"|dz|={dz:.3g} and |dy|={dy:.3g} both too small for the modal series at tolerance {self.mode_cutoff:g}"
            )
        # G(y, y', s) is smooth and even in s away from r = 0: extrapolate in s^2
        offs = np.array([0.25, 0.125, 0.0625, 0.03125]) * dy
        s = np.sqrt(dz**2 + offs**2)
        vals = self._modal_sums(ya, yb, list(s))
        value, _ = neville_to_zero(offs**2, vals)
        return value

    def _phi_k(self, r: float) -> complex:
        return -np.exp(1j * self.k * r) / (4.0 * math.pi * r)

    def green_reg_detail(self, m: Sequence[float]) -> RegularizedValue:
        """``G_reg(M) = lim_{x->M} [G(x, M) + 1/(4 pi |x - M|)]`` with an error estimate.

        ``G_reg`` depends only on the transverse coordinate of ``M``; values are
        cached by rounded ``y``.
        """
        cs = self.basis.cross_section
        y = (float(m[0]), float(m[1]))
        if not cs.contains(y):
            raise ValueError(f"point {y} is not strictly inside the cross-section")
        key = (round(y[0], _CACHE_DIGITS), round(y[1], _CACHE_DIGITS))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        offs = np.array(self.reg_offsets)
        wall = cs.wall_distance(y)
        if offs[0] > wall:
            offs = offs * (wall / offs[0])
        sums = self._modal_sums(y, y, list(offs))
        f = sums - np.array([self._phi_k(d) for d in offs])
        value, diag = neville_to_zero(offs**2, f)
        steps = np.abs(np.diff(diag))
        err = float(steps[-1])
        noise = 1e-11 * max(1.0, float(np.max(np.abs(f))))
        if len(steps) >= 2 and steps[-1] > steps[-2] and steps[-1] > noise:
            raise ExtrapolationDivergedError(
                f"Richardson extrapolants do not contract at y={y}: steps {steps.tolist()}"
            )
        out = RegularizedValue(complex(value - 1j * self.k / (4.0 * math.pi)), err, tuple(offs))
        with self._lock:
            self._cache.setdefault(key, out)
        return self._cache[key]

    def green_reg(self, m: Sequence[float]) -> complex:
        return self.green_reg_detail(m).value

    def green_reg_imag_exact(self, m: Sequence[float]) -> float:
        """Closed form ``Im G_reg(M) = -sum_{j propagating} phi_j(y)^2 / (2 beta_j)``."""
        return -sum(self.basis.phi(j, m) ** 2 / (2.0 * self.basis.beta_of(j).real) for j in self.basis.n_pro)

    def interaction_matrix(self, points: np.ndarray) -> np.ndarray:
        """Symmetric matrix with ``G(M_m, M_n)`` off the diagonal and ``G_reg(M_n)`` on it."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = len(pts)
        A = np.empty((n, n), dtype=complex)
        for i in range(n):
            A[i, i] = self.green_reg(pts[i])
            for j in range(i + 1, n):
                A[i, j] = A[j, i] = self.green(pts[i], pts[j])
        return A
