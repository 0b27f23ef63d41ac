"""Eigenvalue counting for ``-u'' + r(tau) u = lam u`` on ``[0, L]``.

Three independent routes are provided:

``count_below``
    Sturm-sequence (LDL^T inertia) count for the 3-point finite-difference
    matrix, with a grid refinement protocol ``m -> 2m -> 4m``.
``count_below_prufer``
    Prüfer phase shooting, ``theta' = S cos^2 theta + (lam - r)/S sin^2 theta``,
    integrated with an adaptive Runge-Kutta pair.
``count_below_phase``
    Prüfer phase propagated exactly across cells on which the potential is
    frozen at its midpoint value (piecewise-constant coefficients), with
    step-doubling mesh adaptation.  Its cost depends on how fast ``r`` varies
    rather than on the number of oscillations, so it handles necks whose
    length runs to 1e11 and beyond.

All three count eigenvalues *strictly* below the threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, DomainError

__all__ = [
    "BC",
    "Method",
    "SLProblem",
    "CountResult",
    "POTENTIAL_CLAMP",
    "default_grid_size",
    "sturm_count",
    "fd_tridiagonal",
    "free_correction",
    "corrected_count",
    "count_below",
    "count_below_prufer",
    "count_below_phase",
    "eigenvalues_in",
]

POTENTIAL_CLAMP = 1e12
MIN_GRID = 16
HALF_PI = 0.5 * math.pi


class BC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BC":
        if isinstance(value, BC):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown boundary condition {value!r}") from None


class Method(str, enum.Enum):
    STURM = "SturmSequence"
    PRUFER = "PruferShooting"
    PHASE = "PruferPiecewise"


@dataclass(frozen=True, eq=False)
class SLProblem:
    """A Schrödinger problem on ``[0, length]``.

    ``potential`` holds ``m + 1`` samples on the uniform grid.  When
    ``potential_fn`` is given it is the exact potential and is used for grid
    refinement and for the shooting methods; otherwise the table is
    interpolated linearly.  Values above ``POTENTIAL_CLAMP`` are clamped and
    ``clamped`` is set.
    """

    length: float
    potential: np.ndarray
    bc_left: BC = BC.DIRICHLET
    bc_right: BC = BC.DIRICHLET
    potential_fn: Optional[Callable] = None
    clamped: bool = field(default=False, init=False)

    def __post_init__(self):
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise DomainError(f"length must be positive and finite, got {self.length!r}")
        table = np.asarray(self.potential, dtype=float)
        if table.ndim != 1 or table.size - 1 < MIN_GRID:
            raise DomainError(f"potential table needs at least {MIN_GRID + 1} samples")
        if np.isnan(table).any() or (table == -np.inf).any():
            raise DomainError("potential values must be finite")
        clamped = bool((table > POTENTIAL_CLAMP).any())
        table = np.minimum(table, POTENTIAL_CLAMP)
        table.setflags(write=False)
        object.__setattr__(self, "potential", table)
        object.__setattr__(self, "clamped", clamped)
        object.__setattr__(self, "bc_left", BC.parse(self.bc_left))
        object.__setattr__(self, "bc_right", BC.parse(self.bc_right))

    @classmethod
    def from_function(cls, fn: Callable, length: float, m: int = 1024,
                      bc_left=BC.DIRICHLET, bc_right=BC.DIRICHLET) -> "SLProblem":
        tau = np.linspace(0.0, length, m + 1)
        with np.errstate(over="ignore"):
            table = np.asarray(fn(tau), dtype=float) * np.ones_like(tau)
        return cls(length, table, bc_left, bc_right, potential_fn=fn)

    @classmethod
    def constant(cls, value: float, length: float, m: int = 1024,
                 bc_left=BC.DIRICHLET, bc_right=BC.DIRICHLET) -> "SLProblem":
        return cls.from_function(lambda tau: np.full(np.shape(tau), float(value)),
                                 length, m, bc_left, bc_right)

    @property
    def grid_size(self) -> int:
        return self.potential.size - 1

    def evaluate(self, tau):
        """Potential at arbitrary points of ``[0, length]`` (clamped)."""
        if self.potential_fn is not None:
            with np.errstate(over="ignore"):
                v = np.asarray(self.potential_fn(tau), dtype=float)
        else:
            grid = np.linspace(0.0, self.length, self.grid_size + 1)
            v = np.interp(tau, grid, self.potential)
        v = np.minimum(v, POTENTIAL_CLAMP)
        return float(v) if v.ndim == 0 else v

    def sampled(self, m: int) -> np.ndarray:
        if m == self.grid_size:
            return self.potential
        return np.asarray(self.evaluate(np.linspace(0.0, self.length, m + 1)), dtype=float)

    def with_bcs(self, bc_left=None, bc_right=None) -> "SLProblem":
        return SLProblem(self.length, self.potential,
                         self.bc_left if bc_left is None else bc_left,
                         self.bc_right if bc_right is None else bc_right,
                         potential_fn=self.potential_fn)


@dataclass(frozen=True)
class CountResult:
    count: int
    lambda_threshold: float
    method: Method
    grid_size: int
    converged: bool = True
    flags: tuple = ()


def default_grid_size(length: float, lam: float) -> int:
    """Starting resolution that tracks the oscillation wavelength at ``lam``."""
    return max(1024, math.ceil(64.0 * length * (1.0 + math.sqrt(max(lam, 0.0)))))


# ---------------------------------------------------------------------------
# Sturm sequence on the finite-difference matrix
# ---------------------------------------------------------------------------

def fd_tridiagonal(problem: SLProblem, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and squared off-diagonal of the symmetrised 3-point matrix.

    Neumann ends use a reflected ghost node.  That makes the boundary row
    ``(2u_0 - 2u_1)/h^2``, which is not symmetric; a diagonal similarity
    restores symmetry and leaves the product of the two couplings, ``2/h^4``,
    which is all the Sturm count needs.
    """
    if m < MIN_GRID:
        raise DomainError(f"grid size must be at least {MIN_GRID}")
    h = problem.length / m
    v = problem.sampled(m)
    lo = 0 if problem.bc_left is BC.NEUMANN else 1
    hi = m if problem.bc_right is BC.NEUMANN else m - 1
    diag = 2.0 / (h * h) + v[lo:hi + 1]
    off2 = np.full(diag.size - 1, 1.0 / h**4)
    if problem.bc_left is BC.NEUMANN:
        off2[0] = 2.0 / h**4
    if problem.bc_right is BC.NEUMANN:
        off2[-1] = 2.0 / h**4
    return diag, off2


def sturm_count(diag, off2, lam: float) -> int:
    """Number of eigenvalues below ``lam`` of the symmetric tridiagonal matrix
    with the given diagonal and squared off-diagonal entries.

    Counts negative pivots of ``T - lam I = L D L^T``.  A zero pivot is
    replaced by ``-pivmin``, so an eigenvalue exactly at ``lam`` is counted.
    """
    d = diag.tolist() if isinstance(diag, np.ndarray) else list(diag)
    e2 = off2.tolist() if isinstance(off2, np.ndarray) else list(off2)
    pivmin = np.finfo(float).tiny * max(1.0, max(e2, default=1.0))
    q = d[0] - lam
    if abs(q) < pivmin:
        q = -pivmin
    count = 1 if q < 0.0 else 0
    for i in range(1, len(d)):
        q = (d[i] - lam) - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


def free_correction(bc_left: BC, bc_right: BC, length: float, m: int) -> np.ndarray:
    """Exact minus discrete eigenvalues of ``-u''`` for the same boundary
    conditions, index by index (ascending, nonnegative).

    Adding these to the discrete eigenvalues of a general potential removes
    the ``O(k^4 h^2)`` growth of the 3-point error and makes constant
    potentials exact.
    """
    h = length / m
    if bc_left is BC.DIRICHLET and bc_right is BC.DIRICHLET:
        j = np.arange(1, m, dtype=float)
        angle, exact = j * math.pi / (2 * m), j * math.pi / length
    elif bc_left is BC.NEUMANN and bc_right is BC.NEUMANN:
        j = np.arange(0, m + 1, dtype=float)
        angle, exact = j * math.pi / (2 * m), j * math.pi / length
    else:
        j = np.arange(1, m + 1, dtype=float) - 0.5
        angle, exact = j * math.pi / (2 * m), j * math.pi / length
    return np.maximum(exact**2 - (2.0 / h * np.sin(angle)) ** 2, 0.0)


def corrected_count(diag, off2, delta, lam: float) -> int:
    """Number of corrected eigenvalues ``lam_k + delta_k`` below ``lam``.

    Both sequences are nondecreasing, so ``K`` corrected eigenvalues lie
    below ``lam`` exactly when at least ``K`` raw ones lie below
    ``lam - delta_K``; the largest such ``K`` is found by bisection.
    """
    hi = sturm_count(diag, off2, lam)
    if hi == 0:
        return 0
    lo = sturm_count(diag, off2, lam - delta[hi - 1])
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if sturm_count(diag, off2, lam - delta[mid - 1]) >= mid:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _guard(lam: float, rel: float) -> float:
    return rel * max(1.0, abs(lam))


def _fd_system(problem: SLProblem, m: int):
    diag, off2 = fd_tridiagonal(problem, m)
    return diag, off2, free_correction(problem.bc_left, problem.bc_right, problem.length, m)


def count_below(problem: SLProblem, lam: float, m: int | None = None,
                guard: float = 1e-9) -> CountResult:
    """Sturm-sequence count of discretised eigenvalues strictly below ``lam``.

    Eigenvalues of the 3-point matrix carry the free-problem correction of
    :func:`free_correction`.  The count is accepted once two consecutive grids
    among ``m, 2m, 4m`` agree; otherwise the finest count is returned with
    ``converged=False``.  An eigenvalue within the guard band around ``lam``
    also clears ``converged`` and is left out of the count.
    """
    flags = ["clamped"] if problem.clamped else []
    m0 = problem.grid_size if m is None else int(m)
    # corrected eigenvalues are bounded below by min(r)
    if float(np.min(problem.potential)) >= lam and problem.potential_fn is None:
        return CountResult(0, lam, Method.STURM, m0, True, tuple(flags))

    counts = []
    grids = (m0, 2 * m0, 4 * m0)
    system = None
    for mm in grids:
        system = _fd_system(problem, mm)
        counts.append(corrected_count(*system, lam))
        if len(counts) >= 2 and counts[-1] == counts[-2]:
            break
    converged = len(counts) >= 2 and counts[-1] == counts[-2]
    if not converged:
        flags.append("unconverged")
    g = _guard(lam, guard)
    below = corrected_count(*system, lam - g)
    if below != corrected_count(*system, lam + g):
        # an eigenvalue inside the guard band is treated as not strictly below
        counts[-1] = below
        converged = False
        flags.append("tie")
    return CountResult(counts[-1], lam, Method.STURM, grids[len(counts) - 1],
                       converged, tuple(flags))


def eigenvalues_in(problem: SLProblem, lo: float, hi: float, m: int | None = None,
                   tol: float | None = None) -> list[float]:
    """Discretised eigenvalues in ``[lo, hi)`` located by bisection on the
    corrected Sturm count of a fixed grid (``m`` defaults to the problem's grid)."""
    if not lo < hi:
        raise DomainError("need lo < hi")
    mm = problem.grid_size if m is None else int(m)
    system = _fd_system(problem, mm)
    tol = 1e-10 * max(1.0, abs(hi)) if tol is None else tol
    # the same guard band as count_below, so the list length matches its counts
    n_lo = corrected_count(*system, lo - _guard(lo, 1e-9))
    n_hi = corrected_count(*system, hi - _guard(hi, 1e-9))
    out = []
    for k in range(n_lo, n_hi):
        # k-th eigenvalue (0-based) is inf{lam : count(lam) > k}
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if corrected_count(*system, mid) > k:
                b = mid
            else:
                a = mid
        out.append(0.5 * (a + b))
    return out


# ---------------------------------------------------------------------------
# Prüfer phase: shared pieces
# ---------------------------------------------------------------------------

def _theta_left(bc: BC) -> float:
    return 0.0 if bc is BC.DIRICHLET else HALF_PI


def _theta_right(bc: BC) -> float:
    return math.pi if bc is BC.DIRICHLET else HALF_PI


def _count_from_phase(whole: int, frac: float, beta: float, tie_tol: float):
    """Eigenvalue count from the end phase ``whole*pi + frac``.

    Eigenvalue ``k`` (0-based) sits where the end phase equals ``beta + k pi``;
    the phase is increasing in ``lam``.  On a tie the eigenvalue at ``lam``
    is not counted.
    """
    x = (frac - beta) / math.pi
    tie = abs(x - round(x)) < tie_tol
    k = round(x) if tie else math.ceil(x)
    return max(0, whole + k), tie


# ---------------------------------------------------------------------------
# Prüfer shooting with an adaptive Runge-Kutta pair
# ---------------------------------------------------------------------------

def count_below_prufer(problem: SLProblem, lam: float, rtol: float = 1e-8,
                       atol: float = 1e-8, scale: float = 1.0,
                       max_step: float | None = None) -> CountResult:
    """Count eigenvalues below ``lam`` from the Prüfer phase at ``tau = L``.

    ``scale`` is the Prüfer scaling ``S`` (``tan theta = S u / u'``); ``S = 1``
    is the classical transformation.  Scaling changes the path of ``theta`` but
    not the points where it crosses multiples of ``pi/2``, hence not the count.
    """
    L = problem.length
    S = float(scale)
    if not S > 0.0:
        raise DomainError("Prüfer scale must be positive")
    pot = problem.evaluate

    def rhs(t, y):
        c = math.cos(y[0])
        s = math.sin(y[0])
        return [S * c * c + (lam - pot(t)) / S * s * s]

    if max_step is None:
        max_step = 4.0 * L / problem.grid_size
    sol = solve_ivp(rhs, (0.0, L), [_theta_left(problem.bc_left)], method="RK45",
                    rtol=rtol, atol=atol, max_step=max_step)
    if sol.status < 0:
        raise ConvergenceError(f"Prüfer integration failed: {sol.message}")
    theta = float(sol.y[0, -1])
    whole = math.floor(theta / math.pi)
    count, tie = _count_from_phase(whole, theta - whole * math.pi,
                                   _theta_right(problem.bc_right), 1e-6)
    flags = ["clamped"] if problem.clamped else []
    if tie:
        flags.append("tie")
    return CountResult(count, lam, Method.PRUFER, problem.grid_size, not tie, tuple(flags))


# ---------------------------------------------------------------------------
# Prüfer phase with piecewise-constant coefficients
# ---------------------------------------------------------------------------
# The phase is carried as (whole, frac) meaning whole*pi + frac with frac in
# [-pi/2, pi/2), so that phases of order 1e12 keep full fractional accuracy.

def _normalize(whole: int, frac: float) -> tuple[int, float]:
    k = math.floor((frac + HALF_PI) / math.pi)
    return whole + k, frac - k * math.pi


def _rescale(frac: float, s: float) -> float:
    # angle with tan = s * tan(frac) in the same pi-interval; multiples of
    # pi/2 are fixed
    return math.atan(s * math.tan(frac))


def _cell(whole: int, frac: float, q: float, h: float) -> tuple[int, float]:
    """Exact Prüfer phase transport across a cell where ``lam - r = q``."""
    if q == 0.0 or abs(q) * h * h < 1e-14:
        if abs(frac) < HALF_PI:
            frac = math.atan(math.tan(frac) + h)
        return whole, frac
    if q > 0.0:
        k = math.sqrt(q)
        phi = _rescale(frac, k)
        kh = k * h
        rem = math.fmod(kh, math.pi)
        whole += int(round((kh - rem) / math.pi))
        whole, phi = _normalize(whole, phi + rem)
        return whole, _rescale(phi, 1.0 / k)
    kap = math.sqrt(-q)
    psi = _rescale(frac, kap)
    # psi' = kap cos(2 psi): psi never crosses pi/4 + j pi/2
    centre = round(psi / HALF_PI) * HALF_PI
    x2 = 2.0 * kap * h
    one_minus_t = 2.0 / (math.exp(x2) + 1.0) if x2 < 700.0 else 0.0
    s0, c0 = math.sin(psi), math.cos(psi)
    X = (s0 + c0) - c0 * one_minus_t
    Y = (c0 + s0) - s0 * one_minus_t
    if X == 0.0 and Y == 0.0:
        new = psi
    else:
        new = math.atan2(X, Y)
        new += 2.0 * math.pi * round((centre - new) / (2.0 * math.pi))
    whole, new = _normalize(whole, new)
    return whole, _rescale(new, 1.0 / kap)


def _phase_sweep(pot, L: float, lam: float, theta0: float, tol: float,
                 max_step: float) -> tuple[int, float, int]:
    whole, frac = _normalize(0, theta0)
    va = float(pot(0.0))
    h = min(max_step, 0.1 / (1.0 + math.sqrt(abs(lam - va))))
    hmin = 1e-13 * L
    t = 0.0
    cells = 0
    while t < L:
        if h >= L - t or L - t - h < 1e-12 * L:
            h = L - t
        b = L if h == L - t else t + h
        vq1, vm, vq3, vb = (float(v) for v in
                            pot(np.array([t + 0.25 * h, t + 0.5 * h, t + 0.75 * h, b])))
        q_mid = lam - vm
        k_eff = math.sqrt(abs(q_mid)) + 1e-300
        # crude aliasing guard on large cells; a cell above lam everywhere
        # sampled cannot hide an oscillation
        allowed = min(va, vq1, vm, vq3, vb) < lam
        if allowed and h > hmin and abs(vb - va) * h * min(h, 1.0 / k_eff) > 0.1:
            h *= 0.5
            continue
        w_full, f_full = _cell(whole, frac, q_mid, b - t)
        w_half, f_half = _cell(whole, frac, lam - vq1, 0.5 * (b - t))
        w_half, f_half = _cell(w_half, f_half, lam - vq3, 0.5 * (b - t))
        err = abs((w_full - w_half) * math.pi + (f_full - f_half))
        cell_tol = tol
        if not allowed:
            # forward transport through a forbidden zone contracts phase errors
            # by about exp(-2 kappa h) per cell, so a looser local target suffices
            kap_min = math.sqrt(min(va, vq1, vm, vq3, vb) - lam)
            cell_tol = tol * math.exp(min(2.0 * kap_min * (b - t), 10.0))
        if err <= cell_tol or h <= hmin:
            whole, frac = w_half, f_half
            t = b
            va = vb
            cells += 1
            grow = 4.0 if err == 0.0 else min(4.0, max(1.0, 0.9 * (cell_tol / err) ** (1.0 / 3.0)))
            h = min(max_step, h * grow)
        else:
            h *= max(0.2, 0.9 * (cell_tol / err) ** (1.0 / 3.0))
    return whole, frac, cells


def count_below_phase(problem: SLProblem, lam: float, tol: float = 1e-6,
                      max_step: float | None = None, verify: bool = True) -> CountResult:
    """Count eigenvalues below ``lam`` of the continuous problem by transporting
    the Prüfer phase exactly across piecewise-constant cells.

    ``tol`` bounds the step-doubling phase discrepancy per cell (radians).  With
    ``verify`` the sweep is repeated at ``tol/16`` and the result is flagged
    unconverged if the counts differ.
    """
    L = problem.length
    pot = problem.evaluate
    if max_step is None:
        max_step = L / MIN_GRID
    theta0 = _theta_left(problem.bc_left)
    beta = _theta_right(problem.bc_right)
    flags = ["clamped"] if problem.clamped else []

    whole, frac, cells = _phase_sweep(pot, L, lam, theta0, tol, max_step)
    count, tie = _count_from_phase(whole, frac, beta, 1e-7)
    converged = not tie
    if verify:
        w2, f2, cells = _phase_sweep(pot, L, lam, theta0, tol / 16.0, max_step)
        count2, tie2 = _count_from_phase(w2, f2, beta, 1e-7)
        if count2 != count:
            converged = False
            flags.append("unconverged")
        count, tie = count2, tie or tie2
    if tie:
        converged = False
        flags.append("tie")
    return CountResult(count, lam, Method.PHASE, cells, converged, tuple(flags))
