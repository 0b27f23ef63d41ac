"""Counting eigenvalues of the neck in the window ``[sigma, sigma + x^2)``.

The harmonic block of coexact p-forms on the neck reduces to ``d(p)`` copies
of one 1-D problem, so the count is ``d(p)`` times a 1-D count and is compared
with ``d x R / pi``.  Non-harmonic transverse modes see the extra potential
``mu / f(tau)``; truncating the neck at depth ``r0 - 1`` from the compact piece
pushes that potential above the window, which :func:`transverse_contribution`
checks by solving for it anyway.

The 1-D problems are posed in the depth coordinate ``s = R - tau`` (``s = 0``
at the junction with the compact piece), which keeps the potential accurate
when ``R`` is astronomically large.  Eigenvalue counts do not depend on the
orientation.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleError, WarpspecError
from .geometry import MetricParams, log_warp_factor, neck_length
from .reduction import essential_bottom, reduced_potential, transverse_effective_potential
from .solver import (
    BC,
    CountResult,
    SLProblem,
    count_below,
    count_below_phase,
    count_below_prufer,
    default_grid_size,
)

__all__ = [
    "CrossSectionModel",
    "SpectralWindow",
    "CountingReport",
    "builtin_cross_sections",
    "cross_section",
    "torus",
    "choose_r0",
    "prediction",
    "counting_function",
    "transverse_contribution",
    "lowest_eigenvalue",
    "sweep",
]

# above this many grid nodes the Sturm route is replaced by phase transport
STURM_MAX_GRID = 65_536


# ---------------------------------------------------------------------------
# Cross-section models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossSectionModel:
    """Spectral data of the cross-section ``M`` in its reference metric.

    ``betti[p]`` is the dimension of harmonic p-forms, ``nu[p]`` the first
    nonzero coexact eigenvalue (``inf`` when there are no coexact p-forms) and
    ``modes[p]`` an ascending tuple of ``(mu, multiplicity)`` pairs.
    """

    name: str
    n: int
    betti: Mapping[int, int]
    nu: Mapping[int, float]
    modes: Mapping[int, tuple] = field(default_factory=dict)
    mode_cutoff: float = math.inf

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("cross-section dimension must be positive")
        for p, d in self.betti.items():
            if not 0 <= p <= self.n or d < 0:
                raise DomainError(f"bad Betti entry d({p}) = {d}")
            q = self.n - p
            if q in self.betti and self.betti[q] != d:
                raise DomainError(f"Betti numbers violate Poincaré duality: d({p}) != d({q})")
        for p, v in self.nu.items():
            if not v > 0.0:
                raise DomainError(f"nu({p}) must be positive")
        for p, lst in self.modes.items():
            mus = [mu for mu, _ in lst]
            if mus and (mus[0] <= 0.0 or any(b < a for a, b in zip(mus, mus[1:]))):
                raise DomainError(f"modes for degree {p} must be ascending and positive")

    def harmonic_dimension(self, p: int) -> int:
        if not 0 <= p <= self.n:
            raise DomainError(f"degree {p} outside [0, {self.n}]")
        return int(self.betti.get(p, 0))

    def first_eigenvalue(self, p: int) -> float:
        try:
            return float(self.nu[p])
        except KeyError:
            raise DomainError(f"cross-section {self.name!r} has no mode data for degree {p}") from None

    def mode_list(self, p: int) -> tuple:
        return tuple(self.modes.get(p, ()))


def torus(n: int, cutoff: float = 64.0, name: str | None = None) -> CrossSectionModel:
    """Flat square torus of side ``2 pi``.

    Each lattice vector ``k != 0`` carries eigenvalue ``|k|^2`` on forms of
    every degree; the coexact part has dimension ``binom(n-1, p)`` per vector.
    Modes are listed up to ``|k|^2 <= cutoff``.
    """
    r = int(math.isqrt(int(cutoff)))
    counts: dict[int, int] = {}
    for k in itertools.product(range(-r, r + 1), repeat=n):
        s = sum(c * c for c in k)
        if 0 < s <= cutoff:
            counts[s] = counts.get(s, 0) + 1
    norms = sorted(counts)
    betti, nu, modes = {}, {}, {}
    for p in range(n + 1):
        betti[p] = math.comb(n, p)
        per_vector = math.comb(n - 1, p)
        if per_vector:
            nu[p] = 1.0
            modes[p] = tuple((float(s), counts[s] * per_vector) for s in norms)
        else:
            nu[p] = math.inf
            modes[p] = ()
    label = name or ("circle" if n == 1 else f"torus{n}")
    return CrossSectionModel(label, n, betti, nu, modes, mode_cutoff=float(cutoff))


_ALIASES = {"circle": 1, "s1": 1, "torus1": 1, "torus2": 2, "t2": 2, "torus3": 3, "t3": 3}


def builtin_cross_sections() -> list[CrossSectionModel]:
    """Circle, flat 2-torus and flat 3-torus, all of side length ``2 pi``."""
    return [torus(1), torus(2), torus(3)]


def cross_section(name: str) -> CrossSectionModel:
    key = name.strip().lower()
    if key not in _ALIASES:
        raise DomainError(f"unknown cross-section {name!r}; choose from circle, torus2, torus3")
    return torus(_ALIASES[key])


# ---------------------------------------------------------------------------
# Windows and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralWindow:
    """Half-open window ``[sigma, sigma + x^2)``."""

    sigma: float
    x: float

    def __post_init__(self):
        if not self.x > 0.0:
            raise DomainError("window half-width x must be positive")

    @property
    def top(self) -> float:
        return self.sigma + self.x * self.x

    @classmethod
    def at_bottom(cls, params: MetricParams, p: int, x: float) -> "SpectralWindow":
        return cls(essential_bottom(params, p), x)


@dataclass(frozen=True)
class CountingReport:
    eps: float
    p: int
    x: float
    R: float
    sigma: float
    count: int
    prediction: float
    remainder: float
    r0: float
    truncated_length: float
    flags: tuple = ()
    d: int = 0
    method: str = ""

    @property
    def ok(self) -> bool:
        return not self.flags


def prediction(d: int, x: float, R: float) -> float:
    """Main term ``d x R / pi`` of the counting law."""
    if d < 0:
        raise DomainError("d must be nonnegative")
    return d * x * R / math.pi


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

def _depth_where_warp_reaches(params: MetricParams, log_F: float) -> float:
    """Depth ``s`` from the large end at which ``log f = log_F``."""
    b, c2 = params.b, params.c2
    top = params.c1 * params.eps + params.c2
    if params.cusp:
        return (math.log(top) - log_F / (2.0 * b)) / c2
    a1 = params.a + 1.0
    # base(s) = top^(a+1) + c2 |a+1| s and log f = (2b/(a+1)) log base
    log_base = log_F * a1 / (2.0 * b)
    base_top = math.exp(a1 * math.log(top))
    return (math.exp(log_base) - base_top) / (-c2 * a1)


def choose_r0(model: CrossSectionModel, params: MetricParams, p: int,
              window: SpectralWindow) -> float:
    """Smallest ``r0 >= 1`` with ``nu_M(p) / f(R - r0 + 1) > sigma + x^2``.

    The strict inequality has no minimiser, so the returned value sits a
    relative 1e-12 above the infimum.  Raises :class:`InfeasibleError` when no
    ``r0`` in ``[1, R]`` works.
    """
    R = neck_length(params)
    nu = model.first_eigenvalue(p)
    if R < 1.0:
        raise InfeasibleError(f"neck length R = {R:.6g} < 1 leaves no room for truncation")
    if math.isinf(nu):
        return 1.0
    if window.top <= 0.0:
        return 1.0
    log_F = math.log(nu) - math.log(window.top)
    depth = _depth_where_warp_reaches(params, log_F)
    r0 = 1.0 if depth < 0.0 else 1.0 + depth * (1.0 + 1e-12) + 1e-12
    if r0 > R:
        raise InfeasibleError(
            f"no r0 in [1, R={R:.6g}] pushes the transverse spectrum above {window.top:.6g}")
    while nu * math.exp(-log_warp_factor(params, r0 - 1.0, from_end=True)) <= window.top:
        r0 = r0 + 1e-12 * max(1.0, r0)
        if r0 > R:
            raise InfeasibleError("truncation condition fails at r0 = R")
    return r0


# ---------------------------------------------------------------------------
# 1-D counts on the neck
# ---------------------------------------------------------------------------

def _potential_bounds(params: MetricParams, p: int, mu: float, s0: float, L: float):
    """Lower bound of ``r + mu/f`` on the depth interval ``[s0, s0 + L]``.

    ``mu/f`` is smallest at the large end.  When ``r`` is constant or
    ``kappa (kappa - 1) <= 0`` it is also smallest there, so the bound is the
    exact minimum; otherwise the minima of the two terms are added.
    """
    ends = np.array([s0, min(s0 + L, neck_length(params))])
    r = np.asarray(reduced_potential(params, p, ends, from_end=True))
    mu_term = mu * math.exp(-log_warp_factor(params, s0, from_end=True)) if mu > 0.0 else 0.0
    kappa = params.b * (params.n - 2 * p) / (2.0 * (params.a + 1.0)) if not params.cusp else 0.0
    if params.cusp or kappa * (kappa - 1.0) <= 0.0:
        return float(r[0]) + mu_term
    return float(r.min()) + mu_term


def _solve_count(fn, L: float, lam: float, bc_left: BC, bc_right: BC, method: str,
                 tol: float, grid: int = 0) -> CountResult:
    m = max(grid, default_grid_size(L, lam))
    if method == "auto":
        method = "sturm" if m <= STURM_MAX_GRID else "phase"
    if method == "sturm":
        prob = SLProblem.from_function(fn, L, m, bc_left, bc_right)
        return count_below(prob, lam)
    prob = SLProblem.from_function(fn, L, 64, bc_left, bc_right)
    if method == "phase":
        return count_below_phase(prob, lam, tol=tol)
    if method == "prufer":
        scale = math.sqrt(max(1.0, lam))
        return count_below_prufer(prob, lam, scale=scale, max_step=L / 64)
    raise DomainError(f"unknown solver method {method!r}")


def _window_count(params: MetricParams, p: int, mu: float, s0: float, L: float,
                  window: SpectralWindow, bc_small: BC, bc_junction: BC,
                  method: str, tol: float, grid: int = 0):
    """Eigenvalues in the window of ``-u'' + (r + mu/f) u`` on depths
    ``[s0, s0 + L]``; returns ``(count, flags, method_used)``."""
    R = neck_length(params)

    def fn(s):
        depth = np.clip(s0 + np.asarray(s, dtype=float), 0.0, R)
        return transverse_effective_potential(params, p, mu, depth, from_end=True)

    lower = _potential_bounds(params, p, mu, s0, L)
    if lower >= window.top:
        return 0, (), "bound"
    flags: list[str] = []
    try:
        hi = _solve_count(fn, L, window.top, bc_junction, bc_small, method, tol, grid)
    except ConvergenceError:
        return 0, ("unconverged",), method
    used = hi.method.value
    total = hi.count
    flags.extend(hi.flags)
    if lower < window.sigma:
        try:
            lo = _solve_count(fn, L, window.sigma, bc_junction, bc_small, method, tol, grid)
        except ConvergenceError:
            return total, tuple(dict.fromkeys(flags + ["unconverged"])), used
        total -= lo.count
        flags.extend(f for f in lo.flags if f not in flags)
    return total, tuple(dict.fromkeys(flags)), used


def _transverse(model, params, p, window, r0, bc_small, bc_junction, method, tol, grid=0):
    R = neck_length(params)
    s0 = r0 - 1.0
    L = R - s0
    total = 0
    flags: list[str] = []
    modes = model.mode_list(p)
    last_contributed = False
    for mu, mult in modes:
        c, f, _ = _window_count(params, p, mu, s0, L, window, bc_small, bc_junction,
                                method, tol, grid)
        flags.extend(f)
        total += mult * c
        last_contributed = c > 0
        if c == 0:
            # the potential grows with mu, so higher modes cannot contribute
            break
    if modes and last_contributed:
        flags.append("modes_truncated")
    return total, tuple(dict.fromkeys(flags))


def transverse_contribution(model: CrossSectionModel, params: MetricParams, p: int,
                            window: SpectralWindow, r0: float, *,
                            bc_small: BC = BC.NEUMANN, bc_junction: BC = BC.DIRICHLET,
                            method: str = "auto", tol: float = 1e-6) -> int:
    """Window eigenvalues contributed by the non-harmonic transverse modes on
    the truncated neck ``[0, R - r0 + 1]``.  Zero whenever ``r0`` comes from
    :func:`choose_r0`."""
    R = neck_length(params)
    if not 1.0 <= r0 <= R:
        raise DomainError(f"r0 must lie in [1, R={R:.6g}]")
    count, _ = _transverse(model, params, p, window, r0, BC.parse(bc_small),
                           BC.parse(bc_junction), method, tol)
    return count


def counting_function(model: CrossSectionModel, params: MetricParams, p: int,
                      window: SpectralWindow, *, bc_small: BC = BC.NEUMANN,
                      bc_junction: BC = BC.DIRICHLET, neck: str = "full",
                      method: str = "auto", include_transverse: bool = False,
                      tol: float = 1e-6, grid: int = 0) -> CountingReport:
    """Number of neck eigenvalues in the window, with the ``d x R / pi`` prediction.

    ``neck="full"`` counts the harmonic block on all of ``[0, R]``;
    ``neck="truncated"`` counts it on ``[0, R - r0 + 1]`` only, which drops
    roughly ``x (r0 - 1) / pi`` eigenvalues per harmonic form that belong to
    the enlarged compact piece.  ``grid`` is a lower bound on the
    finite-difference grid size.
    """
    if neck not in ("full", "truncated"):
        raise DomainError(f"neck must be 'full' or 'truncated', got {neck!r}")
    bc_small, bc_junction = BC.parse(bc_small), BC.parse(bc_junction)
    d = model.harmonic_dimension(p)
    R = neck_length(params)
    flags: list[str] = []
    try:
        r0 = choose_r0(model, params, p, window)
    except InfeasibleError:
        r0 = math.nan
        flags.append("r0_infeasible")

    s0 = r0 - 1.0 if neck == "truncated" and not math.isnan(r0) else 0.0
    L = R - s0
    method_used = "none"
    count = 0
    if d > 0:
        c1d, f, method_used = _window_count(params, p, 0.0, s0, L, window, bc_small,
                                            bc_junction, method, tol, grid)
        count = d * c1d
        flags.extend(f)
    if include_transverse:
        if math.isnan(r0):
            flags.append("transverse_skipped")
        else:
            extra, f = _transverse(model, params, p, window, r0, bc_small, bc_junction,
                                   method, tol, grid)
            count += extra
            flags.extend(f)
            if extra:
                flags.append("transverse_nonzero")
    pred = prediction(d, window.x, R)
    return CountingReport(
        eps=params.eps, p=p, x=window.x, R=R, sigma=window.sigma, count=count,
        prediction=pred, remainder=count - pred, r0=r0,
        truncated_length=(R - r0 + 1.0) if not math.isnan(r0) else math.nan,
        flags=tuple(dict.fromkeys(flags)), d=d, method=method_used,
    )


def lowest_eigenvalue(params: MetricParams, p: int, *, bc_small: BC = BC.NEUMANN,
                      bc_junction: BC = BC.DIRICHLET, method: str = "auto",
                      rtol: float = 1e-9) -> float:
    """Lowest eigenvalue of the harmonic-block problem on the full neck,
    bracketed and bisected on the eigenvalue count."""
    bc_small, bc_junction = BC.parse(bc_small), BC.parse(bc_junction)
    R = neck_length(params)

    def fn(s):
        return reduced_potential(params, p, np.clip(np.asarray(s, dtype=float), 0.0, R),
                                 from_end=True)

    lo = _potential_bounds(params, p, 0.0, 0.0, R)
    step = (math.pi / R) ** 2
    hi = lo + step
    while _solve_count(fn, R, hi, bc_junction, bc_small, method, 1e-7).count < 1:
        step *= 2.0
        hi = lo + step
    for _ in range(200):
        if hi - lo <= rtol * max(abs(hi), abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        if _solve_count(fn, R, mid, bc_junction, bc_small, method, 1e-7).count >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _row(args) -> CountingReport:
    model, params, p, x, options = args
    try:
        window = SpectralWindow.at_bottom(params, p, x)
        return counting_function(model, params, p, window, **options)
    except WarpspecError as exc:
        R = neck_length(params) if params.eps > 0 else math.inf
        return CountingReport(params.eps, p, x, R, math.nan, 0, math.nan, math.nan,
                              math.nan, math.nan, ("error:" + type(exc).__name__,))


def sweep(model: CrossSectionModel, template: MetricParams, p_list: Sequence[int],
          x_list: Sequence[float], eps_list: Sequence[float], jobs: int = 1,
          **options) -> list[CountingReport]:
    """Run :func:`counting_function` over the product of degrees, window
    widths and ``eps`` values, ordered by ``(p asc, x asc, eps desc)``."""
    if not (p_list and x_list and eps_list):
        raise DomainError("sweep lists must be nonempty")
    if any(e <= 0.0 for e in eps_list):
        raise DomainError("sweep eps values must be positive")
    tasks = [
        (model, template.with_eps(e), p, x, options)
        for p in sorted(set(p_list))
        for x in sorted(set(x_list))
        for e in sorted(set(eps_list), reverse=True)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_row, tasks))
    return [_row(t) for t in tasks]
