"""Warped-product geometry of the degenerating neck M x [0, 1].

The metric on the neck is ``rho^(2a) dt^2 + rho^(2b) ds_M^2`` with
``rho(eps, t) = c1*eps + c2*t``.  Passing to arc length ``tau`` along the
interval turns it into ``dtau^2 + f(tau) ds_M^2``; everything downstream works
in the ``tau`` coordinate on ``[0, R]``.

Two regimes exist: ``a == -1`` (hyperbolic cusp, exponential warp) and
``a < -1`` (power-law warp).  For ``a < -1`` the closed forms are evaluated
through ``expm1``/``log1p`` so that ``(c1*eps)**(a+1)`` never has to be formed
when it would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "MetricParams",
    "rho",
    "tau_of_t",
    "t_of_tau",
    "warp_factor",
    "neck_length",
    "transverse_eigenvalue",
]


@dataclass(frozen=True)
class MetricParams:
    """Parameters ``(a, b, c1, c2, eps, n)`` of the neck metric.

    ``eps = 0`` is accepted (it describes the complete limit manifold) but
    every operation that needs a finite neck rejects it.
    """

    a: float
    b: float
    c1: float
    c2: float
    eps: float
    n: int

    def __post_init__(self):
        for name in ("a", "b", "c1", "c2", "eps"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.a > -1.0:
            raise DomainError(f"a must satisfy a <= -1, got {self.a}")
        if self.b <= 0.0:
            raise DomainError(f"b must be positive, got {self.b}")
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise DomainError("c1 and c2 must be positive")
        if self.eps < 0.0:
            raise DomainError(f"eps must be nonnegative, got {self.eps}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def cusp(self) -> bool:
        """True in the hyperbolic-cusp regime ``a == -1``."""
        return self.a == -1.0

    def with_eps(self, eps: float) -> "MetricParams":
        return MetricParams(self.a, self.b, self.c1, self.c2, eps, self.n)


def _scalar_or_array(x):
    arr = np.asarray(x, dtype=float)
    return (float(arr) if arr.ndim == 0 else arr), arr


def _require_neck(params: MetricParams) -> None:
    if params.eps <= 0.0:
        raise DomainError("eps = 0 gives an infinite neck; tau-side quantities are undefined")


def _check_t(arr: np.ndarray) -> None:
    if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError("t must lie in [0, 1]")


def rho(params: MetricParams, t):
    """``c1*eps + c2*t``; strictly positive on the admissible domain."""
    _, arr = _scalar_or_array(t)
    _check_t(arr)
    if params.eps == 0.0 and arr.size and arr.min() == 0.0:
        raise DomainError("rho vanishes at t = 0 when eps = 0")
    out = params.c1 * params.eps + params.c2 * arr
    return float(out) if out.ndim == 0 else out


def _log_c1eps(params: MetricParams) -> float:
    return math.log(params.c1) + math.log(params.eps)


def tau_of_t(params: MetricParams, t):
    """Arc length from the small end: integral of ``rho(eps, s)**a`` over ``[0, t]``."""
    _require_neck(params)
    _, arr = _scalar_or_array(t)
    _check_t(arr)
    c1e = params.c1 * params.eps
    ratio = np.log1p(params.c2 * arr / c1e)
    if params.cusp:
        out = ratio / params.c2
    else:
        a1 = params.a + 1.0
        # (c1 eps)^(a+1) * expm1((a+1) log(rho/c1 eps)) / (c2 (a+1))
        out = np.exp(a1 * _log_c1eps(params)) * np.expm1(a1 * ratio) / (params.c2 * a1)
    return float(out) if out.ndim == 0 else out


def neck_length(params: MetricParams) -> float:
    """Length ``R = tau(1)`` of the neck; grows without bound as ``eps -> 0``."""
    return tau_of_t(params, 1.0)


def _check_tau(params: MetricParams, arr: np.ndarray, R: float) -> None:
    slack = 1e-12 * max(R, 1.0)
    if arr.size and (np.isnan(arr).any() or arr.min() < -slack or arr.max() > R + slack):
        raise DomainError(f"tau must lie in [0, R] with R = {R!r}")


def _scaled_offset(params: MetricParams, tau: np.ndarray) -> np.ndarray:
    # c2 (a+1) tau / (c1 eps)^(a+1), in (-1, 0] on [0, R]
    a1 = params.a + 1.0
    return params.c2 * a1 * tau * np.exp(-a1 * _log_c1eps(params))


def t_of_tau(params: MetricParams, tau):
    """Inverse of :func:`tau_of_t` on ``[0, R]``."""
    _require_neck(params)
    R = neck_length(params)
    _, arr = _scalar_or_array(tau)
    _check_tau(params, arr, R)
    arr = np.clip(arr, 0.0, R)
    c1e = params.c1 * params.eps
    if params.cusp:
        out = c1e * np.expm1(params.c2 * arr) / params.c2
    else:
        a1 = params.a + 1.0
        out = c1e * np.expm1(np.log1p(_scaled_offset(params, arr)) / a1) / params.c2
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def log_warp_factor(params: MetricParams, tau, from_end: bool = False):
    """Natural log of :func:`warp_factor`; finite even where ``f`` under/overflows.

    With ``from_end`` the argument is the depth ``s = R - tau`` measured from
    the large end of the neck.  Evaluating in ``s`` keeps full accuracy near
    the compact piece when ``R`` is so large that ``R - s`` is not
    representable to the needed precision.
    """
    _require_neck(params)
    R = neck_length(params)
    _, arr = _scalar_or_array(tau)
    _check_tau(params, arr, R)
    b = params.b
    if params.cusp:
        if from_end:
            out = 2.0 * b * (math.log(params.c1 * params.eps + params.c2) - params.c2 * arr)
        else:
            out = 2.0 * b * (_log_c1eps(params) + params.c2 * arr)
        return float(out) if np.ndim(out) == 0 else out
    a1 = params.a + 1.0
    if from_end:
        # base(R - s) = (c1 eps + c2)^(a+1) + c2 |a+1| s
        log_top = a1 * math.log(params.c1 * params.eps + params.c2)
        log_base = log_top + np.log1p(-params.c2 * a1 * arr * math.exp(-log_top))
    else:
        z = _scaled_offset(params, arr)
        if arr.size and z.min() <= -1.0:
            raise DomainError("warp base c2(a+1)tau + (c1 eps)^(a+1) is not positive")
        log_base = a1 * _log_c1eps(params) + np.log1p(z)
    out = (2.0 * b / a1) * log_base
    return float(out) if np.ndim(out) == 0 else out


def warp_factor(params: MetricParams, tau, from_end: bool = False):
    """Squared warp ``f(tau)`` in ``dtau^2 + f(tau) ds_M^2``; increasing in ``tau``."""
    out = np.exp(log_warp_factor(params, tau, from_end))
    return float(out) if np.ndim(out) == 0 else out


def transverse_eigenvalue(model, params: MetricParams, p: int, tau, from_end: bool = False):
    """First nonzero coexact eigenvalue of the cross-section at ``tau``.

    Scaling the cross-section metric by ``f`` divides its eigenvalues by ``f``,
    so this is ``nu_M(p) / f(tau)``, decreasing in ``tau``.
    """
    nu = model.first_eigenvalue(p)
    out = nu * np.exp(-np.asarray(log_warp_factor(params, tau, from_end)))
    return float(out) if np.ndim(out) == 0 else out
