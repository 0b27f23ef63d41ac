"""Reduction of the neck Laplacian to 1-D Schroedinger form.

A coexact p-form ``b(tau) dtau ^ H`` built on a harmonic form ``H`` of the
cross-section satisfies the weighted problem

    -(w b')' / w = lam b,     w = f ** ((n - 2p) / 2),

and the substitution ``u = w**(1/2) b`` removes the first-order term, giving
``-u'' + r u = lam u`` with ``r = g'' / g`` and ``g = f ** ((n - 2p) / 4)``.
Functions are the case ``p = 0``.

For ``a < -1`` we have ``g = base**kappa`` with ``base = c2 (a+1) tau +
(c1 eps)**(a+1)`` and ``kappa = b (n - 2p) / (2 (a + 1))``, so
``r = kappa (kappa - 1) (c2 (a+1))**2 / base**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import MetricParams, log_warp_factor, neck_length

__all__ = [
    "ReducedProblem",
    "essential_bottom",
    "essential_interval",
    "reduced_potential",
    "functions_potential",
    "transverse_effective_potential",
    "reduce",
]


def _check_degree(params: MetricParams, p: int) -> int:
    if isinstance(p, bool) or int(p) != p or not 0 <= p <= params.n:
        raise DomainError(f"degree p must be an integer in [0, {params.n}], got {p!r}")
    return int(p)


def essential_bottom(params: MetricParams, p: int) -> float:
    """Bottom of the essential spectrum on coexact p-forms of the limit manifold."""
    p = _check_degree(params, p)
    if not params.cusp:
        return 0.0
    return ((params.n - 2 * p) / 2) ** 2 * params.c2 ** 2 * params.b ** 2


def essential_interval(params: MetricParams, p: int) -> tuple[float, float]:
    """The half-line ``[sigma, inf)`` as ``(sigma, math.inf)``."""
    return essential_bottom(params, p), math.inf


def _kappa(params: MetricParams, p: int) -> float:
    return params.b * (params.n - 2 * p) / (2.0 * (params.a + 1.0))


def _log_base(params: MetricParams, tau, from_end: bool) -> np.ndarray:
    # log f = (2b/(a+1)) log base
    return np.asarray(log_warp_factor(params, tau, from_end)) * (params.a + 1.0) / (2.0 * params.b)


def reduced_potential(params: MetricParams, p: int, tau, from_end: bool = False):
    """Potential ``r(tau) = g''/g`` of the reduced problem for degree ``p``.

    ``from_end`` reads the argument as the depth ``R - tau``.
    """
    p = _check_degree(params, p)
    if params.cusp:
        # still validate tau against [0, R]
        arr = np.asarray(log_warp_factor(params, tau, from_end))
        out = np.full(arr.shape, essential_bottom(params, p))
    else:
        kappa = _kappa(params, p)
        A = params.c2 * (params.a + 1.0)
        out = kappa * (kappa - 1.0) * A * A * np.exp(-2.0 * _log_base(params, tau, from_end))
    return float(out) if np.ndim(out) == 0 else out


def functions_potential(params: MetricParams, tau, from_end: bool = False):
    """Potential for functions (weight ``f**(n/2)``), coded independently of
    :func:`reduced_potential` as a cross-check of the ``p = 0`` case.

    ``from_end`` reads the argument as the depth ``R - tau``.
    """
    if params.eps <= 0.0:
        raise DomainError("eps must be positive")
    n, b, c2, a = params.n, params.b, params.c2, params.a
    tau = np.asarray(tau, dtype=float)
    if params.cusp:
        out = np.full(tau.shape, (n * b * c2 / 2.0) ** 2)
    else:
        if from_end:
            base = (params.c1 * params.eps + c2) ** (a + 1.0) - c2 * (a + 1.0) * tau
        else:
            base = c2 * (a + 1.0) * tau + (params.c1 * params.eps) ** (a + 1.0)
        out = b * n * (b * n - 2.0 * a - 2.0) * c2**2 / (4.0 * base**2)
    return float(out) if out.ndim == 0 else out


def transverse_effective_potential(params: MetricParams, p: int, mu: float, tau,
                                   from_end: bool = False):
    """Reduced potential plus the transverse mode term ``mu / f(tau)``."""
    if mu < 0.0:
        raise DomainError("transverse eigenvalue mu must be nonnegative")
    r = np.asarray(reduced_potential(params, p, tau, from_end))
    if mu == 0.0:
        out = r
    else:
        with np.errstate(over="ignore"):
            out = r + mu * np.exp(-np.asarray(log_warp_factor(params, tau, from_end)))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ReducedProblem:
    """1-D data for degree ``p``: weight exponent, potential and ``sigma``.

    The cross-section normalisation constant multiplies both the numerator and
    the denominator of every Rayleigh quotient and is taken to be 1.
    """

    params: MetricParams
    p: int
    weight_exponent: float
    sigma: float
    length: float

    def potential(self, tau):
        return reduced_potential(self.params, self.p, tau)

    def tabulate(self, m: int, length: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Uniform grid of ``m + 1`` nodes on ``[0, length]`` and the potential on it."""
        L = self.length if length is None else length
        tau = np.linspace(0.0, L, m + 1)
        return tau, np.asarray(self.potential(tau), dtype=float)


def reduce(params: MetricParams, p: int) -> ReducedProblem:
    p = _check_degree(params, p)
    return ReducedProblem(
        params=params,
        p=p,
        weight_exponent=(params.n - 2 * p) / 2.0,
        sigma=essential_bottom(params, p),
        length=neck_length(params),
    )
