"""Independent reference computations used by the tests.

Nothing here calls the closed forms under test: arc length comes from
adaptive quadrature, potentials from finite differences of the warp factor,
and eigenvalue counts for ``a < -1`` from the exact Bessel-function solution.
"""

import math

import numpy as np
from scipy import integrate, special

from warpspec.geometry import MetricParams, neck_length, warp_factor


def random_params(rng, cusp=None, eps_range=(1e-2, 1.0), n_max=4):
    """Random valid metric parameters in a well-conditioned range."""
    if cusp is None:
        cusp = rng.random() < 0.5
    a = -1.0 if cusp else float(rng.uniform(-4.0, -1.05))
    lo, hi = np.log10(eps_range[0]), np.log10(eps_range[1])
    return MetricParams(
        a=a,
        b=float(rng.uniform(0.2, 2.0)),
        c1=float(rng.uniform(0.3, 3.0)),
        c2=float(rng.uniform(0.3, 3.0)),
        eps=float(10 ** rng.uniform(lo, hi)),
        n=int(rng.integers(1, n_max + 1)),
    )


def conditioned_draw(rng, limit=1e4):
    """Random ``(params, t)`` whose composition ``f(tau(t))`` is well conditioned.

    Rounding ``tau`` to a double perturbs ``log f`` by about
    ``tau |d log f / d tau| * 1.1e-16`` and ``t`` by ``tau rho^(-a) * 1.1e-16``;
    both products are kept below ``limit`` so the 1e-10 and 1e-12 targets are
    reachable in double precision at all.
    """
    from warpspec.geometry import tau_of_t

    while True:
        P = random_params(rng)
        t = float(rng.uniform(0.0, 1.0))
        tau = tau_of_t(P, t)
        rho = P.c1 * P.eps + P.c2 * t
        dlogf = 2.0 * P.b * P.c2 * rho ** (-P.a - 1.0)
        if tau * dlogf <= limit and tau * rho ** (-P.a) <= limit:
            return P, t


def tau_quad(params: MetricParams, t: float) -> float:
    """Arc length ``int_0^t (c1 eps + c2 s)^a ds`` by adaptive quadrature."""
    val, _ = integrate.quad(
        lambda s: (params.c1 * params.eps + params.c2 * s) ** params.a,
        0.0, t, epsabs=0.0, epsrel=1e-13, limit=500,
    )
    return val


def potential_fd(params: MetricParams, p: int, tau: float) -> float:
    """``g''/g`` with ``g = f^((n-2p)/4)`` by Richardson-refined central differences.

    Points in the large-end half are differenced in the depth ``R - tau`` so
    the stencil is not swamped by the rounding of ``tau`` itself.
    """
    q = (params.n - 2 * p) / 4.0
    R = neck_length(params)
    from_end = tau > 0.5 * R
    x = R - tau if from_end else tau

    def g(y):
        return warp_factor(params, y, from_end=from_end) ** q

    # distance to the singularity of the warp base sets the length scale
    if params.cusp:
        ell = 1.0 / params.c2
    else:
        top = (params.c1 * params.eps + params.c2) ** (params.a + 1.0)
        ell = (R - tau) + top / (params.c2 * abs(params.a + 1.0))
    h = min(5e-3 * ell, x / 2.5, (R - x) / 2.5)
    if h <= 0.0:
        raise ValueError("tau must lie strictly inside the neck")

    def d2(hh):
        return (g(x + hh) - 2.0 * g(x) + g(x - hh)) / hh**2

    return (4.0 * d2(h / 2) - d2(h)) / 3.0 / g(x)


def random_potential_case(rng):
    """Draw ``(params, p, tau)`` away from the ends and from ``kappa(kappa-1) ~ 0``,
    where relative error of a second difference is meaningless."""
    while True:
        cusp = rng.random() < 0.5
        params = MetricParams(
            a=-1.0 if cusp else float(rng.uniform(-4.0, -1.2)),
            b=float(rng.uniform(0.2, 2.0)),
            c1=float(rng.uniform(0.3, 3.0)),
            c2=float(rng.uniform(0.3, 3.0)),
            eps=float(10 ** rng.uniform(-4, np.log10(0.2))),
            n=int(rng.integers(1, 5)),
        )
        p = int(rng.integers(0, params.n + 1))
        if not cusp:
            kappa = params.b * (params.n - 2 * p) / (2.0 * (params.a + 1.0))
            if 0.0 < abs(kappa * (kappa - 1.0)) < 0.05:
                continue
        tau = float(rng.uniform(0.05, 0.95)) * neck_length(params)
        return params, p, tau


# ---------------------------------------------------------------------------
# Bessel solution of the a < -1 reduced problem
# ---------------------------------------------------------------------------

_X_ASYM = 60.0


def bessel_phase(nu: float, x: float) -> float:
    """Continuous phase ``theta_nu`` with ``J = M cos(theta)``, ``Y = M sin(theta)``
    up to sign convention; ``theta_nu(x) - x`` tends to ``-(nu/2 + 1/4) pi``."""
    mu = 4.0 * nu * nu

    def asym(z):
        return (z - (nu / 2 + 0.25) * math.pi + (mu - 1) / (8 * z)
                + (mu - 1) * (mu - 25) / (384 * z**3)
                + (mu - 1) * (mu * mu - 114 * mu + 1073) / (5120 * z**5))

    if x >= _X_ASYM:
        return asym(x)
    deriv = lambda z: 2.0 / (math.pi * z * (special.jv(nu, z) ** 2 + special.yv(nu, z) ** 2))
    val, _ = integrate.quad(deriv, x, _X_ASYM, epsabs=1e-13, epsrel=1e-13, limit=400)
    return asym(_X_ASYM) - val


def dirichlet_count_bessel(params: MetricParams, p: int, lam: float) -> int:
    """Eigenvalues below ``lam`` of ``-u'' + r u`` on ``[0, R]`` with Dirichlet
    ends, for ``a < -1``.

    With ``w = |base / (c2 (a+1))|`` the equation becomes Bessel's, with
    solutions ``sqrt(w) Z_nu(k w)`` and ``nu = |kappa - 1/2|``; the count is the
    number of zeros the left solution acquires across the neck.
    """
    if params.cusp:
        raise ValueError("Bessel oracle applies to a < -1 only")
    kappa = params.b * (params.n - 2 * p) / (2.0 * (params.a + 1.0))
    nu = abs(kappa - 0.5)
    A = abs(params.c2 * (params.a + 1.0))
    a1 = params.a + 1.0
    w_small = math.exp(a1 * math.log(params.c1 * params.eps)) / A
    w_large = math.exp(a1 * math.log(params.c1 * params.eps + params.c2)) / A
    k = math.sqrt(lam)
    turns = (bessel_phase(nu, k * w_small) - bessel_phase(nu, k * w_large)) / math.pi
    return max(0, math.ceil(turns) - 1)


# ---------------------------------------------------------------------------
# Random Sturm-Liouville problems
# ---------------------------------------------------------------------------

def random_sl_problem(rng, m=None):
    """Smooth bounded potential (three random sines) on a random interval with
    random boundary conditions, plus a threshold inside its spectrum."""
    from warpspec.solver import SLProblem, default_grid_size

    L = float(rng.uniform(1.0, 30.0))
    amp = rng.uniform(-2.0, 2.0, 3)
    freq = rng.uniform(0.1, 3.0, 3)
    phase = rng.uniform(0.0, 2 * math.pi, 3)

    def fn(t, amp=amp, freq=freq, phase=phase):
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(amp * np.sin(freq * t + phase), axis=-1)

    bcs = rng.choice(["dirichlet", "neumann"], 2)
    lam = float(rng.uniform(-2.0, 25.0))
    grid = default_grid_size(L, lam) if m is None else m
    return SLProblem.from_function(fn, L, grid, str(bcs[0]), str(bcs[1])), lam
