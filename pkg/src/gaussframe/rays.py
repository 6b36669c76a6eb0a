"""Bicharacteristic flow of the half-wave symbols ``tau = +-q``.

Sign convention.  ``convention="paper"`` integrates, for branch ``+``,

    dx/dt = -q_xi,   dxi/dt = q_x

and the reverse signs for branch ``-``.  ``convention="standard"`` flips
both, so branch ``+`` moves along ``+q_xi``.  Everything downstream takes the
convention as a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeff_field import symbol_gradients, symbol_q
from .errors import DomainError, HorizonExceeded, StepFailure

CONVENTIONS = {"paper": 1, "standard": -1}
MAX_HALVINGS = 12
XI_COLLAPSE = 1e-8
SAMPLE_MARGIN = 1.01


def _sign(branch, convention):
    b = {"+": 1, "-": -1, 1: 1, -1: -1}.get(branch)
    if b is None:
        raise DomainError(f"branch must be '+' or '-', got {branch!r}")
    try:
        return b * CONVENTIONS[convention]
    except KeyError:
        raise DomainError(f"convention must be one of {sorted(CONVENTIONS)}") from None


@dataclass(frozen=True)
class PhasePoint:
    t: float
    x: np.ndarray
    xi: np.ndarray
    tau: float = float("nan")


@dataclass
class RayPath:
    branch: str
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    t0: float
    t1: float
    error_estimate: float = 0.0
    step: float = 0.0
    convention: str = "paper"

    def point(self, j):
        return PhasePoint(float(self.t[j]), self.x[j], self.xi[j])

    @property
    def end(self):
        return PhasePoint(float(self.t[-1]), self.x[-1], self.xi[-1])


def rhs(field, t, x, xi, branch="+", convention="paper"):
    """Batched right-hand side ``(dx/dt, dxi/dt)`` for arrays ``(..., n)``."""
    s = _sign(branch, convention)
    q_x, q_xi = symbol_gradients(field, t, x, xi)
    return -s * q_xi, s * q_x


def ray_rhs(field, pt, branch="+", convention="paper"):
    dx, dxi = rhs(field, pt.t, np.asarray(pt.x, float), np.asarray(pt.xi, float), branch, convention)
    return dx, dxi


def _check_horizon(field, *ts):
    T = field.time_horizon_T
    for t in ts:
        if abs(t) > T * (1 + 1e-12):
            raise HorizonExceeded(f"|t|={abs(t):g} exceeds the field horizon T={T:g}")


def default_step(tol, T):
    return min(tol**0.25, T / 64.0)


def _rk4_path(field, x0, xi0, times, h, s):
    """RK4 through the sorted-from-``times[0]`` sample times with step <= h."""
    xs = np.empty((len(times),) + x0.shape)
    xis = np.empty_like(xs)
    x, xi = x0.copy(), xi0.copy()
    xs[0], xis[0] = x, xi
    norm0 = np.linalg.norm(xi0, axis=-1)

    def f(t, x, xi):
        q_x, q_xi = symbol_gradients(field, t, x, xi)
        return -s * q_xi, s * q_x

    for j in range(1, len(times)):
        ta, tb = times[j - 1], times[j]
        m = max(1, int(math.ceil(abs(tb - ta) / h - 1e-12)))
        dt = (tb - ta) / m
        t = ta
        for step in range(m):
            k1x, k1p = f(t, x, xi)
            k2x, k2p = f(t + dt / 2, x + dt / 2 * k1x, xi + dt / 2 * k1p)
            k3x, k3p = f(t + dt / 2, x + dt / 2 * k2x, xi + dt / 2 * k2p)
            k4x, k4p = f(t + dt, x + dt * k3x, xi + dt * k3p)
            x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            xi = xi + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
            t = ta + (step + 1) * dt
            if np.any(np.linalg.norm(xi, axis=-1) < XI_COLLAPSE * norm0):
                raise StepFailure("frequency collapsed along the ray")
        xs[j], xis[j] = x, xi
    return xs, xis


def _error(xa, pa, xb, pb, scale):
    ex = np.abs(xa - xb).max() if xa.size else 0.0
    ep = (np.linalg.norm(pa - pb, axis=-1) / scale).max() if pa.size else 0.0
    return max(ex, ep)


def evolve_batch(field, x0, xi0, times, branch="+", tol=1e-10, convention="paper", h=None):
    """Propagate many rays to every time in ``times`` (``times[0]`` is the start).

    Returns ``(x, xi, err, h)`` with arrays of shape ``(len(times), N, n)``.
    The step is halved until the Richardson estimate ``|y_h - y_{h/2}|/15``
    (positions absolute, frequencies relative to ``|xi0|``) is below ``tol``.
    """
    times = np.asarray(times, dtype=float)
    _check_horizon(field, *times)
    s = _sign(branch, convention)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_2d(np.asarray(xi0, dtype=float))
    scale = np.linalg.norm(xi0, axis=-1)
    if np.any(scale == 0):
        raise DomainError("initial frequency must be nonzero")
    if h is None:
        h = default_step(tol, field.time_horizon_T)
    if len(times) == 1:
        return x0[None].copy(), xi0[None].copy(), 0.0, h
    coarse = _rk4_path(field, x0, xi0, times, h, s)
    for _ in range(MAX_HALVINGS):
        fine = _rk4_path(field, x0, xi0, times, h / 2, s)
        err = _error(coarse[0], coarse[1], fine[0], fine[1], scale) / 15.0
        if err < tol:
            return fine[0], fine[1], err, h / 2
        coarse, h = fine, h / 2
    raise StepFailure(f"Richardson estimate {err:.3g} stayed above tol={tol:g}")


def evolve(field, start, t0, t1, branch="+", tol=1e-10, convention="paper", samples=None):
    """Single ray from ``start`` (data at ``t0``) to ``t1``."""
    n_s = samples if samples is not None else 2
    times = np.linspace(t0, t1, n_s)
    x, xi, err, h = evolve_batch(field, start.x, start.xi, times, branch, tol, convention)
    return RayPath(str(branch), times, x[:, 0], xi[:, 0], float(t0), float(t1), err, h, convention)


# -- invariants and constants ------------------------------------------------------------


def sampled_gradient_bounds(field, samples=4096, seed=1):
    """``(sup |q_x|/|xi|, sup |q_xi|)`` over the field's box and ``|t| <= T``, padded by 1%."""
    rng = np.random.default_rng(seed)
    n = field.dim
    lo, hi = field.box
    T = field.time_horizon_T
    t = rng.uniform(-T, T, samples)
    x = rng.uniform(lo, hi, (samples, n))
    d = rng.standard_normal((samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    q_x, q_xi = symbol_gradients(field, t, x, d)
    # sampling underestimates a sup; same safety factor as the field certification
    return (SAMPLE_MARGIN * float(np.linalg.norm(q_x, axis=1).max()),
            SAMPLE_MARGIN * float(np.linalg.norm(q_xi, axis=1).max()))


def flow_constant(field, T, a):
    """Envelope ``C(T, a) = a exp(C T)`` and ``k0 = max(2 log2 C(T,a), 1)``.

    ``C`` is the sampled Gronwall rate ``sup |q_x|/|xi|``.
    """
    if not a > 1:
        raise DomainError("a must exceed 1")
    C, _ = sampled_gradient_bounds(field)
    CTa = a * math.exp(C * abs(T))
    return CTa, k0_from(CTa), C


def k0_from(CTa):
    return max(2 * math.log2(CTa), 1.0)


def hamiltonian_drift(field, path):
    """Max relative change of ``q`` along a path (time-independent fields)."""
    q = symbol_q(field, path.t[0], path.x, path.xi)
    return float(np.abs(q - q[0]).max() / q[0])


def distance_equivalence_check(field, p, p_prime, t, branch="+", tol=1e-10, convention="paper"):
    """Ratios ``d^2(U(0,t) p; p') / d^2(U(t,0) p'; p)`` over pairs.

    ``p`` and ``p_prime`` are arrays ``(N, 2n)`` of stacked ``(x, omega)``,
    with ``p``'s frequency already scaled by ``2^{k-k'}``.  Returns
    ``(D1, D2)`` = (min, max) of the ratio; pairs with zero distance are skipped.
    """
    p = np.atleast_2d(np.asarray(p, float))
    pp = np.atleast_2d(np.asarray(p_prime, float))
    n = p.shape[1] // 2
    if t == 0:
        return 1.0, 1.0
    fx, fw, _, _ = evolve_batch(field, pp[:, :n], pp[:, n:], [0.0, t], branch, tol, convention)
    bx, bw, _, _ = evolve_batch(field, p[:, :n], p[:, n:], [t, 0.0], branch, tol, convention)
    fwd = np.hstack([fx[-1], fw[-1]])
    back = np.hstack([bx[-1], bw[-1]])
    d_fwd = ((fwd - p) ** 2).sum(1)
    d_back = ((back - pp) ** 2).sum(1)
    ok = (d_fwd > 1e-24) & (d_back > 1e-24)
    ratio = d_back[ok] / d_fwd[ok]
    return float(ratio.min()), float(ratio.max())
