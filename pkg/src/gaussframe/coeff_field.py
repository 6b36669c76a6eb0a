"""Coefficient matrix A(t, x) of the wave operator and its symbol q.

All evaluators broadcast: ``x`` has shape ``(..., n)`` and ``t`` is a scalar
or an array broadcastable against ``x[..., 0]``.  Matrix-valued results have
trailing shape ``(n, n)``; spatial gradients are stacked as
``grad[..., l, i, j] = d a_ij / d x_l``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NonEllipticField

# certified constants get this multiplicative margin on top of the sampled sup
CERT_MARGIN = 1.01
FD_GRAD_STEP = 1e-5
FD_HESS_STEP = 1e-4


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric, uniformly elliptic coefficient matrix on [-T, T] x R^n.

    Use the factories (:func:`identity`, :func:`constant`,
    :func:`periodic`, :func:`from_callable`) rather than the constructor;
    they certify ``ellipticity_C`` and ``lipschitz_L`` by sampling.
    """

    dim: int
    eval_fn: Callable
    grad_fn: Callable
    ellipticity_C: float
    lipschitz_L: float
    time_horizon_T: float
    name: str = "custom"
    params: dict = field(default_factory=dict)
    hess_fn: Optional[Callable] = None
    box: tuple = (-4.0, 4.0)
    is_constant: bool = False

    def matrix(self, t, x):
        x = np.asarray(x, dtype=float)
        return self.eval_fn(t, x)

    def grad(self, t, x):
        x = np.asarray(x, dtype=float)
        return self.grad_fn(t, x)

    def hess(self, t, x):
        """Second spatial derivatives, ``hess[..., m, l, i, j]``."""
        x = np.asarray(x, dtype=float)
        if self.hess_fn is not None:
            return self.hess_fn(t, x)
        n = self.dim
        out = np.empty(x.shape[:-1] + (n, n, n, n))
        for m in range(n):
            e = np.zeros(n)
            e[m] = FD_HESS_STEP
            out[..., m, :, :, :] = (self.grad_fn(t, x + e) - self.grad_fn(t, x - e)) / (
                2 * FD_HESS_STEP
            )
        return out

    def describe(self):
        items = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({items})" if items else self.name


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ValueError(f"expected trailing dimension {n}, got shape {x.shape}")
    return x


def certify_constants(eval_fn, grad_fn, n, T, box=(-4.0, 4.0), samples=4096, seed=0):
    """Sampled ellipticity and Lipschitz constants over ``[-T,T] x box^n``."""
    rng = np.random.default_rng(seed)
    lo, hi = box
    ts = rng.uniform(-T, T, samples)
    xs = rng.uniform(lo, hi, (samples, n))
    mats = eval_fn(ts, xs)
    mats = np.broadcast_to(mats, (samples, n, n))
    eigs = np.linalg.eigvalsh(0.5 * (mats + np.swapaxes(mats, -1, -2)))
    lam_min, lam_max = eigs.min(), eigs.max()
    if lam_min <= 0:
        raise NonEllipticField(f"sampled eigenvalue {lam_min:.3g} <= 0")
    C = CERT_MARGIN * max(lam_max, 1.0 / lam_min)
    grads = np.broadcast_to(grad_fn(ts, xs), (samples, n, n, n))
    # Lipschitz constant of each entry in x: sup of the Euclidean gradient norm
    L = float(np.sqrt((grads**2).sum(axis=1)).max()) * CERT_MARGIN
    return float(C), L


def _build(n, eval_fn, grad_fn, T, name, params, hess_fn=None, box=(-4.0, 4.0),
           is_constant=False):
    if n < 1:
        raise DomainError("dimension must be >= 1")
    if T <= 0:
        raise DomainError("time horizon must be positive")
    C, L = certify_constants(eval_fn, grad_fn, n, T, box=box)
    return CoefficientField(
        dim=n, eval_fn=eval_fn, grad_fn=grad_fn, ellipticity_C=C, lipschitz_L=L,
        time_horizon_T=float(T), name=name, params=dict(params), hess_fn=hess_fn,
        box=tuple(box), is_constant=is_constant,
    )


def _lead_shape(t, x):
    return np.broadcast_shapes(np.shape(t), x.shape[:-1])


def constant(matrix, T=1.0, name="constant"):
    """Spatially and temporally constant SPD matrix."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise DomainError("coefficient matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12):
        raise DomainError("coefficient matrix must be symmetric")

    def eval_fn(t, x):
        return np.broadcast_to(a, _lead_shape(t, x) + (n, n)).copy()

    def grad_fn(t, x):
        return np.zeros(_lead_shape(t, x) + (n, n, n))

    def hess_fn(t, x):
        return np.zeros(_lead_shape(t, x) + (n, n, n, n))

    params = {"matrix": a.tolist()} if name == "constant" else {}
    return _build(n, eval_fn, grad_fn, T, name, params, hess_fn, is_constant=True)


def identity(n, T=1.0):
    return constant(np.eye(n), T=T, name="identity")


def periodic(n, amp=0.1, wavevector=None, rate=0.0, base=None, T=1.0):
    """``A(t,x) = base * (1 + amp*sin(k.x + rate*t))`` with analytic derivatives."""
    if not 0 <= amp < 1:
        raise DomainError("periodic amplitude must lie in [0, 1)")
    kvec = np.zeros(n)
    kvec[0] = 1.0
    if wavevector is not None:
        kvec = np.asarray(wavevector, dtype=float).reshape(n)
    b = np.eye(n) if base is None else np.asarray(base, dtype=float).reshape(n, n)

    def phase(t, x):
        return x @ kvec + rate * np.asarray(t, dtype=float)

    def eval_fn(t, x):
        s = 1.0 + amp * np.sin(phase(t, x))
        return s[..., None, None] * b

    def grad_fn(t, x):
        c = amp * np.cos(phase(t, x))
        return c[..., None, None, None] * kvec[:, None, None] * b

    def hess_fn(t, x):
        s = -amp * np.sin(phase(t, x))
        kk = np.multiply.outer(kvec, kvec)
        return s[..., None, None, None, None] * kk[:, :, None, None] * b

    params = {"amp": amp, "wavevector": kvec.tolist(), "rate": rate}
    return _build(n, eval_fn, grad_fn, T, "periodic", params, hess_fn)


def from_callable(fn, n, T=1.0, box=(-4.0, 4.0), name="user"):
    """Wrap a user ``fn(t, x) -> (..., n, n)``; gradients by central differences."""

    def eval_fn(t, x):
        return np.asarray(fn(t, x), dtype=float)

    def grad_fn(t, x):
        out = np.empty(_lead_shape(t, x) + (n, n, n))
        for l in range(n):
            e = np.zeros(n)
            e[l] = FD_GRAD_STEP
            out[..., l, :, :] = (eval_fn(t, x + e) - eval_fn(t, x - e)) / (2 * FD_GRAD_STEP)
        return out

    return _build(n, eval_fn, grad_fn, T, name, {}, None, box=box)


FIELD_FACTORIES = {
    "identity": lambda n, T, **p: identity(n, T=T),
    "constant": lambda n, T, **p: constant(p["matrix"], T=T),
    "periodic": lambda n, T, **p: periodic(n, T=T, **p),
}


def make_field(name, n, T=1.0, **params):
    """Build one of the named test fields (used by the config loader)."""
    try:
        factory = FIELD_FACTORIES[name]
    except KeyError:
        raise DomainError(
            f"unknown field {name!r}; choose from {sorted(FIELD_FACTORIES)}"
        ) from None
    return factory(n, T, **params)


# -- symbol -------------------------------------------------------------------


def _quadratic_form(field, t, x, xi):
    a = field.matrix(t, x)
    xi = np.asarray(xi, dtype=float)
    axi = np.einsum("...ij,...j->...i", a, xi)
    qq = np.einsum("...i,...i->...", xi, axi)
    if np.any(~(qq > 0)):
        raise NonEllipticField("quadratic form xi^T A xi is not positive")
    return a, axi, qq


def symbol_q(field, t, x, xi):
    """q = sqrt(sum a_ij xi_i xi_j); broadcasts over leading axes."""
    x = _as_points(x, field.dim)
    _, _, qq = _quadratic_form(field, t, x, xi)
    return np.sqrt(qq)


def symbol_gradients(field, t, x, xi):
    """Return ``(q_x, q_xi)`` with ``q_xi = A xi / q`` and
    ``q_x[l] = xi^T (d_l A) xi / (2 q)``."""
    x = _as_points(x, field.dim)
    xi = np.asarray(xi, dtype=float)
    _, axi, qq = _quadratic_form(field, t, x, xi)
    q = np.sqrt(qq)
    g = field.grad(t, x)
    q_x = np.einsum("...lij,...i,...j->...l", g, xi, xi) / (2.0 * q[..., None])
    q_xi = axi / q[..., None]
    return q_x, q_xi
