"""Hot loops, each written twice: ``_nb_*`` (numba) and ``_np_*`` (numpy).

Public dispatchers at the bottom pick a twin via :func:`gaussframe._jit.use_numba`.
A "Gaussian" here is always the 4-tuple of arrays
``(amp[N] complex, center[N, n], freq[N, n], decay[N])`` representing
``amp * exp(i freq.(x-center) - decay |x-center|^2)``.
"""

import math

import numpy as np

from . import _jit
from ._jit import njit

try:
    from numba import prange
except ImportError:  # pragma: no cover
    prange = range

KIND_E = 0
KIND_T = 1

# three-point Gauss-Hermite rule for N(0, 1/(2c)); exact through degree 5
# (nodes are +-sqrt(3/2)/sqrt(c) and 0)
_GH_W1 = np.array([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0])
_GH_U1 = np.array([0.0, 1.0, -1.0])
# |node| / sqrt(c) rounded up, used in the prune bound
_GH_R = 1.23


# -- mixture evaluation ------------------------------------------------------------


@njit(parallel=True)
def _nb_mixture_eval(amp, y, f, w, pts):
    P, n = pts.shape
    N = amp.shape[0]
    out = np.zeros(P, dtype=np.complex128)
    for p in prange(P):
        acc = 0j
        for j in range(N):
            ph = 0.0
            rr = 0.0
            for d in range(n):
                z = pts[p, d] - y[j, d]
                ph += f[j, d] * z
                rr += z * z
            e = -w[j] * rr
            if e > -745.0:
                acc += amp[j] * math.exp(e) * complex(math.cos(ph), math.sin(ph))
        out[p] = acc
    return out


def _np_mixture_eval(amp, y, f, w, pts, block=2048):
    out = np.zeros(len(pts), dtype=np.complex128)
    for s in range(0, len(pts), block):
        z = pts[s : s + block, None, :] - y[None]
        ph = np.einsum("pjd,jd->pj", z, f)
        rr = np.einsum("pjd,pjd->pj", z, z)
        out[s : s + block] = (amp * np.exp(-w * rr + 1j * ph)).sum(axis=1)
    return out


@njit(inline="always")
def _scale(c, n):
    """``(pi/c)^{n/2}`` without a generic pow (hot path)."""
    if n == 1:
        return math.sqrt(math.pi / c)
    if n == 2:
        return math.pi / c
    return (math.pi / c) ** (n / 2.0)


# -- dense cross Gram of two Gaussian families --------------------------------------


@njit(parallel=True)
def _nb_cross_gram(a1, x1, f1, w1, a2, x2, f2, w2):
    N1, n = x1.shape
    N2 = x2.shape[0]
    out = np.zeros((N1, N2), dtype=np.complex128)
    for i in prange(N1):
        for j in range(N2):
            c = w1[i] + w2[j]
            ee = 0.0
            dd = 0.0
            ph = 0.0
            for d in range(n):
                eta = f2[j, d] - f1[i, d]
                dx = x1[i, d] - x2[j, d]
                m = (w1[i] * x1[i, d] + w2[j] * x2[j, d]) / c
                ee += eta * eta
                dd += dx * dx
                ph += f1[i, d] * x1[i, d] - f2[j, d] * x2[j, d] + m * eta
            e = -ee / (4.0 * c) - w1[i] * w2[j] * dd / c
            if e > -745.0:
                out[i, j] = (
                    a1[i].conjugate() * a2[j] * _scale(c, n) * math.exp(e)
                    * complex(math.cos(ph), math.sin(ph))
                )
    return out


def _np_cross_gram(a1, x1, f1, w1, a2, x2, f2, w2):
    n = x1.shape[1]
    c = w1[:, None] + w2[None, :]
    eta = f2[None] - f1[:, None]
    dx = x1[:, None] - x2[None]
    m = (w1[:, None, None] * x1[:, None] + w2[None, :, None] * x2[None]) / c[..., None]
    ee = (eta * eta).sum(-1)
    dd = (dx * dx).sum(-1)
    ph = (f1 * x1).sum(-1)[:, None] - (f2 * x2).sum(-1)[None] + (m * eta).sum(-1)
    e = -ee / (4 * c) - w1[:, None] * w2[None] * dd / c
    return np.conj(a1)[:, None] * a2[None] * (np.pi / c) ** (n / 2) * np.exp(e + 1j * ph)


# -- pruned pair assembly (E and leading-order T) ------------------------------------


@njit(inline="always")
def _pair_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, kind):
    """Magnitude bound of one pair entry (cheap: no phase); ``m1, m2`` are moduli."""
    n = x1.shape[1]
    r1 = w1[i]
    r2 = w2[j]
    c = r1 + r2
    ee = 0.0
    dd = 0.0
    for d in range(n):
        eta = f2[j, d] - f1[i, d]
        dx = x1[i, d] - x2[j, d]
        ee += eta * eta
        dd += dx * dx
    e = -ee / (4.0 * c) - r1 * r2 * dd / c
    if e < -745.0:
        return 0.0
    bb = (r1 / c) ** 2 * dd
    env = m1[i] * m2[j] * _scale(c, n) * math.exp(e)
    if kind == KIND_E:
        return env
    return env * r2 * r2 * (ee / (4 * c * c) + math.sqrt(bb * ee) / c + bb + n / (2 * c))


@njit(inline="always")
def _pair_value(i, j, a1, x1, f1, w1, a2, x2, f2, w2, kind):
    n = x1.shape[1]
    r1 = w1[i]
    r2 = w2[j]
    c = r1 + r2
    ee = 0.0
    dd = 0.0
    be = 0.0
    bb = 0.0
    ph = 0.0
    for d in range(n):
        eta = f2[j, d] - f1[i, d]
        dx = x1[i, d] - x2[j, d]
        b = r1 * dx / c
        m = (r1 * x1[i, d] + r2 * x2[j, d]) / c
        ee += eta * eta
        dd += dx * dx
        be += b * eta
        bb += b * b
        ph += f1[i, d] * x1[i, d] - f2[j, d] * x2[j, d] + m * eta
    e = -ee / (4.0 * c) - r1 * r2 * dd / c
    if kind == KIND_E:
        poly = 1.0 + 0j
    else:
        poly = r2 * r2 * complex(-ee / (4 * c * c) + bb + n / (2 * c), be / c)
    val = a1[i].conjugate() * a2[j] * _scale(c, n) * math.exp(e)
    return val * complex(math.cos(ph), math.sin(ph)) * poly


@njit
def _nb_gram_pairs(a1, x1, f1, w1, a2, x2, f2, w2, kind, thr):
    N1 = x1.shape[0]
    N2 = x2.shape[0]
    m1 = np.abs(a1)
    m2 = np.abs(a2)
    nnz = 0
    row_pruned = np.zeros(N1)
    col_pruned = np.zeros(N2)
    for j in range(N2):
        for i in range(N1):
            bound = _pair_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, kind)
            if bound > thr:
                nnz += 1
            else:
                row_pruned[i] += bound
                col_pruned[j] += bound
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    pos = 0
    for j in range(N2):
        for i in range(N1):
            if _pair_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, kind) > thr:
                rows[pos] = i
                cols[pos] = j
                vals[pos] = _pair_value(i, j, a1, x1, f1, w1, a2, x2, f2, w2, kind)
                pos += 1
    return rows, cols, vals, row_pruned, col_pruned


def _np_pair_block(a1, x1, f1, w1, a2, x2, f2, w2, kind):
    n = x1.shape[1]
    r1 = w1[:, None]
    r2 = w2[None, :]
    c = r1 + r2
    eta = f2[None] - f1[:, None]
    dx = x1[:, None] - x2[None]
    b = r1[..., None] * dx / c[..., None]
    m = (r1[..., None] * x1[:, None] + r2[..., None] * x2[None]) / c[..., None]
    ee = (eta * eta).sum(-1)
    dd = (dx * dx).sum(-1)
    be = (b * eta).sum(-1)
    bb = (b * b).sum(-1)
    ph = (f1 * x1).sum(-1)[:, None] - (f2 * x2).sum(-1)[None] + (m * eta).sum(-1)
    e = -ee / (4 * c) - r1 * r2 * dd / c
    scale = (np.pi / c) ** (n / 2)
    env = np.abs(a1)[:, None] * np.abs(a2)[None] * scale * np.exp(e)
    if kind == KIND_E:
        bound = env
        poly = 1.0
    else:
        bbb = (r1 / c) ** 2 * dd
        bound = env * r2 * r2 * (ee / (4 * c * c) + np.sqrt(bbb * ee) / c + bbb + n / (2 * c))
        poly = r2 * r2 * (-ee / (4 * c * c) + bb + n / (2 * c) + 1j * be / c)
    val = np.conj(a1)[:, None] * a2[None] * scale * np.exp(e) * np.exp(1j * ph) * poly
    return bound, val


def _np_gram_pairs(a1, x1, f1, w1, a2, x2, f2, w2, kind, thr, block=256):
    N1, N2 = len(x1), len(x2)
    row_pruned = np.zeros(N1)
    col_pruned = np.zeros(N2)
    rs, cs, vs = [], [], []
    for s in range(0, N2, block):
        sl = slice(s, s + block)
        bound, val = _np_pair_block(a1, x1, f1, w1, a2[sl], x2[sl], f2[sl], w2[sl], kind)
        keep = bound > thr
        pruned = np.where(keep, 0.0, bound)
        row_pruned += pruned.sum(axis=1)
        col_pruned[sl] += pruned.sum(axis=0)
        jj, ii = np.nonzero(keep.T)
        rs.append(ii)
        cs.append(jj + s)
        vs.append(val[ii, jj])
    if not rs:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.complex128),
                row_pruned, col_pruned)
    return (np.concatenate(rs).astype(np.int64), np.concatenate(cs).astype(np.int64),
            np.concatenate(vs), row_pruned, col_pruned)


# -- pruned pair assembly with a per-column polynomial weight ------------------------


@njit(inline="always")
def _poly_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, dsum):
    """Bound on ``|entry|`` using ``dsum[j, d] = sum_{p+q=d} |coef[j,p,q]|``."""
    n = x1.shape[1]
    r1 = w1[i]
    r2 = w2[j]
    c = r1 + r2
    ee = 0.0
    dd = 0.0
    for d in range(n):
        eta = f2[j, d] - f1[i, d]
        dx = x1[i, d] - x2[j, d]
        ee += eta * eta
        dd += dx * dx
    e = -ee / (4.0 * c) - r1 * r2 * dd / c
    if e < -745.0:
        return 0.0
    bn = (r1 / c) ** 2 * dd
    rad = math.sqrt(bn) + math.sqrt(ee) / (2 * c) + _GH_R / math.sqrt(c)
    pb = 0.0
    for d in range(4, -1, -1):
        pb = pb * rad + dsum[j, d]
    return m1[i] * m2[j] * _scale(c, n) * math.exp(e) * pb


@njit(inline="always")
def _poly_value(i, j, a1, x1, f1, w1, a2, x2, f2, w2, coef):
    n = x1.shape[1]
    r1 = w1[i]
    r2 = w2[j]
    c = r1 + r2
    ee = 0.0
    dd = 0.0
    ph = 0.0
    zc = np.zeros(2, dtype=np.complex128)
    for d in range(n):
        eta = f2[j, d] - f1[i, d]
        dx = x1[i, d] - x2[j, d]
        b = r1 * dx / c
        m = (r1 * x1[i, d] + r2 * x2[j, d]) / c
        ee += eta * eta
        dd += dx * dx
        ph += f1[i, d] * x1[i, d] - f2[j, d] * x2[j, d] + m * eta
        zc[d] = complex(b, eta / (2 * c))
    e = -ee / (4.0 * c) - r1 * r2 * dd / c
    scale = _scale(c, n) * math.exp(e)
    sig = math.sqrt(1.5 / c)
    acc = 0j
    if n == 1:
        for u in range(3):
            z = zc[0] + _GH_U1[u] * sig
            v = 0j
            for p in range(4, -1, -1):
                v = v * z + coef[j, p, 0]
            acc += _GH_W1[u] * v
    else:
        for u in range(3):
            z1 = zc[0] + _GH_U1[u] * sig
            for w in range(3):
                z2 = zc[1] + _GH_U1[w] * sig
                v = 0j
                for p in range(4, -1, -1):
                    vq = 0j
                    for q in range(4 - p, -1, -1):
                        vq = vq * z2 + coef[j, p, q]
                    v = v * z1 + vq
                acc += _GH_W1[u] * _GH_W1[w] * v
    return a1[i].conjugate() * a2[j] * scale * complex(math.cos(ph), math.sin(ph)) * acc


@njit
def _nb_poly_pairs(a1, x1, f1, w1, a2, x2, f2, w2, coef, thr):
    N1 = x1.shape[0]
    N2 = x2.shape[0]
    m1 = np.abs(a1)
    m2 = np.abs(a2)
    dsum = _degree_sums(coef)
    nnz = 0
    row_pruned = np.zeros(N1)
    col_pruned = np.zeros(N2)
    for j in range(N2):
        for i in range(N1):
            bound = _poly_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, dsum)
            if bound > thr:
                nnz += 1
            else:
                row_pruned[i] += bound
                col_pruned[j] += bound
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    pos = 0
    for j in range(N2):
        for i in range(N1):
            if _poly_bound(i, j, m1, x1, f1, w1, m2, x2, f2, w2, dsum) > thr:
                rows[pos] = i
                cols[pos] = j
                vals[pos] = _poly_value(i, j, a1, x1, f1, w1, a2, x2, f2, w2, coef)
                pos += 1
    return rows, cols, vals, row_pruned, col_pruned


@njit
def _degree_sums(coef):
    out = np.zeros((coef.shape[0], 5))
    for j in range(coef.shape[0]):
        for p in range(5):
            for q in range(5 - p):
                out[j, p + q] += abs(coef[j, p, q])
    return out


def _np_poly_block(a1, x1, f1, w1, a2, x2, f2, w2, coef):
    n = x1.shape[1]
    r1 = w1[:, None]
    r2 = w2[None, :]
    c = r1 + r2
    eta = f2[None] - f1[:, None]
    dx = x1[:, None] - x2[None]
    b = r1[..., None] * dx / c[..., None]
    m = (r1[..., None] * x1[:, None] + r2[..., None] * x2[None]) / c[..., None]
    ee = (eta * eta).sum(-1)
    dd = (dx * dx).sum(-1)
    ph = (f1 * x1).sum(-1)[:, None] - (f2 * x2).sum(-1)[None] + (m * eta).sum(-1)
    e = -ee / (4 * c) - r1 * r2 * dd / c
    scale = (np.pi / c) ** (n / 2) * np.exp(e)
    rad = np.sqrt((r1 / c) ** 2 * dd) + np.sqrt(ee) / (2 * c) + _GH_R / np.sqrt(c)
    powers = np.arange(5)
    dsum = _degree_sums(coef)
    pb = np.zeros_like(rad)
    for d in range(4, -1, -1):
        pb = pb * rad + dsum[None, :, d]
    bound = np.abs(a1)[:, None] * np.abs(a2)[None] * scale * pb
    zc = b + 1j * eta / (2 * c[..., None])
    sig = np.sqrt(1.5 / c)
    acc = np.zeros(c.shape, dtype=np.complex128)
    if n == 1:
        for u, wu in zip(_GH_U1, _GH_W1):
            z = zc[..., 0] + u * sig
            zpow = z[..., None] ** powers
            acc += wu * np.einsum("ijp,jp->ij", zpow, coef[:, :, 0])
    else:
        for u, wu in zip(_GH_U1, _GH_W1):
            z1 = zc[..., 0] + u * sig
            for v, wv in zip(_GH_U1, _GH_W1):
                z2 = zc[..., 1] + v * sig
                acc += wu * wv * np.einsum(
                    "ijp,ijq,jpq->ij", z1[..., None] ** powers, z2[..., None] ** powers, coef
                )
    val = np.conj(a1)[:, None] * a2[None] * scale * np.exp(1j * ph) * acc
    return bound, val


def _np_poly_pairs(a1, x1, f1, w1, a2, x2, f2, w2, coef, thr, block=128):
    N1, N2 = len(x1), len(x2)
    row_pruned = np.zeros(N1)
    col_pruned = np.zeros(N2)
    rs, cs, vs = [], [], []
    for s in range(0, N2, block):
        sl = slice(s, s + block)
        bound, val = _np_poly_block(a1, x1, f1, w1, a2[sl], x2[sl], f2[sl], w2[sl], coef[sl])
        keep = bound > thr
        pruned = np.where(keep, 0.0, bound)
        row_pruned += pruned.sum(axis=1)
        col_pruned[sl] += pruned.sum(axis=0)
        jj, ii = np.nonzero(keep.T)
        rs.append(ii)
        cs.append(jj + s)
        vs.append(val[ii, jj])
    if not rs:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.complex128),
                row_pruned, col_pruned)
    return (np.concatenate(rs).astype(np.int64), np.concatenate(cs).astype(np.int64),
            np.concatenate(vs), row_pruned, col_pruned)


# -- lattice sums ---------------------------------------------------------------------


@njit
def _nb_theta_box(eps0, lam, rad, weighted):
    n = eps0.shape[0]
    width = 2 * rad + 1
    total = width**n
    base = np.empty(n)
    for d in range(n):
        base[d] = math.floor(eps0[d])
    acc = 0.0
    for flat in range(total):
        r = flat
        s = 0.0
        for d in range(n):
            a = base[d] + (r % width) - rad
            r //= width
            z = a - eps0[d]
            s += z * z
        s /= lam
        if weighted:
            acc += s * math.exp(-s)
        else:
            acc += math.exp(-s)
    return acc


def _np_theta_box(eps0, lam, rad, weighted):
    ax = np.arange(-rad, rad + 1)
    grids = np.meshgrid(*[np.floor(e) + ax - e for e in eps0], indexing="ij")
    s = sum(g * g for g in grids) / lam
    return float((s * np.exp(-s)).sum() if weighted else np.exp(-s).sum())


@njit
def _nb_partition_sum(xi, centers, ks, m):
    P, n = xi.shape
    M = centers.shape[0]
    out = np.zeros(P)
    for p in range(P):
        acc = 0.0
        for j in range(M):
            dd = 0.0
            rr = 0.0
            for d in range(n):
                z = xi[p, d] - centers[j, d]
                dd += z * z
                rr += centers[j, d] * centers[j, d]
            acc += 2.0 ** (2.0 * ks[j] * m) * math.exp(-dd / (2.0 * math.sqrt(rr)))
        out[p] = acc
    return out


def _np_partition_sum(xi, centers, ks, m):
    rad = np.linalg.norm(centers, axis=1)
    dd = ((xi[:, None, :] - centers[None]) ** 2).sum(-1)
    return (2.0 ** (2.0 * ks * m) * np.exp(-dd / (2 * rad))).sum(axis=1)


# -- dispatchers ------------------------------------------------------------------------


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _gauss_args(g):
    amp, x, f, w = g
    return _c(amp), _f(x), _f(f), _f(w)


def mixture_eval(g, pts):
    pts = _f(pts)
    args = _gauss_args(g)
    if _jit.use_numba():
        return _nb_mixture_eval(*args, pts)
    return _np_mixture_eval(*args, pts)


def cross_gram(g1, g2):
    a = _gauss_args(g1) + _gauss_args(g2)
    if _jit.use_numba():
        return _nb_cross_gram(*a)
    return _np_cross_gram(*a)


def gram_pairs(g1, g2, kind, thr):
    """COO entries ``(rows, cols, vals, row_pruned, col_pruned)`` of the pruned
    ``E`` (``kind=0``) or leading-order ``T`` (``kind=1``) pair matrix."""
    a = _gauss_args(g1) + _gauss_args(g2)
    if _jit.use_numba():
        return _nb_gram_pairs(*a, int(kind), float(thr))
    return _np_gram_pairs(*a, int(kind), float(thr))


def poly_pairs(g1, g2, coef, thr):
    """Like :func:`gram_pairs` with the column Gaussian multiplied by a
    polynomial in ``x - center`` (coefficients ``coef[j, p, q]``)."""
    a = _gauss_args(g1) + _gauss_args(g2)
    coef = _c(coef)
    if _jit.use_numba():
        return _nb_poly_pairs(*a, coef, float(thr))
    return _np_poly_pairs(*a, coef, float(thr))


def theta_box(eps0, lam, rad, weighted=False):
    eps0 = _f(eps0)
    if _jit.use_numba():
        return float(_nb_theta_box(eps0, float(lam), int(rad), bool(weighted)))
    return _np_theta_box(eps0, float(lam), int(rad), bool(weighted))


def partition_sum(xi, centers, ks, m):
    xi, centers, ks = _f(np.atleast_2d(xi)), _f(centers), _f(ks)
    if _jit.use_numba():
        return _nb_partition_sum(xi, centers, ks, float(m))
    return _np_partition_sum(xi, centers, ks, float(m))
