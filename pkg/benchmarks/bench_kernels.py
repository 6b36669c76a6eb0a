"""Time the numba kernels against their numpy twins.

Run ``python3 benchmarks/bench_kernels.py [--k-max 6] [--repeat 3]``.  Each
kernel is called once per backend to warm up (numba compiles on first call),
then timed as the best of ``--repeat`` runs.  Results of the two backends are
compared so a speedup never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from gaussframe import _jit, _kernels, atoms, gram, lattice as lt
from gaussframe.coeff_field import periodic


def best_of(fn, repeat):
    fn()  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(k_max):
    lat = lt.build_frequency_lattice(1, k_max)
    frame = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=2.5, k_max=k_max))
    g = frame.gaussians()
    beams = gram.static_beams(frame)
    coef = gram.beam_polynomial(periodic(1, amp=0.1), beams)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, (20_000, 1))
    xi = rng.uniform(1, 2.0**k_max, (2000, 1))
    centres = np.concatenate([lat.frequencies(k) for k in range(k_max + 1)])
    ks = np.concatenate([np.full(len(lat.level(k)), k) for k in range(k_max + 1)]).astype(float)
    return len(frame), {
        "mixture_eval": lambda: _kernels.mixture_eval(g, pts),
        "cross_gram": lambda: _kernels.cross_gram(g, (g[0][:200], g[1][:200], g[2][:200], g[3][:200])),
        "gram_pairs_E": lambda: _kernels.gram_pairs(g, g, 0, 1e-12)[2],
        "gram_pairs_T": lambda: _kernels.gram_pairs(g, g, 1, 1e-12)[2],
        "poly_pairs": lambda: _kernels.poly_pairs(g, g, coef, 1e-12)[2],
        "theta_box": lambda: _kernels.theta_box(np.array([0.3, 0.1]), 64.0, 60),
        "partition_sum": lambda: _kernels.partition_sum(xi, centres, ks, 1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--k-max", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    n, table = cases(args.k_max)
    print(f"frame atoms: {n}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in table.items():
        _jit.set_backend("numpy")
        t_np, r_np = best_of(fn, args.repeat)
        _jit.set_backend("numba")
        t_nb, r_nb = best_of(fn, args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_np) - np.asarray(r_nb)), initial=0.0))
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
