import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import IntegrationWarning

from gaussframe import atoms, gram, lattice as lt, parametrix as pm
from gaussframe.atoms import FrameAtom, GaussianMixture, norm_const
from gaussframe.coeff_field import identity, periodic
from gaussframe.errors import IndexMismatch, NonContraction
from gaussframe.verify import quad_pair


@pytest.fixture(scope="module")
def frame():
    lat = lt.build_frequency_lattice(1, 5)
    return atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=1.0, k_max=4))


@pytest.fixture(scope="module")
def vframe():
    lat = lt.build_frequency_lattice(1, 4)
    return atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=2.0, k_max=3))


def moved(atom, shift):
    x = atom.x + shift
    return FrameAtom(atom.gamma, x, atom.xi, atom.dx, float(norm_const(atom.rho, atom.dx, 1)))


def test_equal_times(frame, rng):
    tb = pm.two_branch(frame, periodic(1, amp=0.1), 0.2, 0.2)
    assert np.array_equal(tb.plus.x, tb.minus.x) and np.array_equal(tb.plus.xi, frame.xi)
    S = pm.s_operator(frame, tb)
    C = pm.c_operator(frame, tb)
    G = gram.assemble("E", frame, 0.2)
    assert S.nnz == 0
    v = rng.standard_normal(len(frame)) + 1j * rng.standard_normal(len(frame))
    assert np.array_equal(C.matrix @ v, G.matrix @ v)
    a = frame.atom(3)
    assert pm.bC_entry(frame, tb, 3, 3) == pytest.approx(atoms.atom_norm2(a), rel=1e-14)
    assert pm.bC_entry(frame, tb, 3, 9) == pytest.approx(gram.b_E_entry(a, frame.atom(9)), rel=1e-14)
    assert pm.bS_entry(frame, tb, 3, 9) == 0


def test_entries_against_quadrature_constant_field(frame, rng):
    warnings.simplefilter("ignore", IntegrationWarning)
    t = 0.3
    tb = pm.two_branch(frame, identity(1), t, 0.0)
    C = pm.c_operator(frame, tb, threshold=0.0)
    S = pm.s_operator(frame, tb, threshold=0.0)
    for _ in range(25):
        j, jp = rng.integers(len(frame), size=2)
        a, b = frame.atom(j), frame.atom(jp)
        # branch + moves against sign(xi) at unit speed, branch - with it
        s = math.copysign(1.0, b.xi[0])
        qp, mp_ = quad_pair(a, moved(b, -s * t))
        qm, mm = quad_pair(a, moved(b, s * t))
        mass = max(mp_, mm)
        c_ref = 0.5 * (qp + qm)
        s_ref = (qp - qm) / (2j * b.rho)
        assert abs(pm.bC_entry(frame, tb, j, jp) - c_ref) <= 1e-8 * max(abs(c_ref), mass)
        assert abs(pm.bS_entry(frame, tb, j, jp) - s_ref) <= 1e-8 * max(abs(s_ref), mass / b.rho)
        assert abs(C.matrix[j, jp] - c_ref) <= 1e-8 * max(abs(c_ref), mass)
        assert abs(S.matrix[j, jp] - s_ref) <= 1e-8 * max(abs(s_ref), mass / b.rho)


def test_apply_operator(frame, rng):
    n = len(frame)
    c = atoms.CoeffSequence(frame.index, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    eye = gram.SparseOperator(0.0, sp.identity(n, dtype=complex, format="csr"), 0.0, "I",
                              np.ones(n), np.ones(n), np.zeros(n), np.zeros(n), 0, frame.index)
    assert np.array_equal(pm.apply_operator(eye, c).values, c.values)
    zero = eye.scaled(0.0)
    assert not np.any(pm.apply_operator(zero, c).values)
    other = atoms.CoeffSequence(lt.FrameIndexSet(1, [0], [0], [[0]]), [1.0])
    with pytest.raises(IndexMismatch):
        pm.apply_operator(eye, other)


def test_gram_action_against_dense_quadrature(rng):
    lat = lt.build_frequency_lattice(1, 3)
    fr = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=1.0, R=1.5, k_max=1, k_min=1))
    assert len(fr) == 10
    c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    G = gram.assemble("E", fr, 0.0, threshold=0.0)
    x = np.linspace(-12, 12, 240_001)
    h = x[1] - x[0]
    phis = np.array([atoms.atom_eval(fr.atom(j), x[:, None]) for j in range(10)])
    f = c @ phis
    ref = (np.conj(phis) * f).sum(1) * h
    got = pm.apply_operator(G, atoms.CoeffSequence(fr.index, c)).values
    assert np.linalg.norm(got - ref) <= 1e-8 * np.linalg.norm(ref)


def test_zero_data(vframe):
    z = GaussianMixture.zero(1)
    sol = pm.volterra_solve(pm.CauchyProblem(z, z, periodic(1, amp=0.1), 0.5), vframe)
    assert all(not np.any(u.values) for u in sol.u + sol.G)


def _packet(freq=6.0, centre=0.0):
    return GaussianMixture([1.0], [[centre]], [[freq]], [4.0])


def test_series_decays_and_linearity(vframe):
    field = periodic(1, amp=0.1)
    f, h = _packet(), _packet(5.0, 0.3).scaled(0.5j)
    z = GaussianMixture.zero(1)
    solver = pm.VolterraSolver(vframe, field)
    tol = 1e-15
    s_f = solver.solve(pm.CauchyProblem(f, z, field, 0.5), series_tol=tol)
    s_h = solver.solve(pm.CauchyProblem(z, h, field, 0.5), series_tol=tol)
    s_both = solver.solve(pm.CauchyProblem(f.scaled(2.0), h.scaled(-1.5), field, 0.5), series_tol=tol)
    assert s_f.report.max_ratio() < 0.9
    P = solver.proj
    x = np.linspace(-2.5, 2.5, 2001)
    # compare synthesized fields pointwise; a Gram quadratic form of a difference
    # cannot resolve below sqrt(machine eps)
    for a, b, c in zip(s_f.u, s_h.u, s_both.u):
        ref = P.synthesize(2.0 * a.values - 1.5 * b.values)(x)
        got = P.synthesize(c.values)(x)
        assert np.abs(got - ref).max() <= 1e-10 * np.abs(ref).max()


def test_quadrature_refinement(vframe):
    field = periodic(1, amp=0.1)
    z = GaussianMixture.zero(1)
    prob = pm.CauchyProblem(_packet(), z, field, 0.5)
    times = np.array([0.0, 0.125, 0.25, 0.375, 0.5])
    s4 = pm.volterra_solve(prob, vframe, nodes_per_unit=4, times=times)
    s8 = pm.volterra_solve(prob, vframe, nodes_per_unit=8, times=times)
    P = s8.projector
    diff = P.norm(s8.u[-1].values - s4.u[-1].values)
    correction = P.norm(s8.G[-1].values) * 0.5
    # 4-node Gauss-Legendre already integrates the smooth kernel to high order
    assert diff <= 1e-2 * correction


def test_non_contraction_reported(vframe):
    field = periodic(1, amp=0.1)
    z = GaussianMixture.zero(1)
    with pytest.raises(NonContraction):
        pm.volterra_solve(pm.CauchyProblem(_packet(), z, field, 0.5), vframe, max_terms=1, tol=1e-30)


def test_forcing_interpolation():
    g = _packet()
    prob = pm.CauchyProblem(g, g, identity(1), 1.0, [g.scaled(0.0), g.scaled(2.0)], np.array([0.0, 1.0]))
    assert prob.forcing(0.25)(np.array([0.0]))[0] == pytest.approx(0.5)
    assert pm.CauchyProblem(g, g, identity(1), 1.0).forcing(0.3) is None


def test_dalembert_helper():
    f = _packet()
    d = pm.dalembert(f, 0.4)
    x = np.linspace(-2, 2, 9)
    assert np.allclose(d(x), 0.5 * (f(x - 0.4) + f(x + 0.4)))


def test_constant_field_solution_and_residual():
    lat = lt.build_frequency_lattice(1, 6)
    fr = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=2.5, k_max=5))
    z = GaussianMixture.zero(1)
    f = GaussianMixture([1.0], [[0.0]], [[28.0]], [49.0])
    field = identity(1)
    sol = pm.volterra_solve(pm.CauchyProblem(f, z, field, 0.5), fr, times=np.array([0.0, 0.5]),
                            residual_time=0.5)
    assert sol.report.early_exit
    assert pm.dalembert_error(sol, f, 0.5) < 5e-3
    assert sol.report.residual_rel < 1e-3
    std = pm.volterra_solve(pm.CauchyProblem(f, z, field, 0.5), fr, times=np.array([0.0, 0.5]),
                            convention="standard")
    assert np.allclose(std.u[-1].values, sol.u[-1].values, rtol=0, atol=1e-12)


def test_initial_derivatives():
    lat = lt.build_frequency_lattice(1, 6)
    field = periodic(1, amp=0.1)
    dev = []
    for k in (3, 5):
        fr = atoms.Frame(lat, lt.LatticeConfig(eps=0.25, C_eps=0.5, R=0.3, k_max=k, k_min=k))
        ids = np.arange(min(len(fr), 20))
        dev.append(pm.dS_deviation(fr, field, ids))
        assert pm.dC_deviation(fr, field, ids) <= 1e-10
    assert dev[1] < dev[0]
