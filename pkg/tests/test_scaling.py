import numpy as np
import pytest

from billiardq import geometry, modes, qform, scaling
from billiardq.geometry import BoundaryCondition


def _disk_zeros_in(k_lo, k_hi):
    """All Dirichlet disk eigenwavenumbers in [k_lo, k_hi] with multiplicity."""
    ks = []
    m = 0
    while True:
        zeros = [z for z in modes.bessel_zeros(m, "dirichlet", 40) if k_lo <= z <= k_hi]
        if m > 0 and not zeros and modes.bessel_zeros(m, "dirichlet", 1)[0] > k_hi:
            break
        for z in zeros:
            ks.extend([z] if m == 0 else [z, z])
        m += 1
    return np.sort(np.array(ks))


@pytest.fixture(scope="module")
def disk_sweep(unit_disk):
    return scaling.sweep(unit_disk, 20.0, 21.0)


@pytest.fixture(scope="module")
def deformed_sweep(deformed_circle):
    return scaling.sweep(deformed_circle, 19.0, 21.0)


def test_disk_levels_complete_with_degeneracy(disk_sweep):
    exact = _disk_zeros_in(20.0, 21.0)
    got = np.array([s.k for s in disk_sweep])
    assert len(got) == len(exact)
    assert np.max(np.abs(got - exact) / exact) < 1e-6


def test_eigenvalue_to_wavenumber_slope(unit_disk):
    # the recovered lambda relate to the true level by k* = k0 - 2 lambda to
    # first order; regress k0 - k* on lambda over a fan of window centers
    k_star = modes.bessel_zeros(4, "dirichlet", 5)[-1]  # 20.8269...
    assert 20.0 < k_star < 21.0
    mesh = geometry.build_boundary_mesh(
        unit_disk, geometry.default_node_count(unit_disk, 21.0))
    basis = scaling.make_basis(unit_disk, 21.0)
    lam, target = [], []
    for delta in (-0.04, -0.02, -0.01, 0.01, 0.02, 0.04):
        k0 = k_star + delta
        F, G = scaling.tension_matrices(basis, k0, mesh)
        res = scaling.solve_window(F, G, k0, 0.2, basis, mesh)
        km = res.k_mu[np.argmin(np.abs(res.k_mu - k_star))]
        lam.append((k0 - km) / 2.0)
        target.append(delta)
    slope = np.polyfit(lam, target, 1)[0]
    assert abs(slope - 2.0) < 0.01


def test_deformed_levels_satisfy_rellich(deformed_circle, deformed_sweep):
    # defect measured on a mesh the solver never saw
    n = geometry.default_node_count(deformed_circle, 21.0) + 137
    mesh = geometry.build_boundary_mesh(deformed_circle, n)
    for s in deformed_sweep:
        assert scaling.rellich_defect(s, mesh) < 1e-4


def test_deformed_quasi_orthogonality(deformed_circle, deformed_sweep):
    mesh = geometry.build_boundary_mesh(
        deformed_circle, geometry.default_node_count(deformed_circle, 21.0))
    q = scaling.scaled_Q(deformed_sweep, mesh)
    assert np.max(np.abs(np.diag(q.entries) / (2.0 * q.energies) - 1.0)) < 1e-6
    assert qform.bound_violations(q) == []


def test_level_count_tracks_weyl(deformed_circle, deformed_sweep):
    a = geometry.area(deformed_circle)
    p = geometry.perimeter(deformed_circle)
    expect = (modes.weyl_count(21.0 ** 2, a, p)
              - modes.weyl_count(19.0 ** 2, a, p))
    assert abs(len(deformed_sweep) - expect) <= 2.0


def test_tension_matrices_symmetric(unit_disk):
    mesh = geometry.build_boundary_mesh(unit_disk, 256)
    basis = scaling.make_basis(unit_disk, 10.0)
    F, G = scaling.tension_matrices(basis, 10.0, mesh)
    assert np.array_equal(F, F.T)
    assert np.array_equal(G, G.T)


def test_basis_k_derivative_exact(unit_disk, rng):
    basis = scaling.make_basis(unit_disk, 8.0)
    pts = rng.uniform(-0.6, 0.6, size=(30, 2))
    h = 1e-6
    fd = (basis.values(8.0 + h, pts) - basis.values(8.0 - h, pts)) / (2 * h)
    assert np.allclose(basis.k_derivative(8.0, pts), fd, atol=1e-6)


def test_rejects_non_dirichlet(unit_disk):
    dom = unit_disk.with_bc(BoundaryCondition.neumann())
    with pytest.raises(ValueError):
        scaling.sweep(dom, 10.0, 11.0)


def test_rejects_origin_outside_kernel(unit_disk):
    with pytest.raises(ValueError):
        scaling.sweep(unit_disk.with_origin((1.5, 0.0)), 10.0, 11.0)


def test_tension_rejects_nonpositive_rn(unit_disk):
    mesh = geometry.build_boundary_mesh(unit_disk.with_origin((1.5, 0.0)), 128)
    basis = scaling.make_basis(unit_disk, 10.0)
    with pytest.raises(ValueError):
        scaling.tension_matrices(basis, 10.0, mesh)


def test_degenerate_cluster_orthonormal(unit_disk, disk_sweep):
    # boundary gram of each recovered near-degenerate cluster is the identity
    mesh = geometry.build_boundary_mesh(
        unit_disk, geometry.default_node_count(unit_disk, 21.0))
    traces = [modes.boundary_trace(s, mesh) for s in disk_sweep]
    for a in range(len(disk_sweep)):
        for b in range(a + 1, len(disk_sweep)):
            if abs(disk_sweep[a].k - disk_sweep[b].k) > 5e-3:
                continue
            ga = float(np.sum(mesh.weights * mesh.rn
                              * traces[a].phi_n * traces[b].phi_n))
            ga /= 2.0 * np.sqrt(disk_sweep[a].energy * disk_sweep[b].energy)
            assert abs(ga) < 1e-6
