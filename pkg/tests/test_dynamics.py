import numpy as np
import pytest

from billiardq import dynamics, geometry, modes, qform
from billiardq.dynamics import BilliardState


def test_unit_velocity_enforced():
    with pytest.raises(ValueError):
        BilliardState(position=np.zeros(2), velocity=np.array([1.0, 1.0]))


def test_non_radial_domain_rejected():
    dom = geometry.rectangle(2.0, 1.0)
    s = BilliardState(position=np.zeros(2), velocity=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        dynamics.evolve(s, dom, 10.0)


def test_diameter_orbit_in_circle(unit_disk):
    s = BilliardState(position=np.zeros(2), velocity=np.array([1.0, 0.0]))
    traj = dynamics.evolve(s, unit_disk, 10.5)
    # bounces alternate between (1, 0) and (-1, 0) at times 1, 3, 5, ...
    assert traj.n_bounces == 5
    for b, (t, p) in enumerate(zip(traj.times[1:], traj.points[1:-1])):
        assert abs(t - (2 * b + 1)) < 1e-11
        assert np.allclose(p, [(-1.0) ** b, 0.0], atol=1e-11)


def test_unit_speed_along_path(deformed_circle):
    s = dynamics.random_states(deformed_circle, 1, seed=3)[0]
    traj = dynamics.evolve(s, deformed_circle, 500.0)
    seg_len = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
    seg_dt = np.diff(traj.times)
    assert np.max(np.abs(seg_len - seg_dt)) < 1e-12 * traj.duration
    assert np.allclose(np.linalg.norm(traj.velocities, axis=1), 1.0, atol=1e-12)


def test_bounce_points_on_boundary(deformed_circle):
    s = dynamics.random_states(deformed_circle, 1, seed=5)[0]
    traj = dynamics.evolve(s, deformed_circle, 300.0)
    shape = deformed_circle.shape
    p = traj.points[1:-1]
    r = np.hypot(p[:, 0], p[:, 1])
    th = np.arctan2(p[:, 1], p[:, 0])
    assert np.max(np.abs(r - shape.rho(th))) < 1e-9


def test_circle_angular_momentum_conserved(unit_disk):
    s = dynamics.random_states(unit_disk, 1, seed=11)[0]
    traj = dynamics.evolve(s, unit_disk, 200.0)
    L = traj.points[:-1, 0] * traj.velocities[:, 1] \
        - traj.points[:-1, 1] * traj.velocities[:, 0]
    assert np.max(np.abs(L - L[0])) < 1e-9


def test_reversibility_in_circle(unit_disk):
    # time reversal is only testable in the integrable circle, where roundoff
    # grows linearly; in the deformed domain chaos amplifies the per-bounce
    # epsilon exponentially and no tolerance survives ~100 bounces
    s = dynamics.random_states(unit_disk, 1, seed=7)[0]
    fwd = dynamics.evolve(s, unit_disk, 200.0)
    assert fwd.n_bounces > 100
    # reverse at the final bounce point, run for the same elapsed time, and
    # interpolate the backward path at that exact time
    end = BilliardState(position=fwd.points[-1].copy(),
                        velocity=-fwd.velocities[-1]
                        / np.linalg.norm(fwd.velocities[-1]))
    back = dynamics.evolve(end, unit_disk, fwd.duration)
    seg = np.searchsorted(back.times, fwd.duration, side="right") - 1
    seg = min(seg, len(back.velocities) - 1)
    pos = back.points[seg] + (fwd.duration - back.times[seg]) * back.velocities[seg]
    assert np.allclose(pos, s.position, atol=1e-8)


def test_observable_series_bounds(deformed_circle):
    s = dynamics.random_states(deformed_circle, 1, seed=1)[0]
    traj = dynamics.evolve(s, deformed_circle, 100.0)
    r2 = dynamics.observable_series(traj, 0.05, 100.0)
    rmax = geometry.max_radius(deformed_circle)
    assert len(r2) == 2000
    assert np.all(r2 >= 0.0) and np.all(r2 <= rmax ** 2 + 1e-12)


def test_random_states_deterministic_and_interior(deformed_circle):
    a = dynamics.random_states(deformed_circle, 20, seed=9)
    b = dynamics.random_states(deformed_circle, 20, seed=9)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.position, sb.position)
        assert np.array_equal(sa.velocity, sb.velocity)
    shape = deformed_circle.shape
    for s in a:
        r = np.hypot(*s.position)
        th = np.arctan2(s.position[1], s.position[0])
        assert r < shape.rho(th)


def test_spectral_density_white_noise_parseval(rng):
    series = [rng.standard_normal(1 << 13) for _ in range(8)]
    est = dynamics.spectral_density(series, 0.1, 1 << 10)
    assert dynamics.parseval_defect(est) < 0.02
    assert np.all(est.C >= 0.0)
    assert est.omega[0] == 0.0


def test_spectral_density_cosine_peak():
    dt = 0.05
    t = np.arange(1 << 15) * dt
    w0 = 2.0
    series = np.cos(w0 * t)
    est = dynamics.spectral_density(series, dt, 1 << 11)
    assert abs(est.omega[np.argmax(est.C)] - w0) < 0.1
    assert dynamics.parseval_defect(est) < 1e-3


def test_spectral_density_input_validation(rng):
    with pytest.raises(ValueError, match="shorter"):
        dynamics.spectral_density(rng.standard_normal(100), 0.1, 1024)
    with pytest.raises(ValueError, match="segments"):
        dynamics.spectral_density(rng.standard_normal(2048), 0.1, 1024)


def test_band_profile_needs_enough_levels(rng):
    e = np.sort(rng.uniform(100, 200, 30))
    est = dynamics.spectral_density([rng.standard_normal(4096)
                                     for _ in range(8)], 0.1, 512)
    with pytest.raises(ValueError, match="50"):
        dynamics.empirical_band_profile(e, np.eye(30), est, np.pi)


def test_band_profile_same_from_Q_and_interior_matrix(unit_disk, rng):
    # the interior matrix <phi_i, r^2 phi_j> and 4 Q_ij / (E_i - E_j)^2 are
    # equal off the diagonal, so either input gives the same profile
    states = modes.analytic_spectrum(unit_disk, 250.0)
    assert len(states) >= 50
    mesh = geometry.build_boundary_mesh(
        unit_disk, geometry.default_node_count(unit_disk, states[-1].k))
    iq = geometry.interior_quadrature(unit_disk, 160)
    q = qform.build_Q(states, mesh)
    P = qform.r2_matrix(states, iq)
    e = q.energies
    eps = e[:, None] - e[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.where(eps != 0.0, 4.0 * q.entries / eps ** 2, 0.0)
    est = dynamics.spectral_density([rng.standard_normal(4096)
                                     for _ in range(8)], 0.1, 512)
    prof_q = dynamics.empirical_band_profile(e, A, est, np.pi, omega_min=0.1)
    prof_p = dynamics.empirical_band_profile(e, P, est, np.pi, omega_min=0.1)
    assert np.allclose(prof_q.var_empirical, prof_p.var_empirical, rtol=1e-6)


def test_fp_prediction_scalings(rng):
    est = dynamics.spectral_density([rng.standard_normal(4096)
                                     for _ in range(8)], 0.1, 512)
    pred = dynamics.fp_prediction(400.0, est, np.pi)
    qm = pred["q_magnitude"]
    assert abs(qm(2.0) / qm(1.0) - 4.0) < 1e-12
    assert pred["window_trend"](0.0) == -1.25
    assert pred["window_trend"](0.5) == -0.25


def test_offdiag_scaling_slope_synthetic(rng):
    e = np.sort(rng.uniform(300, 500, 60))
    eps = e[:, None] - e[None, :]
    Q = 0.01 * eps ** 2 * (1.0 + 0.1 * rng.standard_normal((60, 60)))
    slope = dynamics.offdiag_scaling_slope(e, np.abs(Q))
    assert abs(slope - 2.0) < 0.05
