"""Classical billiard flow and the band-profile comparison.

Unit-speed point particles with specular reflections inside a star-shaped
radial domain; the observable r^2 sampled along trajectories; Welch
spectral density of its autocorrelation; and the semiclassical prediction
var[<phi_i, r^2 phi_j>] -> C(omega_ij)/vol * E^{-1/2} compared against the
variance actually measured in a patch of the Q matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import geometry
from .geometry import Domain, RadialShape

__all__ = [
    "BilliardState",
    "Trajectory",
    "SpectralEstimate",
    "BandProfile",
    "random_states",
    "evolve",
    "evolve_ensemble",
    "observable_series",
    "spectral_density",
    "parseval_defect",
    "fp_prediction",
    "empirical_band_profile",
]


@dataclass(frozen=True)
class BilliardState:
    """Unit-speed phase point: interior position and direction."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.velocity, dtype=float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("velocity must be a unit vector")


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear path: bounce points, cumulative times, segment
    velocities (one fewer than points)."""

    points: np.ndarray      # (nb + 1, 2)
    times: np.ndarray       # (nb + 1,), times[0] = 0
    velocities: np.ndarray  # (nb, 2)
    domain: Domain

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def n_bounces(self) -> int:
        return len(self.points) - 2


@dataclass(frozen=True)
class SpectralEstimate:
    """One-sided spectral density C(omega) of a stationary series.

    C is even in omega; only omega >= 0 is stored.  Normalized so that
    (1/pi) int_0^inf C(omega) d omega equals the series variance
    (equivalently (1/2pi) over the full line).
    """

    omega: np.ndarray
    C: np.ndarray
    segments: int
    window: str
    variance: float
    c0_stderr: float   # segment scatter of the omega ~ 0 estimate

    @property
    def c0(self) -> float:
        return float(self.C[0])


@dataclass(frozen=True)
class BandProfile:
    """Per-bin variance of r^2 matrix elements vs omega_ij = k_i - k_j."""

    omega: np.ndarray
    var_empirical: np.ndarray
    var_predicted: np.ndarray
    counts: np.ndarray
    E: float
    dropped: int      # bins removed for having too few pairs


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------

def random_states(domain: Domain, n: int, seed: int = 0) -> list[BilliardState]:
    """n phase points uniform in position x direction (Liouville measure)."""
    shape = _radial_shape(domain)
    rng = np.random.default_rng(seed)
    rmax = geometry.max_radius(domain)
    off = np.asarray(domain.origin_offset, dtype=float)
    pts = []
    while len(pts) < n:
        cand = rng.uniform(-rmax, rmax, size=(4 * n, 2)) - off
        r = np.hypot(cand[:, 0], cand[:, 1])
        th = np.arctan2(cand[:, 1], cand[:, 0])
        keep = r < 0.999 * shape.rho(th)
        pts.extend(cand[keep])
    angles = rng.uniform(0.0, 2.0 * np.pi, n)
    return [BilliardState(position=np.array(p, dtype=float),
                          velocity=np.array([math.cos(a), math.sin(a)]))
            for p, a in zip(pts[:n], angles)]


def _radial_shape(domain: Domain) -> RadialShape:
    if not isinstance(domain.shape, RadialShape):
        raise ValueError("the billiard flow supports radial domains only")
    return domain.shape


def _boundary_gap(shape: RadialShape, off: np.ndarray, P: np.ndarray) -> np.ndarray:
    """rho(theta) - r for lab points P; positive inside."""
    q = P + off
    r = np.hypot(q[:, 0], q[:, 1])
    th = np.arctan2(q[:, 1], q[:, 0])
    return shape.rho(th) - r


def _gap_deriv(shape: RadialShape, off: np.ndarray, P: np.ndarray,
               V: np.ndarray, t: np.ndarray):
    """Gap g(t) = rho(theta) - r along rays and its t-derivative."""
    q = P + off + t[:, None] * V
    x, y = q[:, 0], q[:, 1]
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    dr = (x * V[:, 0] + y * V[:, 1]) / r
    dth = (x * V[:, 1] - y * V[:, 0]) / (r * r)
    return shape.rho(th) - r, shape.rho_prime(th) * dth - dr


def _advance(P: np.ndarray, V: np.ndarray, shape: RadialShape, off: np.ndarray,
             t_hi: float, n_grid: int = 128, n_bisect: int = 12):
    """Vectorized next boundary crossing for rays P + t V, t in (0, t_hi].

    Coarse grid locates the first sign change of the gap function; bisection
    polishes it.  Raises RuntimeError with diagnostics if no crossing is
    bracketed (cannot happen for interior starting points on a bounded
    domain with adequate n_grid).
    """
    ts = np.linspace(0.0, t_hi, n_grid + 1)[1:]
    q = (P + off)[None, :, :] + ts[:, None, None] * V[None, :, :]
    r = np.hypot(q[..., 0], q[..., 1])
    th = np.arctan2(q[..., 1], q[..., 0])
    outside = shape.rho(th) - r <= 0.0
    if not np.all(np.any(outside, axis=0)):
        bad = np.nonzero(~np.any(outside, axis=0))[0]
        raise RuntimeError(f"no boundary crossing bracketed for rays {bad}")
    first = np.argmax(outside, axis=0)
    hi = ts[first]
    lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0)
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        inside = _boundary_gap(shape, off, P + mid[:, None] * V) > 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    # Newton polish on the narrowed bracket (simple root; clamped for safety)
    t_star = 0.5 * (lo + hi)
    for _ in range(4):
        g, dg = _gap_deriv(shape, off, P, V, t_star)
        step = np.where(dg != 0.0, -g / dg, 0.0)
        t_star = np.clip(t_star + step, lo, hi)
    hit = P + t_star[:, None] * V
    q = hit + off
    th = np.arctan2(q[:, 1], q[:, 0])
    rho = shape.rho(th)
    drho = shape.rho_prime(th)
    # outward normal of the curve (rho cos, rho sin): (y', -x') / |.|
    ct, st = np.cos(th), np.sin(th)
    tx = drho * ct - rho * st
    ty = drho * st + rho * ct
    nrm = np.hypot(tx, ty)
    normal = np.column_stack([ty / nrm, -tx / nrm])
    return t_star, hit, normal


def evolve_ensemble(states: list[BilliardState], domain: Domain, T: float,
                    max_bounces: int = 10 ** 6) -> list[Trajectory]:
    """Evolve all states for time T, bouncing in lockstep (vectorized)."""
    shape = _radial_shape(domain)
    off = np.asarray(domain.origin_offset, dtype=float)
    n = len(states)
    P = np.array([s.position for s in states], dtype=float)
    V = np.array([s.velocity for s in states], dtype=float)
    t_hi = 2.0 * geometry.max_radius(domain) * 1.001
    times = [np.zeros(n)]
    points = [P.copy()]
    vels = []
    elapsed = np.zeros(n)
    for _ in range(max_bounces):
        t_star, hit, normal = _advance(P, V, shape, off, t_hi)
        vels.append(V.copy())
        elapsed = elapsed + t_star
        times.append(elapsed.copy())
        points.append(hit)
        vn = np.einsum("ij,ij->i", V, normal)
        V = V - 2.0 * vn[:, None] * normal
        # nudge strictly inside so the next bracketing starts interior
        P = hit - 1e-12 * normal
        if np.all(elapsed >= T):
            break
    else:
        raise RuntimeError("max_bounces exceeded before reaching time T")
    pts = np.stack(points, axis=1)     # (n, nb+1, 2)
    tms = np.stack(times, axis=1)      # (n, nb+1)
    vls = np.stack(vels, axis=1)       # (n, nb, 2)
    out = []
    for i in range(n):
        cut = int(np.searchsorted(tms[i], T)) + 1
        cut = min(cut, pts.shape[1])
        out.append(Trajectory(points=pts[i, :cut], times=tms[i, :cut],
                              velocities=vls[i, :cut - 1], domain=domain))
    return out


def evolve(state: BilliardState, domain: Domain, T: float,
           max_bounces: int = 10 ** 6) -> Trajectory:
    """Evolve a single state for time T (arc length, unit speed)."""
    return evolve_ensemble([state], domain, T, max_bounces)[0]


def observable_series(traj: Trajectory, dt: float, T: float | None = None) -> np.ndarray:
    """Uniform-in-time samples of r^2(t) = |position(t)|^2 along a trajectory.

    Positions are relative to the domain origin (offset coordinates), the
    same convention as the quantum operator.
    """
    T = traj.duration if T is None else min(T, traj.duration)
    t = np.arange(0.0, T, dt)
    seg = np.clip(np.searchsorted(traj.times, t, side="right") - 1, 0,
                  len(traj.velocities) - 1)
    p = traj.points[seg] + (t - traj.times[seg])[:, None] * traj.velocities[seg]
    return np.einsum("ij,ij->i", p, p)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def spectral_density(series, dt: float, segment: int,
                     window: str = "hann") -> SpectralEstimate:
    """Welch estimate of the autocorrelation spectrum C(omega).

    `series` is one array or a list of arrays (pooled ensemble members);
    segments overlap 50%.  Requires at least 16 segments in total.
    """
    if isinstance(series, np.ndarray) and series.ndim == 1:
        series = [series]
    series = [np.asarray(s, dtype=float) for s in series]
    if any(len(s) < segment for s in series):
        raise ValueError("series shorter than one segment")
    n_seg = sum(max(0, 2 * (len(s) // segment) - 1) for s in series)
    if n_seg < 16:
        raise ValueError(f"only {n_seg} segments; need at least 16")
    fs = 1.0 / dt
    psds = []
    for s in series:
        f, p = signal.welch(s - np.mean(s), fs=fs, window=window,
                            nperseg=segment, noverlap=segment // 2,
                            detrend="constant")
        psds.append(p)
    psds = np.array(psds)
    pooled = np.mean(psds, axis=0)
    # C(omega) is the two-sided density on the angular-frequency axis:
    # omega = 2 pi f and C = S_one_sided / 2
    omega = 2.0 * np.pi * f
    C = 0.5 * pooled
    # variance at the segment scale: the sample variance of what the
    # transform actually sees.  Sub-resolution (inter-segment) drift is
    # removed by the per-segment detrend, so the global variance would not
    # satisfy Parseval for series with near-divergent low-frequency power.
    seg_vars = []
    step = segment - segment // 2
    for s in series:
        for start in range(0, len(s) - segment + 1, step):
            seg_vars.append(np.var(s[start:start + segment]))
    var = float(np.mean(seg_vars))
    scatter = float(np.std(psds[:, 0]) / math.sqrt(len(psds))) * 0.5 \
        if len(psds) > 1 else 0.0
    return SpectralEstimate(omega=omega, C=C, segments=n_seg, window=window,
                            variance=var, c0_stderr=scatter)


def parseval_defect(est: SpectralEstimate) -> float:
    """| (1/pi) int_0^inf C d omega - variance | / variance.

    The integral uses the estimator's own discrete Parseval convention
    (full-weight Riemann sum over the one-sided bins).
    """
    total = float(np.sum(est.C)) * float(est.omega[1] - est.omega[0]) / np.pi
    return abs(total - est.variance) / est.variance


# ---------------------------------------------------------------------------
# band profiles
# ---------------------------------------------------------------------------

def _interp_C(est: SpectralEstimate, omega):
    return np.interp(np.abs(omega), est.omega, est.C)


def fp_prediction(E: float, est: SpectralEstimate, vol: float) -> dict:
    """Semiclassical band-profile prediction at center energy E.

    Returns the variance curve of r^2 matrix elements on the spectral grid,
    the predicted off-diagonal magnitude |Q_ij| as a function of the energy
    difference, and the E^{2 beta - 5/4} window-decay trend exponent.
    """
    var_A = est.C / vol * E ** -0.5

    def q_magnitude(delta_e):
        return np.sqrt(est.c0 / (4.0 * vol)) * E ** -0.25 * np.asarray(delta_e) ** 2

    def window_trend(beta):
        return 2.0 * beta - 1.25

    return {"omega": est.omega.copy(), "var_A": var_A,
            "q_magnitude": q_magnitude, "window_trend": window_trend,
            "E": E, "vol": vol}


def empirical_band_profile(energies, A, est: SpectralEstimate, vol: float,
                           n_bins: int = 24, min_count: int = 10,
                           omega_max: float | None = None,
                           omega_min: float = 0.0) -> BandProfile:
    """Patch variance of r^2 matrix elements binned by omega_ij = k_i - k_j.

    `A` is either the interior matrix <phi_i, r^2 phi_j> or, by the exact
    off-diagonal identity, 4 Q_ij / (E_i - E_j)^2 -- the two give the same
    profile up to quadrature error.  Requires >= 50 levels.  `omega_min`
    excludes quasi-degenerate pairs (below the mean level spacing the
    statistics are dominated by level-repulsion / selection-rule effects,
    not the semiclassical sum rule).
    """
    energies = np.asarray(energies, dtype=float)
    n = len(energies)
    if n < 50:
        raise ValueError(f"need at least 50 levels, got {n}")
    k = np.sqrt(energies)
    E = float(np.mean(energies))
    ii, jj = np.triu_indices(n, k=1)
    om = k[ii] - k[jj]
    vals = np.asarray(A)[ii, jj]
    om = np.abs(om)
    if omega_max is None:
        omega_max = float(np.max(om))
    edges = np.linspace(omega_min, omega_max, n_bins + 1)
    which = np.digitize(om, edges) - 1
    centers, var_emp, counts = [], [], []
    dropped = 0
    for b in range(n_bins):
        sel = which == b
        c = int(np.count_nonzero(sel))
        if c < min_count:
            dropped += 1
            continue
        centers.append(0.5 * (edges[b] + edges[b + 1]))
        var_emp.append(float(np.mean(vals[sel] ** 2)))
        counts.append(c)
    centers = np.array(centers)
    pred = _interp_C(est, centers) / vol * E ** -0.5
    return BandProfile(omega=centers, var_empirical=np.array(var_emp),
                       var_predicted=pred, counts=np.array(counts),
                       E=E, dropped=dropped)


def offdiag_scaling_slope(energies, Q_entries, omega_min: float = 0.25) -> float:
    """Least-squares log-log slope of |Q_ij| against |E_i - E_j|.

    Pairs closer than omega_min in wavenumber are excluded (quasi-degenerate
    statistics).  The expected value is 2: off-diagonal entries scale as
    (E_i - E_j)^2 times an O(1) matrix element.
    """
    energies = np.asarray(energies, dtype=float)
    k = np.sqrt(energies)
    ii, jj = np.triu_indices(len(energies), k=1)
    om = np.abs(k[ii] - k[jj])
    eps = np.abs(energies[ii] - energies[jj])
    q = np.abs(np.asarray(Q_entries)[ii, jj])
    sel = (om > omega_min) & (q > 0.0)
    if np.count_nonzero(sel) < 10:
        raise ValueError("too few pairs for a slope fit")
    return float(np.polyfit(np.log(eps[sel]), np.log(q[sel]), 1)[0])
