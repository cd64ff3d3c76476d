"""The boundary bilinear form q, the matrix Q, and its diagnostics.

q(u, v; E) = oint (d-2)/2 (u_n v + v_n u) + r_n (E/2 uv - grad u . grad v)
             + u_r v_n + v_r u_n  dA

Q_ij = q(phi_i, phi_j; E_i + E_j).  Diagonals equal 2 E_i; off-diagonals obey
the hard bound |Q_ij| <= (R^2/4)(E_i - E_j)^2 and the identity
Q_ij = 2 E_i delta_ij + ((E_i - E_j)^2 / 4) <phi_i, r^2 phi_j>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryMesh, InteriorQuadrature
from .modes import BoundaryTrace, EigenState, boundary_trace

__all__ = [
    "QMatrix",
    "WindowReport",
    "q_bilinear",
    "build_Q",
    "interior_identity_residual",
    "r2_matrix",
    "bound_violations",
    "normalization_general",
    "window_extract",
    "weighted_gram",
    "q_density_image",
    "write_pgm",
]


@dataclass(frozen=True)
class QMatrix:
    energies: np.ndarray   # (n,)
    entries: np.ndarray    # (n, n), exactly symmetric
    origin: tuple[float, float]
    bc_kind: str
    R: float               # max boundary radius from this origin; C = R^2/4

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def bound_constant(self) -> float:
        return 0.25 * self.R ** 2


@dataclass(frozen=True)
class WindowReport:
    E: float
    beta: float
    eps0: float
    indices: np.ndarray
    sub: np.ndarray          # Q-tilde, the extracted submatrix
    sup_offdiag: float       # max_{i != j} |Q~_ij| / (2E)


def _check_same_mesh(tu: BoundaryTrace, tv: BoundaryTrace):
    if tu.mesh is not tv.mesh and tu.mesh.size != tv.mesh.size:
        raise ValueError("traces live on different meshes")


def q_bilinear(trace_u: BoundaryTrace, trace_v: BoundaryTrace, energy_sum: float,
               mesh: BoundaryMesh | None = None, d: int = 2) -> float:
    """The symmetric boundary form q(u, v; energy_sum) by quadrature."""
    _check_same_mesh(trace_u, trace_v)
    mesh = mesh or trace_u.mesh
    w = mesh.weights
    rn = mesh.rn
    u, un, ur, gu = trace_u.phi, trace_u.phi_n, trace_u.phi_r, trace_u.grad
    v, vn, vr, gv = trace_v.phi, trace_v.phi_n, trace_v.phi_r, trace_v.grad
    gdot = np.einsum("ij,ij->i", gu, gv)
    integrand = (0.5 * (d - 2) * (un * v + vn * u)
                 + rn * (0.5 * energy_sum * u * v - gdot)
                 + ur * vn + vr * un)
    return float(np.sum(w * integrand))


def q_dirichlet(trace_u: BoundaryTrace, trace_v: BoundaryTrace,
                mesh: BoundaryMesh | None = None) -> float:
    """Dirichlet fast path: oint r_n u_n v_n dA."""
    _check_same_mesh(trace_u, trace_v)
    mesh = mesh or trace_u.mesh
    return float(np.sum(mesh.weights * mesh.rn * trace_u.phi_n * trace_v.phi_n))


def _symmetrize_upper(mat: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower so the result is exactly symmetric."""
    out = np.triu(mat)
    return out + np.triu(mat, 1).T


def build_Q(states: list[EigenState], mesh: BoundaryMesh, d: int = 2,
            R: float | None = None) -> QMatrix:
    """Assemble Q_ij = q(phi_i, phi_j; E_i + E_j) for unit-normalized states."""
    n = len(states)
    energies = np.array([s.energy for s in states])
    traces = [boundary_trace(s, mesh) for s in states]
    w = mesh.weights
    rn = mesh.rn
    U = np.array([t.phi for t in traces])        # (n, M)
    Un = np.array([t.phi_n for t in traces])
    Ur = np.array([t.phi_r for t in traces])
    bc_kind = states[0].domain.bc.kind if states else "dirichlet"
    dirichlet = all(s.domain.bc.is_dirichlet for s in states)
    if dirichlet:
        Q = (Un * (w * rn)) @ Un.T
    else:
        Gx = np.array([t.grad[:, 0] for t in traces])
        Gy = np.array([t.grad[:, 1] for t in traces])
        A = (U * (w * rn)) @ U.T                       # oint rn u v
        B = (Un * w) @ U.T                             # oint u_n,i v_j
        C = (Gx * (w * rn)) @ Gx.T + (Gy * (w * rn)) @ Gy.T
        D = (Ur * w) @ Un.T                            # oint u_r,i v_n,j
        esum = energies[:, None] + energies[None, :]
        Q = 0.5 * (d - 2) * (B + B.T) + 0.5 * esum * A - C + D + D.T
    Q = _symmetrize_upper(Q)
    if R is None:
        R = float(np.max(np.linalg.norm(mesh.pos, axis=1)))
    origin = tuple(states[0].domain.origin_offset) if states else (0.0, 0.0)
    return QMatrix(energies=energies, entries=Q, origin=origin, bc_kind=bc_kind, R=R)


def r2_matrix(states: list[EigenState], iq: InteriorQuadrature) -> np.ndarray:
    """Interior matrix elements <phi_i, r^2 phi_j> by quadrature."""
    V = np.array([s.evaluator(iq.pos)[0] for s in states])
    return _symmetrize_upper((V * (iq.weights * iq.r2)) @ V.T)


def interior_identity_residual(q: QMatrix, states: list[EigenState],
                   iq: InteriorQuadrature) -> float:
    """max over pairs of |Q_ij - 2E_i d_ij - (eps^2/4) <phi_i, r^2 phi_j>|,
    scaled by max(1, |Q_ij|)."""
    P = r2_matrix(states, iq)
    e = q.energies
    eps = e[:, None] - e[None, :]
    rhs = np.diag(2.0 * e) + 0.25 * eps ** 2 * P
    scale = np.maximum(1.0, np.abs(q.entries))
    return float(np.max(np.abs(q.entries - rhs) / scale))


def bound_violations(q: QMatrix, c_scale: float = 1.0,
                        atol: float | None = None) -> list[tuple[int, int]]:
    """Pairs i != j violating |Q_ij| <= c_scale * (R^2/4)(E_i - E_j)^2.

    The list is expected to be empty for c_scale = 1 (the bound is hard,
    not asymptotic); c_scale < 1 is for checking the test has teeth.
    A small roundoff floor `atol` keeps exactly-degenerate pairs (bound 0,
    entry ~ machine epsilon) from registering as violations.
    """
    e = q.energies
    if atol is None:
        atol = 1e-10 * 2.0 * float(np.max(e))
    bound = c_scale * q.bound_constant * (e[:, None] - e[None, :]) ** 2
    bad = np.abs(q.entries) > bound + atol
    np.fill_diagonal(bad, False)
    ii, jj = np.nonzero(bad)
    return [(int(i), int(j)) for i, j in zip(ii, jj) if i < j]


def normalization_general(state: EigenState, mesh: BoundaryMesh, d: int = 2) -> float:
    """Boundary-only normalization integral; equals 2E for a unit-normalized
    eigenstate (Rellich's formula in the Dirichlet case)."""
    t = boundary_trace(state, mesh)
    return q_bilinear(t, t, 2.0 * state.energy, mesh, d=d)


def window_extract(q: QMatrix, e_center: float, beta: float = 0.0,
                   c: float = 10.0) -> WindowReport:
    """Extract Q-tilde for levels within eps0 = c * E^beta of e_center."""
    if not (0.0 <= beta < 0.5):
        raise ValueError("need 0 <= beta < 1/2")
    eps0 = c * e_center ** beta
    idx = np.nonzero(np.abs(q.energies - e_center) <= eps0)[0]
    if len(idx) == 0:
        raise ValueError(f"no levels within {eps0:g} of E={e_center:g}")
    sub = q.entries[np.ix_(idx, idx)]
    off = sub - np.diag(np.diag(sub))
    sup = float(np.max(np.abs(off)) / (2.0 * e_center)) if len(idx) > 1 else 0.0
    return WindowReport(E=e_center, beta=beta, eps0=eps0, indices=idx,
                        sub=sub, sup_offdiag=sup)


def weighted_gram(states: list[EigenState], mesh: BoundaryMesh,
                  weight: np.ndarray) -> np.ndarray:
    """G_ij = oint D(s) phi_n,i phi_n,j dA for Dirichlet states.

    With D = r_n this reproduces Q; a generic D lacks the quasi-orthogonality
    cancellation.
    """
    if not all(s.domain.bc.is_dirichlet for s in states):
        raise ValueError("weighted_gram is defined for Dirichlet states only")
    weight = np.broadcast_to(np.asarray(weight, dtype=float), mesh.weights.shape)
    Un = np.array([boundary_trace(s, mesh).phi_n for s in states])
    return _symmetrize_upper((Un * (mesh.weights * weight)) @ Un.T)


def q_density_image(q_entries: np.ndarray) -> np.ndarray:
    """Log-compressed grayscale image of |Q|: dark = large, white = zero.

    Returns a uint8 array; pixel (i, j) corresponds to entry (i, j).
    """
    mag = np.abs(np.asarray(q_entries, dtype=float))
    top = mag.max()
    if top == 0.0:
        return np.full(mag.shape, 255, dtype=np.uint8)
    floor = top * 1e-6
    z = np.log(1.0 + mag / floor) / np.log(1.0 + top / floor)
    return np.round(255.0 * (1.0 - z)).astype(np.uint8)


def write_pgm(image: np.ndarray, path) -> None:
    """Write a uint8 grayscale image as binary PGM (P5)."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())
