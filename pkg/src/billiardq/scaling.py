"""Scaling-method eigensolver for Dirichlet star-shaped billiards.

One solve of the generalized problem F x = lambda G x, with
F_ij = oint xi_i xi_j / r_n dA at a center wavenumber k0 and G = dF/dk,
returns every eigenwavenumber in a window around k0 via
k_mu = k0 - 2 lambda_mu.  Quasi-orthogonality of the boundary traces under
the r_n weight is what keeps the recovered levels clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig, eigh

from . import geometry
from .geometry import BoundaryMesh, Domain
from .modes import EigenState, boundary_trace
from .qform import QMatrix, build_Q

__all__ = [
    "ScalingBasis",
    "ScalingResult",
    "SolverOptions",
    "make_basis",
    "tension_matrices",
    "solve_window",
    "sweep",
    "scaled_Q",
]


@dataclass(frozen=True)
class ScalingBasis:
    """Real plane waves xi_j(k, x) = cos(k n_j . x + alpha_j).

    The family satisfies the scaling property d(xi)/dk = (x . grad xi)/k
    exactly, which is what makes G = dF/dk computable without finite
    differences.
    """

    directions: np.ndarray  # (Nb, 2) unit vectors
    phases: np.ndarray      # (Nb,)

    @property
    def size(self) -> int:
        return len(self.phases)

    def _args(self, k: float, pts: np.ndarray):
        proj = self.directions @ pts.T          # (Nb, n)
        return proj, k * proj + self.phases[:, None]

    def values(self, k: float, pts: np.ndarray) -> np.ndarray:
        _, arg = self._args(k, pts)
        return np.cos(arg)

    def k_derivative(self, k: float, pts: np.ndarray) -> np.ndarray:
        proj, arg = self._args(k, pts)
        return -proj * np.sin(arg)

    def gradients(self, k: float, pts: np.ndarray):
        """Returns (gx, gy), each (Nb, n)."""
        _, arg = self._args(k, pts)
        s = np.sin(arg)
        return (-k * s * self.directions[:, 0:1],
                -k * s * self.directions[:, 1:2])


def make_basis(domain: Domain, k: float, size_factor: float = 2.0,
               seed: int = 42) -> ScalingBasis:
    """Uniformly spread directions with fixed-seed random phases.

    size_factor multiplies k * perimeter / pi (half the boundary's Nyquist
    count); about 2.0 is needed to resolve near-tangent (whispering gallery)
    modes.
    """
    per = geometry.perimeter(domain)
    nb = int(math.ceil(size_factor * k * per / math.pi))
    th = 2.0 * np.pi * np.arange(nb) / nb
    rng = np.random.default_rng(seed)
    return ScalingBasis(directions=np.column_stack([np.cos(th), np.sin(th)]),
                        phases=rng.uniform(0.0, 2.0 * np.pi, nb))


@dataclass(frozen=True)
class SolverOptions:
    size_factor: float = 2.0
    cutoff: float = 1e-14          # relative spectral cutoff on G
    tension_threshold: float = 1e-4
    seed: int = 42
    mesh_nodes: int | None = None  # default: geometry.default_node_count
    refine_passes: int = 1         # re-solves centered on found levels


@dataclass(frozen=True)
class ScalingResult:
    k0: float
    half_width: float
    k_mu: np.ndarray          # accepted wavenumbers, ascending
    coefficients: np.ndarray  # (n_accept, Nb), Rellich-normalized
    tensions: np.ndarray      # boundary tension per accepted level
    basis: ScalingBasis
    rejected: list[tuple[float, float]] = field(default_factory=list)  # (k, tension)


def tension_matrices(basis: ScalingBasis, k0: float, mesh: BoundaryMesh):
    """F_ij = oint xi_i xi_j / r_n dA at k0, and G = dF/dk (exact, symmetric)."""
    if np.any(mesh.rn <= 0.0):
        raise ValueError("mesh has r_n <= 0; the 1/r_n tension weight is undefined")
    w = mesh.weights / mesh.rn
    xi = basis.values(k0, mesh.pos)
    dxi = basis.k_derivative(k0, mesh.pos)
    F = (xi * w) @ xi.T
    F = 0.5 * (F + F.T)
    G = (dxi * w) @ xi.T
    G = G + G.T
    return F, G


def _tension(basis: ScalingBasis, x: np.ndarray, k: float, mesh: BoundaryMesh):
    """Boundary tension oint u^2 / r_n dA of u = x . xi(k), normalized so the
    state obeys the Rellich identity oint r_n u_n^2 = 2 E; returns
    (tension, rellich_scale)."""
    u = x @ basis.values(k, mesh.pos)
    gx, gy = basis.gradients(k, mesh.pos)
    un = (x @ gx) * mesh.normal[:, 0] + (x @ gy) * mesh.normal[:, 1]
    rellich = float(np.sum(mesh.weights * mesh.rn * un ** 2))
    scale = rellich / (2.0 * k * k)  # = 1 for a Rellich-normalized eigenstate
    t = float(np.sum(mesh.weights * u ** 2 / mesh.rn))
    return t / scale if scale > 0 else math.inf, scale


def solve_window(F: np.ndarray, G: np.ndarray, k0: float, half_width: float,
                 basis: ScalingBasis, mesh: BoundaryMesh,
                 options: SolverOptions = SolverOptions()) -> ScalingResult:
    """Solve F x = lambda G x, keep candidates k_mu = k0 - 2 lambda_mu inside
    the window with tension below threshold."""
    lam, V = eigh(G)
    keep = np.abs(lam) > options.cutoff * np.abs(lam).max()
    if not np.any(keep):
        raise RuntimeError("empty subspace after cutoff; enlarge the basis")
    Vk = V[:, keep]
    Fp = Vk.T @ F @ Vk
    Fp = 0.5 * (Fp + Fp.T)
    ev, evec = eig(Fp, np.diag(lam[keep]))
    real = np.abs(ev.imag) <= 1e-8 * (1.0 + np.abs(ev.real))
    k_mu = k0 - 2.0 * ev.real
    accepted, rejected = [], []
    for i in np.nonzero(real)[0]:
        km = k_mu[i]
        if not (abs(km - k0) <= half_width and km > 0):
            continue
        x = Vk @ evec[:, i].real
        t, scale = _tension(basis, x, km, mesh)
        if t < options.tension_threshold and scale > 0:
            accepted.append((km, x / math.sqrt(scale), t))
        else:
            rejected.append((float(km), float(t)))
    accepted.sort(key=lambda a: a[0])
    ks = np.array([a[0] for a in accepted])
    xs = np.array([a[1] for a in accepted]) if accepted else np.empty((0, basis.size))
    ts = np.array([a[2] for a in accepted])
    return ScalingResult(k0=k0, half_width=half_width, k_mu=ks, coefficients=xs,
                         tensions=ts, basis=basis, rejected=rejected)


def _expansion_evaluator(basis: ScalingBasis, x: np.ndarray, k: float):
    def evaluate(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        val = x @ basis.values(k, pts)
        gx, gy = basis.gradients(k, pts)
        return val, np.column_stack([x @ gx, x @ gy])

    return evaluate


def default_half_width(domain: Domain, k: float) -> float:
    """0.6 x the mean level spacing in k (two-term Weyl density)."""
    a = geometry.area(domain)
    p = geometry.perimeter(domain)
    density = a * k / (2.0 * np.pi) - p / (4.0 * np.pi)
    return 0.6 / max(density, 1.0)


def sweep(domain: Domain, k_min: float, k_max: float,
          half_width: float | None = None,
          options: SolverOptions = SolverOptions()) -> list[EigenState]:
    """Cover [k_min, k_max] with windows and merge the recovered levels.

    Windows tile the range half-open, so a level is accepted by exactly one
    window and exact degeneracies survive the merge.  Returned states are
    EigenState records whose evaluator is the plane-wave expansion,
    normalized via the Rellich boundary formula.
    """
    if not domain.bc.is_dirichlet:
        raise ValueError("the scaling solver supports Dirichlet conditions only")
    if geometry.star_shaped_margin(domain) <= 0.0:
        raise ValueError("domain is not strictly star-shaped about this origin")
    hw = half_width if half_width is not None else default_half_width(domain, k_max)
    states = []
    window_of = {}
    window_idx = 0
    k0 = k_min + hw
    while k0 - hw < k_max:
        n_nodes = options.mesh_nodes or geometry.default_node_count(domain, k0 + hw)
        mesh = geometry.build_boundary_mesh(domain, n_nodes)
        basis = make_basis(domain, k0 + hw, options.size_factor, options.seed)
        F, G = tension_matrices(basis, k0, mesh)
        res = solve_window(F, G, k0, hw, basis, mesh, options)
        for km, x in zip(res.k_mu, res.coefficients):
            # half-open tile [k0-hw, k0+hw) keeps window overlaps disjoint
            if (k0 - hw <= km < k0 + hw) and (k_min <= km <= k_max):
                ev = _expansion_evaluator(basis, x, km)
                state = EigenState(energy=km * km,
                                   label=("scaling", window_idx, round(km, 9)),
                                   evaluator=ev, domain=domain)
                states.append(state)
                window_of[id(state)] = window_idx
        k0 += 2.0 * hw
        window_idx += 1
    for _ in range(options.refine_passes):
        states = _refine(domain, states, hw, options, window_of)
    states.sort(key=lambda s: s.energy)
    # dedupe roundoff straddlers at tile seams; exact degeneracies come from
    # the same window and are kept
    out = []
    for s in states:
        if (out and abs(s.k - out[-1].k) < 1e-6 * s.k
                and window_of[id(s)] != window_of[id(out[-1])]):
            continue
        out.append(s)
    if out:
        n_nodes = options.mesh_nodes or geometry.default_node_count(domain, k_max)
        mesh = geometry.build_boundary_mesh(domain, n_nodes)
        out = _orthonormalize_clusters(out, mesh)
    return out


def _mixed_evaluator(row: np.ndarray, evaluators: list):
    def evaluate(pts):
        vals, grads = None, None
        for c, ev in zip(row, evaluators):
            v, gr = ev(pts)
            vals = c * v if vals is None else vals + c * v
            grads = c * gr if grads is None else grads + c * gr
        return vals, grads

    return evaluate


def _orthonormalize_cluster(cluster: list[EigenState],
                            mesh: BoundaryMesh) -> list[EigenState]:
    """Symmetric re-orthonormalization of a (near-)degenerate cluster under
    the boundary form oint r_n u_n v_n / (2 sqrt(E_i E_j)).

    For exact eigenfunctions that form is delta_ij + O((E_i - E_j)^2), so
    enforcing it removes the leading eigenvector-mixing error of the pencil
    solve without touching well-separated levels.
    """
    n = len(cluster)
    traces = [boundary_trace(s, mesh) for s in cluster]
    B = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = float(np.sum(mesh.weights * mesh.rn
                               * traces[i].phi_n * traces[j].phi_n))
            B[i, j] = B[j, i] = val / (2.0 * math.sqrt(cluster[i].energy
                                                       * cluster[j].energy))
    lam, V = eigh(B)
    if np.any(lam <= 0.0):
        return cluster
    S = V @ np.diag(lam ** -0.5) @ V.T
    evs = [s.evaluator for s in cluster]
    return [EigenState(energy=s.energy, label=s.label,
                       evaluator=_mixed_evaluator(S[i].copy(), evs),
                       domain=s.domain)
            for i, s in enumerate(cluster)]


def _orthonormalize_clusters(states: list[EigenState], mesh: BoundaryMesh,
                             dk: float = 5e-3) -> list[EigenState]:
    """Apply cluster orthonormalization to every group of levels within dk."""
    out: list[EigenState] = []
    cluster: list[EigenState] = []
    for s in states:
        if cluster and s.k - cluster[-1].k >= dk:
            out.extend(_orthonormalize_cluster(cluster, mesh)
                       if len(cluster) > 1 else cluster)
            cluster = []
        cluster.append(s)
    if cluster:
        out.extend(_orthonormalize_cluster(cluster, mesh)
                   if len(cluster) > 1 else cluster)
    return out


def _refine(domain: Domain, states: list[EigenState], hw: float,
            options: SolverOptions, window_of: dict) -> list[EigenState]:
    """One re-solve per level cluster, centered on the cluster: the method's
    linearization error scales with |k - k0|, so re-centering collapses it."""
    states = sorted(states, key=lambda s: s.energy)
    clusters: list[list[EigenState]] = []
    for s in states:
        if clusters and s.k - clusters[-1][0].k < 0.2 * hw:
            clusters[-1].append(s)
        else:
            clusters.append([s])
    out = []
    for idx, cluster in enumerate(clusters):
        k0 = float(np.mean([s.k for s in cluster]))
        n_nodes = options.mesh_nodes or geometry.default_node_count(domain, k0)
        mesh = geometry.build_boundary_mesh(domain, n_nodes)
        basis = make_basis(domain, k0, options.size_factor, options.seed)
        F, G = tension_matrices(basis, k0, mesh)
        res = solve_window(F, G, k0, 0.25 * hw, basis, mesh, options)
        if len(res.k_mu) == len(cluster):
            for km, x in zip(res.k_mu, res.coefficients):
                ev = _expansion_evaluator(basis, x, km)
                state = EigenState(energy=km * km,
                                   label=("scaling", window_of[id(cluster[0])],
                                          round(km, 9)),
                                   evaluator=ev, domain=domain)
                window_of[id(state)] = window_of[id(cluster[0])]
                out.append(state)
        else:
            # refinement window caught a different multiplicity; keep originals
            out.extend(cluster)
    return out


def scaled_Q(states: list[EigenState], mesh: BoundaryMesh) -> QMatrix:
    """Q for scaling-method states (Dirichlet fast path applies)."""
    return build_Q(states, mesh)


def rellich_defect(state: EigenState, mesh: BoundaryMesh) -> float:
    """|oint r_n phi_n^2 / (2E) - 1| -- the boundary-normalization self-test."""
    t = boundary_trace(state, mesh)
    val = float(np.sum(mesh.weights * mesh.rn * t.phi_n ** 2))
    return abs(val / (2.0 * state.energy) - 1.0)
