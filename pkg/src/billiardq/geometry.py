"""Billiard domains, boundary/interior quadrature, and origin utilities.

Two shape families are supported: smooth star-shaped radial curves
r = rho(theta) given by a trigonometric polynomial, and axis-aligned
rectangles centered on the lab origin.  All coordinates handed out by
meshes are relative to a configurable origin offset t, i.e. pos = r_lab - t.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RadialShape",
    "RectangleShape",
    "BoundaryCondition",
    "Domain",
    "BoundaryMesh",
    "InteriorQuadrature",
    "InvalidDomainError",
    "build_boundary_mesh",
    "interior_quadrature",
    "min_enclosing_circle",
    "max_radius",
    "star_shaped_margin",
    "perimeter",
    "area",
    "default_node_count",
    "domain_to_dict",
    "domain_from_dict",
    "load_domain",
    "save_domain",
]


class InvalidDomainError(ValueError):
    """Raised when a domain description is geometrically invalid."""


@dataclass(frozen=True)
class RadialShape:
    """Star-shaped curve rho(theta) = sum_m a_m cos(m theta) + b_m sin(m theta).

    cos_coeffs[0] is the constant term; sin_coeffs[0] is ignored by
    convention (kept so both lists index by harmonic number).
    """

    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...] = ()

    def rho(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, a in enumerate(self.cos_coeffs):
            if a:
                out = out + a * np.cos(m * theta)
        for m, b in enumerate(self.sin_coeffs):
            if m and b:
                out = out + b * np.sin(m * theta)
        return out

    def rho_prime(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, a in enumerate(self.cos_coeffs):
            if m and a:
                out = out - m * a * np.sin(m * theta)
        for m, b in enumerate(self.sin_coeffs):
            if m and b:
                out = out + m * b * np.cos(m * theta)
        return out

    def validate(self, n_check: int = 4096) -> None:
        th = np.linspace(0.0, 2.0 * np.pi, n_check, endpoint=False)
        r = self.rho(th)
        if not np.all(r > 0.0):
            raise InvalidDomainError("rho(theta) must be positive everywhere")

    @property
    def is_circle(self) -> bool:
        tail_c = any(c != 0.0 for c in self.cos_coeffs[1:])
        tail_s = any(s != 0.0 for s in self.sin_coeffs[1:])
        return not (tail_c or tail_s)


@dataclass(frozen=True)
class RectangleShape:
    """Axis-aligned a-by-b rectangle centered on the lab origin."""

    a: float
    b: float

    def validate(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0):
            raise InvalidDomainError("rectangle sides must be positive")


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet, or the Robin family gamma*phi + phi_n = 0 (gamma=0 is Neumann)."""

    kind: str  # "dirichlet" or "robin"
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    @staticmethod
    def dirichlet() -> "BoundaryCondition":
        return BoundaryCondition("dirichlet")

    @staticmethod
    def neumann() -> "BoundaryCondition":
        return BoundaryCondition("robin", 0.0)

    @staticmethod
    def robin(gamma: float) -> "BoundaryCondition":
        return BoundaryCondition("robin", gamma)

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == "dirichlet"

    @property
    def is_neumann(self) -> bool:
        return self.kind == "robin" and self.gamma == 0.0


@dataclass(frozen=True)
class Domain:
    """A billiard: shape, boundary condition, and coordinate-origin offset."""

    shape: RadialShape | RectangleShape
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.dirichlet)
    origin_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if isinstance(self.shape, RadialShape):
            self.shape.validate()
        elif isinstance(self.shape, RectangleShape):
            self.shape.validate()
        else:
            raise InvalidDomainError(f"unsupported shape {type(self.shape).__name__}")

    @property
    def offset(self) -> np.ndarray:
        return np.asarray(self.origin_offset, dtype=float)

    def with_origin(self, offset) -> "Domain":
        return Domain(self.shape, self.bc, (float(offset[0]), float(offset[1])))

    def with_bc(self, bc: BoundaryCondition) -> "Domain":
        return Domain(self.shape, bc, self.origin_offset)


def disk(radius: float = 1.0, bc: BoundaryCondition | None = None,
         origin_offset=(0.0, 0.0)) -> Domain:
    """Convenience constructor for a circular billiard."""
    bc = bc or BoundaryCondition.dirichlet()
    return Domain(RadialShape((radius,)), bc, tuple(origin_offset))


def rectangle(a: float, b: float, bc: BoundaryCondition | None = None,
              origin_offset=(0.0, 0.0)) -> Domain:
    bc = bc or BoundaryCondition.dirichlet()
    return Domain(RectangleShape(a, b), bc, tuple(origin_offset))


@dataclass(frozen=True)
class BoundaryMesh:
    """Quadrature nodes on the boundary, counterclockwise, with outward normals.

    pos is already expressed relative to the domain origin offset;
    rn = pos . normal.
    """

    pos: np.ndarray      # (M, 2)
    normal: np.ndarray   # (M, 2)
    rn: np.ndarray       # (M,)
    weights: np.ndarray  # (M,)

    @property
    def size(self) -> int:
        return self.pos.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def r2(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.pos, self.pos)


@dataclass(frozen=True)
class InteriorQuadrature:
    """Area quadrature nodes, positions relative to the origin offset."""

    pos: np.ndarray      # (N, 2)
    weights: np.ndarray  # (N,)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def r2(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.pos, self.pos)


def _radial_boundary(shape: RadialShape, n: int):
    th = 2.0 * np.pi * np.arange(n) / n
    r = shape.rho(th)
    if not np.all(r > 0.0):
        raise InvalidDomainError("rho(theta) must be positive everywhere")
    rp = shape.rho_prime(th)
    ct, st = np.cos(th), np.sin(th)
    pos = np.column_stack([r * ct, r * st])
    # gamma'(theta) = (r' cos - r sin, r' sin + r cos); outward normal = (y', -x')/|gamma'|
    tx = rp * ct - r * st
    ty = rp * st + r * ct
    speed = np.hypot(tx, ty)
    normal = np.column_stack([ty / speed, -tx / speed])
    weights = speed * (2.0 * np.pi / n)
    return pos, normal, weights


def _gauss_panels(x0, x1, n_nodes, min_panel_order=8):
    """Composite Gauss-Legendre nodes on [x0, x1]; endpoints never sampled."""
    order = min_panel_order
    n_panels = max(1, int(math.ceil(n_nodes / order)))
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(x0, x1, n_panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        xs.append(lo + h * (gx + 1.0))
        ws.append(gw * h)
    return np.concatenate(xs), np.concatenate(ws)


def _rectangle_boundary(shape: RectangleShape, n: int):
    a, b = shape.a, shape.b
    per = 2.0 * (a + b)
    pts, nrm, wts = [], [], []
    # counterclockwise: bottom, right, top, left
    edges = [
        ((-a / 2, -b / 2), (1.0, 0.0), a, (0.0, -1.0)),
        ((a / 2, -b / 2), (0.0, 1.0), b, (1.0, 0.0)),
        ((a / 2, b / 2), (-1.0, 0.0), a, (0.0, 1.0)),
        ((-a / 2, b / 2), (0.0, -1.0), b, (-1.0, 0.0)),
    ]
    for start, direc, length, normal in edges:
        n_edge = max(8, int(round(n * length / per)))
        s, w = _gauss_panels(0.0, length, n_edge)
        p = np.asarray(start) + np.outer(s, np.asarray(direc))
        pts.append(p)
        nrm.append(np.tile(normal, (len(s), 1)))
        wts.append(w)
    return np.vstack(pts), np.vstack(nrm), np.concatenate(wts)


def build_boundary_mesh(domain: Domain, n_nodes: int) -> BoundaryMesh:
    """Boundary quadrature mesh with >= 16 nodes in the domain's coordinates."""
    if n_nodes < 16:
        raise ValueError("need at least 16 boundary nodes")
    if isinstance(domain.shape, RadialShape):
        pos, normal, weights = _radial_boundary(domain.shape, n_nodes)
    else:
        pos, normal, weights = _rectangle_boundary(domain.shape, n_nodes)
    pos = pos - domain.offset
    rn = np.einsum("ij,ij->i", pos, normal)
    return BoundaryMesh(pos=pos, normal=normal, rn=rn, weights=weights)


def interior_quadrature(domain: Domain, n: int) -> InteriorQuadrature:
    """Area quadrature: Gauss radial x trapezoid angular (radial shapes),
    tensor Gauss (rectangles)."""
    if n < 16:
        raise ValueError("need resolution n >= 16")
    if isinstance(domain.shape, RadialShape):
        shape = domain.shape
        n_th = 2 * n
        th = 2.0 * np.pi * np.arange(n_th) / n_th
        rho = shape.rho(th)
        gs, gw = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (gs + 1.0)           # map to (0, 1)
        ws = 0.5 * gw
        # int f dV = int dtheta int_0^rho f r dr = sum_th w_th rho^2 sum_s w_s s f
        r = np.outer(rho, s)                          # (n_th, n)
        w = (2.0 * np.pi / n_th) * (rho ** 2)[:, None] * (ws * s)[None, :]
        x = r * np.cos(th)[:, None]
        y = r * np.sin(th)[:, None]
        pos = np.column_stack([x.ravel(), y.ravel()])
        weights = w.ravel()
    else:
        a, b = domain.shape.a, domain.shape.b
        gx, gwx = np.polynomial.legendre.leggauss(n)
        gy, gwy = np.polynomial.legendre.leggauss(n)
        x = 0.5 * a * gx
        y = 0.5 * b * gy
        wx = 0.5 * a * gwx
        wy = 0.5 * b * gwy
        X, Y = np.meshgrid(x, y, indexing="ij")
        W = np.outer(wx, wy)
        pos = np.column_stack([X.ravel(), Y.ravel()])
        weights = W.ravel()
    pos = pos - domain.offset
    return InteriorQuadrature(pos=pos, weights=weights)


def perimeter(domain: Domain, n: int = 4096) -> float:
    if isinstance(domain.shape, RectangleShape):
        return 2.0 * (domain.shape.a + domain.shape.b)
    _, _, w = _radial_boundary(domain.shape, n)
    return float(w.sum())


def area(domain: Domain, n: int = 256) -> float:
    if isinstance(domain.shape, RectangleShape):
        return domain.shape.a * domain.shape.b
    # A = (1/2) int rho^2 dtheta, spectrally exact under the trapezoid rule
    th = 2.0 * np.pi * np.arange(4 * n) / (4 * n)
    rho = domain.shape.rho(th)
    return float(0.5 * np.sum(rho ** 2) * (2.0 * np.pi / (4 * n)))


def default_node_count(domain: Domain, k: float) -> int:
    """About 12 boundary nodes per wavelength at wavenumber k, at least 512."""
    per = perimeter(domain)
    return max(512, int(math.ceil(12.0 * k * per / (2.0 * np.pi))))


# ---------------------------------------------------------------------------
# minimum enclosing circle (incremental randomized algorithm)

def _circle_two(p, q):
    c = 0.5 * (p + q)
    return c, float(np.linalg.norm(p - c))

def _circle_three(p, q, r):
    ax, ay = p
    bx, by = q
    cx, cy = r
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    c = np.array([ux, uy])
    return c, float(max(np.linalg.norm(p - c), np.linalg.norm(q - c),
                        np.linalg.norm(r - c)))

def _in_circle(c, r, p, eps=1e-12):
    return np.linalg.norm(p - c) <= r * (1.0 + eps) + eps


def _mec_points(points: np.ndarray, seed: int = 0):
    """Smallest enclosing circle of a point set, expected linear time."""
    rng = np.random.default_rng(seed)
    pts = points[rng.permutation(len(points))]
    c, r = pts[0].copy(), 0.0
    for i in range(1, len(pts)):
        p = pts[i]
        if _in_circle(c, r, p):
            continue
        c, r = p.copy(), 0.0
        for j in range(i):
            q = pts[j]
            if _in_circle(c, r, q):
                continue
            c, r = _circle_two(p, q)
            for m in range(j):
                s = pts[m]
                if _in_circle(c, r, s):
                    continue
                res = _circle_three(p, q, s)
                if res is not None:
                    c, r = res
    return c, r


def _boundary_samples(domain: Domain, samples: int) -> np.ndarray:
    if isinstance(domain.shape, RadialShape):
        th = 2.0 * np.pi * np.arange(samples) / samples
        rho = domain.shape.rho(th)
        pts = np.column_stack([rho * np.cos(th), rho * np.sin(th)])
    else:
        a, b = domain.shape.a, domain.shape.b
        pts = np.array([[a / 2, b / 2], [-a / 2, b / 2],
                        [-a / 2, -b / 2], [a / 2, -b / 2]])
        if samples > 4:
            # corners carry the circle; edge samples only added for uniformity
            m = samples // 4
            s = np.linspace(0.0, 1.0, m, endpoint=False)
            edges = []
            for (p0, p1) in zip(pts, np.roll(pts, -1, axis=0)):
                edges.append(p0 + np.outer(s, p1 - p0))
            pts = np.vstack([pts] + edges)
    return pts - domain.offset


def min_enclosing_circle(domain: Domain, samples: int = 4096, seed: int = 0):
    """Center and radius R0 of the escribed circle, from sampled boundary points.

    Returned center is expressed in the domain's (offset) coordinates.
    """
    if samples < 256:
        raise ValueError("need at least 256 boundary samples")
    pts = _boundary_samples(domain, samples)
    return _mec_points(pts, seed=seed)


def max_radius(domain: Domain, samples: int = 4096) -> float:
    """max |pos| over the boundary in the current coordinates (the bound radius R)."""
    pts = _boundary_samples(domain, samples)
    return float(np.max(np.linalg.norm(pts, axis=1)))


def star_shaped_margin(domain: Domain, samples: int = 4096) -> float:
    """min r_n over the boundary; must be > 0 for the scaling solver."""
    if isinstance(domain.shape, RectangleShape):
        a, b = domain.shape.a, domain.shape.b
        tx, ty = domain.origin_offset
        # r_n is constant per edge: distance from the origin to each edge line
        return float(min(a / 2 - tx, a / 2 + tx, b / 2 - ty, b / 2 + ty))
    mesh = build_boundary_mesh(domain, max(samples, 16))
    return float(mesh.rn.min())


# ---------------------------------------------------------------------------
# config round-trip

def domain_to_dict(domain: Domain) -> dict:
    if isinstance(domain.shape, RadialShape):
        shape = {
            "type": "radial",
            "cos_coeffs": list(domain.shape.cos_coeffs),
            "sin_coeffs": list(domain.shape.sin_coeffs),
        }
    else:
        shape = {"type": "rectangle", "a": domain.shape.a, "b": domain.shape.b}
    return {
        "shape": shape,
        "bc": {"kind": domain.bc.kind, "gamma": domain.bc.gamma},
        "origin_offset": list(domain.origin_offset),
    }


def domain_from_dict(cfg: dict) -> Domain:
    known = {"shape", "bc", "origin_offset"}
    extra = set(cfg) - known
    if extra:
        raise ValueError(f"unknown config keys {sorted(extra)}; valid keys are {sorted(known)}")
    sh = cfg["shape"]
    kind = sh.get("type")
    if kind == "radial":
        shape = RadialShape(tuple(float(c) for c in sh["cos_coeffs"]),
                            tuple(float(c) for c in sh.get("sin_coeffs", ())))
    elif kind == "rectangle":
        shape = RectangleShape(float(sh["a"]), float(sh["b"]))
    else:
        raise ValueError(f"unknown shape type {kind!r}")
    bc_cfg = cfg.get("bc", {"kind": "dirichlet"})
    bc = BoundaryCondition(bc_cfg["kind"], float(bc_cfg.get("gamma", 0.0)))
    off = cfg.get("origin_offset", (0.0, 0.0))
    return Domain(shape, bc, (float(off[0]), float(off[1])))


def load_domain(path) -> Domain:
    with open(path) as f:
        try:
            cfg = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed domain config {path}: {exc}") from exc
    return domain_from_dict(cfg)


def save_domain(domain: Domain, path) -> None:
    with open(path, "w") as f:
        json.dump(domain_to_dict(domain), f, indent=2)
        f.write("\n")
