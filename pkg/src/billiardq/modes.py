"""Closed-form eigenpairs for disk and rectangle billiards.

These are the analytic oracles the rest of the package is tested against:
Bessel J and its zeros, Dirichlet/Neumann/Robin disk modes, and
Dirichlet/Neumann rectangle modes, all unit-normalized in L2 of the domain
by closed-form constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .geometry import (BoundaryMesh, Domain, RadialShape, RectangleShape,
                       build_boundary_mesh)

__all__ = [
    "EigenState",
    "BoundaryTrace",
    "bessel_j",
    "bessel_zeros",
    "analytic_spectrum",
    "boundary_trace",
    "weyl_count",
]

_MAX_ORDER = 200
_MAX_ARG = 2000.0


def bessel_j(m: int, x):
    """J_m(x) and J_m'(x); relative accuracy better than 1e-12 on the
    supported range m <= 200, 0 <= x <= 2000."""
    if m < 0 or m > _MAX_ORDER:
        raise ValueError(f"order m={m} outside supported range [0, {_MAX_ORDER}]")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > _MAX_ARG):
        raise ValueError("argument outside supported range [0, 2000]")
    return special.jv(m, x), special.jvp(m, x)


def bessel_zeros(m: int, bc="dirichlet", count: int = 1, gamma: float = 0.0,
                 radius: float = 1.0) -> np.ndarray:
    """First `count` positive roots in k of the disk-mode boundary condition.

    dirichlet: J_m(k R) = 0
    neumann:   J_m'(k R) = 0
    robin:     k J_m'(k R) + gamma J_m(k R) = 0   (gamma >= 0)

    Roots are bracketed via interlacing with the Dirichlet zeros and refined
    to ~1e-13 relative.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if bc == "dirichlet":
        return special.jn_zeros(m, count) / radius
    if bc == "neumann" or (bc == "robin" and gamma == 0.0):
        return special.jnp_zeros(m, count) / radius
    if bc != "robin":
        raise ValueError(f"unknown boundary condition {bc!r}")
    if gamma < 0.0:
        raise ValueError("robin zeros implemented for gamma >= 0 only")

    def f(k):
        return k * special.jvp(m, k * radius) + gamma * special.jv(m, k * radius)

    # one robin root strictly inside (0, j_{m,1}/R) and one inside each
    # subsequent dirichlet-zero interval: f alternates sign at dirichlet zeros
    dz = special.jn_zeros(m, count + 1) / radius
    roots = []
    lo = 1e-9 if m == 0 else 1e-9 + 0.0
    brackets = [(max(lo, 1e-9), dz[0])] + [(dz[i], dz[i + 1]) for i in range(count)]
    for a, b in brackets:
        fa, fb = f(a), f(b)
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb > 0.0:
            continue  # no sign change (can happen in the first interval for m>0)
        roots.append(brentq(f, a, b, xtol=1e-15, rtol=8.9e-16))
        if len(roots) == count:
            break
    if len(roots) < count:
        raise RuntimeError(f"bracketing failed for robin zeros m={m}")
    return np.asarray(roots[:count])


@dataclass(frozen=True)
class EigenState:
    """One eigenpair with a vectorized (value, gradient) evaluator.

    The evaluator takes points in the domain's offset coordinates,
    shape (N, 2), and returns (values (N,), gradients (N, 2)).
    """

    energy: float
    label: tuple
    evaluator: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    domain: Domain

    @property
    def k(self) -> float:
        return math.sqrt(self.energy)


@dataclass(frozen=True)
class BoundaryTrace:
    """Boundary data of a state on a mesh: phi, phi_n, grad phi, phi_r."""

    phi: np.ndarray       # (M,)
    phi_n: np.ndarray     # (M,)
    grad: np.ndarray      # (M, 2)
    phi_r: np.ndarray     # (M,)
    mesh: BoundaryMesh


def boundary_trace(state: EigenState, mesh: BoundaryMesh) -> BoundaryTrace:
    val, grad = state.evaluator(mesh.pos)
    phi_n = np.einsum("ij,ij->i", mesh.normal, grad)
    phi_r = np.einsum("ij,ij->i", mesh.pos, grad)
    return BoundaryTrace(phi=val, phi_n=phi_n, grad=grad, phi_r=phi_r, mesh=mesh)


def _disk_evaluator(m: int, k: float, parity: str, norm: float, offset):
    offset = np.asarray(offset, dtype=float)

    def evaluate(pts):
        p = np.atleast_2d(np.asarray(pts, dtype=float)) + offset
        x, y = p[:, 0], p[:, 1]
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        jm = special.jv(m, k * r)
        jmp = special.jvp(m, k * r)
        if parity == "cos":
            ang, dang = np.cos(m * th), -m * np.sin(m * th)
        else:
            ang, dang = np.sin(m * th), m * np.cos(m * th)
        val = norm * jm * ang
        dr = norm * k * jmp * ang
        # avoid 0/0 at the center; the angular term is O(r^m) there
        with np.errstate(divide="ignore", invalid="ignore"):
            dth_over_r = np.where(r > 0, norm * jm * dang / np.where(r > 0, r, 1.0), 0.0)
        ct, st = np.where(r > 0, x / np.where(r > 0, r, 1.0), 1.0), \
                 np.where(r > 0, y / np.where(r > 0, r, 1.0), 0.0)
        gx = dr * ct - dth_over_r * st
        gy = dr * st + dth_over_r * ct
        if m == 1:
            # gradient at the exact center is finite; patch the removable point
            at0 = r == 0.0
            if np.any(at0):
                g0 = norm * k * 0.5
                gx = np.where(at0, g0 if parity == "cos" else 0.0, gx)
                gy = np.where(at0, 0.0 if parity == "cos" else g0, gy)
        return val, np.column_stack([gx, gy])

    return evaluate


def _disk_norm(m: int, k: float, radius: float) -> float:
    """1/sqrt(int phi^2 dV) for phi = J_m(k r) * trig(m theta), closed form."""
    ka = k * radius
    jm = special.jv(m, ka)
    jmp = special.jvp(m, ka)
    radial = 0.5 * radius ** 2 * ((1.0 - (m / ka) ** 2) * jm ** 2 + jmp ** 2)
    angular = 2.0 * np.pi if m == 0 else np.pi
    return 1.0 / math.sqrt(angular * radial)


def _disk_spectrum(domain: Domain, e_max: float) -> list[EigenState]:
    radius = domain.shape.cos_coeffs[0]
    bc = domain.bc
    k_max = math.sqrt(e_max)
    states = []
    m = 0
    while True:
        n_guess = max(4, int(k_max * radius / math.pi) + 4)
        if bc.is_dirichlet:
            ks = bessel_zeros(m, "dirichlet", n_guess, radius=radius)
        elif bc.is_neumann:
            ks = bessel_zeros(m, "neumann", n_guess, radius=radius)
        else:
            ks = bessel_zeros(m, "robin", n_guess, gamma=bc.gamma, radius=radius)
        ks = ks[ks <= k_max]
        if len(ks) == 0:
            # the lowest root increases with m, so no higher order contributes
            break
        for n, k in enumerate(ks, start=1):
            norm = _disk_norm(m, k, radius)
            parities = ("cos",) if m == 0 else ("cos", "sin")
            for parity in parities:
                ev = _disk_evaluator(m, k, parity, norm, domain.offset)
                states.append(EigenState(energy=k * k, label=(m, n, parity, bc.kind),
                                         evaluator=ev, domain=domain))
        m += 1
        if m > _MAX_ORDER:
            break
    return states


def _rect_factor(p: int, length: float, dirichlet: bool):
    """1D factor f(x) on [-L/2, L/2] with unit L2 norm, and its derivative."""
    w = math.pi * p / length
    if dirichlet:
        c = math.sqrt(2.0 / length)

        def f(x):
            return c * np.sin(w * (x + length / 2)), c * w * np.cos(w * (x + length / 2))
    else:
        c = math.sqrt((2.0 if p > 0 else 1.0) / length)

        def f(x):
            return c * np.cos(w * (x + length / 2)), -c * w * np.sin(w * (x + length / 2))
    return f


def _rect_evaluator(p: int, q: int, a: float, b: float, dirichlet: bool, offset):
    fx = _rect_factor(p, a, dirichlet)
    fy = _rect_factor(q, b, dirichlet)
    offset = np.asarray(offset, dtype=float)

    def evaluate(pts):
        pt = np.atleast_2d(np.asarray(pts, dtype=float)) + offset
        vx, dvx = fx(pt[:, 0])
        vy, dvy = fy(pt[:, 1])
        return vx * vy, np.column_stack([dvx * vy, vx * dvy])

    return evaluate


def _rect_spectrum(domain: Domain, e_max: float) -> list[EigenState]:
    a, b = domain.shape.a, domain.shape.b
    bc = domain.bc
    if bc.kind == "robin" and bc.gamma != 0.0:
        raise ValueError("no analytic robin rectangle modes")
    dirichlet = bc.is_dirichlet
    p0 = 1 if dirichlet else 0
    states = []
    p = p0
    while (math.pi * p / a) ** 2 <= e_max or p == p0:
        q = p0
        while True:
            e = (math.pi * p / a) ** 2 + (math.pi * q / b) ** 2
            if e > e_max:
                break
            if e > 0.0:  # skip the zero-energy constant neumann mode
                ev = _rect_evaluator(p, q, a, b, dirichlet, domain.offset)
                states.append(EigenState(energy=e, label=(p, q, bc.kind),
                                         evaluator=ev, domain=domain))
            q += 1
        if (math.pi * (p + 1) / a) ** 2 > e_max:
            break
        p += 1
    return states


def analytic_spectrum(domain: Domain, e_max: float) -> list[EigenState]:
    """All eigenpairs with 0 < E <= e_max, sorted by (E, label).

    Degenerate pairs are both present; the tie-break (cos before sin,
    lexicographic labels) makes level indices reproducible.
    """
    if isinstance(domain.shape, RadialShape):
        if not domain.shape.is_circle:
            raise ValueError("analytic modes exist only for disks and rectangles")
        states = _disk_spectrum(domain, e_max)
    elif isinstance(domain.shape, RectangleShape):
        states = _rect_spectrum(domain, e_max)
    else:
        raise ValueError("unsupported shape")
    states.sort(key=lambda s: (s.energy, s.label))
    return states


def weyl_count(e: float, area_: float, perimeter_: float) -> float:
    """Two-term Weyl estimate N(E) ~ (A/4pi) E - (P/4pi) sqrt(E) (Dirichlet sign)."""
    return area_ / (4.0 * np.pi) * e - perimeter_ / (4.0 * np.pi) * math.sqrt(e)
