"""Symbolic derivation of the boundary identities behind the Q matrix.

The objects are tensor "molecules": products of the position vector r and
two Helmholtz fields u, v, with contracted derivative indices recorded as
bonds.  Taking the divergence of a vector molecule and simplifying with
three local rules --

    1. a repeated derivative on a field is the Laplacian:  u_ii -> -E_u u
       (and v_ii -> -E_v v),
    2. a position factor contracted with its own derivative is the
       dimension:  d(r_j)/dx_j -> d,
    3. a differentiated position factor is a Kronecker delta that fuses its
       two neighbours:  d(r_b)/dx_a -> delta_ab,

-- closes on an 8-dimensional space of scalar molecules.  The resulting
8x8 coefficient matrix M over Q[E_u, E_v, d] is inverted exactly; row
inversion yields volume-to-boundary identities (quasi-orthogonality and
the <u, r^2 v> formula), and the equal-energy limit yields the boundary
normalization formula plus the obstruction that makes the r^2 rows
underivable there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from .geometry import BoundaryMesh, Domain, InteriorQuadrature
from .modes import BoundaryTrace
from .ring import Poly, RatFunc, bareiss_inverse, solve_linear

__all__ = [
    "Molecule",
    "VectorDiagram",
    "DiagramExpr",
    "divergence",
    "standard_vectors",
    "standard_scalars",
    "flux_labels",
    "scalar_labels",
    "assemble_M",
    "invert_M",
    "equal_energy_matrix",
    "equal_energy_solve",
    "nullspace_equal_energy",
    "IdentityUnderivable",
    "Identity",
    "render_identity",
    "boundary_side",
    "volume_side",
    "verify_identity",
    "PlaneWaveField",
    "FourierBesselField",
]

VARS = ("E_u", "E_v", "d")
VARS_EQ = ("E", "d")


class IdentityUnderivable(ValueError):
    """Raised when a volume integrand has no boundary representation."""


# ---------------------------------------------------------------------------
# molecules and diagram expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Molecule:
    """A product of atoms ('r', 'u', 'v') with contracted index bonds.

    Bonds are unordered pairs of atom positions; a pair (i, i) is a
    self-contraction.  For a field atom each bond endpoint is one
    derivative; for an 'r' atom one endpoint is its vector index.
    Molecules are compared up to relabeling of identical atoms.
    """

    atoms: tuple[str, ...]
    bonds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a in self.atoms:
            if a not in ("r", "u", "v"):
                raise ValueError(f"unknown atom {a!r}")
        norm = tuple(sorted(tuple(sorted(b)) for b in self.bonds))
        object.__setattr__(self, "bonds", norm)

    def degree(self, i: int) -> int:
        """Number of bond endpoints at atom i (a self-bond counts twice)."""
        return sum((b[0] == i) + (b[1] == i) for b in self.bonds)

    def canonical_key(self):
        """Minimal relabeling over all atom permutations (<= 5 atoms here)."""
        n = len(self.atoms)
        best = None
        for perm in permutations(range(n)):
            atoms = [None] * n
            for old, new in enumerate(perm):
                atoms[new] = self.atoms[old]
            bonds = tuple(sorted(tuple(sorted((perm[a], perm[b])))
                                 for a, b in self.bonds))
            key = (tuple(atoms), bonds)
            if best is None or key < best:
                best = key
        return best

    def canonical(self) -> "Molecule":
        atoms, bonds = self.canonical_key()
        return Molecule(atoms, bonds)

    def __str__(self):
        labels = []
        idx_names = "ijklmpqs"
        bond_name = {id(b): idx_names[t % len(idx_names)]
                     for t, b in enumerate(self.bonds)}
        for i, a in enumerate(self.atoms):
            subs = "".join(bond_name[id(b)] * ((b[0] == i) + (b[1] == i))
                           for b in self.bonds)
            labels.append(a + ("_" + subs if subs else ""))
        return " ".join(labels)


class DiagramExpr:
    """Formal sum of canonical molecules with Poly coefficients."""

    def __init__(self, terms=None, vars=VARS):
        self.vars = tuple(vars)
        self.terms: dict[Molecule, Poly] = {}
        for mol, c in (terms or {}).items():
            if not c.is_zero:
                key = mol.canonical()
                if key in self.terms:
                    self.terms[key] = self.terms[key] + c
                else:
                    self.terms[key] = c
        self.terms = {m: c for m, c in self.terms.items() if not c.is_zero}

    @classmethod
    def single(cls, mol: Molecule, coeff=None, vars=VARS):
        coeff = coeff if coeff is not None else Poly.const(vars, 1)
        return cls({mol: coeff}, vars)

    @property
    def is_zero(self):
        return not self.terms

    def __add__(self, other: "DiagramExpr"):
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Poly(self.vars, {})) + c
        return DiagramExpr(terms, self.vars)

    def __neg__(self):
        return DiagramExpr({m: -c for m, c in self.terms.items()}, self.vars)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, coeff):
        if not isinstance(coeff, Poly):
            coeff = Poly.const(self.vars, coeff)
        return DiagramExpr({m: c * coeff for m, c in self.terms.items()}, self.vars)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, DiagramExpr) and (self - other).is_zero

    def __str__(self):
        if self.is_zero:
            return "0"
        return " + ".join(f"({c}) {m}" for m, c in sorted(
            self.terms.items(), key=lambda t: t[0].canonical_key()))


@dataclass(frozen=True)
class VectorDiagram:
    """A molecule with one dangling (uncontracted) index at atom `dangling`."""

    molecule: Molecule
    dangling: int

    def __str__(self):
        return f"{self.molecule} [free index at atom {self.dangling}]"


def _laplacian_coeff(atom: str, vars) -> Poly:
    return -Poly.var(vars, "E_u" if atom == "u" else "E_v")


def _rewrite(mol: Molecule, coeff: Poly, order=None):
    """Drive a molecule to normal form; returns [(Molecule, Poly)].

    `order` is an optional callable list-shuffler used by the confluence
    test to randomize which reducible site fires first.
    """
    vars = coeff.vars
    for _ in range(100):
        sites = []
        for b in mol.bonds:
            if b[0] == b[1] and mol.atoms[b[0]] in ("u", "v"):
                sites.append(("laplacian", b))
            if b[0] == b[1] and mol.atoms[b[0]] == "r":
                sites.append(("trace", b))
        for i, a in enumerate(mol.atoms):
            if a == "r" and mol.degree(i) == 2 \
                    and not any(b == (i, i) for b in mol.bonds):
                sites.append(("delta", i))
        if not sites:
            return [(mol, coeff)]
        if order is not None:
            sites = order(sites)
        kind, site = sites[0]
        if kind == "laplacian":
            bonds = list(mol.bonds)
            bonds.remove(site)
            coeff = coeff * _laplacian_coeff(mol.atoms[site[0]], vars)
            mol = Molecule(mol.atoms, tuple(bonds))
        elif kind == "trace":
            coeff = coeff * Poly.var(vars, "d")
            mol = _drop_atom(mol, site[0], remove_bonds=[site])
        else:  # delta: fuse the two neighbours of atom `site`
            nb = [b for b in mol.bonds if site in b]
            ends = [b[0] if b[1] == site else b[1] for b in nb]
            mol = _drop_atom(mol, site, remove_bonds=nb,
                             add_bond=(ends[0], ends[1]))
    raise RuntimeError("rewriting did not terminate")


def _drop_atom(mol: Molecule, i: int, remove_bonds, add_bond=None) -> Molecule:
    bonds = list(mol.bonds)
    for b in remove_bonds:
        bonds.remove(b)
    if add_bond is not None:
        bonds.append(tuple(sorted(add_bond)))
    atoms = mol.atoms[:i] + mol.atoms[i + 1:]

    def shift(j):
        return j - 1 if j > i else j

    bonds = tuple((shift(a), shift(b)) for a, b in bonds)
    return Molecule(atoms, bonds)


def divergence(vd: VectorDiagram, order=None, vars=VARS) -> DiagramExpr:
    """d/dx_i applied to a vector molecule with dangling index i.

    The product rule adds one bond from the dangling atom to each atom in
    turn; each summand is then rewritten to normal form.
    """
    out = DiagramExpr(vars=vars)
    mol, dang = vd.molecule, vd.dangling
    for a in range(len(mol.atoms)):
        hit = Molecule(mol.atoms, mol.bonds + ((dang, a),))
        for m, c in _rewrite(hit, Poly.const(vars, 1), order=order):
            out = out + DiagramExpr.single(m, c, vars)
    return out


# ---------------------------------------------------------------------------
# the standard bases and the matrix M
# ---------------------------------------------------------------------------

def standard_vectors() -> list[VectorDiagram]:
    """The 8 vector integrands whose divergences close on the scalar basis."""
    M = Molecule
    return [
        VectorDiagram(M(("u", "v"), ()), 0),                     # u_i v
        VectorDiagram(M(("u", "v"), ()), 1),                     # v_i u
        VectorDiagram(M(("r", "u", "v"), ()), 0),                # r_i u v
        VectorDiagram(M(("r", "u", "v"), ((1, 2),)), 0),         # r_i u_j v_j
        VectorDiagram(M(("r", "u", "v"), ((0, 1),)), 2),         # r_j u_j v_i
        VectorDiagram(M(("r", "u", "v"), ((0, 2),)), 1),         # r_j v_j u_i
        VectorDiagram(M(("r", "r", "u", "v"), ((0, 1),)), 2),    # r^2 u_i v
        VectorDiagram(M(("r", "r", "u", "v"), ((0, 1),)), 3),    # r^2 v_i u
    ]


def standard_scalars() -> list[Molecule]:
    M = Molecule
    return [
        M(("u", "v"), ()),                           # u v
        M(("u", "v"), ((0, 1),)),                    # u_i v_i
        M(("r", "u", "v"), ((0, 1),)),               # r_i u_i v
        M(("r", "u", "v"), ((0, 2),)),               # r_i v_i u
        M(("r", "u", "v"), ((0, 1), (1, 2))),        # r_i u_ij v_j
        M(("r", "u", "v"), ((0, 2), (1, 2))),        # r_i v_ij u_j
        M(("r", "r", "u", "v"), ((0, 1),)),          # r^2 u v
        M(("r", "r", "u", "v"), ((0, 1), (2, 3))),   # r^2 u_i v_i
    ]


def flux_labels() -> list[str]:
    return ["u_n v", "v_n u", "r_n u v", "r_n grad(u).grad(v)",
            "(r.grad u) v_n", "(r.grad v) u_n", "r^2 u_n v", "r^2 v_n u"]


def scalar_labels() -> list[str]:
    return ["u v", "grad(u).grad(v)", "(r.grad u) v", "(r.grad v) u",
            "r_i u_ij v_j", "r_i v_ij u_j", "r^2 u v", "r^2 grad(u).grad(v)"]


def assemble_M(order=None, vars=VARS) -> list[list[Poly]]:
    """M_ab with div p_a = sum_b M_ab q_b, coefficients in Q[E_u, E_v, d]."""
    scalars = [m.canonical() for m in standard_scalars()]
    index = {m: i for i, m in enumerate(scalars)}
    zero = Poly(vars, {})
    rows = []
    for vd in standard_vectors():
        expr = divergence(vd, order=order, vars=vars)
        row = [zero] * len(scalars)
        for mol, c in expr.terms.items():
            if mol not in index:
                raise RuntimeError(f"molecule {mol} escaped the scalar basis")
            row[index[mol]] = c
        rows.append(row)
    return rows


def invert_M(M: list[list[Poly]] | None = None):
    """Exact inverse of M; returns (inverse as RatFunc matrix, det as Poly)."""
    if M is None:
        M = assemble_M()
    return bareiss_inverse(M)


def equal_energy_matrix(M: list[list[Poly]] | None = None) -> list[list[Poly]]:
    """M with both energies set equal: E_u = E_v = E, over Q[E, d]."""
    if M is None:
        M = assemble_M()
    e = Poly.var(VARS_EQ, "E")
    d = Poly.var(VARS_EQ, "d")
    mapping = {"E_u": e, "E_v": e, "d": d}
    return [[entry.subs(mapping) for entry in row] for row in M]


def nullspace_equal_energy(Meq=None):
    """Right nullspace of the equal-energy M (directions lost by div)."""
    if Meq is None:
        Meq = equal_energy_matrix()
    A = [[RatFunc(e) for e in row] for row in Meq]
    zero = [RatFunc.const(VARS_EQ, 0)] * len(A)
    _, basis = solve_linear(A, zero)
    return basis


def equal_energy_solve(alpha: int, Meq=None, canonicalize: bool = True):
    """Boundary coefficients x with oint sum_b x_b n.p_b = int q_alpha at
    equal energies: solve M^T x = e_alpha over Q(E, d).

    Returns (particular, homogeneous_basis).  For alpha in {7, 8} (the r^2
    rows) the system is inconsistent -- the divergence map loses exactly
    that direction at eps = 0 -- and IdentityUnderivable is raised.

    With canonicalize=True the free parameter (the u<->v antisymmetric
    direction (1, -1, 0, ..., 0)) is fixed by symmetrizing x_1 = x_2.
    """
    if Meq is None:
        Meq = equal_energy_matrix()
    n = len(Meq)
    if not 1 <= alpha <= n:
        raise ValueError("alpha must be in 1..8")
    A = [[RatFunc(Meq[j][i]) for j in range(n)] for i in range(n)]  # transpose
    b = [RatFunc.const(VARS_EQ, 1 if i == alpha - 1 else 0) for i in range(n)]
    try:
        x, basis = solve_linear(A, b)
    except ValueError:
        raise IdentityUnderivable(
            f"volume integrand {scalar_labels()[alpha - 1]!r} has no "
            "boundary representation at equal energies") from None
    if canonicalize and basis:
        # one-parameter family x + t h with h = (1,-1,0,...); pick x_1 = x_2
        h = basis[0]
        denom = h[0] - h[1]
        if not denom.is_zero:
            t = (x[1] - x[0]) / denom
            x = [xi + t * hi for xi, hi in zip(x, basis[0])]
    return x, basis


# ---------------------------------------------------------------------------
# rendering and numerical verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    """A volume-to-boundary identity int q_alpha dV = oint sum c_b n.p_b dA."""

    alpha: int
    coeffs: tuple          # 8 RatFunc boundary coefficients
    text: str


def render_identity(alpha: int, coeffs, equal_energy: bool = False) -> Identity:
    lhs = f"int [{scalar_labels()[alpha - 1]}] dV"
    parts = []
    for c, name in zip(coeffs, flux_labels()):
        if c.is_zero:
            continue
        parts.append(f"({c}) {name}")
    rhs = "oint [ " + " + ".join(parts) + " ] dA" if parts else "0"
    suffix = "   (E_u = E_v = E)" if equal_energy else ""
    return Identity(alpha=alpha, coeffs=tuple(coeffs),
                    text=f"{lhs} = {rhs}{suffix}")


def unequal_energy_identity(alpha: int) -> Identity:
    """Row alpha of M^{-1}, read as a boundary formula for int q_alpha."""
    inv, _ = invert_M()
    return render_identity(alpha, inv[alpha - 1])


def equal_energy_identity(alpha: int) -> Identity:
    x, _ = equal_energy_solve(alpha)
    return render_identity(alpha, x, equal_energy=True)


def _flux_values(tu: BoundaryTrace, tv: BoundaryTrace, mesh: BoundaryMesh):
    """The 8 boundary integrals oint n.p_b dA for the standard vectors."""
    w, rn, r2 = mesh.weights, mesh.rn, mesh.r2
    gdot = np.einsum("ij,ij->i", tu.grad, tv.grad)
    ints = [
        tu.phi_n * tv.phi,
        tv.phi_n * tu.phi,
        rn * tu.phi * tv.phi,
        rn * gdot,
        tu.phi_r * tv.phi_n,
        tv.phi_r * tu.phi_n,
        r2 * tu.phi_n * tv.phi,
        r2 * tv.phi_n * tu.phi,
    ]
    return np.array([float(np.sum(w * f)) for f in ints])


def boundary_side(ident: Identity, tu: BoundaryTrace, tv: BoundaryTrace,
                  mesh: BoundaryMesh, env: dict) -> float:
    """Numeric right-hand side: sum_b c_b(env) oint n.p_b dA."""
    flux = _flux_values(tu, tv, mesh)
    c = np.array([cb.evaluate(env) if not cb.is_zero else 0.0
                  for cb in ident.coeffs])
    return float(c @ flux)


def volume_side(ident: Identity, field_u, field_v, iq: InteriorQuadrature) -> float:
    """Numeric left-hand side int q_alpha dV for any of the 8 scalars.

    Fields must provide value/gradient (and hessian for alpha in {5, 6})
    at interior points.
    """
    a = ident.alpha
    pts, w, r2 = iq.pos, iq.weights, iq.r2
    u, gu = field_u.value(pts), field_u.gradient(pts)
    v, gv = field_v.value(pts), field_v.gradient(pts)
    if a == 1:
        f = u * v
    elif a == 2:
        f = np.einsum("ij,ij->i", gu, gv)
    elif a == 3:
        f = np.einsum("ij,ij->i", pts, gu) * v
    elif a == 4:
        f = np.einsum("ij,ij->i", pts, gv) * u
    elif a == 5:
        H = field_u.hessian(pts)
        f = np.einsum("ni,nij,nj->n", pts, H, gv)
    elif a == 6:
        H = field_v.hessian(pts)
        f = np.einsum("ni,nij,nj->n", pts, H, gu)
    elif a == 7:
        f = r2 * u * v
    elif a == 8:
        f = r2 * np.einsum("ij,ij->i", gu, gv)
    else:
        raise ValueError("alpha must be in 1..8")
    return float(np.sum(w * f))


def verify_identity(ident: Identity, field_u, field_v, mesh: BoundaryMesh,
                    iq: InteriorQuadrature, env: dict) -> float:
    """Relative residual |volume - boundary| / max(1, |volume|, |boundary|)."""
    tu = field_u.trace(mesh)
    tv = field_v.trace(mesh)
    lhs = volume_side(ident, field_u, field_v, iq)
    rhs = boundary_side(ident, tu, tv, mesh, env)
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


# ---------------------------------------------------------------------------
# trial Helmholtz fields
# ---------------------------------------------------------------------------

class PlaneWaveField:
    """u(x) = cos(k n.x + phase); exact Helmholtz solution at E = k^2."""

    def __init__(self, k: float, angle: float, phase: float = 0.0):
        self.k = k
        self.n = np.array([math.cos(angle), math.sin(angle)])
        self.phase = phase

    @property
    def energy(self):
        return self.k ** 2

    def _arg(self, pts):
        return self.k * (pts @ self.n) + self.phase

    def value(self, pts):
        return np.cos(self._arg(pts))

    def gradient(self, pts):
        return -self.k * np.sin(self._arg(pts))[:, None] * self.n[None, :]

    def hessian(self, pts):
        c = -self.k ** 2 * np.cos(self._arg(pts))
        return c[:, None, None] * np.outer(self.n, self.n)[None, :, :]

    def trace(self, mesh: BoundaryMesh) -> BoundaryTrace:
        g = self.gradient(mesh.pos)
        return BoundaryTrace(
            phi=self.value(mesh.pos),
            phi_n=np.einsum("ij,ij->i", mesh.normal, g),
            grad=g,
            phi_r=np.einsum("ij,ij->i", mesh.pos, g),
            mesh=mesh)


class FourierBesselField:
    """u = sum_m c_m J_m(k r) cos(m theta + a_m); regular Helmholtz solution."""

    def __init__(self, k: float, coeffs, phases):
        from scipy import special
        self.k = k
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        self._sp = special

    @classmethod
    def random(cls, k: float, rng, n_modes: int = 8):
        return cls(k, rng.standard_normal(n_modes),
                   rng.uniform(0.0, 2.0 * np.pi, n_modes))

    @property
    def energy(self):
        return self.k ** 2

    def _polar(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.hypot(x, y), np.arctan2(y, x)

    def value(self, pts):
        r, th = self._polar(pts)
        out = np.zeros(len(r))
        for m, (c, a) in enumerate(zip(self.coeffs, self.phases)):
            out += c * self._sp.jv(m, self.k * r) * np.cos(m * th + a)
        return out

    def gradient(self, pts):
        r, th = self._polar(pts)
        safe = np.where(r > 0, r, 1.0)
        dr = np.zeros(len(r))
        dth = np.zeros(len(r))
        for m, (c, a) in enumerate(zip(self.coeffs, self.phases)):
            jm = self._sp.jv(m, self.k * r)
            jmp = self._sp.jvp(m, self.k * r)
            dr += c * self.k * jmp * np.cos(m * th + a)
            dth += -c * m * jm * np.sin(m * th + a)
        ct, st = np.cos(th), np.sin(th)
        gx = dr * ct - dth / safe * st
        gy = dr * st + dth / safe * ct
        at0 = r == 0.0
        if np.any(at0) and len(self.coeffs) > 1:
            # only the m = 1 term has a nonzero gradient at the origin
            c, a = self.coeffs[1], self.phases[1]
            g0 = 0.5 * c * self.k
            gx = np.where(at0, g0 * np.cos(a), gx)
            gy = np.where(at0, -g0 * np.sin(a), gy)
        return np.column_stack([gx, gy])

    def trace(self, mesh: BoundaryMesh) -> BoundaryTrace:
        g = self.gradient(mesh.pos)
        return BoundaryTrace(
            phi=self.value(mesh.pos),
            phi_n=np.einsum("ij,ij->i", mesh.normal, g),
            grad=g,
            phi_r=np.einsum("ij,ij->i", mesh.pos, g),
            mesh=mesh)
