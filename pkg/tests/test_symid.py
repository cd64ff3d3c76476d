from fractions import Fraction

import numpy as np
import pytest

from billiardq import geometry, modes, symid
from billiardq.ring import Poly, RatFunc
from billiardq.symid import (FourierBesselField, IdentityUnderivable, Molecule,
                             PlaneWaveField, VARS, VARS_EQ)

EU = Poly.var(VARS, "E_u")
EV = Poly.var(VARS, "E_v")
D = Poly.var(VARS, "d")
ZERO = Poly.const(VARS, 0)
ONE = Poly.const(VARS, 1)
TWO = Poly.const(VARS, 2)

# divergence of each standard vector against the standard scalar basis,
# derived by hand from the product rule and the three rewrite moves
EXPECTED_M = [
    [-EU, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO],
    [-EV, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO],
    [D, ZERO, ONE, ONE, ZERO, ZERO, ZERO, ZERO],
    [ZERO, D, ZERO, ZERO, ONE, ONE, ZERO, ZERO],
    [ZERO, ONE, -EV, ZERO, ONE, ZERO, ZERO, ZERO],
    [ZERO, ONE, ZERO, -EU, ZERO, ONE, ZERO, ZERO],
    [ZERO, ZERO, TWO, ZERO, ZERO, ZERO, -EU, ONE],
    [ZERO, ZERO, ZERO, TWO, ZERO, ZERO, -EV, ONE],
]


def test_molecule_canonical_under_relabeling():
    a = Molecule(("r", "u", "v"), ((0, 1), (1, 2)))
    b = Molecule(("u", "r", "v"), ((1, 0), (0, 2)))
    assert a.canonical_key() == b.canonical_key()
    assert a.canonical() == b.canonical()


def test_molecule_rejects_unknown_atom():
    with pytest.raises(ValueError):
        Molecule(("w",), ())


def test_matrix_entries_exact():
    M = symid.assemble_M()
    for i in range(8):
        for j in range(8):
            assert M[i][j] == EXPECTED_M[i][j], (i, j)


def test_determinant_is_energy_gap_cubed():
    _, det = symid.invert_M()
    eps = EU - EV
    assert det == eps ** 3


def test_inverse_rows_match_hand_derivation():
    inv, _ = symid.invert_M()
    eps = RatFunc(EU - EV)
    one = RatFunc(ONE)
    # row 1: the classical two-field energy-difference identity
    expect1 = [-one / eps, one / eps] + [RatFunc(ZERO)] * 6
    for got, want in zip(inv[0], expect1):
        assert got == want
    # row 7: boundary representation of int r^2 u v dV
    d2 = RatFunc(D - TWO)
    es = RatFunc(EU + EV)
    expect7 = [
        RatFunc(TWO) * d2 / eps ** 2 + RatFunc(Poly.const(VARS, 4)) * es / eps ** 3,
        RatFunc(TWO) * d2 / eps ** 2 - RatFunc(Poly.const(VARS, 4)) * es / eps ** 3,
        RatFunc(TWO) * es / eps ** 2,
        -RatFunc(Poly.const(VARS, 4)) / eps ** 2,
        RatFunc(Poly.const(VARS, 4)) / eps ** 2,
        RatFunc(Poly.const(VARS, 4)) / eps ** 2,
        -one / eps,
        one / eps,
    ]
    for got, want in zip(inv[6], expect7):
        assert got == want


def test_rewrite_confluent_under_random_orders(rng):
    base = symid.assemble_M()
    for _ in range(100):
        def shuffle(sites, rng=rng):
            sites = list(sites)
            rng.shuffle(sites)
            return sites
        M = symid.assemble_M(order=shuffle)
        for r1, r2 in zip(M, base):
            for a, b in zip(r1, r2):
                assert a == b


def test_equal_energy_nullspace():
    basis = symid.nullspace_equal_energy()
    assert len(basis) == 1
    h = basis[0]
    # direction proportional to (0, ..., 0, 1/E, 1): only the r^2 fluxes
    scale = h[7]
    assert not scale.is_zero
    e = RatFunc(Poly.var(VARS_EQ, "E"))
    want = [RatFunc.const(VARS_EQ, 0)] * 6 + [RatFunc.const(VARS_EQ, 1) / e,
                                              RatFunc.const(VARS_EQ, 1)]
    for hi, wi in zip(h, want):
        assert hi == wi * scale


def test_equal_energy_green_identity_coefficients():
    x, basis = symid.equal_energy_solve(1)
    e = RatFunc(Poly.var(VARS_EQ, "E"))
    d = RatFunc(Poly.var(VARS_EQ, "d"))
    quarter = RatFunc.const(VARS_EQ, Fraction(1, 4))
    half = RatFunc.const(VARS_EQ, Fraction(1, 2))
    lead = (quarter * d - half) / e
    want = [lead, lead, half, -half / e, half / e, half / e,
            RatFunc.const(VARS_EQ, 0), RatFunc.const(VARS_EQ, 0)]
    for xi, wi in zip(x, want):
        assert xi == wi
    assert len(basis) == 1


def test_equal_energy_r2_rows_underivable():
    for alpha in (7, 8):
        with pytest.raises(IdentityUnderivable):
            symid.equal_energy_solve(alpha)


@pytest.fixture(scope="module")
def verification_setup(deformed_circle):
    mesh = geometry.build_boundary_mesh(deformed_circle, 800)
    iq = geometry.interior_quadrature(deformed_circle, 120)
    return mesh, iq


def test_unequal_energy_identities_close_numerically(verification_setup, rng):
    mesh, iq = verification_setup
    for alpha in range(1, 9):
        ident = symid.unequal_energy_identity(alpha)
        for _ in range(3):
            ku, kv = rng.uniform(2.0, 6.0, 2)
            if abs(ku - kv) < 0.3:
                kv += 0.5
            u = PlaneWaveField(ku, rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))
            v = PlaneWaveField(kv, rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))
            env = {"E_u": u.energy, "E_v": v.energy, "d": 2.0}
            resid = symid.verify_identity(ident, u, v, mesh, iq, env)
            assert resid < 1e-9, (alpha, resid)


def test_unequal_identity_with_wave_fan_fields(verification_setup, rng):
    mesh, iq = verification_setup
    ident = symid.unequal_energy_identity(7)
    u = FourierBesselField.random(3.1, rng)
    v = FourierBesselField.random(4.7, rng)
    env = {"E_u": u.energy, "E_v": v.energy, "d": 2.0}
    assert symid.verify_identity(ident, u, v, mesh, iq, env) < 1e-9


def test_equal_energy_identities_close_numerically(verification_setup, rng):
    mesh, iq = verification_setup
    for alpha in (1, 2, 3, 4):
        ident = symid.equal_energy_identity(alpha)
        k = float(rng.uniform(2.0, 6.0))
        u = PlaneWaveField(k, rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))
        v = PlaneWaveField(k, rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))
        env = {"E": k * k, "d": 2.0}
        resid = symid.verify_identity(ident, u, v, mesh, iq, env)
        assert resid < 1e-9, (alpha, resid)


class _StateField:
    """Adapter presenting an eigenstate through the trial-field interface."""

    def __init__(self, state):
        self.state = state

    def value(self, pts):
        return self.state.evaluator(pts)[0]

    def gradient(self, pts):
        return self.state.evaluator(pts)[1]

    def trace(self, mesh):
        return modes.boundary_trace(self.state, mesh)


def test_r2_identity_specializes_for_dirichlet_modes(unit_disk):
    # for u, v vanishing on the boundary only the gradient fluxes survive and
    # the r^2 identity collapses to (4/eps^2) oint r_n u_n v_n
    states = modes.analytic_spectrum(unit_disk, 40.0)
    mesh = geometry.build_boundary_mesh(unit_disk, 512)
    iq = geometry.interior_quadrature(unit_disk, 96)
    ident = symid.unequal_energy_identity(7)
    u, v = _StateField(states[0]), _StateField(states[4])
    eu, ev = states[0].energy, states[4].energy
    env = {"E_u": eu, "E_v": ev, "d": 2.0}
    resid = symid.verify_identity(ident, u, v, mesh, iq, env)
    assert resid < 1e-9
    tu, tv = u.trace(mesh), v.trace(mesh)
    collapsed = 4.0 / (eu - ev) ** 2 * float(
        np.sum(mesh.weights * mesh.rn * tu.phi_n * tv.phi_n))
    full = symid.boundary_side(ident, tu, tv, mesh, env)
    assert abs(collapsed - full) < 1e-9 * max(1.0, abs(full))


def test_identity_text_mentions_only_surviving_fluxes():
    ident = symid.unequal_energy_identity(1)
    assert "u_n v" in ident.text and "r^2" not in ident.text
