import json
import math

import numpy as np
import pytest

from billiardq import geometry
from billiardq.geometry import (BoundaryCondition, Domain, InvalidDomainError,
                                RadialShape, RectangleShape)


def test_disk_mesh_rn_is_one(unit_disk):
    mesh = geometry.build_boundary_mesh(unit_disk, 64)
    assert np.allclose(mesh.rn, 1.0, atol=1e-14)
    assert np.allclose(np.linalg.norm(mesh.normal, axis=1), 1.0, atol=1e-14)


def test_disk_perimeter_exact(unit_disk):
    mesh = geometry.build_boundary_mesh(unit_disk, 64)
    assert abs(mesh.total_weight - 2.0 * np.pi) < 1e-12


def test_rectangle_rn_per_edge():
    dom = geometry.rectangle(2.0, 1.0)
    mesh = geometry.build_boundary_mesh(dom, 128)
    on_right = np.abs(mesh.pos[:, 0] - 1.0) < 1e-12
    on_top = np.abs(mesh.pos[:, 1] - 0.5) < 1e-12
    assert np.allclose(mesh.rn[on_right], 1.0)
    assert np.allclose(mesh.rn[on_top], 0.5)
    assert abs(mesh.total_weight - 6.0) < 1e-12


def test_mesh_normals_outward(deformed_circle):
    mesh = geometry.build_boundary_mesh(deformed_circle, 256)
    # outward normal has positive projection on the radial direction
    assert np.all(np.einsum("ij,ij->i", mesh.pos, mesh.normal) > 0)


def test_perimeter_area_spectral_convergence(deformed_circle):
    ref_p = geometry.perimeter(deformed_circle, 1 << 14)
    ref_a = geometry.area(deformed_circle, 1 << 14)
    # doubling the node count shrinks the error by far more than 100x
    errs_p = [abs(geometry.build_boundary_mesh(deformed_circle, m).total_weight - ref_p)
              for m in (16, 32)]
    assert errs_p[1] < errs_p[0] / 100.0 or errs_p[1] < 1e-13
    errs_a = [abs(geometry.interior_quadrature(deformed_circle, n).total_weight - ref_a)
              for n in (16, 32)]
    assert errs_a[1] < errs_a[0] / 100.0 or errs_a[1] < 1e-13


def test_interior_quadrature_disk_r2(unit_disk):
    iq = geometry.interior_quadrature(unit_disk, 64)
    assert abs(iq.total_weight - np.pi) < 1e-12
    assert abs(float(np.sum(iq.weights * iq.r2)) - np.pi / 2.0) < 1e-10


def test_interior_quadrature_rectangle_r2():
    dom = geometry.rectangle(1.0, 1.0)
    iq = geometry.interior_quadrature(dom, 32)
    assert abs(float(np.sum(iq.weights * iq.r2)) - 1.0 / 6.0) < 1e-12


def test_translation_consistency(unit_disk):
    t = (0.3, -0.2)
    shifted = unit_disk.with_origin(t)
    m0 = geometry.build_boundary_mesh(unit_disk, 128)
    m1 = geometry.build_boundary_mesh(shifted, 128)
    assert np.allclose(m1.pos, m0.pos - np.array(t), atol=1e-13)
    assert np.allclose(m1.normal, m0.normal, atol=1e-14)
    assert np.allclose(m1.weights, m0.weights, atol=1e-14)
    assert np.allclose(m1.rn, m0.rn - m0.normal @ np.array(t), atol=1e-13)


def test_min_enclosing_circle_disk(unit_disk):
    center, r0 = geometry.min_enclosing_circle(unit_disk)
    assert np.allclose(center, 0.0, atol=1e-9)
    assert abs(r0 - 1.0) < 1e-9


def test_min_enclosing_circle_rectangle():
    dom = geometry.rectangle(2.0, 1.0)
    _, r0 = geometry.min_enclosing_circle(dom)
    assert abs(r0 - math.sqrt(5.0) / 2.0) < 1e-9


def test_min_enclosing_circle_trefoil():
    shape = RadialShape(cos_coeffs=(1.0, 0.0, 0.0, 0.2))
    dom = Domain(shape=shape, bc=BoundaryCondition.dirichlet())
    center, r0 = geometry.min_enclosing_circle(dom, samples=1 << 16)
    assert np.allclose(center, 0.0, atol=1e-6)
    assert abs(r0 - 1.2) < 1e-6


def test_min_enclosing_circle_origin_invariant(deformed_circle):
    _, r0 = geometry.min_enclosing_circle(deformed_circle)
    c1, r1 = geometry.min_enclosing_circle(deformed_circle.with_origin((0.3, 0.1)))
    assert abs(r0 - r1) < 1e-9


def test_star_shaped_margin_offset_disk(unit_disk):
    assert abs(geometry.star_shaped_margin(unit_disk) - 1.0) < 1e-12
    off = unit_disk.with_origin((0.5, 0.0))
    assert abs(geometry.star_shaped_margin(off) - 0.5) < 1e-6


def test_star_shaped_margin_trefoil_positive():
    shape = RadialShape(cos_coeffs=(1.0, 0.0, 0.0, 0.2))
    dom = Domain(shape=shape, bc=BoundaryCondition.dirichlet())
    assert geometry.star_shaped_margin(dom) > 0.0


def test_invalid_radial_shape_rejected():
    with pytest.raises(InvalidDomainError):
        Domain(shape=RadialShape(cos_coeffs=(1.0, 0.0, 1.5)),
               bc=BoundaryCondition.dirichlet())


def test_invalid_rectangle_rejected():
    with pytest.raises(InvalidDomainError):
        Domain(shape=RectangleShape(-1.0, 2.0), bc=BoundaryCondition.dirichlet())


def test_config_round_trip(tmp_path, deformed_circle):
    path = tmp_path / "dom.json"
    dom = deformed_circle.with_origin((0.1, -0.2)).with_bc(BoundaryCondition.robin(1.5))
    geometry.save_domain(dom, path)
    back = geometry.load_domain(path)
    assert back == dom


def test_config_unknown_key_lists_valid(tmp_path):
    path = tmp_path / "dom.json"
    path.write_text(json.dumps({"shape": {"type": "radial", "cos_coeffs": [1.0]},
                                "typo_key": 1}))
    with pytest.raises(ValueError, match="valid keys"):
        geometry.load_domain(path)


def test_config_malformed_reports_location(tmp_path):
    path = tmp_path / "dom.json"
    path.write_text('{"shape": {"type": "radial", "cos_coeffs": [1.0,]}}')
    with pytest.raises(ValueError, match="line"):
        geometry.load_domain(path)
