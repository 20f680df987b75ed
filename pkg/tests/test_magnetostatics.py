import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from straymag import magnetostatics as ms
from straymag.errors import (
    CoincidentPoint,
    DegenerateAxes,
    EdgeSingularity,
    LogSingularity,
    NonFinitePoint,
    QuadratureTooCoarse,
    SingularPoint,
    SurfacePoint,
)
from straymag.scene import MU0, CuboidMagnet, Pose, Scene, make_cuboid, pose_from_axis
from straymag.validation import random_cuboid, random_external_points

S7 = make_cuboid(3e-9, 50e-9, 10e-6, m_s_muB_per_um=3e7)


# kernels ------------------------------------------------------------------


def test_kernel_psi_examples():
    assert ms.kernel_psi(1, 1.0, 0.0, 0.0) == 1.0
    assert ms.kernel_psi(2, 3.0, 4.0, 0.0) == pytest.approx(4 / 125)
    with pytest.raises(SingularPoint):
        ms.kernel_psi(3, 0.0, 0.0, 0.0)


def test_kernel_xi_examples():
    assert ms.kernel_xi(1, 3.0, 4.0, 0.0) == pytest.approx(math.log(1 / 9))
    assert ms.kernel_xi(3, 1.0, 1.0, 0.0) == 0.0
    with pytest.raises(LogSingularity):
        ms.kernel_xi(1, 0.0, 5.0, 0.0)


def test_kernel_xi_swapped_roles():
    # the second log / arctan pair exchanges t1 and t2
    t = (0.3, -0.7, 1.1)
    assert ms.kernel_xi(2, *t) == pytest.approx(ms.kernel_xi(1, t[1], t[0], t[2]))
    assert ms.kernel_xi(4, *t) == pytest.approx(ms.kernel_xi(3, t[1], t[0], t[2]))


def test_kernel_xi_atan_limit_is_continuous():
    # t1 -> 0+: arctan(t2 t3 / (t1 R)) -> +-pi/2
    assert ms.kernel_xi(3, 0.0, 1.0, 1.0) == pytest.approx(math.pi / 2)
    assert ms.kernel_xi(3, 1e-12, 1.0, 1.0) == pytest.approx(math.pi / 2, abs=1e-9)


def test_sheet_current_lying_wire():
    J, K = ms.sheet_current(S7)
    assert J == pytest.approx(2.7822e-10 / (3e-9 * 50e-9), rel=1e-12)
    assert J == pytest.approx(1.8548e6, rel=1e-4)
    assert K == pytest.approx(MU0 * J / (4 * math.pi), rel=1e-12)
    assert J * S7.a * S7.b * S7.c == pytest.approx(S7.total_moment, rel=1e-12)
    J2, K2 = ms.sheet_current(S7.scaled(2.0))
    assert (J2, K2) == (2 * J, 2 * K)
    assert ms.sheet_current(S7.scaled(0.0)) == (0.0, 0.0)


# analytic vs oracle ---------------------------------------------------------


def test_lying_wire_point_matches_oracle():
    p = [S7.a / 2 + 100e-9, S7.b / 2, S7.c / 2]
    Ba = ms.field_analytic(S7, p).B
    Bo = ms.field_oracle(S7, p).B
    assert np.max(np.abs(Ba - Bo)) <= 1e-6 * np.linalg.norm(Bo)


def test_random_cuboids_match_oracle():
    rng = np.random.default_rng(7)
    for _ in range(3):
        cub = random_cuboid(rng)
        pts = random_external_points(rng, cub, 30)
        Ba = ms.cuboid_field(cub, pts)
        Bo = ms.oracle_field(cub, pts, tol=1e-10)
        rel = np.max(np.abs(Ba - Bo), axis=1) / np.linalg.norm(Bo, axis=1)
        assert rel.max() < 1e-8


def test_oracle_refinement_decreases():
    cub = CuboidMagnet(40e-9, 60e-9, 100e-9, m_s=1e-10)
    p = np.array([[120e-9, 10e-9, 50e-9]])
    B = [ms.biot_savart_midpoint(cub, p, n, n, n)[0] for n in (64, 128, 256, 512)]
    diffs = [np.linalg.norm(B[k + 1] - B[k]) for k in range(3)]
    assert diffs[0] > diffs[1] > diffs[2]
    # midpoint rule: error falls about 4x per halving
    assert diffs[0] / diffs[1] == pytest.approx(4, rel=0.1)


def test_oracle_too_coarse_and_surface():
    cub = CuboidMagnet(40e-9, 60e-9, 100e-9, m_s=1e-10)
    with pytest.raises(QuadratureTooCoarse):
        ms.field_oracle(cub, [41e-9, 30e-9, 50e-9], q=ms.QuadratureSpec(2, 2), tol=1e-12)
    with pytest.raises(SurfacePoint):
        ms.field_oracle(cub, [40e-9, 30e-9, 50e-9])
    with pytest.raises(ValueError):
        ms.QuadratureSpec(1, 4)


def test_zero_moment_is_zero_field():
    cub = CuboidMagnet(1e-8, 1e-8, 1e-8)
    assert np.all(ms.field_analytic(cub, [2e-8, 0, 0]).B == 0)
    assert np.all(ms.field_oracle(cub, [2e-8, 0, 0]).B == 0)


def test_central_axis_has_no_transverse_field():
    cub = CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10)
    B = ms.field_analytic(cub, [15e-9, 25e-9, 300e-9]).B
    assert abs(B[0]) <= 1e-12 * abs(B[2]) and abs(B[1]) <= 1e-12 * abs(B[2])


def test_edge_rejected_face_evaluated():
    cub = CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10)
    with pytest.raises(EdgeSingularity):
        ms.field_analytic(cub, [30e-9, 50e-9, 100e-9])
    with pytest.raises(EdgeSingularity):
        ms.field_analytic(cub, [30e-9, 25e-9, 200e-9 + 1e-13])
    face = ms.field_analytic(cub, [30e-9, 20e-9, 100e-9]).B
    assert np.all(np.isfinite(face))
    inside = ms.field_analytic(cub, [15e-9, 25e-9, 100e-9]).B
    assert np.all(np.isfinite(inside))
    with pytest.raises(NonFinitePoint):
        ms.field_analytic(cub, [math.nan, 0, 0])


def test_edge_extension_lines_are_finite():
    # points on the lines extending an edge, where log pairs nearly cancel
    cub = CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10)
    pts = np.array([[30e-9, 50e-9, 260e-9], [-20e-9, 0.0, 20e-9], [30e-9, -40e-9, 0.0]])
    Ba = ms.cuboid_field(cub, pts)
    Bo = ms.oracle_field(cub, pts, tol=1e-10)
    assert np.all(np.isfinite(Ba))
    assert np.max(np.abs(Ba - Bo) / np.linalg.norm(Bo, axis=1)[:, None]) < 1e-8


def test_rotated_pose_matches_oracle():
    pose = pose_from_axis([1e-8, -2e-8, 5e-9], [1.0, 2.0, -0.5])
    cub = CuboidMagnet(20e-9, 35e-9, 80e-9, pose=pose, m_s=-3e-11)
    p = [90e-9, 40e-9, -60e-9]
    Ba, Bo = ms.field_analytic(cub, p).B, ms.field_oracle(cub, p).B
    assert np.max(np.abs(Ba - Bo)) <= 1e-8 * np.linalg.norm(Bo)


# superposition, dipole -------------------------------------------------------


def test_scene_superposition():
    cub = CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10)
    p = [80e-9, -10e-9, 20e-9]
    assert np.all(ms.field_scene(Scene(), p).B == 0)
    assert np.array_equal(ms.field_scene(Scene((cub,)), p).B, ms.field_analytic(cub, p).B)
    assert np.array_equal(ms.field_scene(Scene((cub, cub)), p).B, 2 * ms.field_analytic(cub, p).B)


def test_scene_error_names_magnet():
    good = CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10)
    other = CuboidMagnet(10e-9, 10e-9, 10e-9, pose=Pose([1e-6, 0, 0]), m_s=1e-10)
    with pytest.raises(EdgeSingularity, match=r"magnets\[1\]") as info:
        ms.field_scene(Scene((good, other)), [1e-6, 0, 0])
    assert info.value.magnet_index == 1


def test_dipole_on_axis():
    m = np.array([0, 0, 2e-15])
    r = 1e-6
    B = ms.field_dipole(m, [0, 0, 0], [0, 0, r])
    assert np.allclose(B, MU0 / (4 * math.pi) * 2 * m / r**3, rtol=1e-14)
    assert np.all(ms.field_dipole([0, 0, 0], [0, 0, 0], [1, 0, 0]) == 0)
    with pytest.raises(CoincidentPoint):
        ms.field_dipole(m, [1, 2, 3], [1, 2, 3])


def test_cuboid_far_field_is_dipole():
    cub = S7
    p = cub.center + 100 * cub.dims.max() * np.array([0.6, 0.0, 0.8])
    Bc = ms.field_analytic(cub, p).B
    Bd = ms.field_dipole([0, 0, cub.m_s * cub.c], cub.center, p)
    assert np.linalg.norm(Bc - Bd) <= 0.01 * np.linalg.norm(Bd)


# sampling ---------------------------------------------------------------------


def test_sample_line_contract():
    scene = Scene((CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10),))
    with pytest.raises(ValueError):
        ms.sample_line(scene, [0, 0, -1e-7], [0, 0, 1e-7], 1)
    samples = ms.sample_line(scene, [-1e-7, 0, -1e-7], [1e-7, 0, -1e-7], 5, axis=[0, 0, 2])
    assert len(samples) == 5
    assert np.allclose(samples[0].position, [-1e-7, 0, -1e-7])
    assert np.allclose(samples[-1].position, [1e-7, 0, -1e-7])
    for s in samples:
        assert s.B_parallel == pytest.approx(s.B[2])
    zero = ms.sample_line(Scene(), [0, 0, 0], [1, 0, 0], 3)
    assert all(np.all(s.B == 0) for s in zero)


def test_sample_line_reports_sample_index():
    scene = Scene((CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10),))
    with pytest.raises(EdgeSingularity, match=r"sample 1: magnets\[0\]"):
        ms.sample_line(scene, [30e-9, 50e-9, -100e-9], [30e-9, 50e-9, 100e-9], 3)


def test_grid_row_equals_line_and_threads_bitwise():
    scene = Scene((CuboidMagnet(30e-9, 50e-9, 200e-9, m_s=1e-10),))
    o, e1, e2 = np.array([-2e-7, -2e-7, 3e-7]), np.array([4e-7, 0, 0]), np.array([0, 4e-7, 0])
    serial = ms.sample_grid(scene, o, e1, e2, 70, 60, threads=1)
    parallel = ms.sample_grid(scene, o, e1, e2, 70, 60, threads=4)
    assert np.array_equal(serial.B, parallel.B)
    line = ms.sample_line(scene, o, o + e2, 60)
    assert np.array_equal(np.array([s.B for s in line]), serial.B[0])
    with pytest.raises(DegenerateAxes):
        ms.sample_grid(scene, o, e1, 2 * e1, 3, 3)
    assert np.all(ms.sample_grid(Scene(), o, e1, e2, 3, 3).B == 0)


# properties -----------------------------------------------------------------

dims = st.floats(1e-9, 1e-6)


aspect = st.floats(1.0, 20.0)


@settings(max_examples=40, deadline=None)
@given(dims, aspect, aspect, st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3), st.integers(0, 2**31))
def test_linearity_and_mirror_symmetry(a, rb, rc, lam, seed):
    # corner sums lose relative precision on extreme needles, so keep aspect <= 20
    cub = CuboidMagnet(a, a * rb, a * rc, m_s=1e-10)
    rng = np.random.default_rng(seed)
    pts = random_external_points(rng, cub, 5)
    B = ms.cuboid_field(cub, pts)
    assert np.allclose(ms.cuboid_field(cub.scaled(lam), pts), lam * B, rtol=1e-14, atol=0)
    mirror = pts.copy()
    mirror[:, 0] = a - mirror[:, 0]
    Bm = ms.cuboid_field(cub, mirror)
    scale = np.linalg.norm(B, axis=1)[:, None]
    assert np.all(np.abs(Bm * [-1, 1, 1] - B) <= 1e-12 * scale)
