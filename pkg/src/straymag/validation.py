"""Self-check suites: analytic field vs quadrature, Maxwell identities,
far-field limit, linearity, SQUID closures and epitaxy regression values.

Every check returns a :class:`Check` recording the measured error against its
tolerance.  All randomness comes from fixed seeds, so reports are reproducible
bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
import math

import numpy as np

from . import epitaxy as ep
from .magnetostatics import _surface_distance, cuboid_field, dipole_field, oracle_field
from .scene import UM, CuboidMagnet, Pose, Scene, pose_from_axis, preset_vls_shell, to_world

SEED = 20240607


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite}/{self.name}: measured {self.measured:.3g} vs tolerance {self.tolerance:.3g}"


def _check(suite, name, measured, tol, detail="", ok=None):
    measured = float(measured)
    passed = bool(measured <= tol) if ok is None else bool(ok)
    return Check(suite, name, measured, float(tol), passed, detail)


# --------------------------------------------------------------------------
# random geometry


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_cuboid(rng, max_aspect=10.0):
    """Cuboid with a random size (10 nm .. 1 um scale), aspect, pose and moment."""
    scale = 10 ** rng.uniform(-8, -6)
    dims = scale * np.exp(rng.uniform(0, math.log(max_aspect), size=3))
    pose = Pose(rng.uniform(-1, 1, size=3) * scale, random_rotation(rng))
    m_s = rng.choice([-1, 1]) * 10 ** rng.uniform(-11, -9)
    return CuboidMagnet(*dims, pose=pose, m_s=m_s)


def random_external_points(rng, cub, n, reach=2.0, min_gap=0.05):
    """World points outside ``cub`` within ``reach`` times its largest size.

    Points closer than ``min_gap`` times the smallest dimension to the surface
    are redrawn.
    """
    dims = cub.dims
    out = []
    while len(out) < n:
        p = dims / 2 + rng.uniform(-1, 1, size=(4 * n, 3)) * (dims / 2 + reach * dims.max())
        d = _surface_distance(*dims, p)
        inside = np.all((p > 0) & (p < dims), axis=1)
        keep = p[(~inside) & (d > min_gap * dims.min())]
        out.extend(keep[: n - len(out)])
    return to_world(cub.pose, np.array(out))


# --------------------------------------------------------------------------
# magnetostatics


def oracle_agreement(n_cuboids=10, n_points=1000, seed=SEED):
    """Worst relative difference |B_analytic - B_oracle| / |B| over random points."""
    rng = np.random.default_rng(seed)
    per = [n_points // n_cuboids + (k < n_points % n_cuboids) for k in range(n_cuboids)]
    worst = 0.0
    for k in range(n_cuboids):
        cub = random_cuboid(rng)
        pts = random_external_points(rng, cub, per[k])
        Ba = cuboid_field(cub, pts)
        Bo = oracle_field(cub, pts, tol=1e-10)
        rel = np.max(np.abs(Ba - Bo), axis=1) / np.linalg.norm(Bo, axis=1)
        worst = max(worst, float(rel.max()))
    return _check("magnetostatics", "oracle_agreement", worst, 1e-6, f"{n_points} points, {n_cuboids} cuboids")


_FD4 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_FD4_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])


def jacobian_fd(cub, pts, h):
    """Fourth-order central-difference Jacobian dB_i/dx_j, shape (N, 3, 3)."""
    n = len(pts)
    stencil = np.empty((n, 3, 4, 3))
    for j in range(3):
        for s, off in enumerate(_FD4_OFFSETS):
            stencil[:, j, s] = pts
            stencil[:, j, s, j] += off * h
    B = cuboid_field(cub, stencil.reshape(-1, 3)).reshape(n, 3, 4, 3)
    # J[:, i, j] = sum_s w_s B_i(x + off_s h e_j) / h
    return np.einsum("s,njsi->nij", _FD4, B) / h


def maxwell_checks(n_points=200, n_cuboids=10, seed=SEED + 1):
    """Divergence and curl of the analytic field at random external points."""
    rng = np.random.default_rng(seed)
    worst_div = worst_curl = 0.0
    per = n_points // n_cuboids
    for k in range(n_cuboids):
        cub = random_cuboid(rng)
        h = 1e-3 * cub.dims.min()
        pts = random_external_points(rng, cub, per if k < n_cuboids - 1 else n_points - per * k, min_gap=0.1)
        J = jacobian_fd(cub, pts, h)
        diag = np.abs(np.einsum("nii->ni", J))
        div = np.abs(np.trace(J, axis1=1, axis2=2))
        worst_div = max(worst_div, float(np.max(div / diag.sum(axis=1))))
        curl = np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], axis=1)
        scale = np.linalg.norm(J, axis=(1, 2))
        worst_curl = max(worst_curl, float(np.max(np.abs(curl) / scale[:, None])))
    return [
        _check("magnetostatics", "divergence", worst_div, 1e-6, f"{n_points} points"),
        _check("magnetostatics", "curl_outside", worst_curl, 1e-6, f"{n_points} points"),
    ]


def gauss_flux(cub, half_width, order=96):
    """(net outward flux, integral of |B.n|) over a cube centred on ``cub``."""
    x, w = np.polynomial.legendre.leggauss(order)
    u, v = np.meshgrid(x * half_width, x * half_width, indexing="ij")
    ww = np.outer(w, w).ravel() * half_width**2
    center = cub.center
    net = absolute = 0.0
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        for sign in (-1.0, 1.0):
            pts = np.empty((u.size, 3))
            pts[:, axis] = sign * half_width
            pts[:, others[0]] = u.ravel()
            pts[:, others[1]] = v.ravel()
            Bn = sign * cuboid_field(cub, pts + center)[:, axis]
            net += float(np.sum(Bn * ww))
            absolute += float(np.sum(np.abs(Bn) * ww))
    return net, absolute


def gauss_checks(n_cuboids=5, seed=SEED + 2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cuboids):
        cub = random_cuboid(rng)
        net, absolute = gauss_flux(cub, 1.5 * np.linalg.norm(cub.dims))
        worst = max(worst, abs(net) / absolute)
    return _check("magnetostatics", "closed_surface_flux", worst, 1e-6, f"{n_cuboids} enclosing cubes")


FAR_LADDER = (2, 4, 8, 16, 32, 64, 128)


def far_field_deviation(cub, factors=FAR_LADDER, n_dirs=26):
    """Worst relative deviation from the centred point dipole at r = f * max(a,b,c)."""
    dirs = np.array([[i, j, k] for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)], float)
    dirs = dirs[:n_dirs] / np.linalg.norm(dirs[:n_dirs], axis=1)[:, None]
    center, m = cub.center, cub.moment_vector
    out = []
    for f in factors:
        pts = center + f * cub.dims.max() * dirs
        Bc = cuboid_field(cub, pts)
        Bd = dipole_field(m, center, pts)
        out.append(float(np.max(np.linalg.norm(Bc - Bd, axis=1) / np.linalg.norm(Bd, axis=1))))
    return out


def far_field_checks():
    cub = preset_vls_shell(10 * UM, 50e-9, 3e-9, 3e7).magnets[0]
    devs = far_field_deviation(cub, (100,))
    ladder_cub = CuboidMagnet(40e-9, 60e-9, 100e-9, m_s=1e-10)
    ladder = far_field_deviation(ladder_cub)
    mono = all(b < a for a, b in zip(ladder, ladder[1:]))
    at50 = ladder[FAR_LADDER.index(64)]
    return [
        _check("magnetostatics", "far_field_100x_wire", devs[0], 0.01, "r = 100 max(a,b,c)"),
        _check("magnetostatics", "far_field_64x_block", at50, 0.01, "r = 64 max(a,b,c)"),
        _check("magnetostatics", "far_field_monotone", float(not mono), 0.0,
               "ladder " + ", ".join(f"{d:.2e}" for d in ladder), ok=mono),
    ]


def linearity_checks(seed=SEED + 3):
    rng = np.random.default_rng(seed)
    cub = random_cuboid(rng)
    pts = random_external_points(rng, cub, 50)
    lam = 3.7
    B1 = cuboid_field(cub, pts)
    B2 = cuboid_field(cub.scaled(lam), pts)
    lin = float(np.max(np.abs(B2 - lam * B1)) / np.max(np.abs(lam * B1)))
    two = Scene((cub, cub))
    from .magnetostatics import scene_field

    sup = float(np.max(np.abs(scene_field(two, pts) - 2 * B1)))
    # mirror x -> a - x in the magnet frame: Bx odd, By and Bz even
    flat = CuboidMagnet(*cub.dims, m_s=cub.m_s)
    local = random_external_points(rng, flat, 50)
    mirror = local.copy()
    mirror[:, 0] = flat.a - mirror[:, 0]
    Bp, Bm = cuboid_field(flat, local), cuboid_field(flat, mirror)
    sym = float(np.max(np.abs(Bm * np.array([-1.0, 1.0, 1.0]) - Bp) / np.linalg.norm(Bp, axis=1)[:, None]))
    return [
        _check("magnetostatics", "linearity", lin, 1e-14),
        _check("magnetostatics", "superposition", sup, 0.0, ok=sup == 0.0),
        _check("magnetostatics", "mirror_symmetry", sym, 1e-12),
    ]


def wire_axis_line(n=1001):
    """|B| along the wire axis, 50 nm beside the shell, over its full length.

    The shell is a vertical sheet (y in [-1.5, 1.5] nm, z in [0, 50] nm); the
    line runs at mid-height through the InAs next to one face.
    """
    from .magnetostatics import sample_line

    scene = wire_scene()
    samples = sample_line(scene, [-5 * UM, -50e-9, 25e-9], [5 * UM, -50e-9, 25e-9], n, axis=[1, 0, 0])
    return np.array([s.B_mag for s in samples])


def wire_checks():
    bmag = wire_axis_line()
    n = len(bmag)
    edge = int(math.ceil(0.05 * (n - 1)))
    left, right = int(np.argmax(bmag[: n // 2])), n // 2 + int(np.argmax(bmag[n // 2:]))
    ends = left <= edge and right >= n - 1 - edge
    ratio = float(bmag[n // 2] / min(bmag[left], bmag[right]))
    return [
        _check("magnetostatics", "wire_end_peaks", float(not ends), 0.0,
               f"peaks at samples {left} and {right} of {n}", ok=ends),
        _check("magnetostatics", "wire_mid_over_peak", ratio, 0.1),
    ]


def wire_scene():
    """10 um x 50 nm x 3 nm shell lying along world x on the substrate."""
    pose = pose_from_axis([-5 * UM, -1.5e-9, 0.0], [1.0, 0.0, 0.0])
    return preset_vls_shell(10 * UM, 50e-9, 3e-9, 3e7, pose=pose)


# --------------------------------------------------------------------------
# squid


def squid_checks(n=21):
    from . import squid as sq

    scene = wire_scene()
    grid = ([-10 * UM, -10 * UM, 0.0], [20 * UM, 0, 0], [0, 20 * UM, 0], n, n)
    img = sq.scan_image(scene, sq.LARGE_SENSOR, *grid)
    p2p = sq.peak_to_peak(img)
    anchor = max(p2p / 61.0, 61.0 / p2p)
    # moment implied by the measured 61 mPhi0 average, using this scene as template
    est = sq.estimate_moment(61.0, scene, sq.LARGE_SENSOR, *grid)
    # closure: forward-simulate a different moment, invert with the template
    truth = 1.234e7
    p2p_truth = sq.peak_to_peak(sq.scan_image(scene.scaled(truth / 3e7), sq.LARGE_SENSOR, *grid))
    closure = abs(sq.estimate_moment(p2p_truth, scene, sq.LARGE_SENSOR, *grid) / truth - 1.0)
    flux = img.flux
    antisym = float(abs(np.sum(flux)) / np.sum(np.abs(flux)))

    truth_pos, truth_m = np.array([1.3e-6, -0.7e-6, 0.0]), np.array([2e-15, -1e-15, 5e-16])
    dgrid = ([-5 * UM, -5 * UM, 0.0], [10 * UM, 0, 0], [0, 10 * UM, 0], 31, 31)
    dimg = sq.dipole_image(truth_pos, truth_m, sq.SMALL_SENSOR, *dgrid)
    fit = sq.fit_dipole(dimg, sq.SMALL_SENSOR, sq.DipoleFit(np.array([0.5e-6, 0.0, 0.0]), np.array([1e-15, 0, 0]), 0.0))
    pos_err = float(np.linalg.norm(fit.position - truth_pos))
    m_err = float(np.linalg.norm(fit.moment - truth_m) / np.linalg.norm(truth_m))
    return [
        _check("squid", "p2p_anchor_factor", anchor, 3.0, f"p2p = {p2p:.4g} mPhi0 vs 61"),
        _check("squid", "estimate_anchor_factor", max(est / 3e7, 3e7 / est), 3.0, f"m_s = {est:.4g} muB/um"),
        _check("squid", "estimate_closure", closure, 1e-9),
        _check("squid", "two_lobe_antisymmetry", antisym, 1e-6),
        _check("squid", "fit_position_um", pos_err / UM, 0.1),
        _check("squid", "fit_moment_rel", m_err, 0.01),
    ]


# --------------------------------------------------------------------------
# epitaxy

# (name, pair, role, target fraction, tolerance in fraction)
EPITAXY_TARGETS = (
    ("EuS[1-10]/InAs-WZ[11-20]", "InAs-WZ/EuS{1-100}", "transverse", -0.015, 0.003),
    ("EuS[112]/InAs-WZ[0001]", "InAs-WZ/EuS{11-20}", "parallel", 0.045, 0.003),
    ("EuS[11-1]/InAs-WZ[1-100]", "InAs-WZ/EuS{11-20}", "transverse", -0.071, 0.003),
    ("EuS[11-1]/InAs-WZ[1-100] rotated 15deg", "InAs-WZ/EuS{11-20}", "transverse_rotated", -0.038, 0.002),
    ("Al[1-10]/EuS[1-10]", "EuS/Al", "transverse", 0.018, 0.003),
    ("Al[-1-1-1]/EuS[332]", "EuS/Al", "parallel", 0.002, 0.003),
    ("EuS[332]/InAs-WZ[000-1]", "InAs-WZ/EuS{1-100}", "parallel", 0.0, 0.005),
)


def epitaxy_checks(materials=None):
    out = []
    for name, pair, role, target, tol in EPITAXY_TARGETS:
        dm = ep.interface_report(pair, materials).get(role)
        out.append(
            _check("epitaxy", name, abs(dm.mismatch - target), tol, f"{100 * dm.mismatch:+.3f}% vs {100 * target:+.1f}%")
        )
    return out


# --------------------------------------------------------------------------

SUITES = {
    "magnetostatics": lambda materials: [
        oracle_agreement(),
        *maxwell_checks(),
        gauss_checks(),
        *far_field_checks(),
        *linearity_checks(),
        *wire_checks(),
    ],
    "squid": lambda materials: squid_checks(),
    "epitaxy": lambda materials: epitaxy_checks(materials),
}


def run_suites(names=None, materials=None):
    """Run the named suites (all by default) and return their checks in order."""
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s) {unknown}; known: {list(SUITES)}")
    checks = []
    for name in names:
        checks.extend(SUITES[name](materials))
    return checks
