"""Magnetic field of uniformly magnetized cuboids.

A uniform magnetization ``M`` along local +z is equivalent to a sheet current
``J = M = m_s / (a b)`` (A/m) circulating around the four side faces.  Two
independent routes evaluate its field:

* :func:`field_analytic` -- closed-form corner sums of log and arctan kernels.
* :func:`field_oracle` -- brute-force Biot--Savart quadrature of the sheet
  current (composite midpoint rule with Romberg extrapolation).

Everything is in SI units: metres, tesla, A m^2.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import _parallel
from .errors import (
    CoincidentPoint,
    DegenerateAxes,
    EdgeSingularity,
    LogSingularity,
    NonFinitePoint,
    QuadratureTooCoarse,
    SingularPoint,
    StrayMagError,
    SurfacePoint,
)
from .scene import MU0, CuboidMagnet, as_vec3, to_magnet_frame, unit_vector

EDGE_EPS = 1e-12  # m
SURFACE_EPS = 1e-12  # m
_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FieldSample:
    """Field at one point.  ``B_parallel`` is the component along ``axis``."""

    position: np.ndarray
    B: np.ndarray
    axis: np.ndarray = _Z_AXIS

    @property
    def B_mag(self):
        return float(np.sqrt(self.B[0] ** 2 + self.B[1] ** 2 + self.B[2] ** 2))

    @property
    def B_parallel(self):
        return float(np.dot(self.B, self.axis))


@dataclass(frozen=True)
class QuadratureSpec:
    """Subdivisions for the Biot--Savart oracle (slabs along c, points per edge)."""

    n_z: int = 64
    n_perimeter: int = 64

    def __post_init__(self):
        if self.n_z < 2 or self.n_perimeter < 2:
            raise ValueError("QuadratureSpec subdivisions must be >= 2")

    def refined(self, factor=2):
        return QuadratureSpec(self.n_z * factor, self.n_perimeter * factor)


# --------------------------------------------------------------------------
# scalar kernels


def kernel_psi(i, t1, t2, t3):
    """Biot--Savart kernel ``t_i / |t|^3`` for i in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise ValueError("i must be 1, 2 or 3")
    r2 = t1 * t1 + t2 * t2 + t3 * t3
    if r2 < 1e-300:
        raise SingularPoint("kernel_psi is singular at the origin")
    return (t1, t2, t3)[i - 1] / r2**1.5


def _atan_limit(num, den, side):
    # arctan(num/den); den == 0 takes the one-sided limit with sign(side)
    if den != 0.0:
        return math.atan(num / den)
    if num == 0.0:
        return 0.0
    return math.copysign(math.pi / 2, num) * math.copysign(1.0, side)


def kernel_xi(k, t1, t2, t3):
    """Antiderivative kernels of the cuboid field.

    ``k=1``: ln((R - t2)/(R + t2)); ``k=2``: same with t1 in place of t2;
    ``k=3``: arctan(t2 t3 / (t1 R)); ``k=4``: arctan(t1 t3 / (t2 R)),
    where R = |(t1, t2, t3)|.  The arctan forms take the one-sided limit from
    the positive side when their denominator vanishes.
    """
    R = math.sqrt(t1 * t1 + t2 * t2 + t3 * t3)
    if k in (1, 2):
        s = t2 if k == 1 else t1
        lo, hi = R - s, R + s
        if lo <= 0.0 or hi <= 0.0:
            raise LogSingularity(f"kernel_xi({k}) log argument is not positive at ({t1}, {t2}, {t3})")
        return math.log(lo / hi)
    if k == 3:
        return _atan_limit(t2 * t3, t1 * R, t1)
    if k == 4:
        return _atan_limit(t1 * t3, t2 * R, t2)
    raise ValueError("k must be 1, 2, 3 or 4")


def sheet_current(cuboid):
    """Return ``(J, K)``: sheet current density (A/m) and field prefactor (T)."""
    J = cuboid.m_s / (cuboid.a * cuboid.b)
    K = cuboid.mu_r * MU0 * J / (4 * math.pi)
    return J, K


# --------------------------------------------------------------------------
# analytic field


def _asinh_diff(v0, v1, rho):
    """asinh(v0/rho) - asinh(v1/rho), finite when rho -> 0 with v0 v1 > 0."""
    same = v0 * v1 > 0
    out = np.empty(np.broadcast(v0, v1, rho).shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = np.sign(v0)
        R0 = np.sqrt(v0 * v0 + rho * rho)
        R1 = np.sqrt(v1 * v1 + rho * rho)
        num = (v0 - v1) * (s + (v0 + v1) / (R0 + R1))
        same_val = s * np.log1p(num / (np.abs(v1) + R1))
        diff_val = np.arcsinh(v0 / rho) - np.arcsinh(v1 / rho)
    out[...] = np.where(same, same_val, diff_val)
    return out


def _atan_terms(num, den, side):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.arctan(num / den)
    limit = np.where(num == 0.0, 0.0, np.copysign(np.pi / 2, num) * np.copysign(1.0, side))
    return np.where(den == 0.0, limit, val)


def _local_field(a, b, c, K, p):
    """Field (N, 3) of the canonical cuboid at local points ``p`` (N, 3).

    Corner index 0 is the far corner (x0-a, y0-b, z0-c), index 1 the near one
    (x0, y0, z0); every corner term carries the sign (-1)^(i+j+k).
    """
    x0, y0, z0 = p[:, 0], p[:, 1], p[:, 2]
    us = (x0 - a, x0)
    vs = (y0 - b, y0)
    ws = (z0 - c, z0)

    # x component: log kernel in the y offset, paired over the two y faces
    bx = np.zeros(len(p))
    for i in (0, 1):
        for k in (0, 1):
            rho = np.sqrt(us[i] ** 2 + ws[k] ** 2)
            d = _asinh_diff(vs[0], vs[1], rho)
            bx += d if (i + k) % 2 == 0 else -d
    # y component: log kernel in the x offset, paired over the two x faces
    by = np.zeros(len(p))
    for j in (0, 1):
        for k in (0, 1):
            rho = np.sqrt(vs[j] ** 2 + ws[k] ** 2)
            d = _asinh_diff(us[0], us[1], rho)
            by += d if (j + k) % 2 == 0 else -d
    # z component: solid-angle arctan kernels
    bz = np.zeros(len(p))
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                u, v, w = us[i], vs[j], ws[k]
                R = np.sqrt(u * u + v * v + w * w)
                t = _atan_terms(v * w, u * R, u) + _atan_terms(u * w, v * R, v)
                bz += t if (i + j + k) % 2 == 0 else -t
    # each log pair is -2 x (asinh difference); with the K/2 prefactor the sum carries -K
    return np.column_stack((-K * bx, -K * by, -K * bz))


def _edge_distance(a, b, c, p):
    """Distance (N,) from local points to the nearest of the 12 cuboid edges."""
    dims = (a, b, c)
    best = np.full(len(p), np.inf)
    for axis in range(3):
        o1, o2 = [ax for ax in range(3) if ax != axis]
        along = p[:, axis] - np.clip(p[:, axis], 0.0, dims[axis])
        for e1 in (0.0, dims[o1]):
            for e2 in (0.0, dims[o2]):
                d = np.sqrt(along**2 + (p[:, o1] - e1) ** 2 + (p[:, o2] - e2) ** 2)
                best = np.minimum(best, d)
    return best


def _surface_distance(a, b, c, p):
    dims = np.array([a, b, c])
    outside = np.maximum(np.maximum(-p, p - dims), 0.0)
    d_out = np.sqrt(np.sum(outside**2, axis=1))
    inside = np.all((p > 0) & (p < dims), axis=1)
    d_in = np.min(np.minimum(p, dims - p), axis=1)
    return np.where(inside, d_in, d_out)


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 3:
        raise NonFinitePoint(f"points must have shape (..., 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise NonFinitePoint("evaluation point is not finite")
    return pts, single


def cuboid_field(cuboid, points, check=True):
    """Analytic field (N, 3) in world coordinates at world ``points`` (N, 3)."""
    pts, _ = _as_points(points)
    local = to_magnet_frame(cuboid.pose, pts)
    if check:
        d = _edge_distance(cuboid.a, cuboid.b, cuboid.c, local)
        bad = np.flatnonzero(d <= EDGE_EPS)
        if bad.size:
            raise EdgeSingularity(f"point {pts[bad[0]]} lies within {EDGE_EPS} m of a cuboid edge")
    _, K = sheet_current(cuboid)
    if K == 0.0:
        return np.zeros_like(pts)
    B_local = _local_field(cuboid.a, cuboid.b, cuboid.c, K, local)
    return B_local @ cuboid.pose.rotation.T


def field_analytic(cuboid, p_world, axis=_Z_AXIS):
    """Closed-form field of one cuboid at a single world point."""
    pts, _ = _as_points(p_world)
    B = cuboid_field(cuboid, pts)[0]
    return FieldSample(pts[0], B, unit_vector(axis, "axis"))


def _magnets(scene_or_cuboid):
    if isinstance(scene_or_cuboid, CuboidMagnet):
        return (scene_or_cuboid,)
    return scene_or_cuboid.magnets


def scene_field(scene, points, threads=None):
    """Superposed analytic field (N, 3) of every magnet in ``scene``.

    Summation follows the scene's list order.  Work is split into fixed chunks
    of points, so the result does not depend on the thread count.
    """
    pts, _ = _as_points(points)
    magnets = _magnets(scene)

    def evaluate(chunk):
        total = np.zeros_like(chunk)
        for idx, mag in enumerate(magnets):
            try:
                total = total + cuboid_field(mag, chunk)
            except StrayMagError as exc:
                err = type(exc)(f"magnets[{idx}]: {exc}")
                err.magnet_index = idx
                raise err from exc
        return total

    return _parallel.map_rows(evaluate, pts, threads)


def field_scene(scene, p, axis=_Z_AXIS):
    """Field of a whole scene at one point."""
    p = as_vec3(p, "point")
    return FieldSample(p, scene_field(scene, p[None, :], threads=1)[0], unit_vector(axis, "axis"))


# --------------------------------------------------------------------------
# Biot--Savart oracle


def _face_nodes(n, length):
    h = length / n
    return (np.arange(n) + 0.5) * h, h


def biot_savart_midpoint(cuboid, points, na, nb, nc):
    """Midpoint-rule Biot--Savart field (N, 3) of the side-face sheet current.

    ``na``, ``nb`` are subdivisions of the a- and b-edges, ``nc`` the number of
    slabs along c.  Points are world coordinates; the result is world frame.
    """
    pts, _ = _as_points(points)
    local = to_magnet_frame(cuboid.pose, pts)
    a, b, c = cuboid.a, cuboid.b, cuboid.c
    _, K = sheet_current(cuboid)
    zs, hz = _face_nodes(nc, c)
    xs, hx = _face_nodes(na, a)
    ys, hy = _face_nodes(nb, b)

    # (fixed coordinate, varying-axis nodes, step, current direction)
    faces = (
        (0, a, ys, hy, np.array([0.0, 1.0, 0.0])),
        (0, 0.0, ys, hy, np.array([0.0, -1.0, 0.0])),
        (1, b, xs, hx, np.array([-1.0, 0.0, 0.0])),
        (1, 0.0, xs, hx, np.array([1.0, 0.0, 0.0])),
    )
    out = np.zeros_like(local)
    per_point = 2 * (nb + na) * nc
    chunk = max(1, int(4e6 // per_point))
    for lo in range(0, len(local), chunk):
        P = local[lo:lo + chunk]
        acc = np.zeros_like(P)
        for fixed_axis, fixed_val, nodes, h, dl in faces:
            if fixed_axis == 0:
                qx = np.full(nodes.size, fixed_val)
                qy = nodes
            else:
                qx = nodes
                qy = np.full(nodes.size, fixed_val)
            rx = P[:, 0, None, None] - qx[None, :, None]
            ry = P[:, 1, None, None] - qy[None, :, None]
            rz = P[:, 2, None, None] - zs[None, None, :]
            inv_r3 = (rx * rx + ry * ry + rz * rz) ** -1.5
            # dl x r
            cx = dl[1] * rz - dl[2] * ry
            cy = dl[2] * rx - dl[0] * rz
            cz = dl[0] * ry - dl[1] * rx
            w = h * hz
            acc[:, 0] += w * np.sum(cx * inv_r3, axis=(1, 2))
            acc[:, 1] += w * np.sum(cy * inv_r3, axis=(1, 2))
            acc[:, 2] += w * np.sum(cz * inv_r3, axis=(1, 2))
        out[lo:lo + chunk] = K * acc
    return out @ cuboid.pose.rotation.T


def _romberg_step(table, new):
    row = [new]
    for m, prev in enumerate(table[-1] if table else [], start=1):
        row.append(row[m - 1] + (row[m - 1] - prev) / (4**m - 1))
    table.append(row)
    return row[-1]


def _start_counts(cuboid, dist):
    h = max(dist / 2.0, min(cuboid.a, cuboid.b, cuboid.c) / 64.0)
    return [max(4, int(math.ceil(L / h))) for L in (cuboid.a, cuboid.b, cuboid.c)]


def oracle_field(cuboid, points, q=None, tol=1e-8, max_nodes=30_000_000):
    """Converged Biot--Savart field (N, 3) at world ``points``.

    With ``q`` given, the ladder is ``q, 2q, 4q`` and :class:`QuadratureTooCoarse`
    is raised if the last two Romberg estimates differ by more than ``tol``
    (relative to |B|).  Without ``q`` the starting resolution is chosen from
    each point's distance to the magnet surface and doubled until converged.
    """
    pts, _ = _as_points(points)
    local = to_magnet_frame(cuboid.pose, pts)
    dist = _surface_distance(cuboid.a, cuboid.b, cuboid.c, local)
    bad = np.flatnonzero(dist <= SURFACE_EPS)
    if bad.size:
        raise SurfacePoint(f"point {pts[bad[0]]} lies on the magnet surface")
    if cuboid.m_s == 0.0:
        return np.zeros_like(pts)

    out = np.empty_like(pts)
    if q is not None:
        groups = [((q.n_perimeter, q.n_perimeter, q.n_z), np.arange(len(pts)))]
    else:
        # bin points by power-of-two distance; each bin shares one ladder
        bins = np.floor(np.log2(dist / max(cuboid.a, cuboid.b, cuboid.c)))
        groups = []
        for bval in np.unique(bins):
            idx = np.flatnonzero(bins == bval)
            groups.append((_start_counts(cuboid, float(np.min(dist[idx]))), idx))

    for counts, active in groups:
        tables = {int(i): [] for i in active}
        last = {}
        n = np.array(counts)
        level = 0
        while active.size:
            if 2 * (n[0] + n[1]) * n[2] > max_nodes:
                raise QuadratureTooCoarse(
                    f"oracle did not reach tol={tol} before {max_nodes} nodes per point"
                )
            T = biot_savart_midpoint(cuboid, pts[active], *n)
            still = []
            for row, i in enumerate(active):
                est = _romberg_step(tables[int(i)], T[row])
                prev = last.get(int(i))
                last[int(i)] = est
                if prev is not None:
                    err = np.linalg.norm(est - prev)
                    if err <= tol * np.linalg.norm(est) or np.linalg.norm(est) == 0.0:
                        out[i] = est
                        continue
                if q is not None and level == 2:
                    raise QuadratureTooCoarse(
                        f"refinements {counts} -> x4 differ by more than tol={tol} at {pts[i]}"
                    )
                still.append(i)
            active = np.array(still, dtype=int)
            n = n * 2
            level += 1
    return out


def field_oracle(cuboid, p_world, q=None, tol=1e-8, axis=_Z_AXIS):
    """Biot--Savart quadrature field at a single point (see :func:`oracle_field`)."""
    p = as_vec3(p_world, "point")
    return FieldSample(p, oracle_field(cuboid, p[None, :], q, tol)[0], unit_vector(axis, "axis"))


# --------------------------------------------------------------------------
# point dipole, sampling


def dipole_field(moment, r0, points):
    """Point-dipole field (N, 3) at ``points`` for a moment (A m^2) at ``r0``."""
    m = np.asarray(moment, dtype=float)
    pts, _ = _as_points(points)
    r = pts - np.asarray(r0, dtype=float)
    r2 = np.sum(r * r, axis=1)
    if np.any(r2 == 0.0):
        raise CoincidentPoint("field point coincides with the dipole")
    rn = np.sqrt(r2)
    mdotr = r @ m
    pref = MU0 / (4 * math.pi)
    return pref * (3 * mdotr[:, None] * r / r2[:, None] - m[None, :]) / (rn**3)[:, None]


def field_dipole(moment, r0, p):
    """B = mu0/(4 pi) [3 (m.r^) r^ - m] / r^3 at one point."""
    return dipole_field(as_vec3(moment, "moment"), as_vec3(r0, "r0"), as_vec3(p, "point")[None, :])[0]


def sample_line(scene, start, stop, n, axis=_Z_AXIS, threads=None):
    """``n`` equally spaced samples from ``start`` to ``stop`` (inclusive)."""
    if n < 2:
        raise ValueError("sample_line needs n >= 2")
    start, stop = as_vec3(start, "from"), as_vec3(stop, "to")
    ax = unit_vector(axis, "axis")
    t = np.linspace(0.0, 1.0, n)
    pts = start[None, :] + t[:, None] * (stop - start)[None, :]
    try:
        B = scene_field(scene, pts, threads)
    except StrayMagError:
        # find the failing sample for the error message
        for k, pt in enumerate(pts):
            try:
                scene_field(scene, pt[None, :], threads=1)
            except StrayMagError as exc:
                err = type(exc)(f"sample {k}: {exc}")
                err.sample_index = k
                raise err from exc
        raise
    return [FieldSample(pts[k], B[k], ax) for k in range(n)]


@dataclass(frozen=True)
class FieldGrid:
    """Row-major raster of field samples on a parallelogram.

    Point (i, j) sits at ``origin + i/(n1-1) e1 + j/(n2-1) e2``.
    """

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n1: int
    n2: int
    positions: np.ndarray  # (n1, n2, 3)
    B: np.ndarray  # (n1, n2, 3)
    axis: np.ndarray = _Z_AXIS

    @property
    def B_mag(self):
        return np.sqrt(np.sum(self.B**2, axis=-1))

    @property
    def B_parallel(self):
        return self.B @ self.axis

    def samples(self):
        return [
            FieldSample(self.positions[i, j], self.B[i, j], self.axis)
            for i in range(self.n1)
            for j in range(self.n2)
        ]


def grid_points(origin, e1, e2, n1, n2):
    origin, e1, e2 = as_vec3(origin, "origin"), as_vec3(e1, "e1"), as_vec3(e2, "e2")
    if n1 < 2 or n2 < 2:
        raise ValueError("grid needs n1, n2 >= 2")
    cross = np.linalg.norm(np.cross(e1, e2))
    if not cross > 1e-12 * np.linalg.norm(e1) * np.linalg.norm(e2) or cross == 0.0:
        raise DegenerateAxes("grid axes e1, e2 are not linearly independent")
    s = np.linspace(0.0, 1.0, n1)
    t = np.linspace(0.0, 1.0, n2)
    return origin + s[:, None, None] * e1 + t[None, :, None] * e2


def sample_grid(scene, origin, e1, e2, n1, n2, axis=_Z_AXIS, threads=None):
    pts = grid_points(origin, e1, e2, n1, n2)
    B = scene_field(scene, pts.reshape(-1, 3), threads).reshape(n1, n2, 3)
    return FieldGrid(pts[0, 0], as_vec3(e1), as_vec3(e2), n1, n2, pts, B, unit_vector(axis, "axis"))
