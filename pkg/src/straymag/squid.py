"""Scanning-SQUID magnetometry: forward model and inversion.

The sensor is an ideal pickup disk of radius ``pickup_radius`` held parallel
to the substrate (world z = 0) at ``scan_height``.  Its signal is the flux of
B_z through the disk, reported in flux quanta.  Images may optionally be
blurred by a measured point-spread function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import math
import warnings

import numpy as np
from scipy.signal import convolve2d

from .errors import (
    DidNotConverge,
    DiskIntersectsMagnet,
    EmptyImage,
    NoSignal,
    ParseError,
    PitchMismatch,
    QuadratureFailure,
    ZeroTemplateSignal,
)
from .magnetostatics import dipole_field, grid_points, scene_field
from .scene import MU0, PHI0, UM, as_vec3

MAX_LEVEL = 6


@dataclass(frozen=True)
class PsfKernel:
    """Point-spread function on a square pixel grid; normalized to unit sum."""

    pixel_pitch: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0 or not np.all(np.isfinite(v)):
            raise ValueError("PSF values must be a finite, non-empty 2D array")
        total = v.sum()
        if total == 0:
            raise ValueError("PSF values sum to zero and cannot be normalized")
        if not self.pixel_pitch > 0:
            raise ValueError("PSF pixel pitch must be > 0")
        v = v / total
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SensorSpec:
    pickup_radius: float
    scan_height: float
    psf: PsfKernel | None = None

    def __post_init__(self):
        if not (self.pickup_radius > 0 and math.isfinite(self.pickup_radius)):
            raise ValueError("pickup_radius must be > 0")
        if not (self.scan_height > 0 and math.isfinite(self.scan_height)):
            raise ValueError("scan_height must be > 0")


# the two sensors used for the nanowire maps
SMALL_SENSOR = SensorSpec(pickup_radius=100e-9, scan_height=700e-9)
LARGE_SENSOR = SensorSpec(pickup_radius=3e-6, scan_height=1e-6)


@dataclass(frozen=True)
class ScanImage:
    """Flux raster (n1, n2) in units of Phi0, with its scan-plane geometry."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    n1: int
    n2: int
    flux: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.flux, dtype=float)
        if f.shape != (self.n1, self.n2):
            raise ValueError(f"flux shape {f.shape} does not match ({self.n1}, {self.n2})")
        object.__setattr__(self, "flux", f)

    @property
    def pitch(self):
        """Pixel steps (along e1, along e2) in metres."""
        return (
            float(np.linalg.norm(self.e1)) / (self.n1 - 1),
            float(np.linalg.norm(self.e2)) / (self.n2 - 1),
        )

    def positions(self):
        return grid_points(self.origin, self.e1, self.e2, self.n1, self.n2)

    def with_flux(self, flux):
        return ScanImage(self.origin, self.e1, self.e2, self.n1, self.n2, flux)

    def to_csv(self, path):
        """Write ``x_um,y_um,flux_mPhi0`` rows in row-major order."""
        pos = self.positions().reshape(-1, 3)
        flux = self.flux.reshape(-1)
        with open(path, "w", newline="") as fh:
            fh.write("x_um,y_um,flux_mPhi0\n")
            for p, f in zip(pos, flux):
                fh.write(f"{repr(float(p[0] / UM))},{repr(float(p[1] / UM))},{repr(float(f * 1000))}\n")


def read_image_csv(path, scan_height):
    """Load a ``x_um,y_um,flux_mPhi0`` raster written by :meth:`ScanImage.to_csv`.

    The grid shape is recovered from the coordinate pattern: the second axis
    runs until the step between consecutive points changes.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["x_um", "y_um", "flux_mPhi0"]:
        raise ParseError(f"{path}: expected header x_um,y_um,flux_mPhi0", line=1, column=1)
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(data) < 4:
        raise ParseError(f"{path}: need at least a 2x2 raster")
    xy = data[:, :2] * UM
    step = xy[1] - xy[0]
    scale = np.linalg.norm(step)
    n2 = len(xy)
    for k in range(2, len(xy)):
        if np.linalg.norm(xy[k] - xy[k - 1] - step) > 1e-6 * scale:
            n2 = k
            break
    if len(xy) % n2:
        raise ParseError(f"{path}: {len(xy)} points do not form rows of {n2}")
    n1 = len(xy) // n2
    origin = np.array([xy[0, 0], xy[0, 1], scan_height])
    e2 = np.append(xy[n2 - 1] - xy[0], 0.0)
    e1 = np.append(xy[(n1 - 1) * n2] - xy[0], 0.0)
    return ScanImage(origin, e1, e2, n1, n2, data[:, 2].reshape(n1, n2) / 1000.0)


def load_psf_csv(path):
    """Read a PSF file: ``pitch_nm,<value>`` then comma-separated rows."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][0].strip() != "pitch_nm" or len(rows[0]) != 2:
        raise ParseError(f"{path}: first line must be 'pitch_nm,<value>'", line=1, column=1)
    try:
        pitch = float(rows[0][1]) * 1e-9
        values = [[float(x) for x in r] for r in rows[1:]]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len({len(r) for r in values}) != 1:
        raise ParseError(f"{path}: PSF rows have unequal lengths")
    return PsfKernel(pitch, np.array(values))


# --------------------------------------------------------------------------
# disk quadrature


def disk_rule(radius, level):
    """Polar rule for integrals over a disk: Gauss-Legendre in r, uniform in theta.

    Returns ``(offsets (M, 2), weights (M,))`` with weights summing to pi r^2.
    """
    n_r = 8 * 2**level
    n_t = 16 * 2**level
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * w * r
    theta = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
    offsets = np.stack(
        [np.outer(r, np.cos(theta)).ravel(), np.outer(r, np.sin(theta)).ravel()], axis=1
    )
    weights = np.repeat(wr, n_t) * (2 * np.pi / n_t)
    return offsets, weights


def _check_disks(scene, centers_xy, sensor):
    h, rad = sensor.scan_height, sensor.pickup_radius
    lo_xy, hi_xy = centers_xy.min(axis=0) - rad, centers_xy.max(axis=0) + rad
    for idx, mag in enumerate(scene.magnets):
        corners = mag.corners()
        zmin, zmax = corners[:, 2].min(), corners[:, 2].max()
        if not (zmin <= h <= zmax):
            continue
        bmin, bmax = corners[:, :2].min(axis=0), corners[:, :2].max(axis=0)
        if np.any(bmax < lo_xy) or np.any(bmin > hi_xy):
            continue
        gap = np.maximum(np.maximum(bmin - centers_xy, centers_xy - bmax), 0.0)
        if np.any(np.sqrt(np.sum(gap**2, axis=1)) <= rad):
            raise DiskIntersectsMagnet(f"pickup disk at height {h} m intersects magnets[{idx}]")


def _bz_flux(bz_fn, centers_xy, height, radius, level, threads=None):
    """Flux (Wb) of B_z through disks centred at ``centers_xy`` for one rule level."""
    offsets, weights = disk_rule(radius, level)
    m = len(weights)
    per_chunk = max(1, 200_000 // m)
    out = np.empty(len(centers_xy))
    for lo in range(0, len(centers_xy), per_chunk):
        c = centers_xy[lo:lo + per_chunk]
        pts = np.empty((len(c) * m, 3))
        pts[:, :2] = (c[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        pts[:, 2] = height
        bz = bz_fn(pts, threads).reshape(len(c), m)
        out[lo:lo + len(c)] = np.sum(bz * weights[None, :], axis=1)
    return out


def _converged_flux(bz_fn, centers_xy, height, radius, rtol, atol, threads=None, max_level=MAX_LEVEL):
    """Refine the disk rule per pixel until successive levels agree.

    Pixel k is done when ``|F_l - F_(l-1)| <= rtol |F_l| + atol``; for images
    ``atol`` defaults to ``rtol`` times the coarsest-level maximum |flux|.
    Returns ``(flux in Wb, level used)``.
    """
    prev = _bz_flux(bz_fn, centers_xy, height, radius, 0, threads)
    if atol is None:
        atol = rtol * float(np.max(np.abs(prev)))
    out = prev.copy()
    levels = np.zeros(len(prev), dtype=int)
    active = np.arange(len(prev))
    for level in range(1, max_level + 1):
        cur = _bz_flux(bz_fn, centers_xy[active], height, radius, level, threads)
        out[active] = cur
        levels[active] = level
        done = np.abs(cur - prev[active]) <= rtol * np.abs(cur) + atol
        prev[active] = cur
        active = active[~done]
        if active.size == 0:
            return out, levels
    raise QuadratureFailure(
        f"disk quadrature not converged to rtol={rtol} at {active.size} pixel(s) after level {max_level}"
    )


def _scene_bz(scene):
    return lambda pts, threads: scene_field(scene, pts, threads)[:, 2]


def flux_pickup(scene, center, sensor, rtol=1e-8, atol=1e-15):
    """Flux (Phi0) through the pickup disk centred above ``center`` (x, y).

    The disk sits at ``sensor.scan_height``; any z given in ``center`` is
    ignored.  ``atol`` is in Phi0.
    """
    c = np.asarray(center, dtype=float)[:2][None, :]
    _check_disks(scene, c, sensor)
    if not scene.magnets:
        return 0.0
    flux, _ = _converged_flux(
        _scene_bz(scene), c, sensor.scan_height, sensor.pickup_radius, rtol, atol * PHI0, threads=1
    )
    return float(flux[0] / PHI0)


def scan_image(scene, sensor, origin, e1, e2, n1, n2, rtol=1e-8, threads=None):
    """Raster of pickup flux (Phi0) over the scan grid; PSF applied if present."""
    pts = grid_points(origin, e1, e2, n1, n2)
    origin = np.array([pts[0, 0, 0], pts[0, 0, 1], sensor.scan_height])
    e1 = np.array([e1[0], e1[1], 0.0], dtype=float)
    e2 = np.array([e2[0], e2[1], 0.0], dtype=float)
    centers = pts[:, :, :2].reshape(-1, 2)
    _check_disks(scene, centers, sensor)
    if not scene.magnets:
        flux = np.zeros(n1 * n2)
    else:
        flux, _ = _converged_flux(
            _scene_bz(scene), centers, sensor.scan_height, sensor.pickup_radius, rtol, None, threads
        )
    img = ScanImage(origin, e1, e2, n1, n2, (flux / PHI0).reshape(n1, n2))
    if sensor.psf is not None:
        img = apply_psf(img, sensor.psf)
    return img


def apply_psf(img, k):
    """Convolve ``img`` with kernel ``k`` (zero padding, same output size)."""
    p1, p2 = img.pitch
    for p in (p1, p2):
        if abs(p - k.pixel_pitch) > 1e-9 * k.pixel_pitch:
            raise PitchMismatch(f"image pitch {p} m differs from PSF pitch {k.pixel_pitch} m")
    out = convolve2d(img.flux, k.values, mode="same", boundary="fill", fillvalue=0.0)
    return img.with_flux(out)


def peak_to_peak(img):
    """(max - min) of the image in milli-flux-quanta."""
    if img.flux.size == 0:
        raise EmptyImage("peak_to_peak of an empty image")
    return float((img.flux.max() - img.flux.min()) * 1000.0)


def estimate_moment(p2p_target, scene, sensor, origin, e1, e2, n1, n2):
    """Moment per length (muB/um) that reproduces ``p2p_target`` (mPhi0).

    ``scene`` is a template whose first magnet carries the reference moment;
    every magnet is scaled by the same factor.  Exact because flux is linear
    in the moment.
    """
    if not scene.magnets:
        raise ZeroTemplateSignal("template scene has no magnets")
    sim = peak_to_peak(scan_image(scene, sensor, origin, e1, e2, n1, n2))
    if not sim > 0:
        raise ZeroTemplateSignal("template scene produces no signal")
    return scene.magnets[0].m_s_muB_per_um * (p2p_target / sim)


# --------------------------------------------------------------------------
# point-dipole fitting


@dataclass(frozen=True)
class DipoleFit:
    position: np.ndarray
    moment: np.ndarray  # A m^2
    residual_norm: float  # Phi0
    converged: bool = True
    iterations: int = 0
    initial_residual: float = field(default=float("nan"), compare=False)


class _DipoleModel:
    """Unit-moment flux responses of a point dipole, for all pixels."""

    def __init__(self, img, sensor, z, level):
        self.centers = img.positions()[:, :, :2].reshape(-1, 2)
        self.height = img.origin[2]
        self.radius = sensor.pickup_radius
        self.z = z
        self.level = level

    def design(self, x, y):
        """Flux (Phi0) per unit moment component, shape (pixels, 3)."""
        offsets, weights = disk_rule(self.radius, self.level)
        rx = self.centers[:, None, 0] + offsets[None, :, 0] - x
        ry = self.centers[:, None, 1] + offsets[None, :, 1] - y
        rz = self.height - self.z
        r2 = rx * rx + ry * ry + rz * rz
        inv5 = r2**-2.5
        pref = MU0 / (4 * math.pi) / PHI0
        cols = (3 * rx * rz * inv5, 3 * ry * rz * inv5, (3 * rz * rz - r2) * inv5)
        return np.column_stack([pref * np.sum(c * weights[None, :], axis=1) for c in cols])


def dipole_image(position, moment, sensor, origin, e1, e2, n1, n2, rtol=1e-8):
    """Forward model: flux image (Phi0) of a point dipole."""
    r0 = as_vec3(position, "position")
    m = as_vec3(moment, "moment")
    pts = grid_points(origin, e1, e2, n1, n2)
    centers = pts[:, :, :2].reshape(-1, 2)
    bz = lambda p, threads: dipole_field(m, r0, p)[:, 2]
    flux, _ = _converged_flux(bz, centers, sensor.scan_height, sensor.pickup_radius, rtol, None, 1)
    img = ScanImage(
        np.array([pts[0, 0, 0], pts[0, 0, 1], sensor.scan_height]),
        np.array([e1[0], e1[1], 0.0], dtype=float),
        np.array([e2[0], e2[1], 0.0], dtype=float),
        n1,
        n2,
        (flux / PHI0).reshape(n1, n2),
    )
    if sensor.psf is not None:
        img = apply_psf(img, sensor.psf)
    return img


def fit_dipole(img, sensor, init, max_iter=200, rtol=1e-10):
    """Least-squares point-dipole fit to a flux image.

    The in-plane position is optimized by Levenberg-Marquardt; for each trial
    position the moment vector is the exact linear least-squares solution.
    The dipole height stays at ``init.position[2]``.  Iteration stops when the
    residual improves by less than ``rtol`` (relative) or after ``max_iter``
    iterations; in the latter case a :class:`DidNotConverge` warning is issued
    and the best result so far is returned with ``converged=False``.
    """
    data = img.flux.reshape(-1)
    if np.ptp(data) == 0:
        raise NoSignal("image is constant; nothing to fit")
    pos0 = as_vec3(init.position, "init position")
    m0 = as_vec3(init.moment, "init moment")

    # disk rule fixed at the level that converges the forward model at init
    model_probe = lambda p, threads: dipole_field(m0 if np.any(m0) else np.array([0, 0, 1.0]), pos0, p)[:, 2]
    centers = img.positions()[:, :, :2].reshape(-1, 2)
    _, levels = _converged_flux(model_probe, centers, img.origin[2], sensor.pickup_radius, 1e-8, None, 1)
    model = _DipoleModel(img, sensor, pos0[2], int(levels.max()))
    psf = sensor.psf

    def blur(G):
        if psf is None:
            return G
        cols = [apply_psf(img.with_flux(G[:, k].reshape(img.n1, img.n2)), psf).flux.reshape(-1) for k in range(3)]
        return np.column_stack(cols)

    def solve(xy):
        G = blur(model.design(*xy))
        m, *_ = np.linalg.lstsq(G, data, rcond=None)
        res = data - G @ m
        return m, res

    G0 = blur(model.design(pos0[0], pos0[1]))
    initial = float(np.linalg.norm(data - G0 @ m0))

    data_norm = float(np.linalg.norm(data))
    xy = pos0[:2].copy()
    m, res = solve(xy)
    cost = float(res @ res)
    lam = 1e-3
    h = max(sensor.pickup_radius, img.pitch[0]) * 1e-4
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = np.empty((len(data), 2))
        for k in range(2):
            d = np.zeros(2)
            d[k] = h
            J[:, k] = (solve(xy + d)[1] - solve(xy - d)[1]) / (2 * h)
        A = J.T @ J
        g = J.T @ res
        improved = False
        for _ in range(12):
            step = np.linalg.solve(A + lam * np.diag(np.diag(A) + 1e-300), -g)
            m_new, res_new = solve(xy + step)
            cost_new = float(res_new @ res_new)
            if cost_new < cost:
                improved = True
                break
            lam *= 10
        if not improved:
            converged = True
            break
        rel = (cost - cost_new) / cost if cost > 0 else 0.0
        xy, m, res, cost = xy + step, m_new, res_new, cost_new
        lam = max(lam / 10, 1e-12)
        # relative improvement below rtol, or residual at the rounding floor
        if np.sqrt(1 - rel) > 1 - rtol or cost <= (1e-13 * data_norm) ** 2:
            converged = True
            break

    final = float(np.sqrt(cost))
    position = np.array([xy[0], xy[1], pos0[2]])
    if final > initial:
        position, m, final = pos0, m0, initial
    if not converged:
        warnings.warn(
            DidNotConverge(f"fit_dipole stopped after {max_iter} iterations; returning best so far"),
            stacklevel=2,
        )
    return DipoleFit(position, m, final, converged, it, initial)
