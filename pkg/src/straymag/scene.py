"""Magnet geometry, poses, units and scene composition.

Each cuboid lives in its own magnet frame, occupying ``[0,a] x [0,b] x [0,c]``
with its magnetization along local ``+z``.  A :class:`Pose` maps that frame
into world coordinates::

    p_world = R @ p_local + t        p_local = R.T @ (p_world - t)

Lengths are SI metres internally; the helpers :data:`NM` and :data:`UM` convert
from the nanometre/micrometre values usually quoted for nanowires.  Moments
per unit length are accepted in Bohr magnetons per micrometre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidPose, NonFiniteInput, NonPositiveDimension

NM = 1e-9
UM = 1e-6


@dataclass(frozen=True)
class PhysicalConstants:
    mu0: float = 4e-7 * math.pi  # J/(A^2 m)
    muB: float = 9.274e-24  # A m^2
    Phi0: float = 2.067834e-15  # Wb


CONSTANTS = PhysicalConstants()
MU0 = CONSTANTS.mu0
MU_B = CONSTANTS.muB
PHI0 = CONSTANTS.Phi0

# (muB / um) -> (A m^2 / m)
_MUB_PER_UM = MU_B / UM


def muB_per_um_to_si(m_s):
    """Convert a moment per unit length from muB/um to A m^2/m."""
    return m_s * _MUB_PER_UM


def si_to_muB_per_um(m_s):
    return m_s / _MUB_PER_UM


def as_vec3(v, name="vector"):
    """Return ``v`` as a finite float array of shape (3,)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise NonFiniteInput(f"{name} must have three components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} has non-finite components: {arr}")
    return arr


def unit_vector(v, name="direction"):
    arr = as_vec3(v, name)
    norm = np.linalg.norm(arr)
    if not norm > 0:
        raise NonFiniteInput(f"{name} cannot be normalized (zero length)")
    return arr / norm


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Pose:
    """Rigid placement of a magnet frame in the world.

    ``rotation`` must be proper orthogonal (R^T R = I, det R = +1, both to 1e-12).
    """

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        t = as_vec3(self.translation, "translation")
        R = np.asarray(self.rotation, dtype=float)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise InvalidPose("rotation must be a finite 3x3 matrix")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12:
            raise InvalidPose("rotation is not orthogonal to 1e-12")
        if abs(np.linalg.det(R) - 1.0) > 1e-12:
            raise InvalidPose("rotation is not proper (det != +1)")
        object.__setattr__(self, "translation", _readonly(t))
        object.__setattr__(self, "rotation", _readonly(R))

    @classmethod
    def identity(cls):
        return cls()


IDENTITY = Pose()


def to_magnet_frame(pose, p_world):
    """World -> magnet frame.  Accepts one point (3,) or an array (..., 3)."""
    p = np.asarray(p_world, dtype=float)
    return (p - pose.translation) @ pose.rotation


def to_world(pose, p_local):
    """Magnet frame -> world.  Inverse of :func:`to_magnet_frame`."""
    p = np.asarray(p_local, dtype=float)
    return p @ pose.rotation.T + pose.translation


def rotation_from_axis(axis):
    """Complete a right-handed frame whose local z is ``axis``.

    The local x axis is world-x projected orthogonal to ``axis`` (world-y when
    ``axis`` is parallel to world-x); local y = z cross x.
    """
    z = unit_vector(axis, "axis")
    ref = np.array([1.0, 0.0, 0.0])
    x = ref - np.dot(ref, z) * z
    if np.linalg.norm(x) < 1e-9:
        ref = np.array([0.0, 1.0, 0.0])
        x = ref - np.dot(ref, z) * z
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R = np.column_stack([x, y, z])
    # re-orthonormalize so the 1e-12 pose checks hold for any input axis
    u, _, vt = np.linalg.svd(R)
    return u @ vt


def pose_from_axis(position, axis):
    """Pose placing the magnet-frame origin at ``position`` with local z along ``axis``."""
    return Pose(as_vec3(position, "position"), rotation_from_axis(axis))


@dataclass(frozen=True)
class CuboidMagnet:
    """Uniformly magnetized rectangular prism.

    Attributes
    ----------
    a, b, c : float
        Edge lengths (m) along magnet-frame x, y, z.
    pose : Pose
    m_s : float
        Magnetic moment per unit length along local +z (A m^2 / m).
    mu_r : float
        Relative permeability of the surroundings.
    """

    a: float
    b: float
    c: float
    pose: Pose = IDENTITY
    m_s: float = 0.0
    mu_r: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c", "m_s", "mu_r"):
            if not math.isfinite(getattr(self, name)):
                raise NonFiniteInput(f"{name} must be finite")
        for name in ("a", "b", "c"):
            if getattr(self, name) <= 0:
                raise NonPositiveDimension(f"{name} must be > 0, got {getattr(self, name)}")
        if self.mu_r <= 0:
            raise NonPositiveDimension(f"mu_r must be > 0, got {self.mu_r}")

    @property
    def dims(self):
        return np.array([self.a, self.b, self.c])

    @property
    def total_moment(self):
        """Total moment M_s = m_s * c (A m^2)."""
        return self.m_s * self.c

    @property
    def m_s_muB_per_um(self):
        return si_to_muB_per_um(self.m_s)

    @property
    def moment_vector(self):
        """World-frame moment vector (A m^2)."""
        return self.pose.rotation[:, 2] * self.total_moment

    @property
    def center(self):
        return to_world(self.pose, self.dims / 2)

    def corners(self):
        """World coordinates of the eight corners, shape (8, 3)."""
        idx = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float)
        return to_world(self.pose, idx * self.dims)

    def scaled(self, factor):
        """Copy with the moment multiplied by ``factor``."""
        return CuboidMagnet(self.a, self.b, self.c, self.pose, self.m_s * factor, self.mu_r)


def make_cuboid(a, b, c, pose=None, m_s_muB_per_um=0.0, mu_r=1.0):
    """Build a cuboid magnet from lengths in metres and a moment in muB/um.

    >>> cub = make_cuboid(3e-9, 50e-9, 10e-6, m_s_muB_per_um=3e7)
    >>> round(cub.m_s, 16)
    2.7822e-10
    """
    for name, val in (("a", a), ("b", b), ("c", c), ("m_s", m_s_muB_per_um)):
        if not math.isfinite(val):
            raise NonFiniteInput(f"{name} must be finite")
    return CuboidMagnet(
        float(a), float(b), float(c), pose or IDENTITY, muB_per_um_to_si(float(m_s_muB_per_um)), float(mu_r)
    )


@dataclass(frozen=True)
class Scene:
    """Ordered collection of magnets sharing the ambient permeability ``mu_r``."""

    magnets: tuple = ()
    mu_r: float = 1.0

    def __post_init__(self):
        mags = tuple(self.magnets)
        if not math.isfinite(self.mu_r) or self.mu_r <= 0:
            raise NonPositiveDimension("ambient mu_r must be finite and > 0")
        for i, m in enumerate(mags):
            if not isinstance(m, CuboidMagnet):
                raise TypeError(f"magnets[{i}] is not a CuboidMagnet")
            if m.mu_r != self.mu_r:
                raise ValueError(f"magnets[{i}].mu_r={m.mu_r} differs from scene mu_r={self.mu_r}")
        object.__setattr__(self, "magnets", mags)

    def __add__(self, other):
        if not isinstance(other, Scene):
            return NotImplemented
        return Scene(self.magnets + other.magnets, self.mu_r)

    def __len__(self):
        return len(self.magnets)

    def scaled(self, factor):
        return Scene(tuple(m.scaled(factor) for m in self.magnets), self.mu_r)


def preset_vls_shell(length, width, thickness, m_s_muB_per_um, pose=None):
    """Single-cuboid model of the EuS shell on a VLS nanowire.

    The cuboid has ``(a, b, c) = (thickness, width, length)`` so that the long
    axis, and the magnetization, run along the magnet-frame z axis.
    """
    return Scene((make_cuboid(thickness, width, length, pose, m_s_muB_per_um),))
