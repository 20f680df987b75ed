"""
Stray field of a magnetic shell on a nanowire
=============================================

A 3 nm thick, 50 nm wide, 10 um long ferromagnetic shell sits on one facet of
a nanowire lying on the substrate, magnetized along the wire.  We look at the
field inside the semiconductor next to it, compare the closed-form cuboid
field with brute-force quadrature, and watch it turn into a dipole far away.

Run with ``python demos/01_wire_stray_field.py``.
"""

# %%
import numpy as np

from straymag import UM, cuboid_field, oracle_field, sample_line
from straymag.magnetostatics import dipole_field
from straymag.config import data_path, parse_scene

scene = parse_scene(data_path("figS7.json"))
wire = scene.magnets[0]
print(f"shell {wire.a * 1e9:.0f} nm x {wire.b * 1e9:.0f} nm x {wire.c / UM:.0f} um, "
      f"moment {wire.total_moment:.3e} A m^2 along {wire.moment_vector / wire.total_moment}")

# %%
# Field along the wire, 50 nm beside the shell at mid-height.
samples = sample_line(scene, [-5 * UM, -50e-9, 25e-9], [5 * UM, -50e-9, 25e-9], 201, axis=[1, 0, 0])
x = np.array([s.position[0] for s in samples]) / UM
bmag = np.array([s.B_mag for s in samples])
for k in (0, 5, 20, 50, 100, 150, 180, 195, 200):
    print(f"x = {x[k]:+6.2f} um   |B| = {bmag[k] * 1e3:9.4f} mT")
print(f"mid / end = {bmag[100] / bmag[0]:.1e}: the field lives at the two ends")

# %%
# The closed form against midpoint-rule quadrature over the sheet currents.
pts = np.array([[0.0, -50e-9, 25e-9], [4.9 * UM, -20e-9, 60e-9], [5.2 * UM, 0.0, 25e-9]])
Ba, Bo = cuboid_field(wire, pts), oracle_field(wire, pts, tol=1e-7)
print("relative difference:", np.max(np.abs(Ba - Bo), axis=1) / np.linalg.norm(Bo, axis=1))

# %%
# Far away the shell is a point dipole at its centre.
for f in (2, 10, 100):
    p = wire.center + np.array([0.0, 0.0, f * wire.c])
    Bc, Bd = cuboid_field(wire, p[None]), dipole_field(wire.moment_vector, wire.center, p[None])
    print(f"r = {f:3d} x length: |B - B_dipole| / |B_dipole| = {np.linalg.norm(Bc - Bd) / np.linalg.norm(Bd):.2e}")
