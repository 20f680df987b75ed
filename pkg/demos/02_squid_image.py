"""
Scanning SQUID image of a magnetized wire
=========================================

Forward-simulate the flux a pickup loop sees while rastering over the wire,
then go backwards: turn a measured peak-to-peak flux into a moment per length,
and fit a point dipole to a synthetic image.

Run with ``python demos/02_squid_image.py``.
"""

# %%
import numpy as np

from straymag import LARGE_SENSOR, SMALL_SENSOR, UM, DipoleFit, estimate_moment, fit_dipole, peak_to_peak, scan_image
from straymag.squid import dipole_image
from straymag.validation import wire_scene

scene = wire_scene()
grid = ([-10 * UM, -10 * UM, 0.0], [20 * UM, 0, 0], [0, 20 * UM, 0], 21, 21)

# %%
for name, sensor in (("small", SMALL_SENSOR), ("large", LARGE_SENSOR)):
    img = scan_image(scene, sensor, *grid)
    print(f"{name} loop (r = {sensor.pickup_radius / UM:g} um, h = {sensor.scan_height / UM:g} um): "
          f"peak-to-peak {peak_to_peak(img):7.2f} mPhi0")

# The image has two lobes of opposite sign over the wire ends.
img = scan_image(scene, LARGE_SENSOR, *grid)
row = img.flux[:, 10] * 1000
print("flux along the wire axis / mPhi0:", np.array2string(row[::2], precision=1))

# %%
# Scale the wire moment until the simulated contrast matches a measured one.
measured = 61.0
m_s = estimate_moment(measured, scene, LARGE_SENSOR, *grid)
print(f"{measured} mPhi0 peak-to-peak -> {m_s:.3g} muB/um (template used 3e7)")

# %%
# A single dipole is recovered from its own noiseless image.
pos, m = np.array([1.3e-6, -0.7e-6, 0.0]), np.array([2e-15, -1e-15, 5e-16])
small_grid = ([-5 * UM, -5 * UM, 0.0], [10 * UM, 0, 0], [0, 10 * UM, 0], 21, 21)
synthetic = dipole_image(pos, m, SMALL_SENSOR, *small_grid)
fit = fit_dipole(synthetic, SMALL_SENSOR, DipoleFit(np.array([0.5e-6, 0, 0]), np.array([1e-15, 0, 0]), 0.0))
print(f"fit after {fit.iterations} steps: position {fit.position / UM} um, moment {fit.moment} A m^2")
