"""
Domain matching at EuS interfaces
=================================

Lattice periods along crystal directions, n:m domain matches between film
and substrate, and what an in-plane rotation does to a poor match.

Run with ``python demos/03_interface_matching.py``.
"""

# %%
from straymag import MATERIALS, conventional_over, interface_report, period_along, rotated_mismatch
from straymag.epitaxy import PAIRS, search_matches

eus, wz = MATERIALS["EuS"], MATERIALS["InAs-WZ"]
for d in ("[1-10]", "[111]", "[112]", "[332]"):
    print(f"EuS {d:7s} period {period_along(eus, d):7.4f} A")
print(f"EuS [332]   third of the cubic vector {period_along(eus, '[332]', conventional_over(3)):7.4f} A")
for d in ("[11-20]", "[1-100]", "[0001]"):
    print(f"WZ  {d:7s} period {period_along(wz, d):7.4f} A")

# %%
# Best n:m coincidences for one direction pair.
for dm in search_matches(eus, "[11-1]", wz, "[1-100]", n_max=5)[:4]:
    print(f"{dm.label:40s} {100 * dm.mismatch:+.2f}%")

# %%
# The named interfaces.
for pair in PAIRS:
    print(interface_report(pair).table())
    print()

# %%
# Rotating the film in plane stretches its effective period by 1 / cos(angle).
for angle in (0, 5, 10, 15, 20):
    print(f"{angle:2d} deg: {100 * rotated_mismatch(-0.0713, angle):+.2f}%")
