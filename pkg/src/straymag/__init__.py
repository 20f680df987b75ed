"""Stray fields of magnetized nanowire shells, scanning-SQUID imaging and
epitaxial domain matching.

Submodules:

* :mod:`straymag.scene` -- cuboid magnets, poses, units.
* :mod:`straymag.magnetostatics` -- closed-form and quadrature fields.
* :mod:`straymag.squid` -- pickup-loop flux images, moment estimates, dipole fits.
* :mod:`straymag.epitaxy` -- lattice periods and domain-match mismatches.
* :mod:`straymag.config`, :mod:`straymag.cli` -- file formats and the command line.
"""

from .errors import *  # noqa: F401,F403
from .scene import (
    CONSTANTS,
    IDENTITY,
    MU0,
    MU_B,
    NM,
    PHI0,
    UM,
    CuboidMagnet,
    Pose,
    Scene,
    make_cuboid,
    muB_per_um_to_si,
    pose_from_axis,
    preset_vls_shell,
    si_to_muB_per_um,
    to_magnet_frame,
    to_world,
)
from .magnetostatics import (
    FieldGrid,
    FieldSample,
    QuadratureSpec,
    cuboid_field,
    field_analytic,
    field_dipole,
    field_oracle,
    field_scene,
    kernel_psi,
    kernel_xi,
    oracle_field,
    sample_grid,
    sample_line,
    scene_field,
    sheet_current,
)
from .squid import (
    LARGE_SENSOR,
    SMALL_SENSOR,
    DipoleFit,
    PsfKernel,
    ScanImage,
    SensorSpec,
    apply_psf,
    dipole_image,
    estimate_moment,
    fit_dipole,
    flux_pickup,
    peak_to_peak,
    scan_image,
)
from .epitaxy import (
    MATERIALS,
    SHORTEST,
    Direction,
    DomainMatch,
    Lattice,
    MatchReport,
    conventional_over,
    direction_vector,
    interface_report,
    period_along,
    residual_mismatch,
    rotated_mismatch,
    search_matches,
)
from .config import parse_scene, parse_sensor

__version__ = "0.1.0"
