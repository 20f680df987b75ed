"""JSON configuration files: scenes, sensors and lattice overrides.

Scene file::

    {"mu_r": 1.0,
     "magnets": [{"dims_nm": [3, 50, 10000], "position_nm": [-5000, -1.5, 0],
                  "axis": [1, 0, 0], "m_s_muB_per_um": 3e7}]}

``position_nm`` is the world location of the magnet-frame origin (the corner
the cuboid grows from); ``axis`` is the magnetization direction.  Sensor file::

    {"pickup_radius_nm": 100, "scan_height_nm": 700, "psf": "kernel.csv"}
"""

from __future__ import annotations

import json
import math
import os

from .errors import NonFiniteInput, NonPositiveDimension, ParseError, SchemaError, StrayMagError, ValidationError
from .scene import NM, Scene, make_cuboid, pose_from_axis

_MAGNET_KEYS = {"dims_nm", "position_nm", "axis", "m_s_muB_per_um"}
_SCENE_KEYS = {"magnets", "mu_r"}
_SENSOR_KEYS = {"pickup_radius_nm", "scan_height_nm", "psf"}


def load_json(path):
    """Read a JSON document, reporting syntax errors with line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", exc.lineno, exc.colno) from exc


def _number(val, path):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {type(val).__name__}", path)
    return float(val)


def _vec3(val, path):
    if not isinstance(val, list) or len(val) != 3:
        raise SchemaError(f"{path}: expected a list of 3 numbers", path)
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(val)]


def _reject_unknown(obj, allowed, path):
    extra = sorted(set(obj) - allowed)
    if extra:
        where = f"{path}.{extra[0]}" if path else extra[0]
        raise SchemaError(f"{where}: unknown key", where)


def scene_from_dict(doc):
    """Validate a scene document (already decoded) into a :class:`Scene`."""
    if not isinstance(doc, dict):
        raise SchemaError("scene must be a JSON object", "")
    _reject_unknown(doc, _SCENE_KEYS, "")
    if "magnets" not in doc:
        raise SchemaError("magnets: required key missing", "magnets")
    mu_r = _number(doc.get("mu_r", 1.0), "mu_r")
    if not (math.isfinite(mu_r) and mu_r > 0):
        raise ValidationError(f"mu_r: must be > 0, got {mu_r}", "mu_r")
    mags = doc["magnets"]
    if not isinstance(mags, list):
        raise SchemaError("magnets: expected a list", "magnets")
    out = []
    for i, mag in enumerate(mags):
        base = f"magnets[{i}]"
        if not isinstance(mag, dict):
            raise SchemaError(f"{base}: expected an object", base)
        _reject_unknown(mag, _MAGNET_KEYS, base)
        for key in sorted(_MAGNET_KEYS):
            if key not in mag:
                raise SchemaError(f"{base}.{key}: required key missing", f"{base}.{key}")
        dims = _vec3(mag["dims_nm"], f"{base}.dims_nm")
        pos = _vec3(mag["position_nm"], f"{base}.position_nm")
        axis = _vec3(mag["axis"], f"{base}.axis")
        m_s = _number(mag["m_s_muB_per_um"], f"{base}.m_s_muB_per_um")
        if not all(math.isfinite(d) and d > 0 for d in dims):
            raise ValidationError(f"{base}.dims_nm: all dimensions must be finite and > 0, got {dims}", f"{base}.dims_nm")
        if not all(math.isfinite(p) for p in pos):
            raise ValidationError(f"{base}.position_nm: must be finite", f"{base}.position_nm")
        if not all(math.isfinite(u) for u in axis) or not any(axis):
            raise ValidationError(f"{base}.axis: must be a finite non-zero vector", f"{base}.axis")
        if not math.isfinite(m_s):
            raise ValidationError(f"{base}.m_s_muB_per_um: must be finite", f"{base}.m_s_muB_per_um")
        try:
            pose = pose_from_axis([p * NM for p in pos], axis)
            out.append(make_cuboid(dims[0] * NM, dims[1] * NM, dims[2] * NM, pose, m_s, mu_r))
        except StrayMagError as exc:
            raise ValidationError(f"{base}: {exc}", base) from exc
    return Scene(tuple(out), mu_r)


def parse_scene(path):
    """Load and validate a scene JSON file."""
    return scene_from_dict(load_json(path))


def parse_sensor(path):
    """Load a sensor JSON file into a :class:`~straymag.squid.SensorSpec`.

    A relative ``psf`` path is resolved against the sensor file's directory.
    """
    from .squid import SensorSpec, load_psf_csv

    doc = load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError("sensor must be a JSON object", "")
    _reject_unknown(doc, _SENSOR_KEYS, "")
    for key in ("pickup_radius_nm", "scan_height_nm"):
        if key not in doc:
            raise SchemaError(f"{key}: required key missing", key)
    radius = _number(doc["pickup_radius_nm"], "pickup_radius_nm")
    height = _number(doc["scan_height_nm"], "scan_height_nm")
    for key, val in (("pickup_radius_nm", radius), ("scan_height_nm", height)):
        if not (math.isfinite(val) and val > 0):
            raise ValidationError(f"{key}: must be > 0, got {val}", key)
    psf = None
    if doc.get("psf") is not None:
        if not isinstance(doc["psf"], str):
            raise SchemaError("psf: expected a file path", "psf")
        psf_path = doc["psf"]
        if not os.path.isabs(psf_path):
            psf_path = os.path.join(os.path.dirname(os.path.abspath(path)), psf_path)
        psf = load_psf_csv(psf_path)
    return SensorSpec(radius * NM, height * NM, psf)


def data_path(name):
    """Path of a fixture shipped in the package ``data`` directory."""
    return os.path.join(os.path.dirname(__file__), "data", name)


__all__ = [
    "NonFiniteInput",
    "NonPositiveDimension",
    "data_path",
    "load_json",
    "parse_scene",
    "parse_sensor",
    "scene_from_dict",
]
