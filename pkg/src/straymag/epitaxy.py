"""Domain-matching arithmetic for epitaxial interfaces.

Only Bravais translation lattices are modelled: rock-salt, zinc-blende and fcc
metals are ``cubic_F``, wurtzite is ``hexagonal_P``.  A domain match pairs
``n`` film periods with ``m`` substrate periods along parallel directions; the
residual mismatch is film over substrate::

    f = n * L_film / (m * L_sub) - 1

Lengths are in angstrom throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math
import re

import numpy as np

from .errors import (
    AngleOutOfRange,
    FourIndexInvalid,
    NonPositiveDimension,
    SchemaError,
    UnknownMaterial,
    UnknownPair,
    ValidationError,
    ZeroDirection,
)

SYSTEMS = ("cubic_P", "cubic_F", "hexagonal_P")


@dataclass(frozen=True)
class Lattice:
    system: str
    a: float
    c: float | None = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown lattice system {self.system!r}; expected one of {SYSTEMS}")
        if not (math.isfinite(self.a) and self.a > 0):
            raise NonPositiveDimension(f"lattice constant a must be > 0, got {self.a}")
        if self.system == "hexagonal_P":
            if self.c is None or not (math.isfinite(self.c) and self.c > 0):
                raise NonPositiveDimension(f"hexagonal lattice needs c > 0, got {self.c}")
        elif self.c is not None:
            raise ValueError("c is only meaningful for hexagonal lattices")

    @property
    def is_hexagonal(self):
        return self.system == "hexagonal_P"

    def index_basis(self):
        """Cartesian vectors (rows) that direction indices multiply."""
        if self.is_hexagonal:
            a, c = self.a, self.c
            return np.array([[a, 0.0, 0.0], [-a / 2, a * math.sqrt(3) / 2, 0.0], [0.0, 0.0, c]])
        return self.a * np.eye(3)

    def primitive_vectors(self):
        """Primitive translation vectors (rows), Cartesian, in angstrom."""
        return np.array([[float(x) for x in row] for row in _PRIMITIVE[self.system]]) @ self.index_basis()

    def scaled(self, factor):
        return Lattice(self.system, self.a * factor, None if self.c is None else self.c * factor)


# primitive vectors in units of the index basis (rows)
_H = Fraction(1, 2)
_PRIMITIVE = {
    "cubic_P": ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    "cubic_F": ((_H, _H, 0), (_H, 0, _H), (0, _H, _H)),
    "hexagonal_P": ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
}


@dataclass(frozen=True)
class Direction:
    """Lattice direction, three-index ``[u v w]`` or Miller-Bravais ``[u v t w]``."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(int(i) != i for i in self.indices):
            raise ValueError(f"direction indices must be integers: {self.indices}")
        if len(idx) not in (3, 4):
            raise ValueError(f"direction needs 3 or 4 indices, got {len(idx)}")
        if not any(idx):
            raise ZeroDirection("direction indices are all zero")
        if len(idx) == 4 and idx[2] != -(idx[0] + idx[1]):
            raise FourIndexInvalid(f"Miller-Bravais index t={idx[2]} must equal -(u+v)={-(idx[0] + idx[1])}")
        object.__setattr__(self, "indices", idx)

    def three_index(self):
        """``[U V W]`` in the a1, a2, c basis (``[u-t, v-t, w]`` for four indices)."""
        if len(self.indices) == 4:
            u, v, t, w = self.indices
            return (u - t, v - t, w)
        return self.indices

    def __neg__(self):
        return Direction(tuple(-i for i in self.indices))

    def __str__(self):
        return "[" + "".join(str(i) for i in self.indices) + "]"


def parse_direction(text):
    """Parse ``"[1-10]"``, ``"[1 -1 0]"``, ``"1,-1,0"`` or ``"[11-20]"``."""
    if isinstance(text, Direction):
        return text
    if not isinstance(text, str):
        return Direction(tuple(text))
    body = text.strip().strip("[]<>").strip()
    if re.search(r"[\s,]", body):
        parts = [p for p in re.split(r"[\s,]+", body) if p]
    else:
        parts = re.findall(r"-?\d", body)
        if "".join(parts) != body:
            raise ValueError(f"cannot parse direction {text!r}")
    try:
        return Direction(tuple(int(p) for p in parts))
    except ValueError as exc:
        if isinstance(exc, (ZeroDirection, FourIndexInvalid)):
            raise
        raise ValueError(f"cannot parse direction {text!r}") from exc


def _check_direction(lat, d):
    d = parse_direction(d)
    if len(d.indices) == 4 and not lat.is_hexagonal:
        raise FourIndexInvalid(f"four-index direction {d} on a {lat.system} lattice")
    return d


def direction_vector(lat, d):
    """Cartesian vector (angstrom) of direction ``d``, before any reduction.

    Hexagonal lattices use a1 along x, a2 at 120 degrees, a3 = -(a1 + a2) and
    c along z; four-index directions sum over all three basal vectors.
    """
    d = _check_direction(lat, d)
    return np.asarray(d.three_index(), dtype=float) @ lat.index_basis()


@dataclass(frozen=True)
class Convention:
    """How to turn a direction into a repeat length.

    ``shortest_translation`` is the shortest lattice vector along the direction.
    ``conventional_over`` with ``k`` is ``|direction_vector| / gcd(indices) / k``,
    which need not be a lattice translation.
    """

    kind: str = "shortest_translation"
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("shortest_translation", "conventional_over"):
            raise ValueError(f"unknown period convention {self.kind!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("conventional_over needs a positive integer k")

    def __str__(self):
        return self.kind if self.kind == "shortest_translation" else f"conventional_over({self.k})"


SHORTEST = Convention()


def conventional_over(k):
    return Convention("conventional_over", int(k))


def parse_convention(text):
    if isinstance(text, Convention):
        return text
    text = str(text).strip()
    if text in ("shortest", "shortest_translation"):
        return SHORTEST
    mt = re.fullmatch(r"conventional_over\((\d+)\)", text)
    if mt:
        return conventional_over(int(mt.group(1)))
    raise ValueError(f"cannot parse period convention {text!r}")


def _inverse(mat):
    """Exact inverse of a 3x3 matrix of Fractions (Gauss-Jordan)."""
    n = 3
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def primitive_coords(lat, d):
    """Rational coordinates of direction ``d`` in the primitive basis."""
    d = _check_direction(lat, d)
    inv = _inverse(_PRIMITIVE[lat.system])
    # row vector: idx = x @ P  ->  x = idx @ P^-1
    idx = [Fraction(i) for i in d.three_index()]
    return tuple(sum(idx[k] * inv[k][j] for k in range(3)) for j in range(3))


def shortest_translation(lat, d):
    """Integer primitive coordinates of the shortest lattice vector along ``d``."""
    x = primitive_coords(lat, d)
    den = math.lcm(*(q.denominator for q in x))
    ints = [int(q * den) for q in x]
    g = math.gcd(*ints)
    return tuple(i // g for i in ints)


def period_along(lat, d, convention=SHORTEST):
    """Repeat length (angstrom) along ``d`` under ``convention``."""
    d = _check_direction(lat, d)
    convention = parse_convention(convention)
    if convention.kind == "shortest_translation":
        coords = np.asarray(shortest_translation(lat, d), dtype=float)
        return float(np.linalg.norm(coords @ lat.primitive_vectors()))
    g = math.gcd(*d.three_index())
    return float(np.linalg.norm(direction_vector(lat, d))) / g / convention.k


def residual_mismatch(n, lat_f, dir_f, conv_f, m, lat_s, dir_s, conv_s):
    """Signed mismatch of ``n`` film periods against ``m`` substrate periods."""
    if n < 1 or m < 1:
        raise ValueError("domain multiplicities must be >= 1")
    lf = period_along(lat_f, dir_f, conv_f)
    ls = period_along(lat_s, dir_s, conv_s)
    return (n * lf) / (m * ls) - 1.0


def rotated_mismatch(f, theta_deg):
    """Mismatch after rotating the film rows by ``theta_deg`` in plane.

    The effective film repeat along the matching direction grows by sec(theta).
    """
    if not abs(theta_deg) < 90:
        raise AngleOutOfRange(f"rotation must satisfy |theta| < 90 deg, got {theta_deg}")
    return (1.0 + f) / math.cos(math.radians(theta_deg)) - 1.0


@dataclass(frozen=True)
class DomainMatch:
    n: int
    m: int
    dir_film: Direction
    dir_sub: Direction
    L_film: float
    L_sub: float
    rotation_deg: float = 0.0
    mismatch: float = field(default=float("nan"))
    conv_film: Convention = SHORTEST
    conv_sub: Convention = SHORTEST

    @classmethod
    def build(cls, n, lat_f, dir_f, m, lat_s, dir_s, rotation_deg=0.0, conv_f=SHORTEST, conv_s=SHORTEST):
        dir_f, dir_s = parse_direction(dir_f), parse_direction(dir_s)
        conv_f, conv_s = parse_convention(conv_f), parse_convention(conv_s)
        lf = period_along(lat_f, dir_f, conv_f)
        ls = period_along(lat_s, dir_s, conv_s)
        f = (n * lf) / (m * ls) - 1.0
        if rotation_deg:
            f = rotated_mismatch(f, rotation_deg)
        return cls(n, m, dir_f, dir_s, lf, ls, float(rotation_deg), f, conv_f, conv_s)

    @property
    def label(self):
        film = f"{self.n}_{self.dir_film}"
        if self.rotation_deg:
            film = f"{self.n}_{self.rotation_deg:g}deg off {self.dir_film}"
        return f"({film}/{self.m}_{self.dir_sub}, {100 * self.mismatch:+.1f}%)"

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "dir_film": str(self.dir_film),
            "dir_sub": str(self.dir_sub),
            "conv_film": str(self.conv_film),
            "conv_sub": str(self.conv_sub),
            "L_film_A": self.L_film,
            "L_sub_A": self.L_sub,
            "rotation_deg": self.rotation_deg,
            "mismatch": self.mismatch,
            "mismatch_pct": 100 * self.mismatch,
            "label": self.label,
        }


def search_matches(lat_f, dir_f, lat_s, dir_s, n_max, conventions=None):
    """All ``(n, m)`` in ``[1, n_max]^2`` for each (film, substrate) convention pair.

    Ranked by |mismatch|, then smaller ``n + m``, then smaller ``n``.  Mismatches
    are compared after rounding to 1e-12 so that numerically equal matches tie.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    conventions = conventions or [(SHORTEST, SHORTEST)]
    found = []
    for ci, (cf, cs) in enumerate(conventions):
        lf = period_along(lat_f, dir_f, cf)
        ls = period_along(lat_s, dir_s, cs)
        for n in range(1, n_max + 1):
            for m in range(1, n_max + 1):
                f = (n * lf) / (m * ls) - 1.0
                dm = DomainMatch(
                    n, m, parse_direction(dir_f), parse_direction(dir_s), lf, ls, 0.0, f,
                    parse_convention(cf), parse_convention(cs),
                )
                found.append(((round(abs(f), 12), n + m, n, ci), dm))
    found.sort(key=lambda item: item[0])
    return [dm for _, dm in found]


# --------------------------------------------------------------------------
# materials and named interfaces

MATERIALS = {
    "Al": Lattice("cubic_F", 4.0495),
    "EuS": Lattice("cubic_F", 5.968),
    "InAs-ZB": Lattice("cubic_F", 6.0583),
    "InAs-WZ": Lattice("hexagonal_P", 4.2839, 6.9954),
}


def lattice(name, materials=None):
    table = MATERIALS if materials is None else materials
    try:
        return table[name]
    except KeyError:
        raise UnknownMaterial(f"unknown material {name!r}; known: {', '.join(sorted(table))}") from None


def load_lattices(path, base=None):
    """Merge a JSON ``{name: {system, a, c}}`` override file onto ``base``."""
    from .config import load_json

    doc = load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError("lattice file must be a JSON object", "")
    out = dict(MATERIALS if base is None else base)
    for name, spec in doc.items():
        if not isinstance(spec, dict):
            raise SchemaError(f"{name}: expected an object", name)
        extra = set(spec) - {"system", "a", "c"}
        if extra:
            raise SchemaError(f"{name}: unknown key(s) {sorted(extra)}", f"{name}.{sorted(extra)[0]}")
        if "a" not in spec:
            raise SchemaError(f"{name}: missing 'a'", f"{name}.a")
        for key in ("a", "c"):
            if key in spec and (isinstance(spec[key], bool) or not isinstance(spec[key], (int, float))):
                raise SchemaError(f"{name}.{key}: expected a number", f"{name}.{key}")
        system = spec.get("system", out[name].system if name in out else "cubic_F")
        try:
            out[name] = Lattice(system, float(spec["a"]), None if spec.get("c") is None else float(spec["c"]))
        except ValueError as exc:
            raise ValidationError(f"{name}: {exc}", name) from exc
    return out


@dataclass(frozen=True)
class MatchReport:
    pair: str
    film: str
    substrate: str
    entries: tuple  # ((role, DomainMatch), ...)

    def get(self, role):
        for r, dm in self.entries:
            if r == role:
                return dm
        raise KeyError(role)

    def to_dict(self):
        return {
            "pair": self.pair,
            "film": self.film,
            "substrate": self.substrate,
            "entries": [dict(role=r, **dm.to_dict()) for r, dm in self.entries],
        }

    def table(self):
        return format_table(
            [(r, dm) for r, dm in self.entries], title=f"{self.pair}: {self.film} on {self.substrate}"
        )


def format_table(rows, title=None):
    """Aligned plain-text table of ``(role, DomainMatch)`` rows."""
    head = ("role", "n", "film dir", "L_film/A", "m", "sub dir", "L_sub/A", "rot/deg", "mismatch/%")
    body = [
        (
            role,
            str(dm.n),
            f"{dm.dir_film} {dm.conv_film}",
            f"{dm.L_film:.4f}",
            str(dm.m),
            f"{dm.dir_sub} {dm.conv_sub}",
            f"{dm.L_sub:.4f}",
            f"{dm.rotation_deg:g}",
            f"{100 * dm.mismatch:+.2f}",
        )
        for role, dm in rows
    ]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = [title] if title else []
    for r in [head] + body:
        lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


# (film, substrate, [(role, n, film dir, film convention, m, sub dir, sub convention, rotation)])
_PAIRS = {
    "InAs-WZ/EuS{1-100}": (
        "EuS", "InAs-WZ",
        [
            ("parallel", 3, "[332]", conventional_over(3), 4, "[000-1]", SHORTEST, 0.0),
            ("transverse", 1, "[1-10]", SHORTEST, 1, "[11-20]", SHORTEST, 0.0),
        ],
    ),
    "InAs-WZ/EuS{11-20}": (
        "EuS", "InAs-WZ",
        [
            ("parallel", 1, "[112]", SHORTEST, 1, "[0001]", SHORTEST, 0.0),
            ("transverse", 2, "[11-1]", SHORTEST, 3, "[1-100]", SHORTEST, 0.0),
            ("transverse_rotated", 2, "[11-1]", SHORTEST, 3, "[1-100]", SHORTEST, 15.0),
        ],
    ),
    "EuS/Al": (
        "Al", "EuS",
        [
            ("parallel", 4, "[-1-1-1]", SHORTEST, 3, "[332]", conventional_over(3), 0.0),
            ("transverse", 3, "[1-10]", SHORTEST, 2, "[1-10]", SHORTEST, 0.0),
        ],
    ),
    "InAs-ZB/EuS": (
        "EuS", "InAs-ZB",
        [
            ("parallel", 1, "[100]", SHORTEST, 1, "[100]", SHORTEST, 0.0),
            ("transverse", 1, "[0-11]", SHORTEST, 1, "[0-11]", SHORTEST, 0.0),
        ],
    ),
}
PAIRS = tuple(_PAIRS)


def _pair_key(name):
    key = re.sub(r"\s+", "", str(name)).replace("on{", "{")
    for k in _PAIRS:
        if k.lower() == key.lower():
            return k
    raise UnknownPair(f"unknown interface {name!r}; known: {', '.join(PAIRS)}")


def interface_report(pair, materials=None):
    """Parallel and transverse domain matches for a named interface."""
    key = _pair_key(pair)
    film, sub, rows = _PAIRS[key]
    lat_f, lat_s = lattice(film, materials), lattice(sub, materials)
    entries = tuple(
        (role, DomainMatch.build(n, lat_f, df, m, lat_s, ds, rot, cf, cs))
        for role, n, df, cf, m, ds, cs, rot in rows
    )
    return MatchReport(key, film, sub, entries)
