import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from straymag import epitaxy as ep
from straymag.errors import AngleOutOfRange, FourIndexInvalid, UnknownMaterial, UnknownPair, ZeroDirection

EuS = ep.MATERIALS["EuS"]
Al = ep.MATERIALS["Al"]
WZ = ep.MATERIALS["InAs-WZ"]
ZB = ep.MATERIALS["InAs-ZB"]
S, C3 = ep.SHORTEST, ep.conventional_over(3)


def brute_force_period(lat, d, reach=4):
    """Shortest lattice translation along ``d`` by enumerating small combinations."""
    target = ep.direction_vector(lat, d)
    t_hat = target / np.linalg.norm(target)
    P = lat.primitive_vectors()
    best = math.inf
    for n in itertools.product(range(-reach, reach + 1), repeat=3):
        v = np.array(n, float) @ P
        L = np.linalg.norm(v)
        if L > 0 and np.linalg.norm(np.cross(v, t_hat)) < 1e-9 * L and v @ t_hat > 0:
            best = min(best, L)
    return best


def test_direction_vector_examples():
    cub = ep.Lattice("cubic_P", 1.0)
    assert np.allclose(ep.direction_vector(cub, "[100]"), [1, 0, 0])
    assert np.allclose(ep.direction_vector(WZ, "[0001]"), [0, 0, WZ.c])
    v = ep.direction_vector(WZ, "[11-20]")
    assert np.linalg.norm(v) == pytest.approx(3 * WZ.a, rel=1e-14)
    assert ep.period_along(WZ, "[11-20]") == pytest.approx(WZ.a, rel=1e-14)
    assert ep.period_along(WZ, "[1-100]") == pytest.approx(WZ.a * math.sqrt(3), rel=1e-14)
    assert ep.period_along(WZ, "[000-1]") == pytest.approx(WZ.c, rel=1e-14)


def test_period_examples():
    a = EuS.a
    assert ep.period_along(EuS, "[1-10]") == pytest.approx(a / math.sqrt(2), rel=1e-14)
    assert ep.period_along(EuS, "[1-10]") == pytest.approx(4.2201, abs=2e-4)
    assert ep.period_along(EuS, "[111]") == pytest.approx(a * math.sqrt(3), rel=1e-14)
    assert ep.period_along(EuS, "[332]", C3) == pytest.approx(a * math.sqrt(22) / 3, rel=1e-14)
    assert ep.period_along(EuS, "[332]") == pytest.approx(a * math.sqrt(22) / 2, rel=1e-14)
    assert ep.period_along(EuS, "[112]") == pytest.approx(a * math.sqrt(6) / 2, rel=1e-14)


@pytest.mark.parametrize(
    "lat,d",
    [(EuS, "[1-10]"), (EuS, "[111]"), (EuS, "[332]"), (EuS, "[112]"), (EuS, "[100]"), (Al, "[-1-1-1]"),
     (WZ, "[11-20]"), (WZ, "[1-100]"), (WZ, "[0001]"), (WZ, "[1-101]"), (ep.Lattice("cubic_P", 2.0), "[220]")],
)
def test_shortest_matches_enumeration(lat, d):
    assert ep.period_along(lat, d) == pytest.approx(brute_force_period(lat, d), rel=1e-12)


@pytest.mark.parametrize(
    "args,target,tol",
    [
        ((1, EuS, "[1-10]", S, 1, WZ, "[11-20]", S), -0.015, 0.003),
        ((1, EuS, "[112]", S, 1, WZ, "[0001]", S), 0.045, 0.003),
        ((3, Al, "[1-10]", S, 2, EuS, "[1-10]", S), 0.018, 0.003),
        ((2, EuS, "[11-1]", S, 3, WZ, "[1-100]", S), -0.071, 0.003),
        ((4, Al, "[-1-1-1]", S, 3, EuS, "[332]", C3), 0.002, 0.003),
        ((3, EuS, "[332]", C3, 4, WZ, "[000-1]", S), 0.0, 0.005),
    ],
)
def test_residual_mismatch_reference_values(args, target, tol):
    assert abs(ep.residual_mismatch(*args) - target) <= tol


def test_rotated_mismatch():
    assert ep.rotated_mismatch(-0.0123, 0) == pytest.approx(-0.0123, abs=1e-16)
    assert ep.rotated_mismatch(-0.071, 15) == pytest.approx(-0.038, abs=0.002)
    assert ep.rotated_mismatch(0.0, 60) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(AngleOutOfRange):
        ep.rotated_mismatch(0.0, 90)


def test_search_matches_examples():
    top = ep.search_matches(EuS, "[1-10]", WZ, "[11-20]", 4)[0]
    assert (top.n, top.m) == (1, 1)
    assert top.mismatch == pytest.approx(-0.015, abs=0.003)
    top = ep.search_matches(Al, "[-1-1-1]", EuS, "[332]", 5, [(S, C3)])[0]
    assert (top.n, top.m) == (4, 3)
    assert top.mismatch == pytest.approx(0.002, abs=0.003)
    same = ep.search_matches(EuS, "[110]", EuS, "[110]", 3)[0]
    assert (same.n, same.m, same.mismatch) == (1, 1, 0.0)


def test_search_tie_between_conventions():
    # half of [332] is 3/2 of the third-of-[332] unit, so 2:1 and 4:3 tie exactly
    both = ep.search_matches(Al, "[-1-1-1]", EuS, "[332]", 5, [(S, S), (S, C3)])
    assert (both[0].n, both[0].m) == (2, 1)
    assert both[0].mismatch == pytest.approx(both[2].mismatch, abs=1e-15)


def test_domain_match_invariant():
    dm = ep.DomainMatch.build(2, EuS, "[11-1]", 3, WZ, "[1-100]", rotation_deg=15)
    expected = dm.n * dm.L_film / math.cos(math.radians(15)) / (dm.m * dm.L_sub) - 1
    assert dm.mismatch == pytest.approx(expected, abs=1e-12)
    assert "15deg off [11-1]" in dm.label


def test_interface_reports():
    rep = ep.interface_report("InAs-WZ/EuS{1-100}")
    par, perp = rep.get("parallel"), rep.get("transverse")
    assert (par.n, str(par.dir_film), par.m, str(par.dir_sub)) == (3, "[332]", 4, "[000-1]")
    assert abs(par.mismatch) <= 0.005
    assert perp.mismatch == pytest.approx(-0.015, abs=0.003)
    rep = ep.interface_report("EuS/Al")
    assert (rep.get("parallel").n, rep.get("parallel").m) == (4, 3)
    assert rep.get("parallel").mismatch == pytest.approx(0.002, abs=0.003)
    assert (rep.get("transverse").n, rep.get("transverse").m) == (3, 2)
    assert rep.get("transverse").mismatch == pytest.approx(0.018, abs=0.003)
    rep = ep.interface_report("InAs-WZ/EuS{11-20}")
    assert rep.get("transverse_rotated").mismatch == pytest.approx(-0.038, abs=0.002)
    rep = ep.interface_report("InAs-ZB/EuS")
    cube = (EuS.a - ZB.a) / ZB.a
    assert rep.get("parallel").mismatch == pytest.approx(cube, rel=1e-12)
    assert rep.get("transverse").mismatch == pytest.approx(cube, rel=1e-12)
    with pytest.raises(UnknownPair):
        ep.interface_report("GaAs/EuS")
    assert "mismatch/%" in ep.interface_report("InAs-WZ/EuS on {1-100}").table()


def test_direction_errors():
    with pytest.raises(ZeroDirection):
        ep.parse_direction("[000]")
    with pytest.raises(FourIndexInvalid):
        ep.parse_direction("[1120]")
    with pytest.raises(FourIndexInvalid):
        ep.direction_vector(EuS, "[11-20]")
    assert ep.parse_direction("[1 -1 0]") == ep.parse_direction("1,-1,0") == ep.Direction((1, -1, 0))
    with pytest.raises(UnknownMaterial):
        ep.lattice("Unobtainium")


def test_lattice_override_file(tmp_path):
    path = tmp_path / "lat.json"
    path.write_text('{"EuS": {"system": "cubic_F", "a": 6.2664}}')
    mats = ep.load_lattices(path)
    assert mats["EuS"].a == 6.2664 and mats["Al"] is ep.MATERIALS["Al"]
    rep = ep.interface_report("InAs-WZ/EuS{1-100}", mats)
    assert rep.get("transverse").mismatch > 0.03


# properties ------------------------------------------------------------------

small = st.integers(-3, 3)
cubic_dir = st.tuples(small, small, small).filter(any)
hex_dir = st.tuples(small, small, small).filter(any).map(lambda t: (t[0], t[1], -(t[0] + t[1]), t[2]))
lattices = st.sampled_from([EuS, Al, ZB, ep.Lattice("cubic_P", 3.1)])


@settings(max_examples=80, deadline=None)
@given(lattices, cubic_dir)
def test_shortest_is_lattice_translation_cubic(lat, d):
    L = ep.period_along(lat, d)
    v = ep.direction_vector(lat, d)
    v = v / np.linalg.norm(v) * L
    coords = np.linalg.solve(lat.primitive_vectors().T, v)
    assert np.allclose(coords, np.round(coords), atol=1e-9)
    assert ep.period_along(lat, tuple(-i for i in d)) == L


@settings(max_examples=60, deadline=None)
@given(hex_dir)
def test_shortest_is_lattice_translation_hex(d):
    L = ep.period_along(WZ, d)
    v = ep.direction_vector(WZ, d)
    coords = np.linalg.solve(WZ.primitive_vectors().T, v / np.linalg.norm(v) * L)
    assert np.allclose(coords, np.round(coords), atol=1e-9)
    assert ep.period_along(WZ, tuple(-i for i in d)) == L


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), cubic_dir, st.integers(1, 5), hex_dir, st.floats(0.5, 2.0))
def test_swap_and_scale_invariance(n, df, m, ds, lam):
    f = ep.residual_mismatch(n, EuS, df, S, m, WZ, ds, S)
    g = ep.residual_mismatch(m, WZ, ds, S, n, EuS, df, S)
    assert g == pytest.approx(1 / (1 + f) - 1, rel=1e-12, abs=1e-15)
    fs = ep.residual_mismatch(n, EuS.scaled(lam), df, S, m, WZ.scaled(lam), ds, S)
    assert fs == pytest.approx(f, rel=1e-12, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0, 89), st.floats(0, 89))
def test_rotation_monotone_in_angle(f, t1, t2):
    if abs(t1) < abs(t2):
        t1, t2 = t2, t1
    assert ep.rotated_mismatch(f, t1) >= ep.rotated_mismatch(f, t2)
    if t1 - t2 > 1e-3:
        assert ep.rotated_mismatch(f, t1) > ep.rotated_mismatch(f, t2)
    assert ep.rotated_mismatch(f, t1) == ep.rotated_mismatch(f, -t1)


@settings(max_examples=30, deadline=None)
@given(cubic_dir, hex_dir, st.integers(1, 6), st.integers(0, 3))
def test_search_never_worse_with_larger_nmax(df, ds, n_max, extra):
    a = ep.search_matches(EuS, df, WZ, ds, n_max)[0]
    b = ep.search_matches(EuS, df, WZ, ds, n_max + extra)[0]
    assert abs(b.mismatch) <= abs(a.mismatch)
