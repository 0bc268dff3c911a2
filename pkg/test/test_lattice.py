import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from lattice.errors import BadValue, CapExceeded, RangeError
from lattice.torus import (
    Shape,
    SpinConfig,
    TorusGeometry,
    all_states,
    ball,
    boundary_size,
    box,
    decode,
    encode,
    enumerate_configs,
    patch,
    translate,
)


def test_encode_puts_first_site_fastest():
    geom = TorusGeometry.chain(3, 2)
    assert encode(SpinConfig(geom, (1, 0, 0))) == 1
    assert encode(SpinConfig(geom, (0, 0, 1))) == 4
    assert decode(geom, 6).states == (0, 1, 1)


def test_decode_inverts_encode_on_a_q3_plane():
    geom = TorusGeometry(2, (2, 2), 3)
    cfg = SpinConfig(geom, (2, 0, 1, 2))
    assert decode(geom, encode(cfg)) == cfg
    assert encode(cfg) == 2 + 0 * 3 + 1 * 9 + 2 * 27


def test_decode_rejects_out_of_range_index():
    geom = TorusGeometry.chain(2, 2)
    with pytest.raises(BadValue):
        decode(geom, 4)


def test_all_states_rows_follow_config_index_order():
    geom = TorusGeometry.chain(2, 3)
    states = all_states(geom)
    assert states.shape == (9, 2)
    assert tuple(states[5]) == (2, 1)
    assert not states.flags.writeable
    assert [c.index() for c in enumerate_configs(geom)] == list(range(9))


def test_cap_is_enforced_and_env_overridable(monkeypatch):
    monkeypatch.delenv("ENTROFLOW_CAP_BITS", raising=False)
    geom = TorusGeometry.chain(25, 2)
    with pytest.raises(CapExceeded) as err:
        geom.check_cap()
    assert err.value.bits == pytest.approx(25.0)
    assert err.value.cap == 24
    monkeypatch.setenv("ENTROFLOW_CAP_BITS", "26")
    geom.check_cap()


def test_geometry_validation():
    with pytest.raises(BadValue):
        TorusGeometry(1, (4,), 1)
    with pytest.raises(BadValue):
        TorusGeometry(2, (4,), 2)
    geom = TorusGeometry.from_json({"sides": [3, 4], "q": 2})
    assert geom.d == 2 and geom.n_sites == 12
    assert geom.tag() == "d2-3x4-q2"
    assert TorusGeometry.from_json(geom.to_json()) == geom


def test_spin_config_rejects_bad_states():
    geom = TorusGeometry.chain(3, 2)
    with pytest.raises(BadValue):
        SpinConfig(geom, (0, 2, 0))
    with pytest.raises(BadValue):
        SpinConfig(geom, (0, 1))


def test_torus_distance_wraps_around():
    geom = TorusGeometry(2, (5, 5), 2)
    a = geom.site((0, 0))
    b = geom.site((4, 2))
    assert geom.distance(a, b) == 2
    assert geom.shift(a, (-1, 0)) == geom.site((4, 0))


def test_shape_requires_origin_and_detects_self_overlap():
    with pytest.raises(BadValue):
        Shape.of([(1,), (2,)])
    wide = Shape.of([(-1,), (0,), (1,)])
    with pytest.raises(RangeError):
        wide.require_fit(TorusGeometry.chain(2, 2))
    wide.require_fit(TorusGeometry.chain(3, 2))
    assert Shape.von_neumann(2).size == 5
    assert wide.radius == 1


def test_anchored_translates_contain_origin():
    shape = Shape.of([(0,), (1,)])
    translates = shape.anchored_translates()
    assert [t.offsets for t, _ in translates] == [((0,), (1,)), ((-1,), (0,))]
    for t, pos in translates:
        assert t.offsets[pos] == (0,)


def test_translate_and_patch():
    geom = TorusGeometry.chain(3, 2)
    cfg = SpinConfig(geom, (1, 0, 0))
    assert translate(cfg, (1,)).states == (0, 1, 0)
    assert translate(cfg, (3,)) == cfg
    assert patch(cfg, [1, 2], {1: 1, 2: 1}).states == (1, 1, 1)
    with pytest.raises(BadValue):
        patch(cfg, [1], {1: 5})
    with pytest.raises(BadValue):
        patch(cfg, [1, 2], {1: 1})


def test_box_ball_and_boundary():
    plane = TorusGeometry(2, (4, 4), 2)
    assert box(plane, 2) == (0, 1, 4, 5)
    with pytest.raises(BadValue):
        box(plane, 5)
    ring = TorusGeometry.chain(6, 2)
    assert ball(ring, 1, 0) == (0, 1, 5)
    assert boundary_size(ring, box(ring, 3)) == 2
    assert boundary_size(ring, range(6)) == 0


def test_all_states_matches_decode_for_every_row():
    geom = TorusGeometry(2, (2, 2), 2)
    states = all_states(geom)
    for index in (0, 3, 9, 15):
        assert tuple(int(v) for v in states[index]) == decode(geom, index).states
    assert np.array_equal(states[:, 0], np.arange(16) % 2)
