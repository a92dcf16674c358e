import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randset.features import (
    FeatureFileError,
    curvature_histogram,
    extract_features,
    load_features,
    pa_ratio,
    save_features,
)
from randset.morphology import connected_components, disc_mask
from randset.raster import BinaryRaster
from randset.simulate import DiscConfiguration, rasterize


def grid(rows):
    return BinaryRaster.from_array(np.array([[c == "1" for c in row] for row in rows]))


def test_isolated_pixel_histogram():
    bits = np.zeros((9, 9), bool)
    bits[4, 4] = True
    r = BinaryRaster.from_array(bits)
    (comp,) = connected_components(r)
    t = curvature_histogram(r, comp, disc_mask(3))
    # occupancy 1/29 lands in the bin [1/29, 2/29)
    expected = np.zeros(29)
    expected[1] = 1.0
    assert np.array_equal(t, expected)


def test_solid_square_histogram_concentrates_at_straight_edge_bin():
    # 50x50 solid block with margin >= r: straight edges dominate, with
    # corner-region pixels below; nothing above the 18/29 bin.
    bits = np.zeros((56, 56), bool)
    bits[3:53, 3:53] = True
    r = BinaryRaster.from_array(bits)
    (comp,) = connected_components(r)
    t = curvature_histogram(r, comp, disc_mask(3))
    assert t.sum() == pytest.approx(1.0, abs=1e-12)
    assert int(np.argmax(t)) == 18  # bin of occupancy 18/29
    assert t[19:].sum() == 0.0


def test_histogram_always_normalized():
    rng = np.random.default_rng(11)
    mask = disc_mask(3)
    for _ in range(25):
        r = BinaryRaster.from_array(rng.random((20, 20)) < 0.45)
        for comp in connected_components(r):
            t = curvature_histogram(r, comp, mask)
            assert t.sum() == pytest.approx(1.0, abs=1e-12)
            assert (t >= 0).all()
            assert len(t) == mask.size


def test_pa_single_pixel():
    (comp,) = connected_components(grid(["1"]))
    assert pa_ratio(comp) == 1.0


def test_pa_3x3_square():
    (comp,) = connected_components(grid(["111", "111", "111"]))
    assert pa_ratio(comp) == pytest.approx(8 / 9)


def test_pa_line():
    (comp,) = connected_components(grid(["11111"]))
    assert pa_ratio(comp) == 1.0


def test_pa_decreases_with_disc_radius():
    values = []
    for radius in (2, 4, 8, 16):
        side = 2 * radius + 9
        config = DiscConfiguration(discs=[[side / 2, side / 2, radius]])
        raster = rasterize(config, (side, side))
        (comp,) = connected_components(raster)
        values.append(pa_ratio(comp))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_extract_two_isolated_pixels():
    bits = np.zeros((15, 15), bool)
    bits[3, 3] = True
    bits[11, 11] = True
    rf = extract_features(BinaryRaster.from_array(bits), 3, "two")
    assert rf.n_components == 2
    for c in rf.components:
        assert c.curvature_hist[1] == 1.0
        assert c.pa == 1.0
        assert c.area == 1


def test_extract_all_foreground():
    rf = extract_features(grid(["111", "111"]), 1, "full")
    assert rf.n_components == 1


@pytest.mark.parametrize("r,l", [(3, 29), (5, 81)])
def test_histogram_length_matches_disc(r, l):
    rng = np.random.default_rng(5)
    raster = BinaryRaster.from_array(rng.random((64, 64)) < 0.4)
    rf = extract_features(raster, r, "x")
    assert rf.hist_length == l


def test_extract_requires_foreground():
    with pytest.raises(ValueError, match="no components"):
        extract_features(grid(["000"]), 3, "empty")


def test_drop_border_components():
    bits = np.zeros((20, 20), bool)
    bits[0, 0] = True  # touches the window frame
    bits[10, 10] = True  # interior, disc fits
    raster = BinaryRaster.from_array(bits)
    rf = extract_features(raster, 3, "x", drop_border_components=True)
    assert rf.n_components == 1
    assert extract_features(raster, 3, "x").n_components == 2


def test_extract_deterministic():
    rng = np.random.default_rng(9)
    raster = BinaryRaster.from_array(rng.random((30, 30)) < 0.5)
    a = extract_features(raster, 3, "x")
    b = extract_features(raster, 3, "x")
    assert all(
        np.array_equal(ca.curvature_hist, cb.curvature_hist) and ca.pa == cb.pa
        for ca, cb in zip(a.components, b.components)
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_save_load_round_trip(seed):
    rng = np.random.default_rng(seed)
    raster = BinaryRaster.from_array(rng.random((16, 16)) < 0.5)
    if raster.foreground_count() == 0:
        return
    original = [extract_features(raster, 2, f"id{seed}", class_label="c")]
    import tempfile, os

    fd, path = tempfile.mkstemp(suffix=".json")
    os.close(fd)
    try:
        save_features(path, original)
        loaded = load_features(path)
    finally:
        os.unlink(path)
    assert len(loaded) == 1
    a, b = original[0], loaded[0]
    assert (a.radius, a.source_id, a.class_label) == (b.radius, b.source_id, b.class_label)
    for ca, cb in zip(a.components, b.components):
        assert np.array_equal(ca.curvature_hist, cb.curvature_hist)
        assert (ca.pa, ca.n_boundary, ca.area) == (cb.pa, cb.n_boundary, cb.area)


def test_empty_list_round_trip(tmp_path):
    path = tmp_path / "f.json"
    save_features(path, [])
    assert load_features(path) == []


def test_load_rejects_schema_mismatch(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"schema": 99, "realisations": []}))
    with pytest.raises(FeatureFileError, match="schema"):
        load_features(path)


def test_load_rejects_wrong_histogram_length(tmp_path):
    bits = np.zeros((9, 9), bool)
    bits[4, 4] = True
    path = tmp_path / "f.json"
    save_features(path, [extract_features(BinaryRaster.from_array(bits), 3, "x")])
    doc = json.loads(path.read_text())
    doc["realisations"][0]["components"][0]["t"].append(0.0)
    path.write_text(json.dumps(doc))
    with pytest.raises(FeatureFileError, match="record 0"):
        load_features(path)


def test_load_rejects_non_numeric(tmp_path):
    bits = np.zeros((9, 9), bool)
    bits[4, 4] = True
    path = tmp_path / "f.json"
    save_features(path, [extract_features(BinaryRaster.from_array(bits), 3, "x")])
    doc = json.loads(path.read_text())
    doc["realisations"][0]["components"][0]["pa"] = "soup"
    path.write_text(json.dumps(doc))
    with pytest.raises(FeatureFileError, match="record 0"):
        load_features(path)
