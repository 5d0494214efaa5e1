import json

import numpy as np
import pytest

from sponge_spectra.pressure import box_dimension, lq_spectrum
from sponge_spectra.scenes import (SceneParseError, builtin_names, load_scene, parse_scene,
                                   scene_to_json, with_measure)

from conftest import FIXTURES


def test_builtins_are_listed():
    assert set(FIXTURES) <= set(builtin_names())


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip_is_exact(name, tmp_path):
    scene = load_scene(name)
    again = parse_scene(scene_to_json(scene))
    assert again.ifs.maps == scene.ifs.maps
    assert np.array_equal(again.measure.weights, scene.measure.weights)
    path = tmp_path / "scene.json"
    path.write_text(scene_to_json(again))
    third = load_scene(str(path))
    assert third.ifs.maps == scene.ifs.maps and third.name == scene.name
    assert np.array_equal(third.measure.weights, scene.measure.weights)


def test_round_trip_keeps_results_bit_for_bit():
    scene = load_scene("baranski-planar")
    scene = with_measure(scene, [0.6, 0.4])
    again = parse_scene(scene_to_json(scene))
    q = [-1.0, 0.5, 2.0]
    a = lq_spectrum(scene.ifs, scene.measure, q)
    b = lq_spectrum(again.ifs, again.measure, q)
    assert np.array_equal(a.T, b.T)
    assert box_dimension(scene.ifs) == box_dimension(again.ifs)


def test_number_formats():
    text = json.dumps({"dim": 1, "maps": [{"diag": ["0.5"], "trans": [0]},
                                          {"diag": [[1, 3]], "trans": ["2/3"]}],
                       "measure": [0.25, "3/4"]})
    scene = parse_scene(text)
    assert scene.ifs.maps[1].diag[0].denominator == 3
    assert scene.measure.weights.tolist() == [0.25, 0.75]
    assert parse_scene(text.replace(', "measure": [0.25, "3/4"]', "")).measure.weights.tolist() == [0.5, 0.5]


def test_json_error_has_position():
    with pytest.raises(SceneParseError) as info:
        parse_scene('{\n  "dim": 2,\n  "maps": [,]\n}')
    assert info.value.line == 3
    assert info.value.column == 12
    assert "line 3" in str(info.value)


@pytest.mark.parametrize("text", [
    "[]",
    '{"maps": []}',
    '{"dim": 0, "maps": [{"diag": ["1/2"], "trans": ["0"]}]}',
    '{"dim": 1, "maps": []}',
    '{"dim": 1, "maps": [{"diag": ["1/2"]}]}',
    '{"dim": 1, "maps": [{"diag": ["x"], "trans": ["0"]}]}',
    '{"dim": 1, "maps": [{"diag": ["1/2"], "trans": ["0"]}], "measure": [0.5, 0.5]}',
    '{"dim": 1, "maps": [{"diag": ["1/2"], "trans": ["0"]}], "measure": [-1]}',
])
def test_structural_errors(text):
    with pytest.raises(SceneParseError):
        parse_scene(text)


def test_unknown_scene():
    with pytest.raises(SceneParseError):
        load_scene("no-such-scene")
    with pytest.raises(SceneParseError):
        load_scene("/nonexistent/scene.json")
