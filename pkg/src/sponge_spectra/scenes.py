"""Scene files: an IFS plus an optional measure, stored as JSON.

Numbers may be decimal strings, ``"p/q"`` strings, JSON numbers or
``[num, den]`` integer pairs. Built-in scenes live in the package's ``data``
directory and can be loaded by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .ifs import DiagonalMap, SpongeIFS, as_fraction
from .potentials import WeightedMeasure


class SceneParseError(ValueError):
    """Malformed scene text; carries the position when JSON decoding failed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Scene:
    ifs: SpongeIFS
    measure: WeightedMeasure
    name: str = ""
    notes: str = ""


def builtin_names() -> list[str]:
    files = resources.files("sponge_spectra") / "data"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def parse_scene(text: str, source: str = "<scene>") -> Scene:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise SceneParseError(f"{source}: top level must be an object")
    try:
        dim = raw["dim"]
        maps_raw = raw["maps"]
    except KeyError as exc:
        raise SceneParseError(f"{source}: missing key {exc.args[0]!r}") from exc
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SceneParseError(f"{source}: 'dim' must be a positive integer")
    if not isinstance(maps_raw, list) or not maps_raw:
        raise SceneParseError(f"{source}: 'maps' must be a non-empty list")
    maps = []
    for k, m in enumerate(maps_raw, start=1):
        try:
            diag, trans = m["diag"], m["trans"]
            f = DiagonalMap.from_values(diag, trans)
        except (KeyError, TypeError) as exc:
            raise SceneParseError(f"{source}: map {k} needs 'diag' and 'trans' lists") from exc
        except ValueError as exc:
            raise SceneParseError(f"{source}: map {k}: {exc}") from exc
        maps.append(f)
    ifs = SpongeIFS(dim, tuple(maps))
    weights = raw.get("measure")
    try:
        if weights is None:
            measure = WeightedMeasure.uniform(len(maps))
        else:
            if len(weights) != len(maps):
                raise SceneParseError(f"{source}: measure has {len(weights)} weights for {len(maps)} maps")
            measure = WeightedMeasure([float(as_fraction(w)) for w in weights])
    except SceneParseError:
        raise
    except (ValueError, TypeError) as exc:
        raise SceneParseError(f"{source}: measure: {exc}") from exc
    return Scene(ifs, measure, str(raw.get("name", "")), str(raw.get("notes", "")))


def load_scene(name_or_path: str) -> Scene:
    """Load a built-in scene by name, or a scene file by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise SceneParseError(f"cannot read {name_or_path}: {exc}") from exc
        return parse_scene(text, str(path))
    if name_or_path in builtin_names():
        text = (resources.files("sponge_spectra") / "data" / f"{name_or_path}.json").read_text()
        return parse_scene(text, name_or_path)
    raise SceneParseError(f"no scene file or built-in scene named {name_or_path!r}")


def _number(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def scene_to_json(scene: Scene) -> str:
    """Serialise exactly: map coefficients as rational pairs, weights as float reprs."""
    raw = {
        "name": scene.name,
        "notes": scene.notes,
        "dim": scene.ifs.dim,
        "maps": [{"diag": [_number(a) for a in f.diag], "trans": [_number(t) for t in f.trans]}
                 for f in scene.ifs.maps],
        "measure": [repr(float(w)) for w in scene.measure.weights],
    }
    return json.dumps(raw, indent=2)


def with_measure(scene: Scene, weights) -> Scene:
    return Scene(scene.ifs, WeightedMeasure(weights), scene.name, scene.notes)
