import json
import math
import os
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import shapelab

SOURCE = Path(os.environ.get("SHAPELAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_grid_norms_of_line():
    f = shapelab.GridFunction.sample(6, lambda t: t)
    assert len(f) == 65
    assert shapelab.sup_norm(f) == pytest.approx(1.0)
    assert shapelab.h12_norm(f) == pytest.approx(1.0, abs=1e-12)
    assert shapelab.holder_norm(f, 0.25) == pytest.approx(1.0)
    assert shapelab.modulus_of_continuity(f, 0.25) == pytest.approx(0.25)


def test_grid_rejects_nonzero_origin():
    with pytest.raises(ValueError):
        shapelab.GridFunction(2, np.array([1.0, 0.0, 0.0, 0.0, 0.0]))


def test_wiener_samples_are_deterministic():
    a = shapelab.sample_wiener(8, 42).values
    b = shapelab.sample_wiener(8, 42).values
    assert a.shape == (257,)
    assert a[0] == 0.0
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, shapelab.sample_wiener(8, 43).values)


def test_shape_on_sphere():
    space = shapelab.SequenceSpace(16)
    phi = shapelab.parse_shape("floor:alpha=-0.5")
    x = space.sample_sphere(3)
    assert space.cm_norm(x) == pytest.approx(1.0)
    y = shapelab.eval_shape(phi, space, x)
    assert y.shape == x.shape
    reports = {r["property"]: r["pass"] for r in shapelab.check_shape(phi, space, 200, 1)}
    assert all(reports.values())


def test_atoms_and_gauge():
    space = shapelab.SequenceSpace(4)
    atoms = shapelab.build_atoms(shapelab.parse_shape("floor:alpha=-0.5"), space, 6, 9)
    assert len(atoms) == 12
    assert atoms.generators.shape == (4, 6)
    engine = shapelab.GaugeEngine(atoms)
    a0 = atoms.atom(0)
    assert engine.value(a0) <= 1.0 + 1e-8
    assert engine.value(2.5 * a0) == pytest.approx(2.5 * engine.value(a0))
    result = shapelab.gauge(a0, atoms)
    assert result["status"] == "optimal"


def test_gauge_matches_vertex_enumeration():
    g = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    atoms = shapelab.AtomSet(g)
    x = np.array([0.3, -0.7])
    assert shapelab.GaugeEngine(atoms).value(x) == pytest.approx(
        shapelab.vertex_enumeration_gauge(x, atoms), abs=1e-9)


def test_gauge_outside_span_is_infinite():
    atoms = shapelab.AtomSet(np.array([[1.0], [0.0]]))
    assert math.isinf(shapelab.GaugeEngine(atoms).value(np.array([0.0, 1.0])))


def test_diagnostics_run():
    cs = shapelab.cs_bound_check(20, 6, 1)
    assert cs["max_ratio"] <= 1.0 + 1e-9
    fm = shapelab.full_measure_mc(0.25, [0.5, 2.0, 5.0], 100, 6, 2)
    assert fm["monotone"]
    points = [shapelab.sample_wiener(6, s).values for s in range(40)]
    net = shapelab.greedy_net(points, 0.5, "sup")
    assert 1 <= net["net_size"] <= 40


def test_validation_is_itemized():
    issues = shapelab.validate_config({"seed": -1, "checks": [{"id": "x", "type": "nope"}]})
    assert any(i.startswith("id:") for i in issues)
    assert any(i.startswith("checks[0].type") for i in issues)
    with pytest.raises(shapelab.ConfigError):
        shapelab.normalize_config({"seed": 1})


@pytest.mark.parametrize("name", ["holder_example.json", "acceptance.json"])
def test_configs_satisfy_schema(name):
    config = shapelab.load_config(SOURCE / "configs" / name)
    jsonschema.validate(config, shapelab.config_schema())
    assert shapelab.validate_config(config) == []
    jsonschema.validate(shapelab.normalize_config(config), shapelab.config_schema())


def test_run_config(tmp_path):
    config = {
        "id": "py",
        "seed": 4,
        "model": {"kind": "wiener", "level": 6, "kl_modes": 16},
        "checks": [
            {"id": "atoms", "type": "build-atoms", "count": 8},
            {"id": "cs", "type": "cs-bound", "samples": 10, "level": 6},
        ],
    }
    manifest = shapelab.run_config(config, tmp_path / "a")
    again = shapelab.run_config(config, tmp_path / "b")
    assert manifest["pass"]
    assert [c["id"] for c in manifest["checks"]] == ["atoms", "cs"]
    assert manifest["artifacts"] == again["artifacts"]
    on_disk = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert on_disk["config_hash"] == manifest["config_hash"]


def test_catalog():
    names = {s["name"] for s in shapelab.list_builtins()["shapes"]}
    assert {"floor", "reciprocal-holder", "identity-control"} <= names
