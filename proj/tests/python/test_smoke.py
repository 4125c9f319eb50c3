# Copyright 2026 The cfclust Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import pathlib
import subprocess

import jsonschema
import numpy as np
import pytest

import cfclust

SCHEMAS = pathlib.Path(
    os.environ.get("CFCLUST_SCHEMAS", pathlib.Path(__file__).resolve().parents[2] / "schemas"))


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


@pytest.fixture(scope="module")
def blobs():
    rng = np.random.default_rng(3)
    return np.vstack([rng.normal(0.0, 1.0, (80, 2)), rng.normal([5.0, 1.0], 1.0, (80, 2))])


def test_explain_two_centers():
    model = cfclust.Model.from_json(json.dumps({
        "schema_version": 1, "kind": "kmeans", "dim": 2, "num_clusters": 2,
        "centers": [[0.0, 0.0], [2.0, 0.0]], "standardization": None, "provenance": {}}))
    r = cfclust.explain(model, np.array([-0.5, 0.7]), target=1, epsilon=0.0)
    assert r["status"] == "ok"
    assert r["counterfactual"] == pytest.approx([1.0, 0.7])
    assert r["distance_sq"] == pytest.approx(2.25)
    frozen = cfclust.explain(model, np.array([-0.5, 0.7]), target=1, mask=[True, False])
    assert frozen["counterfactual"][1] == 0.7
    jsonschema.validate({**r, "factual": [-0.5, 0.7], "mask": "1,1", "epsilon": 0.0},
                        schema("result"))


def test_fit_and_explain_gmm(blobs, tmp_path):
    model = cfclust.fit(blobs, algorithm="gmm", k=2, seed=1)
    assert (model.kind, model.dim, model.num_clusters) == ("gaussian", 2, 2)
    src = model.assign(blobs[0])
    r = cfclust.explain(model, blobs[0], target=1 - src)
    assert r["status"] == "ok" and r["member_tolerant"]
    assert model.assign(np.array(r["counterfactual"])) == 1 - src

    path = tmp_path / "m.json"
    model.save(path)
    jsonschema.validate(json.loads(path.read_text()), schema("model"))
    assert cfclust.Model.load(path).to_json() == model.to_json()

    best = cfclust.explain_best(model, blobs[0])
    assert best["chosen_target"] == 1 - src

    sweep = cfclust.sweep(model, blobs[0], 1 - src, [0.0, 0.5, 1.0])
    jsonschema.validate(sweep, schema("sweep"))
    assert len(sweep["results"]) == 3

    report = cfclust.evaluate(model, blobs, source=src, target=1 - src, n=20, seed=2)
    jsonschema.validate(report, schema("report"))
    assert report["aggregates"]["success_tolerant_pct"] == 100.0


def test_errors(blobs):
    model = cfclust.fit(blobs, k=2)
    with pytest.raises(ValueError):
        cfclust.explain(model, np.zeros(3), target=1)
    with pytest.raises(ValueError):
        cfclust.fit(blobs, algorithm="dbscan")
    with pytest.raises(cfclust.ModelFormatError):
        cfclust.Model.from_json('{"schema_version": 2}')


@pytest.mark.skipif("CFCLUST_CLI" not in os.environ, reason="command line tool not built")
def test_cli_outputs_match_schemas(blobs, tmp_path):
    cli = os.environ["CFCLUST_CLI"]
    data = tmp_path / "d.csv"
    np.savetxt(data, blobs, delimiter=",", header="a,b", comments="")

    def run(*args, expect=0):
        proc = subprocess.run([cli, *map(str, args)], capture_output=True, text=True)
        assert proc.returncode == expect, proc.stderr
        return json.loads(proc.stdout)

    model_path = tmp_path / "m.json"
    run("fit", "--algo", "gmm", "--k", 2, data, "-o", model_path)
    jsonschema.validate(json.loads(model_path.read_text()), schema("model"))

    out = tmp_path / "e.json"
    run("explain", "--model", model_path, "--factual-row", 0, data, "--target", "best", "-o", out)
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, schema("result"))
    src = doc["source"]

    out = tmp_path / "f.json"
    run("explain", "--model", model_path, "--factual", "0,0", "--mask", "0,0", "--target",
        "best", "-o", out, expect=5)
    jsonschema.validate(json.loads(out.read_text()), schema("result"))

    out = tmp_path / "s.json"
    run("sweep", "--model", model_path, "--factual-row", 0, data, "--target", 1 - src,
        "--epsilons", "0,0.25,0.5", "-o", out)
    jsonschema.validate(json.loads(out.read_text()), schema("sweep"))

    out = tmp_path / "r.json"
    own = tmp_path / "own.csv"
    run("eval", "--model", model_path, data, "--source", src, "--target", 1 - src, "--n", 10,
        "-o", out, "--export-baseline", own)
    out2 = tmp_path / "r2.json"
    run("eval", "--model", model_path, data, "--source", src, "--target", 1 - src, "--n", 10,
        "--baseline", f"self={own}", "-o", out2)
    for path in (out, out2):
        jsonschema.validate(json.loads(path.read_text()), schema("report"))
    assert len(json.loads(out2.read_text())["comparison"]["common_ids"]) == 10

    broken = json.loads(model_path.read_text())
    broken["kind"] = "dbscan"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(broken, schema("model"))
