from __future__ import annotations

import json
import logging

import numpy as np
import pytest

from dalab import __version__
from dalab.cache import ResultCache, cache_key
from dalab.cli import main
from dalab.errors import InvalidInputError, ScaleGuardError
from dalab.runner import run_scenario
from dalab.scenario import parse_scenario, scenario_from_dict
from dalab.serialize import (
    canonical_json,
    csv_text,
    format_value,
    ideal_from_json,
    ideal_to_json,
    linear_map_to_json,
    subject_from_json,
    subject_to_json,
)
from dalab.similarity import LinearMapSpec
from dalab.variety import IdealSpec, VarietySpec

TWO_LINES = {"components": [[[1, 0]], [[0.6, 0.8]]]}


def scenario(**over):
    base = {"d": 2, "maxDegree": 12, "subject": TWO_LINES, "tasks": ["dims"]}
    base.update(over)
    return base


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


class TestSerialize:
    def test_ideal_round_trip(self):
        obj = {"generators": [[{"exponents": [1, 1], "re": 1}, {"exponents": [2, 0], "re": 0.5, "im": -1}]],
               "radical": True}
        ideal = ideal_from_json(obj, 2)
        assert ideal_from_json(ideal_to_json(ideal), 2) == ideal

    def test_exact_integer_coefficients(self):
        ideal = ideal_from_json({"generators": [[{"exponents": [1, 1], "re": 3}]]}, 2)
        assert ideal.generators[0].coefficients == {(1, 1): 3}

    def test_non_homogeneous_rejected(self):
        with pytest.raises(InvalidInputError, match="homogeneous"):
            ideal_from_json({"generators": [[{"exponents": [1, 1]}, {"exponents": [1, 0]}]]}, 2)

    def test_subject_round_trip(self):
        spec = subject_from_json(TWO_LINES, 2)
        back = subject_from_json(subject_to_json(spec), 2)
        for a, b in zip(spec.components, back.components):
            np.testing.assert_allclose(a.basis, b.basis, atol=1e-15)

    def test_component_wrong_length(self):
        with pytest.raises(InvalidInputError, match="length 3"):
            subject_from_json({"components": [[[1, 0, 0]]]}, 2)

    def test_complex_pairs(self):
        spec = subject_from_json({"components": [[[[0, 1], 0]]]}, 2)
        assert abs(spec.components[0].basis[0, 0]) == pytest.approx(1.0)

    def test_linear_map_json(self):
        spec = LinearMapSpec.from_components(np.eye(2), [np.eye(2)[:, [0]]])
        obj = linear_map_to_json(spec)
        assert obj["matrix"][0][0] == [1.0, 0.0]

    def test_float_format(self):
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(float("inf")) == "inf"
        assert format_value(True) == "true" and format_value(None) == ""

    def test_csv_column_order(self):
        text = csv_text([{"b": 1, "a": 2.5}], ["a", "b"])
        assert text == "a,b\n2.5,1\n"

    def test_canonical_json(self):
        assert canonical_json({"b": 1, "a": [1.5]}) == '{"a":[1.5],"b":1}'


class TestScenario:
    def test_defaults(self, tmp_path):
        s = parse_scenario(write(tmp_path, scenario()))
        assert s.tolerance == 1e-9 and s.rank_threshold == 1e-10
        assert isinstance(s.subject, VarietySpec) and len(s.subject.components) == 2

    def test_missing_d(self, tmp_path):
        obj = scenario()
        del obj["d"]
        with pytest.raises(InvalidInputError, match="'d' is a required property"):
            parse_scenario(write(tmp_path, obj))

    def test_field_path(self):
        with pytest.raises(InvalidInputError, match=r"\$\.pList\[0\]"):
            scenario_from_dict(scenario(pList=[0.5]))

    def test_unknown_field(self):
        with pytest.raises(InvalidInputError, match="colour"):
            scenario_from_dict(scenario(colour="blue"))

    def test_max_degree_minimum(self):
        with pytest.raises(InvalidInputError, match="maxDegree"):
            scenario_from_dict(scenario(maxDegree=1))

    def test_empty_tasks(self):
        with pytest.raises(InvalidInputError):
            scenario_from_dict(scenario(tasks=[]))

    def test_scale_guard(self):
        with pytest.raises(ScaleGuardError, match="39711"):
            scenario_from_dict({"d": 4, "maxDegree": 60, "subject": {"fullSpace": True}, "tasks": ["dims"]})

    def test_similarity_needs_map(self):
        with pytest.raises(InvalidInputError, match="map"):
            scenario_from_dict(scenario(tasks=["similarity"]))

    def test_ideal_subject(self):
        s = scenario_from_dict(scenario(subject={"ideal": {"generators": [[{"exponents": [1, 1]}]]}}))
        assert isinstance(s.subject, IdealSpec)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        with pytest.raises(InvalidInputError, match="invalid JSON"):
            parse_scenario(p)

    def test_full_report_expansion(self):
        s = scenario_from_dict(scenario(tasks=["full-report"]))
        assert s.expanded_tasks == ("dims", "hilbert", "angles", "essnorm", "closedness")

    def test_overrides(self):
        s = scenario_from_dict(scenario()).with_overrides(max_degree=5, p_list=[2.0])
        assert s.max_degree == 5 and s.p_list == (2.0,)


class TestCache:
    def test_key_stable(self):
        assert cache_key({"a": 1, "b": [1, 2]}) == cache_key({"b": [1, 2], "a": 1})

    def test_key_changes_with_tolerance(self):
        assert cache_key({"tolerance": 1e-9}) != cache_key({"tolerance": 1e-8})

    def test_key_changes_with_version(self):
        assert cache_key({"x": 1}, "0.1.0") != cache_key({"x": 1}, "0.2.0")

    def test_round_trip(self, tmp_path):
        c = ResultCache(tmp_path)
        assert c.fetch({"k": 1}, lambda: {"v": (1, 2)}) == {"v": [1, 2]}
        assert c.fetch({"k": 1}, lambda: pytest.fail("should hit")) == {"v": [1, 2]}
        assert c.hits == 1 and c.misses == 1

    def test_corruption_recomputes(self, tmp_path, caplog):
        c = ResultCache(tmp_path)
        c.put({"k": 1}, {"v": 1})
        (tmp_path / f"{cache_key({'k': 1})}.json").write_text("garbage")
        with caplog.at_level(logging.WARNING):
            assert c.fetch({"k": 1}, lambda: {"v": 2}) == {"v": 2}
        assert "corrupt" in caplog.text

    def test_key_material_verified(self, tmp_path, caplog):
        c = ResultCache(tmp_path)
        c.put({"k": 1}, {"v": 1})
        f = tmp_path / f"{cache_key({'k': 1})}.json"
        entry = json.loads(f.read_text())
        entry["key_material"] = "something else"
        f.write_text(json.dumps(entry))
        with caplog.at_level(logging.WARNING):
            assert c.get({"k": 1}) is None
        assert "does not match" in caplog.text

    def test_disabled(self):
        c = ResultCache(None)
        assert c.fetch({"k": 1}, lambda: {"v": 3}) == {"v": 3}
        assert c.hits == 0


class TestRunner:
    def test_essnorm_two_lines(self, tmp_path):
        s = scenario_from_dict(scenario(maxDegree=40, tasks=["essnorm"], pList=[1.5], pairs=[[0, 0]]))
        summary = run_scenario(s, out_dir=tmp_path)
        assert summary.verdicts == {"essnorm": "pass"}
        data = json.loads((tmp_path / "summary.json").read_text())
        assert data["tasks"]["essnorm"]["pairs"][0]["schatten"]["1.5"]["convergence"] == "converging"
        header = (tmp_path / "essnorm_0_0.csv").read_text().splitlines()[0]
        assert header == "degree,norm,rank,boundary,lemma_residual,contrib_p1.5,partial_p1.5,majorant_p1.5"

    def test_hilbert_z1z2(self, tmp_path):
        s = scenario_from_dict(scenario(subject={"ideal": {"generators": [[{"exponents": [1, 1]}]]}},
                                        tasks=["hilbert"]))
        run_scenario(s, out_dir=tmp_path)
        h = json.loads((tmp_path / "summary.json").read_text())["tasks"]["hilbert"]
        assert h["h"] == "2" and h["dimI"] == 1

    def test_radical_probe_fails(self, tmp_path):
        s = scenario_from_dict(scenario(
            subject={"ideal": {"generators": [[{"exponents": [2, 0]}]], "radical": True}},
            companion={"components": [[[0, 1]]]}, tasks=["hilbert"]))
        summary = run_scenario(s, out_dir=tmp_path)
        assert summary.verdicts["hilbert"] == "fail" and summary.exit_code == 1
        assert summary.results["hilbert"].summary["radical_first_mismatch"] == 1

    def test_deterministic_and_cache_transparent(self, tmp_path):
        obj = scenario(tasks=["full-report"], maxDegree=15, parallelism=3)
        s = scenario_from_dict(obj)
        cold = run_scenario(s, out_dir=tmp_path / "a", cache_dir=tmp_path / "cache")
        warm = run_scenario(s, out_dir=tmp_path / "b", cache_dir=tmp_path / "cache")
        plain = run_scenario(s, out_dir=tmp_path / "c")
        assert cold.cache_hits == 0 and warm.cache_hits > 0
        for f in sorted(p.name for p in (tmp_path / "a").iterdir()):
            a = (tmp_path / "a" / f).read_bytes()
            assert a == (tmp_path / "b" / f).read_bytes() == (tmp_path / "c" / f).read_bytes()

    def test_similarity(self, tmp_path):
        s = scenario_from_dict(scenario(
            tasks=["similarity"], maxDegree=10,
            map={"matrix": [[1, 0.6], [0, 0.8]], "source": {"components": [[[1, 0]], [[0, 1]]]}}))
        summary = run_scenario(s, out_dir=tmp_path)
        assert summary.verdicts == {"similarity": "pass"}
        assert summary.residual_maxima["similarity.adjoint_intertwiner"] < 1e-9

    def test_error_marks_incomplete(self, tmp_path):
        s = scenario_from_dict(scenario(subject={"components": [[[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]]},
                                        d=3, tasks=["angles"]))
        with pytest.raises(Exception, match="angles"):
            run_scenario(s, out_dir=tmp_path)
        assert json.loads((tmp_path / "summary.json").read_text())["status"] == "incomplete"


class TestCli:
    def test_exit_zero(self, tmp_path, capsys):
        p = write(tmp_path, scenario())
        assert main(["dims", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 0
        assert "dims: pass" in capsys.readouterr().out

    def test_invalid_input_exit_two(self, tmp_path):
        obj = scenario()
        del obj["d"]
        assert main(["dims", "--scenario", str(write(tmp_path, obj))]) == 2

    def test_scale_guard_exit_three(self, tmp_path):
        p = write(tmp_path, {"d": 4, "maxDegree": 60, "subject": {"fullSpace": True}, "tasks": ["dims"]})
        assert main(["dims", "--scenario", str(p)]) == 3

    def test_violation_exit_one(self, tmp_path):
        p = write(tmp_path, scenario(subject={"ideal": {"generators": [[{"exponents": [2, 0]}]], "radical": True}},
                                     companion={"components": [[[0, 1]]]}, tasks=["hilbert"]))
        assert main(["report", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 1

    def test_precondition_exit_two(self, tmp_path):
        p = write(tmp_path, scenario(subject={"components": [[[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]]},
                                     d=3, tasks=["closedness"]))
        assert main(["closedness", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_overrides_and_env_cache(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("DALAB_CACHE", str(tmp_path / "envcache"))
        p = write(tmp_path, scenario())
        args = ["essnorm", "--scenario", str(p), "--out", str(tmp_path / "o"), "--max-degree", "6", "--p", "1.5,2"]
        assert main(args) == 0
        assert main(args) == 0
        assert "cache hits: 1" in capsys.readouterr().err
        rows = (tmp_path / "o" / "essnorm_0_0.csv").read_text().splitlines()
        assert len(rows) == 8 and "partial_p2" in rows[0]

    def test_version(self):
        assert __version__ == "0.1.0"
