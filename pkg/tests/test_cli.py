"""Scenario parsing, command payloads, exit codes, output determinism."""
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from conftest import GOLDEN

from lqgcomm.cli import main
from lqgcomm.errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    ScenarioParseError,
)
from lqgcomm.scenario import (
    dumps_scenario,
    matrix_from_obj,
    matrix_to_obj,
    parse_scenario,
    parse_scenario_text,
    scenario_to_dict,
)

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = REPO / "scenarios"


def mat(rows, cols, data):
    return {"rows": rows, "cols": cols, "data": data}


ONE = mat(1, 1, [1.0])


def golden_doc(**extra):
    doc = {
        "name": "golden-scalar",
        "system": {"a": ONE, "b": ONE, "f": ONE, "g": ONE,
                   "psi_w": ONE, "psi_x": ONE},
        "budget": 1.0,
    }
    doc.update(extra)
    return doc


class TestScenarioParsing:
    def test_golden_scalar_parses(self):
        sc = parse_scenario_text(json.dumps(golden_doc()))
        assert sc.name == "golden-scalar"
        assert sc.system.is_scalar
        assert not sc.noisy
        assert sc.seeds == (0,)

    def test_round_trip_is_identity(self):
        sc = parse_scenario(SCENARIOS / "two-state-noisy.json")
        text = dumps_scenario(sc)
        again = parse_scenario_text(text)
        assert scenario_to_dict(again) == scenario_to_dict(sc)

    def test_non_pd_noise_rejected(self):
        doc = golden_doc()
        doc["system"]["psi_w"] = mat(1, 1, [0.0])
        with pytest.raises(NotPositiveDefinite):
            parse_scenario_text(json.dumps(doc))

    def test_wrong_shape_names_the_field(self):
        doc = golden_doc()
        doc["system"]["b"] = mat(2, 1, [1.0, 0.0])
        with pytest.raises(DimensionMismatch) as err:
            parse_scenario_text(json.dumps(doc))
        assert "b" in str(err.value)

    def test_bad_json_reports_line(self):
        with pytest.raises(ScenarioParseError) as err:
            parse_scenario_text('{\n "name": "x",\n broken\n}')
        assert err.value.line == 3

    def test_missing_field_named(self):
        doc = golden_doc()
        del doc["system"]["g"]
        with pytest.raises(ScenarioParseError) as err:
            parse_scenario_text(json.dumps(doc))
        assert err.value.field == "system.g"

    def test_matrix_object_round_trip(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        back = matrix_from_obj(matrix_to_obj(m), "x")
        assert np.array_equal(back, m)

    def test_matrix_size_mismatch(self):
        with pytest.raises(ScenarioParseError):
            matrix_from_obj(mat(2, 2, [1.0, 2.0, 3.0]), "system.a")


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestCommands:
    def test_capacity_golden(self, capsys):
        code, rec = run_cli(["capacity", "--scenario",
                             str(SCENARIOS / "golden-scalar.json")], capsys)
        assert code == 0
        want = 0.5 * math.log(1.0 + 1.0 / (GOLDEN + 1.0))
        assert rec["payload"]["capacity_nats"] == pytest.approx(want, abs=1e-10)
        assert rec["payload"]["capacity_bits"] == pytest.approx(want / math.log(2), abs=1e-10)
        assert rec["payload"]["scalar_closed_form"]["capacity_nats"] == pytest.approx(
            want, abs=1e-12)
        assert rec["failures"] == []

    def test_capacity_symmetric_two_channel(self, tmp_path, capsys):
        eye2 = mat(2, 2, [1.0, 0.0, 0.0, 1.0])
        zero2 = mat(2, 2, [0.0, 0.0, 0.0, 0.0])
        doc = {"name": "sym2", "budget": 1.0,
               "system": {"a": zero2, "b": eye2, "f": eye2, "g": eye2,
                          "psi_w": eye2, "psi_x": eye2}}
        path = tmp_path / "sym2.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["capacity", "--scenario", str(path)], capsys)
        assert code == 0
        assert rec["payload"]["capacity_nats"] == pytest.approx(math.log(1.25), abs=1e-9)

    def test_capacity_zero_budget(self, tmp_path, capsys):
        doc = golden_doc(budget=0.0)
        path = tmp_path / "zero.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["capacity", "--scenario", str(path)], capsys)
        assert code == 0
        assert rec["payload"]["capacity_nats"] == 0.0

    def test_simulate_noisy_exit_zero(self, tmp_path, capsys):
        doc = golden_doc(name="sim", observation={"d_c": ONE, "psi_q": ONE,
                                                  "d_r": ONE, "psi_v": ONE},
                         policy={"phi": mat(1, 1, [0.0])},
                         horizon=60_000, seeds=[5, 6],
                         tolerances={"cost_rel": 0.02})
        path = tmp_path / "sim.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["simulate", "--scenario", str(path)], capsys)
        assert code == 0
        # phi = 0 at the optimal gain: the analytic cost is the noisy optimum
        assert rec["payload"]["rel_error"] <= 0.02
        assert len(rec["payload"]["runs"]) == 2

    def test_simulate_degenerate_noise_near_zero_cost(self, tmp_path, capsys):
        tiny = mat(1, 1, [1e-18])
        doc = golden_doc(name="degenerate")
        doc["system"]["psi_w"] = tiny
        doc["system"]["psi_x"] = mat(1, 1, [0.0])
        doc["policy"] = {"phi": mat(1, 1, [0.0])}
        doc["horizon"] = 5000
        doc["tolerances"] = {"cost_rel": 0.5}
        path = tmp_path / "deg.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["simulate", "--scenario", str(path)], capsys)
        assert code == 0
        assert rec["payload"]["j_hat_pooled"] <= 1e-15

    def test_verify_translation_passes(self, capsys):
        code, rec = run_cli(["verify-translation", "--scenario",
                             str(SCENARIOS / "golden-noisy.json"),
                             "--seed", "3"], capsys)
        assert code == 0
        assert rec["payload"]["max_residual"] <= 1e-8
        assert rec["failures"] == []

    def test_lowerbound_noisy_golden(self, capsys):
        code, rec = run_cli(["lowerbound", "--scenario",
                             str(SCENARIOS / "golden-noisy.json")], capsys)
        assert code == 0
        value = rec["payload"]["value_nats"]
        noiseless = 0.5 * math.log(1.0 + 1.0 / (GOLDEN + 1.0))
        assert 0.0 < value < noiseless
        assert rec["payload"]["seed_value_nats"] <= value + 1e-12

    def test_simulate_with_rate_estimate(self, tmp_path, capsys):
        doc = golden_doc(name="rated", horizon=30_000, seeds=[11],
                         tolerances={"rate_rel": 0.05})
        path = tmp_path / "rated.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["simulate", "--scenario", str(path), "--rate"], capsys)
        assert code == 0
        rates = rec["payload"]["rates"]
        assert len(rates) == 1
        # budget-1 policy on the scalar benchmark: about 0.16 nats/step
        want = 0.5 * math.log(1.0 + 1.0 / (GOLDEN + 1.0))
        assert rec["payload"]["analytic_rate_nats"] == pytest.approx(want, abs=1e-9)
        assert rates[0]["rate_hat_nats"] == pytest.approx(want, rel=0.1)
        assert rec["payload"]["rate_rel_error"] <= 0.05

    def test_failed_check_sets_exit_code_and_failure_list(self, tmp_path, capsys):
        doc = golden_doc(name="strict", horizon=20_000,
                         policy={"phi": mat(1, 1, [0.5])},
                         tolerances={"cost_rel": 1e-9})
        path = tmp_path / "strict.json"
        path.write_text(json.dumps(doc))
        code, rec = run_cli(["simulate", "--scenario", str(path)], capsys)
        assert code == 1
        assert rec["failures"]
        failure = rec["failures"][0]
        assert failure["check"] == "cost_vs_analytic"
        assert failure["rel_error"] > failure["tolerance"]

    def test_error_record_and_exit_code(self, tmp_path, capsys):
        doc = golden_doc(name="no-obs")
        path = tmp_path / "no-obs.json"
        path.write_text(json.dumps(doc))
        code = main(["lowerbound", "--scenario", str(path)])
        out = capsys.readouterr().out
        assert code == 2
        rec = json.loads(out)
        assert rec["error"]["type"] == "LqgcommError"


class TestSweepCsv:
    def test_sweep_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        code, rec = run_cli(["sweep", "--scenario",
                             str(SCENARIOS / "golden-scalar.json"),
                             "--sweep", "0:2:5", "--out", str(out)], capsys)
        assert code == 0
        text = out.read_text()
        lines = text.split("\n")
        assert lines[0] == "v,capacity_nats,capacity_bits,alpha,phi_0"
        assert len(lines) == 7  # header + 5 rows + trailing newline
        assert "\r" not in text
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == 0.0
        # capacity is nondecreasing in the budget
        caps = [float(line.split(",")[1]) for line in lines[1:6]]
        assert all(b >= a - 1e-12 for a, b in zip(caps, caps[1:]))


class TestDeterminism:
    def _run_subprocess(self, argv, threads):
        env = {"PATH": "/usr/bin:/bin", "OMP_NUM_THREADS": str(threads),
               "OPENBLAS_NUM_THREADS": str(threads),
               "MKL_NUM_THREADS": str(threads)}
        proc = subprocess.run([sys.executable, "-m", "lqgcomm.cli", *argv],
                              capture_output=True, cwd=str(REPO), env=env)
        assert proc.returncode == 0, proc.stderr.decode()
        return proc.stdout

    @pytest.mark.parametrize("argv", [
        ["capacity", "--scenario", "scenarios/golden-scalar.json"],
        ["simulate", "--scenario", "scenarios/golden-noisy.json",
         "--seed", "9"],
        ["verify-translation", "--scenario", "scenarios/golden-noisy.json",
         "--seed", "9"],
    ])
    def test_byte_identical_across_runs_and_threads(self, argv):
        first = self._run_subprocess(argv, threads=1)
        second = self._run_subprocess(argv, threads=4)
        assert first == second

    def test_sweep_csv_byte_identical(self, tmp_path):
        outs = []
        for i, threads in enumerate((1, 4)):
            out = tmp_path / f"curve{i}.csv"
            self._run_subprocess(["sweep", "--scenario",
                                  "scenarios/golden-scalar.json",
                                  "--sweep", "0:3:31", "--out", str(out)], threads)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
