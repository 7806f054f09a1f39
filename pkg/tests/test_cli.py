import csv
import io
import json

import numpy as np
import pytest

from conftest import fj_model
from opinion_defense.main import main
from opinion_defense.network.generators import generate_graph
from opinion_defense.services.solver import phi

REGULAR = ["--generate", "regular:4", "--n", "20", "--seed", "3"]
ER = ["--generate", "er:0.25", "--n", "10", "--seed", "2"]


def run_json(tmp_path, *args):
    out = tmp_path / "out.json"
    assert main([*args, "--format", "json", "--out", str(out)]) == 0
    return json.loads(out.read_text())


def run_csv(capsys, *args):
    assert main(list(args)) == 0
    text = capsys.readouterr().out
    return text, list(csv.DictReader(io.StringIO(text)))


def write_json(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestCentrality:
    def test_regular_graph(self, tmp_path):
        payload = run_json(tmp_path, "centrality", *REGULAR)
        pi = [row["pi"] for row in payload["rows"]]
        np.testing.assert_allclose(pi, 0.05, atol=1e-10)
        assert sum(pi) == pytest.approx(1.0, abs=1e-12)
        assert payload["meta"]["c0"] == pytest.approx(20.0, rel=1e-9)
        assert payload["meta"]["total_mass"] == pytest.approx(20.0, rel=1e-9)
        assert all(row["degree"] == 4 for row in payload["rows"])

    def test_single_source_system(self, tmp_path):
        path = write_json(tmp_path, "one.json", {"A": [[0.5]], "B": [[0.5]]})
        payload = run_json(tmp_path, "centrality", "--input", path)
        assert [row["pi"] for row in payload["rows"]] == [1.0]
        assert payload["columns"] == ["index", "label", "pi", "total_mass", "c0", "irreducible", "sum_irreducible"]
        row = payload["rows"][0]
        assert row["total_mass"] == pytest.approx(1.0, rel=1e-12)
        assert row["c0"] == pytest.approx(1.0, rel=1e-12)
        assert row["irreducible"] is True and row["sum_irreducible"] is True

    def test_csv_carries_totals(self, capsys):
        _, rows = run_csv(capsys, "centrality", *ER)
        model = fj_model(generate_graph("er:0.25", 10, 2))
        assert len(rows) == 10
        assert {row["c0"] for row in rows} == {rows[0]["c0"]}
        assert float(rows[0]["c0"]) == pytest.approx(float(np.max(1.0 / model.pi)), rel=1e-12)
        assert float(rows[0]["total_mass"]) == pytest.approx(model.total_mass, rel=1e-12)
        assert rows[0]["irreducible"] == "true"
        assert rows[0]["sum_irreducible"] == "true"
        assert sum(float(row["pi"]) for row in rows) == pytest.approx(1.0, abs=1e-12)


class TestSolve:
    def test_regular_graph(self, tmp_path):
        payload = run_json(tmp_path, "solve", *REGULAR, "--budget", "30")
        row = payload["rows"][0]
        np.testing.assert_allclose([row[f"nu_{i}"] for i in range(1, 21)], 1.5, atol=1e-9)
        assert row["phi"] == pytest.approx(2.0 / 3.0, rel=1e-9)
        assert row["regime"] == -1

    def test_budget_at_floor(self, tmp_path):
        payload = run_json(tmp_path, "solve", *ER, "--budget", "10")
        row = payload["rows"][0]
        assert [row[f"nu_{i}"] for i in range(1, 11)] == [1.0] * 10
        assert row["active_set"] == []

    def test_json_report_reproduces_value(self, tmp_path):
        payload = run_json(tmp_path, "solve", *ER, "--budget", "13")
        row = payload["rows"][0]
        model = fj_model(generate_graph("er:0.25", 10, 2))
        nu = np.array([row[f"nu_{i}"] for i in range(1, 11)])
        assert phi(nu, model)[0] == pytest.approx(row["phi"], rel=1e-9)
        assert nu.sum() == pytest.approx(13.0, rel=1e-9)
        assert np.all(nu >= 1.0 - 1e-9)

    def test_vector_files(self, tmp_path):
        lam = tmp_path / "lam.txt"
        lam.write_text(" ".join(["0.5"] * 10))
        d = tmp_path / "d.json"
        d.write_text(json.dumps([1.0] * 10))
        from_files = run_json(tmp_path, "solve", *ER, "--budget", "13", "--lambda", str(lam), "--d", str(d))
        scalars = run_json(tmp_path, "solve", *ER, "--budget", "13")
        assert from_files["rows"] == scalars["rows"]


class TestExitCodes:
    def test_disconnected_sources(self, tmp_path, capsys):
        path = write_json(tmp_path, "split.json", {"A": [[0, 0], [0, 0]], "B": [[1, 0], [0, 1]]})
        assert main(["solve", "--input", path, "--budget", "3"]) == 4
        err = capsys.readouterr().err
        assert "NotIrreducible" in err and "{1}; {2}" in err

    def test_not_schur_stable(self, tmp_path):
        path = write_json(tmp_path, "unstable.json", {"A": [[1.2]], "B": [[1.0]]})
        assert main(["centrality", "--input", path]) == 3

    def test_budget_below_bounds(self):
        assert main(["solve", *REGULAR, "--budget", "10"]) == 5

    def test_generator_without_size(self):
        assert main(["centrality", "--generate", "er:0.25"]) == 2

    def test_parse_error(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 x\n")
        assert main(["centrality", "--input", str(path)]) == 2

    def test_solve_needs_budget(self):
        assert main(["solve", *REGULAR]) == 2


class TestSweep:
    def test_regular_graph_with_heuristics(self, capsys):
        text, rows = run_csv(capsys, "sweep", *REGULAR, "--sweep", "20:40:5", "--heuristics")
        assert text.splitlines()[0].startswith("c,phi,regime,regime_upper,regime_lower,c0,nu_1,")
        assert "\r" not in text
        assert len(rows) == 5
        for row in rows:
            c = float(row["c"])
            np.testing.assert_allclose([float(row[f"nu_{i}"]) for i in range(1, 21)], c / 20.0, atol=1e-9)
            assert float(row["ratio_degree"]) == pytest.approx(1.0, abs=1e-9)
            assert float(row["ratio_key"]) >= 1.0 - 1e-9
        values = [float(row["phi"]) for row in rows]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_heuristic_ratios_at_least_one(self, tmp_path):
        payload = run_json(tmp_path, "sweep", *ER, "--sweep", "10:20:6", "--heuristics")
        for row in payload["rows"]:
            assert row["ratio_degree"] >= 1.0 - 1e-9
            assert row["ratio_key"] >= 1.0 - 1e-9
        assert payload["meta"]["breakpoints"][-1] == pytest.approx(10.0, abs=1e-9)

    def test_default_range_and_feasibility(self, tmp_path):
        payload = run_json(tmp_path, "sweep", *ER)
        assert len(payload["rows"]) == 21
        for row in payload["rows"]:
            nu = np.array([row[f"nu_{i}"] for i in range(1, 11)])
            assert np.all(nu >= 1.0 - 1e-9)
            assert abs(nu.sum() - row["c"]) <= 1e-9 * row["c"]

    def test_csv_rows_bracket_budget_by_breakpoints(self, tmp_path, capsys):
        breakpoints = run_json(tmp_path, "sweep", *ER)["meta"]["breakpoints"]
        _, rows = run_csv(capsys, "sweep", *ER)
        for row in rows:
            c = float(row["c"])
            assert float(row["c0"]) == pytest.approx(breakpoints[0], rel=1e-12)
            if int(row["regime"]) < 0:
                assert row["regime_upper"] == ""
                assert c >= float(row["c0"])
            else:
                lower, upper = float(row["regime_lower"]), float(row["regime_upper"])
                assert lower in [pytest.approx(b, rel=1e-12) for b in breakpoints]
                assert upper in [pytest.approx(b, rel=1e-12) for b in breakpoints]
                assert lower - 1e-9 <= c <= upper

    def test_output_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", *ER, "--out", str(a)]) == 0
        assert main(["sweep", *ER, "--out", str(b), "--workers", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSchedule:
    def test_regular_graph_single_row(self, tmp_path):
        payload = run_json(tmp_path, "schedule", *REGULAR)
        assert len(payload["rows"]) == 1
        row = payload["rows"][0]
        assert row["breakpoint"] == pytest.approx(20.0, rel=1e-9)
        assert row["active_count"] == 20

    def test_last_breakpoint_is_floor(self, tmp_path):
        payload = run_json(tmp_path, "schedule", *ER)
        breakpoints = [row["breakpoint"] for row in payload["rows"]]
        assert breakpoints[-1] == pytest.approx(10.0, abs=1e-9)
        assert all(a > b for a, b in zip(breakpoints, breakpoints[1:]))


class TestCompareTopologies:
    def test_thresholds_and_flags(self, tmp_path):
        payload = run_json(tmp_path, "compare-topologies", "--n", "20", "--seed", "1")
        meta = payload["meta"]
        assert meta["c0"]["regular"] == pytest.approx(20.0, rel=1e-9)
        assert isinstance(meta["c0_ba_exceeds_er"], bool)
        assert {row["topology"] for row in payload["rows"]} == {"regular", "er", "ba"}
        assert len(payload["rows"]) == 3 * 21

    def test_csv_carries_flags(self, tmp_path, capsys):
        meta = run_json(tmp_path, "compare-topologies", "--n", "20", "--seed", "1")["meta"]
        _, rows = run_csv(capsys, "compare-topologies", "--n", "20", "--seed", "1")
        assert len(rows) == 3 * 21
        expected = "true" if meta["c0_ba_exceeds_er"] else "false"
        assert {row["c0_ba_exceeds_er"] for row in rows} == {expected}
        low = meta["phi_ba_exceeds_er_low_budget"]
        expected = "" if low is None else ("true" if low else "false")
        assert {row["phi_ba_exceeds_er_low_budget"] for row in rows} == {expected}
        for row in rows:
            assert float(row["c0"]) == pytest.approx(meta["c0"][row["topology"]], rel=1e-12)

    def test_high_budget_law_per_topology(self, tmp_path):
        first = run_json(tmp_path, "compare-topologies", "--n", "20", "--seed", "1")
        top = max(first["meta"]["c0"].values())
        payload = run_json(tmp_path, "compare-topologies", "--n", "20", "--seed", "1",
                           "--sweep", f"{top}:{2 * top}:4")
        for row in payload["rows"]:
            assert row["phi"] == pytest.approx(row["total_mass"] / row["c"], rel=1e-9)
