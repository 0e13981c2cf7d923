import json
import os
import shutil

import pytest

import ddtwin

DATA = os.environ.get("DDTWIN_DATA", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def data(*parts):
    return os.path.join(DATA, *parts)


def read(*parts):
    with open(data(*parts)) as f:
        return f.read()


def test_validate_srs_example():
    r = ddtwin.run_command("validate", data("srs", "run.yaml"))
    assert r["exit_code"] == 0, r["stderr"]


def test_ghost_flow_fails_validation():
    r = ddtwin.run_command("validate", data("srs", "ghost", "run.yaml"))
    assert r["exit_code"] == 1
    assert "ghost" in r["stderr"]


def test_trivial_solve_and_write(tmp_path):
    r = ddtwin.run_command("solve", data("trivial", "run.yaml"), out=str(tmp_path))
    assert r["exit_code"] == 0, r["stderr"]
    assert "7,200" in r["stdout"]
    paths = ddtwin.write_files(r)
    assert {os.path.basename(p) for p in paths} == {"schedule.json", "summary.txt"}
    assert json.load(open(tmp_path / "schedule.json"))


def test_tight_deadline_is_infeasible():
    r = ddtwin.run_command("solve", data("trivial", "tight", "run.yaml"))
    assert r["exit_code"] == 2
    assert "DEADLINE" in r["stdout"] + r["stderr"]


def test_bad_mode_raises():
    with pytest.raises(ValueError):
        ddtwin.run_command("solve", data("trivial", "run.yaml"), mode="fast")


def test_elaborate_then_solve_graph():
    r = ddtwin.run_command("elaborate", data("trivial", "run.yaml"))
    assert r["exit_code"] == 0, r["stderr"]
    graph = r["files"]["graph.json"]
    topo = read("srs", "topology.yaml")
    s = ddtwin.solve_graph(graph, topo)
    assert s["status"] == "optimal"
    assert s["makespan"] == 7200
    assert ddtwin.check_schedule(s["schedule_json"], graph, topo) == []


def test_scenarios_are_deterministic():
    a = ddtwin.run_command("scenarios", data("trivial", "run.yaml"), seed=3)
    b = ddtwin.run_command("scenarios", data("trivial", "run.yaml"), seed=3)
    assert a["exit_code"] == 0, a["stderr"]
    assert a["files"]["scenarios.csv"] == b["files"]["scenarios.csv"]


def test_report_merges(tmp_path):
    r = ddtwin.run_command("scenarios", data("trivial", "run.yaml"), out=str(tmp_path))
    ddtwin.write_files(r)
    rep = ddtwin.report_dir(str(tmp_path))
    assert rep["exit_code"] == 0
    assert rep["files"]["report.csv"] == r["files"]["scenarios.csv"]


def test_deltas_and_classes():
    assert ddtwin.delta_pct(207800, 239400) == 15
    assert ddtwin.delta_pct(207800, 578000) == 178
    assert ddtwin.classify(15) == "MODERATE"
    assert ddtwin.classify(60) == "HIGH"
    assert ddtwin.classify(None, infeasible=True) == "CERTAIN_FAILURE"


def test_format_flows_is_stable():
    once = ddtwin.format_flows(read("srs", "srs_flow.rdsl"))
    assert ddtwin.format_flows(once) == once


def test_syntax_error_is_diagnostic():
    with pytest.raises(ddtwin.DiagnosticError) as e:
        ddtwin.format_flows("Flow f\n  a : strem[2]\n")
    assert ":2:7:" in str(e.value)


def test_generate_catalog_covers_four_cores():
    xml = ddtwin.generate_catalog(read("srs", "topology.yaml"))
    assert xml.count("<pattern name=") == 16
