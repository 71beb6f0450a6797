import json

import pytest

tia = pytest.importorskip("tia")


TWO_PATH = {
    "stations": [
        {"id": "O", "name": "Origin", "lat": 41.9, "lon": -87.6},
        {"id": "A", "name": "Mid fast", "lat": 41.9, "lon": -87.6},
        {"id": "B", "name": "Mid slow", "lat": 41.9, "lon": -87.6},
        {"id": "D", "name": "Destination", "lat": 41.9, "lon": -87.6},
    ],
    "segments": [
        {"id": "s-oa", "from": "O", "to": "A"},
        {"id": "s-ad", "from": "A", "to": "D"},
        {"id": "s-ob", "from": "O", "to": "B"},
        {"id": "s-bd", "from": "B", "to": "D"},
    ],
    "lines": [
        {"id": "p1", "mode": "rail", "stations": ["O", "A", "D"],
         "segments": ["s-oa", "s-ad"], "headway": 30.0, "capacity": 200.0,
         "travel_times": [10.0, 10.0]},
        {"id": "p2", "mode": "rail", "stations": ["O", "B", "D"],
         "segments": ["s-ob", "s-bd"], "headway": 30.0, "capacity": 200.0,
         "travel_times": [30.0, 30.0]},
    ],
}

INCIDENT = {
    "blocked_segments": ["s-oa"],
    "start_time": "2019-03-04T08:00",
    "end_time": "2019-03-04T09:00",
}


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenario")
    truth = tia.generate_scenario({"template": "paper-example", "seed": 1}, root / "scen")
    report = tia.report_scenario(root / "scen", root / "rep")
    return root, truth, report


def test_worked_example():
    assert tia.path_throughput(30.0, 200.0, 20.0, 60.0) == 400.0
    assert tia.path_throughput(30.0, 200.0, 60.0, 60.0) == 300.0


def test_throughput_report():
    report = tia.throughput_report(TWO_PATH, INCIDENT, [("O", "D")], k=1)
    assert report["nrui"] == pytest.approx(0.75)
    assert not report["vacuous"]
    row = report["ods"][0]
    assert row["affected"]
    assert row["throughput_before"] == pytest.approx(400.0)
    assert row["throughput_after"] == pytest.approx(300.0)


def test_scenario_report(scenario):
    root, truth, report = scenario
    assert report["nrui"] == pytest.approx(truth["analytic_nrui"])
    assert (root / "rep" / "report.txt").exists()
    assert (root / "rep" / "report.json").exists()
    assert report["fit"]["converged"]
    assert report["cohort"]["regular"] > 0


def test_component_calls(scenario):
    root, truth, _ = scenario
    scen = root / "scen"
    network = json.loads((scen / "network.json").read_text())
    incident = json.loads((scen / "incident.json").read_text())

    days = tia.select_normal_days(network, incident, scen / "incident_log.csv")
    assert days["days"] == truth["normal_days"]

    series = tia.headway_series(scen / "avl.csv", truth["blocked_lines"][0],
                                incident_date=days["incident_day"],
                                normal_dates=days["days"])
    assert any(row["incident_trips"] > 0 for row in series["rows"])

    demand = tia.demand_report(network, scen / "afc", incident, "system:rail",
                               days["days"])
    assert sum(c["incident_count"] for c in demand["series"]["cells"]) > 0

    sweep = tia.station_sweep(network, scen / "incident_log.csv", k=1)
    assert sweep and all(r["quadrant"] for r in sweep)


def test_fit_and_sensitivity(scenario, tmp_path):
    root, _, _ = scenario
    fit = tia.fit_observations(root / "rep" / "observations.csv")
    assert fit["converged"]
    table = tia.fit_table(fit)
    assert "Number of individuals" in table
    curve = tia.sensitivity(fit, grid="0:1:0.25")
    assert len(curve["points"]) == 5
    assert all(0.0 <= p["probability"] <= 1.0 for p in curve["points"])


def test_cli_passthrough(scenario, tmp_path):
    root, _, _ = scenario
    scen = root / "scen"
    rc = tia.run_cli(["redundancy", "--network", str(scen / "network.json"),
                      "--incident", str(scen / "incident.json"),
                      "--ods", str(scen / "ods.csv"), "--k", "1",
                      "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "redundancy.json").exists()


def test_error_mapping(tmp_path):
    with pytest.raises(FileNotFoundError):
        tia.report_scenario(tmp_path / "missing", tmp_path / "out")
    with pytest.raises(ValueError):
        tia.throughput_report({"stations": []}, INCIDENT, [("O", "D")])
