import json
import math

import pytest

import rdslin


def small(doc):
    doc = dict(doc)
    doc.setdefault("samples", 20)
    doc.setdefault("roundtrip_samples", 10)
    return doc


def test_version():
    assert rdslin.version() == rdslin.__version__
    assert rdslin.__version__.count(".") == 2


def test_closed_forms():
    # Frozen mpmath values.
    assert rdslin.contraction_factor(0.05, 1.0) == pytest.approx(0.336585471788686, rel=1e-13)
    assert rdslin.max_admissible_c(1.0) == pytest.approx(0.148550677883657, rel=1e-12)
    assert rdslin.max_admissible_c(0.5) == pytest.approx(0.0968462151569989, rel=1e-12)
    assert 2 * rdslin.majorant_factor(1.0) == pytest.approx(13.4634188715474, rel=1e-13)
    assert rdslin.holder_c_max(1.0, 1.0, 0.5, 0.025) == pytest.approx(0.182442348582584, rel=1e-9)
    b = rdslin.series_B(1.0, 1.0, 0.5, 0.025, 0.05)
    assert b["value"] == pytest.approx(134.000930435858, rel=1e-8)
    assert 0 < b["ratio"] < 1


def test_run_autonomous(tmp_path):
    report, code = rdslin.run(small({"scenario": "autonomous"}), out=tmp_path)
    assert code == rdslin.EXIT_PASS
    assert report["status"] == "pass"
    assert report["checks"]["residual_forward"]["max_residual"] <= 1e-5
    assert (tmp_path / "report.json").exists()
    header = (tmp_path / "holder_pairs.csv").read_text().splitlines()[0]
    assert header == "distance,image_distance"


def test_run_accepts_a_path(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small({"scenario": "periodic"})))
    report, code = rdslin.run(cfg)
    assert code == rdslin.EXIT_PASS
    assert report["constants"]["lambda"] == pytest.approx(math.log(math.sqrt(6.0)), rel=1e-8)


def test_smallness_violation():
    report, code = rdslin.run(small({"scenario": "autonomous", "c": 0.2}))
    assert code == rdslin.EXIT_HYPOTHESIS
    assert "0.148551" in report["failure"]["message"]


def test_validate_names_fault():
    report, code = rdslin.validate({"scenario": "autonomous", "fault": {"offset": 2, "angle": 0.4}})
    assert code == rdslin.EXIT_HYPOTHESIS
    assert report["failure"]["hypothesis"] == "projection-invariance"


def test_config_error_raises():
    with pytest.raises(rdslin.ConfigError):
        rdslin.run({"scenario": "nowhere"})
    with pytest.raises(rdslin.Error):
        rdslin.validate({"scenario": "autonomous", "tol": -1.0})


def test_components_and_payload():
    doc = {"components": [small({"scenario": "autonomous"}), small({"scenario": "periodic"})]}
    report, code = rdslin.components(doc)
    assert code == rdslin.EXIT_PASS
    assert [row["index"] for row in report["components"]] == [0, 1]
    a, _ = rdslin.run(small({"scenario": "autonomous"}))
    b, _ = rdslin.run(small({"scenario": "autonomous"}))
    assert rdslin.payload(a) == rdslin.payload(b)
    assert "timings" not in json.loads(rdslin.payload(a))
