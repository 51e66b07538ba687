import pytest

from glmbplots import SchemaError
from glmbplots.schemas import (
    read_cardinality_csv,
    read_measurements_csv,
    read_ospa_csv,
    read_state_csv,
    read_summary_json,
    read_timing_json,
    write_ospa_csv,
)


def test_reads_every_published_file(run_outputs):
    trial = run_outputs["gibbs"] / "trial_000"
    ospa = read_ospa_csv(trial / "ospa.csv")
    assert len(ospa["scan"]) == 8
    card = read_cardinality_csv(trial / "cardinality.csv")
    assert card["scan"][0] == 1
    tracks = read_state_csv(trial / "tracks.csv")
    truth = read_state_csv(trial / "truth.csv")
    assert truth  # the scripted scenario has objects alive from scan 1
    for rows in truth.values():
        assert all(len(x) == 4 for _, x in rows)
    meas = read_measurements_csv(trial / "measurements.csv")
    assert all(len(z) == 2 for _, _, z in meas)
    summary = read_summary_json(run_outputs["gibbs"] / "mc_summary.json")
    assert summary["solver"] == "gibbs"
    timing = read_timing_json(trial / "timing.json")
    assert timing["total_s"] > 0


def test_ospa_roundtrip(run_outputs, tmp_path):
    src = run_outputs["gibbs"] / "trial_000" / "ospa.csv"
    table = read_ospa_csv(src)
    copy = tmp_path / "ospa_copy.csv"
    write_ospa_csv(copy, table)
    assert read_ospa_csv(copy) == table
    assert copy.read_bytes() == src.read_bytes()


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "ospa.csv"
    bad.write_text("scan,ospa,ospa_loc\n1,2.0,1.0\n")
    with pytest.raises(SchemaError, match="ospa_card"):
        read_ospa_csv(bad)


def test_empty_file_is_a_schema_error(tmp_path):
    empty = tmp_path / "cardinality.csv"
    empty.write_text("")
    with pytest.raises(SchemaError, match="empty"):
        read_cardinality_csv(empty)


def test_summary_requires_schema_field(tmp_path):
    doc = tmp_path / "mc_summary.json"
    doc.write_text('{"solver": "gibbs", "trials": 1, "mean_ospa": []}')
    with pytest.raises(SchemaError, match="schema"):
        read_summary_json(doc)
