"""Unit tests for transition-log parsing and model-file emission."""
import io
import math
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.optimal_wait.distributions import Lomax
from src.optimal_wait.errors import DomainError, DuplicateKeyError, SchemaError
from src.optimal_wait.joint_opt import CoupledScenario
from src.optimal_wait.log_io import (MODEL_FILE_COLUMNS, ModelFileRow, emit_model_file,
                                     model_file_frame, parse_transition_log, write_table,
                                     write_transition_log)
from src.optimal_wait.simulation import generate_cluster_logs, generate_logs

HEADER = "node_id,from_state,to_state,duration_seconds,timestamp\n"


def lomax_row(cluster="a", transition="Unhealthy->Ready", fitted_at=1_700_000_000):
    return ModelFileRow(cluster, transition, "lomax", 2.0, 0.5, 18.0, 10.0, 600.0, 1.0 / 3.0, fitted_at)


def emitted(rows):
    buffer = io.StringIO()
    emit_model_file(rows, buffer)
    return buffer.getvalue()


def test_header_only_log_has_no_records():
    parsed = parse_transition_log(io.StringIO(HEADER))
    assert parsed.records == []
    assert parsed.errors == []
    assert parsed.max_timestamp == 0


def test_empty_log_is_a_schema_error():
    with pytest.raises(SchemaError, match="empty"):
        parse_transition_log(io.StringIO(""))


def test_missing_column_is_a_schema_error():
    with pytest.raises(SchemaError, match="timestamp"):
        parse_transition_log(io.StringIO("node_id,from_state,to_state,duration_seconds\nn,U,R,1\n"))


def test_malformed_rows_are_reported_with_line_numbers():
    text = HEADER + (
        "n1,Unhealthy,Ready,4,1700000000\n"
        "n2,Unhealthy,Ready,abc,1700000001\n"
        "n3,Unhealthy,Ready,-2,1700000002\n"
        "n4,Unhealthy,Ready,5,later\n"
        "n5, Unhealthy ,Ready,6,1700000004\n"
    )
    parsed = parse_transition_log(io.StringIO(text))
    assert [r.node_id for r in parsed.records] == ["n1", "n5"]
    assert parsed.records[1].from_state == "Unhealthy"
    assert [e.line for e in parsed.errors] == [3, 4, 5]
    assert "abc" in parsed.errors[0].message
    assert parsed.max_timestamp == 1_700_000_004


def test_extra_columns_become_features():
    text = ("node_id,from_state,to_state,duration_seconds,timestamp,rack,load\n"
            "n1,Unhealthy,Ready,4,1,2,0.5\n"
            "n2,Unhealthy,Ready,4,2,,\n")
    parsed = parse_transition_log(io.StringIO(text))
    assert parsed.feature_columns == ["rack", "load"]
    assert parsed.records[0].features == (2.0, 0.5)
    assert parsed.records[1].features is None


def test_generated_log_round_trips_byte_for_byte():
    scenario = CoupledScenario(dist1=Lomax(2.0, 0.05), dist2=Lomax(2.0, 0.05), p=0.1, B=50.0, C_HI=100.0)
    first = io.StringIO()
    write_transition_log(generate_logs(scenario, (18.0, 180.0), 50, seed=1), first)
    second = io.StringIO()
    write_transition_log(parse_transition_log(io.StringIO(first.getvalue())).records, second)
    assert first.getvalue().startswith(HEADER)
    assert second.getvalue() == first.getvalue()


def test_feature_log_round_trips_byte_for_byte():
    records = generate_cluster_logs([Lomax(1.2, 0.1), Lomax(0.6, 0.02)], 20, 600.0, seed=2)
    first = io.StringIO()
    write_transition_log(records, first)
    parsed = parse_transition_log(io.StringIO(first.getvalue()))
    assert parsed.feature_columns == ["feature_1", "feature_2"]
    second = io.StringIO()
    write_transition_log(parsed.records, second)
    assert second.getvalue() == first.getvalue()


def test_model_file_row_format():
    text = emitted([lomax_row()])
    assert text == ",".join(MODEL_FILE_COLUMNS) + "\n" + \
        "a,Unhealthy->Ready,lomax,2,0.5,18,10,600,0.333333333333,1700000000\n"


def test_empty_model_file_is_header_only():
    assert emitted([]) == ",".join(MODEL_FILE_COLUMNS) + "\n"


def test_model_file_rows_are_sorted_and_deterministic():
    rows = [lomax_row("b"), lomax_row("a", "PoweringOn->Ready"), lomax_row("a")]
    frame = model_file_frame(rows)
    assert list(zip(frame["cluster_id"], frame["transition"])) == [
        ("a", "PoweringOn->Ready"), ("a", "Unhealthy->Ready"), ("b", "Unhealthy->Ready")]
    assert emitted(rows) == emitted(list(reversed(rows)))
    assert "\r" not in emitted(rows)


def test_exponential_row_leaves_shape_empty():
    row = ModelFileRow("a", "Unhealthy->Ready", "exponential", None, 0.05, 0.0, 10.0, 600.0, 0.5, 7)
    assert emitted([row]).splitlines()[1] == "a,Unhealthy->Ready,exponential,,0.05,0,10,600,0.5,7"


def test_never_reboot_row_writes_infinity():
    row = ModelFileRow("a", "Unhealthy->Ready", "exponential", None, 0.5, math.inf, 10.0, 600.0, 0.0, 7)
    assert emitted([row]).splitlines()[1].split(",")[5] == "inf"


def test_duplicate_keys_are_rejected():
    with pytest.raises(DuplicateKeyError, match="cluster 'a'"):
        emitted([lomax_row(), lomax_row(fitted_at=5)])


def test_model_row_validation():
    with pytest.raises(DomainError):
        ModelFileRow("a", "t", "lomax", -2.0, 0.5, 18.0, 10.0, 600.0, 0.0, 0)
    with pytest.raises(DomainError):
        ModelFileRow("a", "t", "lomax", 2.0, 0.5, -1.0, 10.0, 600.0, 0.0, 0)


def test_write_table_text_format():
    stream = io.StringIO()
    write_table(model_file_frame([lomax_row()]), stream, fmt="text")
    header, line = stream.getvalue().splitlines()
    assert header.split() == list(MODEL_FILE_COLUMNS)
    assert "0.333333" in line


def test_row_with_extra_fields_is_reported_and_skipped():
    text = HEADER + (
        "n1,Unhealthy,Ready,4,1700000000\n"
        "n2,Unhealthy,Ready,5,1700000001,surplus\n"
        "n3,Unhealthy,Ready,6,1700000002\n"
    )
    parsed = parse_transition_log(io.StringIO(text))
    assert [r.node_id for r in parsed.records] == ["n1", "n3"]
    assert [e.line for e in parsed.errors] == [3]
    assert "saw 6" in parsed.errors[0].message


def test_blank_lines_keep_physical_line_numbers():
    text = HEADER + (
        "n1,Unhealthy,Ready,4,1700000000\n"
        "\n"
        "n2,Unhealthy,Ready,abc,1700000001\n"
        "n3,Unhealthy,Ready,6,1700000002,surplus\n"
        "n4,Unhealthy,Ready,7,1700000003\n"
    )
    parsed = parse_transition_log(io.StringIO(text))
    assert [r.node_id for r in parsed.records] == ["n1", "n4"]
    assert [e.line for e in parsed.errors] == [4, 5]


def test_log_is_read_from_a_path(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(HEADER + "n1,Unhealthy,Ready,4,1700000000\n", encoding="utf-8")
    assert parse_transition_log(str(path)).records[0].duration == 4.0
