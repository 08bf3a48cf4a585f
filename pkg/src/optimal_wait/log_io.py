"""Transition-log and model-file CSV schemas."""
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import IO, List, Optional, Sequence, Union

import pandas as pd

from .errors import DomainError, DuplicateKeyError, SchemaError
from .simulation import TransitionRecord

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("node_id", "from_state", "to_state", "duration_seconds", "timestamp")
MODEL_FILE_COLUMNS = ("cluster_id", "transition", "family", "param1", "param2", "tau_hat",
                      "c_int", "baseline_tau", "relative_savings", "fitted_at")
FLOAT_FORMAT = "%.12g"
_BAD_ROW = "\x00bad-row:"

PathOrBuffer = Union[str, IO[str]]


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class ParsedLog:
    """Records parsed from a transition log plus the rows that could not be parsed."""
    records: List[TransitionRecord] = field(default_factory=list)
    errors: List[RowError] = field(default_factory=list)
    feature_columns: List[str] = field(default_factory=list)

    @property
    def max_timestamp(self) -> int:
        return max((r.timestamp for r in self.records), default=0)


def _parse_row(row: dict, feature_columns: Sequence[str]) -> TransitionRecord:
    for column in ("node_id", "from_state", "to_state"):
        if not row[column].strip():
            raise DomainError(f"empty {column}")
    try:
        duration = float(row["duration_seconds"])
    except ValueError:
        raise DomainError(f"duration_seconds is not a number: {row['duration_seconds']!r}") from None
    try:
        timestamp = int(row["timestamp"])
    except ValueError:
        raise DomainError(f"timestamp is not an integer: {row['timestamp']!r}") from None
    raw_features = [row[c].strip() for c in feature_columns]
    features = None
    if any(raw_features):
        try:
            features = tuple(float(v) for v in raw_features)
        except ValueError:
            raise DomainError(f"non-numeric feature in {raw_features}") from None
    return TransitionRecord(row["node_id"].strip(), row["from_state"].strip(), row["to_state"].strip(),
                            duration, timestamp, features)


def _read_text(source: PathOrBuffer) -> str:
    if isinstance(source, str):
        with open(source, encoding="utf-8", newline="") as handle:
            return handle.read()
    return source.read()


def parse_transition_log(source: PathOrBuffer) -> ParsedLog:
    """
    Read a transition-log CSV.

    Columns after the required ones are features, kept in file order.
    Malformed rows, including rows with too many fields, are reported with
    their 1-based physical line number and skipped. Blank lines are ignored.

    Raises:
        SchemaError: If the file is empty or a required column is missing
    """
    text = _read_text(source)
    try:
        header = pd.read_csv(io.StringIO(text), nrows=0, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SchemaError("Transition log is empty; expected a header row.") from None
    width = len(header.columns)

    def mark_bad_line(fields: List[str]) -> List[str]:
        # keep a placeholder so row positions stay aligned with physical lines
        return [f"{_BAD_ROW}{len(fields)}"] + [""] * (width - 1)

    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, skipinitialspace=True,
                            skip_blank_lines=False, index_col=False, engine="python",
                            on_bad_lines=mark_bad_line)
    except pd.errors.ParserError as e:
        raise SchemaError(f"Transition log is not valid CSV: {e}") from e
    frame = frame.fillna("")

    missing = [c for c in LOG_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"Transition log is missing required columns: {', '.join(missing)}.")
    feature_columns = [c for c in frame.columns if c not in LOG_COLUMNS]

    parsed = ParsedLog(feature_columns=feature_columns)
    for index, row in enumerate(frame.to_dict(orient="records")):
        line = index + 2
        first = row[frame.columns[0]]
        if first.startswith(_BAD_ROW):
            parsed.errors.append(RowError(line, f"expected {width} fields, saw {first[len(_BAD_ROW):]}"))
            continue
        if not any(str(v).strip() for v in row.values()):
            continue
        try:
            parsed.records.append(_parse_row(row, feature_columns))
        except DomainError as e:
            parsed.errors.append(RowError(line, str(e)))
    if parsed.errors:
        logger.warning(f"Skipped {len(parsed.errors)} malformed rows in the transition log")
    logger.info(f"Parsed {len(parsed.records)} transition records")
    return parsed


def write_transition_log(records: Sequence[TransitionRecord], destination: PathOrBuffer) -> None:
    """Write records with one ``feature_k`` column per feature slot."""
    width = max((len(r.features) for r in records if r.features is not None), default=0)
    feature_columns = [f"feature_{k}" for k in range(1, width + 1)]
    rows = []
    for r in records:
        row = {"node_id": r.node_id, "from_state": r.from_state, "to_state": r.to_state,
               "duration_seconds": r.duration, "timestamp": r.timestamp}
        values = list(r.features) if r.features is not None else []
        values += [math.nan] * (width - len(values))
        row.update(zip(feature_columns, values))
        rows.append(row)
    frame = pd.DataFrame(rows, columns=list(LOG_COLUMNS) + feature_columns)
    frame.to_csv(destination, float_format=FLOAT_FORMAT, lineterminator="\n", index=False)


@dataclass(frozen=True)
class ModelFileRow:
    """
    One fitted transition of one cluster.

    ``param1``/``param2`` hold the (shape, scale) slots; the exponential
    leaves ``param1`` empty (None) and puts its rate in ``param2``.
    """
    cluster_id: str
    transition: str
    family: str
    param1: Optional[float]
    param2: float
    tau_hat: float
    c_int: float
    baseline_tau: float
    relative_savings: float
    fitted_at: int

    def __post_init__(self) -> None:
        for name in ("param1", "param2"):
            value = getattr(self, name)
            if value is not None and not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value}.")
        if math.isnan(self.tau_hat) or self.tau_hat < 0.0:
            raise DomainError(f"tau_hat must be non-negative, got {self.tau_hat}.")

    @property
    def key(self):
        return self.cluster_id, self.transition


def model_file_frame(rows: Sequence[ModelFileRow]) -> pd.DataFrame:
    """
    Rows sorted by (cluster_id, transition).

    Raises:
        DuplicateKeyError: If two rows share a (cluster_id, transition) key
    """
    seen = set()
    for row in rows:
        if row.key in seen:
            raise DuplicateKeyError(f"Duplicate model-file row for cluster '{row.cluster_id}', "
                                    f"transition '{row.transition}'.")
        seen.add(row.key)
    ordered = sorted(rows, key=lambda r: r.key)
    frame = pd.DataFrame([asdict(r) for r in ordered], columns=list(MODEL_FILE_COLUMNS))
    return frame.astype({"param1": float, "fitted_at": "Int64"}) if ordered else frame


def emit_model_file(rows: Sequence[ModelFileRow], destination: PathOrBuffer) -> None:
    """Write the model file: fixed header, sorted rows, 12 significant digits, LF endings."""
    model_file_frame(rows).to_csv(destination, float_format=FLOAT_FORMAT, lineterminator="\n", index=False)
    logger.info(f"Emitted {len(rows)} model-file rows")


def write_table(frame: pd.DataFrame, stream: IO[str], fmt: str = "csv") -> None:
    """Print a result table as CSV or as aligned text."""
    if fmt == "csv":
        frame.to_csv(stream, float_format=FLOAT_FORMAT, lineterminator="\n", index=False)
    else:
        stream.write(frame.to_string(index=False, float_format=lambda v: f"{v:.6g}") + "\n")
