"""
Result tables emitted by the command-line interface.

A table is a header plus rows in a fixed order.  Numbers are written with
config.OUTPUT_SIGNIFICANT_DIGITS significant digits so identical inputs give
byte-identical output.
"""
import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np

from config import OUTPUT_SIGNIFICANT_DIGITS
from errors import UsageError

logger = logging.getLogger(__name__)


def format_number(value: Any, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        text = format(value, f".{digits}g")
        return "0" if text == "-0" else text
    return str(value)


def _json_value(value: Any, digits: int) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return format_number(value)
        return float(format(value, f".{digits}g"))
    return value


@dataclass
class ResultTable:
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise UsageError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> List[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_csv(self, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows([format_number(v, digits) for v in row] for row in self.rows)
        return buffer.getvalue()

    def to_json(self, digits: int = OUTPUT_SIGNIFICANT_DIGITS) -> str:
        payload = {
            "columns": list(self.columns),
            "rows": [[_json_value(v, digits) for v in row] for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    def render(self, as_json: bool = False) -> str:
        return self.to_json() if as_json else self.to_csv()


def write_table(table: ResultTable, out: Optional[Path], as_json: bool, stream) -> None:
    """Write `table` to `out` (LF line endings, UTF-8) or to `stream`."""
    text = table.render(as_json)
    if out is None:
        stream.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info(f"Wrote {len(table.rows)} rows to {out}")


def join_values(values: Sequence[Any]) -> str:
    """Several numbers in one cell, space separated."""
    return " ".join(format_number(v) for v in values)
