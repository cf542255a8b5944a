import io
import json
import logging
import sys
from typing import Iterable, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)

# 17 significant digits round-trip every float64
FLOAT_FORMAT = "%.17g"

Row = Union[BaseModel, dict]


def _as_dict(row: Row) -> dict:
    return row.model_dump() if isinstance(row, BaseModel) else dict(row)


def render(rows: Iterable[Row], columns: Sequence[str], output_format: str = "csv") -> str:
    """
    Renders report rows as CSV (pandas, 17 significant digits) or as a JSON
    list of objects with the same fields.
    """
    records: List[dict] = [{column: _as_dict(row).get(column) for column in columns} for row in rows]
    if output_format == "json":
        return json.dumps(records, indent=2, allow_nan=False) + "\n"
    frame = pd.DataFrame.from_records(records, columns=list(columns))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_report(
    rows: Iterable[Row], columns: Sequence[str], output_format: str = "csv", out: Optional[str] = None
) -> None:
    """Writes a report to `out`, or to stdout when no path is given."""
    text = render(rows, columns, output_format)
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info(f"Wrote {output_format} report to {out}")
