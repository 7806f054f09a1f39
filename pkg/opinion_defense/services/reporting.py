"""
Result tables and their CSV / JSON emission
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np


def _plain(value: Any) -> Any:
    """numpy scalars/arrays -> JSON-native values"""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def format_number(value: Any) -> str:
    """CSV cell text; floats keep 17 significant digits"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (list, tuple)):
        return ";".join(format_number(v) for v in value)
    return str(value)


def human(value: float) -> str:
    """Six significant digits for log lines"""
    return format(float(value), ".6g")


@dataclass
class Table:
    command: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add(self, **row: Any) -> None:
        self.rows.append(row)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_number(row.get(col)) for col in self.columns])
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "meta": _plain(self.meta),
            "columns": self.columns,
            "rows": [_plain({col: row.get(col) for col in self.columns}) for row in self.rows],
        }
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        return self.to_csv()


def nu_columns(count: int) -> List[str]:
    return [f"nu_{i + 1}" for i in range(count)]
