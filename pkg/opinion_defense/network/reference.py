"""
Published reference data shipped with the package
"""
import json
from pathlib import Path
from typing import Tuple

import numpy as np

from ..errors import ParseError

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
TABLE_PATH = DATA_DIR / "reference_centrality.json"


def reference_table() -> Tuple[np.ndarray, np.ndarray]:
    """
    (pi, w) of the 11-node reference network. The values are rounded to four
    decimals, so pi sums to 1 only approximately; the adjacency itself is not
    recoverable from the table.
    """
    try:
        payload = json.loads(TABLE_PATH.read_text(encoding="utf-8"))
        pi = np.asarray(payload["pi"], dtype=float)
        w = np.asarray(payload["w"], dtype=int)
    except (OSError, ValueError, KeyError) as e:
        raise ParseError(f"reference table unreadable: {e}", path=str(TABLE_PATH))
    if pi.shape != w.shape:
        raise ParseError("reference table columns differ in length", path=str(TABLE_PATH))
    return pi, w
