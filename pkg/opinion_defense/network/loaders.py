"""
File ingestion: undirected edge lists and dense matrix JSON
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ..errors import AsymmetryError, NegativeWeight, OpinionDefenseError, ParseError, ZeroDegreeNode
from .builders import build_friedkin_johnsen, validate_system
from .models import InfluenceSystem, StubbornnessProfile, UndirectedGraph

logger = logging.getLogger(__name__)

FORMATS = ("edge_list", "matrix_json")


def _read_text(path: Union[str, Path]) -> str:
    p = Path(path)
    if not p.exists():
        raise ParseError("file not found", path=str(p))
    try:
        return p.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"not UTF-8 text: {e}", path=str(p))


def parse_edge_list(text: str, path: str = "<string>") -> UndirectedGraph:
    """
    Parse `<u> <v> [weight]` lines with 1-based ids; `#` starts a comment.
    Each line sets both W[u,v] and W[v,u].
    """
    edges: Dict[Tuple[int, int], Tuple[float, int]] = {}
    max_id = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected '<u> <v> <weight>', got {len(parts)} fields", path=path, line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            weight = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as e:
            raise ParseError(f"bad number: {e}", path=path, line=lineno)
        if u < 1 or v < 1:
            raise ParseError("node ids are 1-based", path=path, line=lineno)
        if not np.isfinite(weight):
            raise ParseError("weight is not finite", path=path, line=lineno)
        if weight < 0:
            raise NegativeWeight(f"negative weight {weight}", path=path, line=lineno)
        key = (min(u, v), max(u, v))
        if key in edges and edges[key][0] != weight:
            prev_weight, prev_line = edges[key]
            raise AsymmetryError(
                f"edge {u}-{v} has weight {weight} but line {prev_line} gave {prev_weight}",
                path=path, line=lineno,
            )
        edges[key] = (weight, lineno)
        max_id = max(max_id, u, v)

    if not edges:
        raise ParseError("no edges found", path=path)

    W = np.zeros((max_id, max_id))
    for (u, v), (weight, _) in edges.items():
        W[u - 1, v - 1] = weight
        W[v - 1, u - 1] = weight
    try:
        graph = UndirectedGraph(W=W)
    except ZeroDegreeNode as e:
        # ids are dense 1..max_id, so a skipped id shows up as an isolated node
        e.context.setdefault("path", path)
        raise
    logger.info(f"Loaded edge list {path}: {max_id} nodes, {len(edges)} edges")
    return graph


def _matrix(payload: dict, key: str, path: str) -> np.ndarray:
    value = payload.get(key)
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise ParseError("expected a non-empty list of rows", path=path, field=key)
    widths = {len(row) for row in value}
    if len(widths) != 1:
        raise ParseError(f"ragged rows (widths {sorted(widths)})", path=path, field=key)
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"non-numeric entry: {e}", path=path, field=key)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite entry", path=path, field=key)
    if np.any(arr < 0):
        i, j = np.argwhere(arr < 0)[0]
        raise NegativeWeight(f"negative entry at row {i + 1}, column {j + 1}", path=path, field=key)
    return arr


def parse_matrix_json(text: str, path: str = "<string>") -> Union[InfluenceSystem, UndirectedGraph]:
    """
    `{"A": [[...]], "B": [[...]]}` -> validated InfluenceSystem;
    `{"W": [[...]], "lambda": [...]}` -> Friedkin-Johnsen system;
    `{"W": [[...]]}` alone -> UndirectedGraph.
    """
    if not text.strip():
        raise ParseError("empty file", path=path)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno)
    if not isinstance(payload, dict):
        raise ParseError("top-level value must be an object", path=path)

    try:
        if "A" in payload or "B" in payload:
            system = InfluenceSystem(
                A=_matrix(payload, "A", path),
                B=_matrix(payload, "B", path),
                agent_labels=tuple(payload.get("agent_labels") or ()),
                source_labels=tuple(payload.get("source_labels") or ()),
            )
            return validate_system(system)
        if "W" in payload:
            graph = UndirectedGraph(W=_matrix(payload, "W", path), labels=tuple(payload.get("labels") or ()))
            if "lambda" not in payload:
                return graph
            lam = payload["lambda"]
            if isinstance(lam, (int, float)):
                profile = StubbornnessProfile.uniform(graph.n, float(lam))
            elif isinstance(lam, list):
                profile = StubbornnessProfile(np.array(lam, dtype=float))
            else:
                raise ParseError("lambda must be a number or a list", path=path, field="lambda")
            return build_friedkin_johnsen(graph, profile)
    except ParseError:
        raise
    except OpinionDefenseError as e:
        if not e.context.get("path"):
            e.context["path"] = path
        raise
    raise ParseError("expected fields A and B, or W (optionally with lambda)", path=path)


def load_system(path: Union[str, Path], format: str = "edge_list") -> Union[InfluenceSystem, UndirectedGraph]:
    """Load an influence system or graph from disk"""
    if format not in FORMATS:
        raise ParseError(f"unknown format '{format}' (expected one of {', '.join(FORMATS)})")
    text = _read_text(path)
    if format == "edge_list":
        return parse_edge_list(text, path=str(path))
    return parse_matrix_json(text, path=str(path))


def load_vector(path: Union[str, Path]) -> np.ndarray:
    """Read a per-node vector: JSON list or whitespace/comma separated numbers"""
    text = _read_text(path).strip()
    if not text:
        raise ParseError("empty vector file", path=str(path))
    try:
        if text.startswith("["):
            values: List[float] = [float(x) for x in json.loads(text)]
        else:
            values = [float(x) for x in text.replace(",", " ").split()]
    except (ValueError, TypeError, json.JSONDecodeError) as e:
        raise ParseError(f"bad vector: {e}", path=str(path))
    return np.array(values, dtype=float)
