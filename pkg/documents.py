"""
Deterministic output documents

JSON with insertion-ordered keys, reals at 17 significant digits, non-finite reals as
the strings "inf"/"-inf"/"nan" and a trailing newline; tab-separated tables with
`# key: value` header lines. Same inputs give the same bytes.
"""
import hashlib
import json
import logging
import math
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from errors import MissingDependencyError, ParseError

logger = logging.getLogger(__name__)

INDENT = "  "


def format_real(value: float) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


def _render(value: Any, depth: int) -> str:
    pad = INDENT * (depth + 1)
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        text = format_real(value)
        return text if math.isfinite(float(value)) else json.dumps(text)
    if isinstance(value, complex):
        return _render({"re": value.real, "im": value.imag}, depth)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_render(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + INDENT * depth + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        if len(value) == 0:
            return "[]"
        items = [f"{pad}{_render(v, depth + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + INDENT * depth + "]"
    raise TypeError(f"cannot render {type(value).__name__} into a document")


def render_document(document: Dict[str, Any]) -> str:
    return _render(document, 0) + "\n"


def write_document(path: str, document: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_document(document))
    logger.debug(f"wrote {path}")
    return path


def read_document(path: str) -> Dict[str, Any]:
    """Load a document written by write_document; a missing file is a missing upstream dependency"""
    if not os.path.exists(path):
        raise MissingDependencyError(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, path)


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    return str(value)


def write_table(path: str, header: Dict[str, Any], columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines: List[str] = [f"# {key}: {_cell(value)}" for key, value in header.items()]
    lines.append("\t".join(columns))
    lines.extend("\t".join(_cell(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"wrote {path}")
    return path


def read_table(path: str) -> tuple:
    """(header dict, column names, rows of strings)"""
    if not os.path.exists(path):
        raise MissingDependencyError(path)
    header: Dict[str, str] = {}
    columns: List[str] = []
    rows: List[List[str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f.read().splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                header[key] = value
            elif not columns:
                columns = line.split("\t")
            elif line:
                rows.append(line.split("\t"))
    return header, columns, rows


def file_digest(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
