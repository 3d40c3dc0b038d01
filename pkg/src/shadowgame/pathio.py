"""Search-path persistence.

A path is stored as a JSON document::

    {"format_version": 1, "n": ..., "m": ..., "lp_digest": "...",
     "entries": [{"active_set": [...], "x": [...],
                  "table": {"alpha", "beta", "Qc", "Qu", "gamma", "phi"}}, ...],
     "status": "optimal"}

Every float is written with 17 significant digits so a load/save round trip
is exact, and the layout is fixed so identical paths give identical bytes.
The auxiliary objective is not stored; it is rebuilt as ``beta @ A_Omega``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import StaleState
from .lp import CanonicalLP, Vertex, canonicalize, check_payoff
from .simplex import PathEntry, SearchPath, SearchTable

FORMAT_VERSION = 1


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite number {v}")
    return format(v, ".17g")


def _encode(obj, depth=0) -> str:
    pad = "  " * (depth + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, depth + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * depth + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_num(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, depth + 1) for v in obj) + "\n" + "  " * depth + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _num(obj)


def dumps(doc: dict) -> str:
    return _encode(doc) + "\n"


def to_document(path: SearchPath, lp: CanonicalLP, payoff=None) -> dict:
    entries = []
    for e in path.entries:
        t = e.table
        entries.append({
            "active_set": list(e.active_set),
            "x": e.vertex.x,
            "table": {"alpha": t.alpha, "beta": t.beta, "Qc": t.Qc, "Qu": t.Qu,
                      "gamma": t.gamma, "phi": t.phi},
        })
    doc = {"format_version": FORMAT_VERSION, "n": lp.n, "m": lp.normal_count,
           "lp_digest": lp.digest(), "entries": entries, "status": path.status}
    if payoff is not None:
        doc["payoff"] = np.asarray(payoff, dtype=float)
    return doc


def from_document(doc: dict, lp: CanonicalLP) -> SearchPath:
    """Rebuild a path; StaleState if the document belongs to another LP or is malformed."""
    try:
        if doc["format_version"] != FORMAT_VERSION:
            raise StaleState(f"unsupported format_version {doc['format_version']!r}")
        if doc["lp_digest"] != lp.digest() or doc["n"] != lp.n or doc["m"] != lp.normal_count:
            raise StaleState("state was written for a different LP")
        entries = []
        for raw in doc["entries"]:
            omega = tuple(int(i) for i in raw["active_set"])
            tab = raw["table"]
            beta = np.array(tab["beta"], dtype=float)
            if len(omega) != lp.n or not all(0 <= i < lp.rows for i in omega):
                raise StaleState("active set does not fit the LP")
            table = SearchTable(
                np.array(tab["alpha"], dtype=float), beta, float(tab["Qc"]), float(tab["Qu"]),
                np.array(tab["gamma"], dtype=float).reshape(lp.rows, lp.n),
                np.array(tab["phi"], dtype=float).reshape(lp.rows), omega,
                beta @ lp.A[list(omega)],
            )
            entries.append(PathEntry(Vertex(np.array(raw["x"], dtype=float).reshape(lp.n), omega), table))
        status = doc["status"]
        if status not in ("optimal", "truncated") or not entries:
            raise StaleState("state has no entries or an unknown status")
    except StaleState:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise StaleState(f"malformed state document: {exc}") from None
    return SearchPath(entries, status)


def save_path(path: SearchPath, lp: CanonicalLP, destination, payoff=None) -> None:
    Path(destination).write_text(dumps(to_document(path, lp, payoff)))


def read_document(source) -> dict:
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise StaleState(f"state file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise StaleState("state file is not a JSON object")
    return doc


def load_path(source, lp: CanonicalLP) -> SearchPath:
    return from_document(read_document(source), lp)


def load_state(source):
    """Read a state file that embeds its payoff matrix; returns ``(G, lp, path)``."""
    doc = read_document(source)
    if "payoff" not in doc:
        raise StaleState("state file carries no payoff matrix")
    try:
        G = check_payoff(doc["payoff"])
    except (ValueError, TypeError) as exc:
        raise StaleState(f"bad payoff matrix in state: {exc}") from None
    lp = canonicalize(G)
    return G, lp, from_document(doc, lp)
