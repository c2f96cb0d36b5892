"""
Serialization helpers shared by the exporters and management commands.
"""
import json
import os
import tempfile
from pathlib import Path

import tablib


def format_full(value):
    """Format a float with 17 significant digits."""
    return format(float(value), ".17g")


def format_shortest(value):
    """Format a float with the shortest representation that round-trips."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def build_dataset(headers, rows, formatter=format_shortest):
    """Return a tablib Dataset whose cells are already formatted strings."""
    dataset = tablib.Dataset(headers=list(headers))
    for row in rows:
        dataset.append([formatter(cell) if not isinstance(cell, str) else cell for cell in row])
    return dataset


def dataset_to_csv(dataset):
    return dataset.export("csv", lineterminator="\n")


def load_csv(path):
    """Load a CSV file into a tablib Dataset (first row is the header)."""
    text = Path(path).read_text(encoding="utf-8")
    return tablib.Dataset().load(text, format="csv")


def canonical_json(payload):
    """Serialize with sorted keys so equal payloads give equal text."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def atomic_write_text(path, text):
    """
    Write text next to the destination and rename it into place, so readers
    never observe a partially written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
