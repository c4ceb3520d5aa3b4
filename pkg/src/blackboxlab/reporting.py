"""Atomic file output and stable text formatting for result artifacts.

Floats are rendered with repr (shortest round-trip form), so rerunning a
seeded experiment reproduces output files byte for byte.
"""

from __future__ import annotations

import json
import os
import tempfile

__all__ = ["fmt", "atomic_write_text", "write_json"]


def fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def atomic_write_text(path, text: str):
    """Write via a temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload: dict):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
