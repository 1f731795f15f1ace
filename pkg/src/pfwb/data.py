"""Location and integrity checks for bundled data files."""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources
from pathlib import Path

ENV_VAR = "PFWB_DATA_DIR"


class DataError(ValueError):
    pass


def data_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(str(resources.files("pfwb") / "data"))


def resolve(path: str | os.PathLike) -> Path:
    """Return ``path`` if it exists, else look it up inside the data directory.

    A leading ``data/`` component is dropped for the lookup, so
    ``data/k3_deg12.op`` works from any working directory.
    """
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts[1:] if p.parts and p.parts[0] == "data" else p.parts
    candidate = data_dir().joinpath(*parts) if parts else data_dir()
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"{path}: not found (also looked in {candidate})")


def canonical_checksum(payload) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_json(name: str, checksum_field: str | None = None) -> dict:
    """Load a bundled JSON file; when ``checksum_field`` is given, verify its checksum."""
    path = resolve(name)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if checksum_field is not None:
        expected = doc.get("checksum")
        actual = canonical_checksum(doc[checksum_field])
        if expected != actual:
            raise DataError(f"{path}: checksum mismatch (stored {expected}, computed {actual})")
    return doc
