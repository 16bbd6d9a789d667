"""Digests of run configurations and output artifacts."""

import hashlib
import json
from pathlib import Path
from typing import Any


def canonical_json(config: dict[str, Any]) -> str:
    """Key-sorted, whitespace-free JSON; floats keep their repr."""
    return json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_digest(config: dict[str, Any]) -> str:
    """
    SHA-256 of the canonical JSON form of a configuration.

    Two runs with equal digests used the same resolved options.

    Returns:
        Lowercase hexadecimal SHA-256 hash (64 characters)
    """
    return _sha256(canonical_json(config).encode("utf-8"))


def artifact_digest(path: Path) -> str:
    """SHA-256 of a written table or field dump."""
    return _sha256(path.read_bytes())
