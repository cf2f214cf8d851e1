import hashlib
import json
from pathlib import Path

from errors import DataError


def load_json(file_path: str, default=None):
    path = Path(file_path)
    if not path.exists():
        if default is not None:
            return default
        raise DataError(f"file not found: {file_path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON in {file_path}: {e}") from e


def save_json(file_path: str, data):
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def canonical_hash(data) -> str:
    """sha256 of the key-sorted compact JSON encoding"""
    encoded = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()
