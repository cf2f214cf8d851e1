"""
Run output directory: config echo, manifest, artifacts and persisted
provider responses.

Layout:
    <output_dir>/config.json
    <output_dir>/manifest.json
    <output_dir>/<artifacts...>
"""

import os
from copy import deepcopy
from datetime import datetime, timezone
from threading import Lock
from typing import Any, Dict, List, Optional

from errors import ConfigError, DataError
from logger_config import log_action, main_logger
from utils.json_utils import canonical_hash, save_json

PROVIDER_RESPONSES = "provider_responses.json"


class RunStore:
    """
    One command's output directory. Existing non-empty directories are only
    reused with ``overwrite=True``.
    """

    def __init__(self, output_dir: str, command: str, config: Dict[str, Any], seed: int, overwrite: bool = False):
        self.output_dir = output_dir
        self._lock = Lock()
        self._manifest = {
            "command": command,
            "seed": int(seed),
            "config_sha256": canonical_hash(config),
            "created_at": datetime.now(timezone.utc).isoformat(),
            "degraded": False,
            "artifacts": [],
        }
        self._open(overwrite)
        save_json(self.path("config.json"), config)
        log_action("RUN_STARTED", f"{command} -> {output_dir}", run_id=self.run_id)

    @property
    def run_id(self) -> str:
        return self._manifest["config_sha256"][:12]

    def _open(self, overwrite: bool):
        if os.path.isfile(self.output_dir):
            raise DataError(f"output path {self.output_dir} is a file")
        if os.path.isdir(self.output_dir) and os.listdir(self.output_dir) and not overwrite:
            raise ConfigError(f"output directory {self.output_dir} is not empty; pass --overwrite to reuse it")
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as e:
            raise DataError(f"cannot create output directory {self.output_dir}: {e}") from e

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def artifact(self, name: str) -> str:
        """Path for a new artifact, registered in the manifest"""
        with self._lock:
            if name not in self._manifest["artifacts"]:
                self._manifest["artifacts"].append(name)
        return self.path(name)

    def save_artifact_json(self, name: str, data):
        save_json(self.artifact(name), data)

    def mark_degraded(self, reason: str):
        with self._lock:
            self._manifest["degraded"] = True
            self._manifest.setdefault("warnings", []).append(reason)
        main_logger.warning(f"Run {self.run_id} degraded: {reason}")

    def set(self, key: str, value):
        """Extra manifest fields (graph hashes, metric summaries, ...)"""
        with self._lock:
            self._manifest[key] = value

    def save_provider_responses(self, records: List[dict], aliases: Optional[Dict[str, str]] = None):
        payload = {"records": records, "aliases": aliases or {}}
        self.save_artifact_json(PROVIDER_RESPONSES, payload)
        log_action("PROVIDER_RESPONSES_SAVED", f"{len(records)} responses", run_id=self.run_id)

    @property
    def manifest(self) -> Dict[str, Any]:
        with self._lock:
            return deepcopy(self._manifest)

    def finalize(self) -> Dict[str, Any]:
        manifest = self.manifest
        save_json(self.path("manifest.json"), manifest)
        log_action("RUN_FINISHED", f"{len(manifest['artifacts'])} artifacts degraded={manifest['degraded']}", run_id=self.run_id)
        return manifest
