"""
Append-only run store.

Each run owns `<store_dir>/<run_id>/` with `predictions.jsonl` (one Prediction
per line, appended as produced) and `run.json` (the run manifest).
"""

import asyncio
import json
import logging

from pathlib import Path

from pydantic import ValidationError

from .state import Prediction

PREDICTIONS_FILE = "predictions.jsonl"
MANIFEST_FILE = "run.json"


class StoreError(Exception):
    """Raised when the run store cannot be read or written."""
    pass


class UnknownRun(StoreError):
    """Raised when a run id has no directory in the store."""
    pass


class RunStore:
    def __init__(self, store_dir: Path | str):
        self.store_dir = Path(store_dir)
        self._append_lock = asyncio.Lock()

    def run_dir(self, run_id: str) -> Path:
        return self.store_dir / run_id

    def exists(self, run_id: str) -> bool:
        return (self.run_dir(run_id) / MANIFEST_FILE).is_file() or (self.run_dir(run_id) / PREDICTIONS_FILE).is_file()

    async def append(self, prediction: Prediction) -> None:
        """Writes one record as a single line and flushes it before returning."""
        line = prediction.model_dump_json() + "\n"
        async with self._append_lock:
            try:
                run_dir = self.run_dir(prediction.run_id)
                run_dir.mkdir(parents=True, exist_ok=True)
                with open(run_dir / PREDICTIONS_FILE, "a", encoding="utf-8") as f:
                    f.write(line)
                    f.flush()
            except OSError as e:
                raise StoreError(f"Failed to append prediction for run '{prediction.run_id}': {e}") from e

    def load(self, run_id: str) -> list[Prediction]:
        """
        Reads every stored prediction of a run, in the order they were written.

        A truncated last line (left by an interrupted write) and other unreadable
        lines are skipped with a warning.

        Raises:
            UnknownRun: If the run does not exist.
        """
        if not self.run_dir(run_id).is_dir():
            raise UnknownRun(f"Run '{run_id}' not found in {self.store_dir}")

        path = self.run_dir(run_id) / PREDICTIONS_FILE
        if not path.is_file():
            return []

        predictions = []
        try:
            with open(path, encoding="utf-8") as f:
                for number, line in enumerate(f, start=1):
                    if not line.strip():
                        continue
                    try:
                        predictions.append(Prediction.model_validate_json(line))
                    except ValidationError as e:
                        logging.warning(f"Skipping unreadable record {path}:{number}: {e.errors()[0]['msg']}")
        except OSError as e:
            raise StoreError(f"Failed to read predictions of run '{run_id}': {e}") from e

        return predictions

    def write_manifest(self, run_id: str, manifest: dict) -> Path:
        path = self.run_dir(run_id) / MANIFEST_FILE
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise StoreError(f"Failed to write manifest of run '{run_id}': {e}") from e
        return path

    def read_manifest(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / MANIFEST_FILE
        if not path.is_file():
            raise UnknownRun(f"Run '{run_id}' has no manifest in {self.store_dir}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise StoreError(f"Failed to read manifest of run '{run_id}': {e}") from e
