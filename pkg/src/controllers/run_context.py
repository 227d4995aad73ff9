"""
Output directory bookkeeping shared by the experiment controllers.

A RunContext owns one run directory: every artifact goes through it so the
manifest lists exactly what was written.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

from src.artifacts import RunManifest, write_csv, write_json


class RunContext:
    def __init__(self, out_dir: Union[str, Path], config: Dict[str, Any], logger: logging.Logger):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(config=config)
        self.logger = logger
        self._started = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._started

    def csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        path = write_csv(self.out_dir / name, columns, rows)
        self.manifest.add(self.out_dir, path)
        return path

    def json(self, name: str, record: Mapping[str, Any]) -> Path:
        path = write_json(self.out_dir / name, record)
        self.manifest.add(self.out_dir, path)
        return path

    def finish(self, status: str = "ok", error: Optional[str] = None) -> RunManifest:
        self.manifest.status = status
        self.manifest.error = error
        self.manifest.duration_s = self.elapsed
        self.manifest.finalize(self.out_dir)
        if status != "ok":
            self.logger.warning(f"Run in {self.out_dir} finished with status '{status}': {error}")
        return self.manifest
