"""Per-run manifest listing the configuration and every emitted file."""

import logging
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.artifacts.writer import write_json
from src.constants import MANIFEST_NAME, PACKAGE_NAME

logger = logging.getLogger(__name__)


def code_version() -> str:
    """Installed distribution version, or the source tree's when not installed."""
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        from src import __version__

        return __version__


@dataclass
class RunManifest:
    """
    Args:
        config: Configuration snapshot of the run.
        version: Code version string.
        duration_s: Wall-clock duration.
        files: Emitted files, relative to the run directory.
        status: "ok", "aborted" or "error".
        error: Failure message, if any.
    """

    config: Dict[str, Any]
    version: str = field(default_factory=code_version)
    duration_s: float = 0.0
    files: List[str] = field(default_factory=list)
    status: str = "ok"
    error: Optional[str] = None

    def add(self, out_dir: Union[str, Path], path: Union[str, Path]) -> str:
        """Record ``path`` relative to ``out_dir``."""
        name = Path(path).resolve().relative_to(Path(out_dir).resolve()).as_posix()
        if name not in self.files:
            self.files.append(name)
        return name

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "version": self.version,
            "duration_s": self.duration_s,
            "files": sorted(self.files),
            "status": self.status,
            "error": self.error,
        }

    def finalize(self, out_dir: Union[str, Path]) -> Path:
        """
        Write ``manifest.json`` into ``out_dir``.

        Raises:
            FileNotFoundError: If a listed file does not exist.
        """
        out_dir = Path(out_dir)
        missing = [name for name in self.files if not (out_dir / name).is_file()]
        if missing:
            raise FileNotFoundError(f"Manifest lists missing files: {missing}")
        path = write_json(out_dir / MANIFEST_NAME, self.to_dict())
        logger.info(f"Run manifest written to {path} ({len(self.files)} files)")
        return path
