"""
Run artifacts: CSV tables, JSON records and the per-run manifest.
"""

from src.artifacts.manifest import RunManifest, code_version
from src.artifacts.writer import read_csv, write_csv, write_json

__all__ = ["RunManifest", "code_version", "read_csv", "write_csv", "write_json"]
