"""
Table Writer
UTF-8 CSV tables with a '#'-prefixed manifest header, plus the JSON run manifest beside them
"""
import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from echolab.exceptions import TableFormatError

logger = logging.getLogger(__name__)

HEADER_TAG = "# echo-lab table"
DIGEST_PREFIX = "# digest: "
MANIFEST_PREFIX = "# manifest: "


@dataclass
class Table:
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    manifest: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise TableFormatError(f"Table has no column '{name}' (columns: {self.columns})")
        return np.array([float(row[name]) for row in self.rows])

    def require(self, names: Sequence[str]):
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise TableFormatError(f"Table is missing column(s) {missing}")


def manifest_digest(manifest: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form"""
    canonical = json.dumps(manifest, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_table(path: Union[str, Path], table: Table) -> Path:
    """
    Write the table and <name>.manifest.json next to it

    Args:
        path: CSV destination
        table: columns, rows and the run manifest

    Returns:
        Path of the written CSV
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = manifest_digest(table.manifest)

    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(HEADER_TAG + "\n")
        f.write(DIGEST_PREFIX + digest + "\n")
        f.write(MANIFEST_PREFIX + json.dumps(table.manifest, sort_keys=True, default=str) + "\n")
        writer = csv.DictWriter(f, fieldnames=table.columns, extrasaction="raise")
        writer.writeheader()
        for row in table.rows:
            writer.writerow({k: _cell(row.get(k, "")) for k in table.columns})

    manifest_path = path.with_suffix(".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump({"digest": digest, **table.manifest}, f, indent=2, sort_keys=True, default=str)

    logger.info(f"✓ Wrote {len(table.rows)} rows to {path}")
    return path


def read_table(path: Union[str, Path]) -> Table:
    """Parse a table written by write_table and check its manifest digest"""
    path = Path(path)
    if not path.is_file():
        raise TableFormatError(f"Table not found: {path}")

    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    header = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]

    if not header or header[0] != HEADER_TAG:
        raise TableFormatError(f"{path.name} is not an echo-lab table")
    digest = next((l[len(DIGEST_PREFIX):] for l in header if l.startswith(DIGEST_PREFIX)), None)
    raw = next((l[len(MANIFEST_PREFIX):] for l in header if l.startswith(MANIFEST_PREFIX)), None)
    if digest is None or raw is None:
        raise TableFormatError(f"{path.name} has no manifest header")
    try:
        manifest = json.loads(raw)
    except json.JSONDecodeError as e:
        raise TableFormatError(f"{path.name} manifest is not JSON: {e}")
    if manifest_digest(manifest) != digest:
        raise TableFormatError(f"{path.name} manifest digest does not match")
    if not body:
        raise TableFormatError(f"{path.name} has no column header")

    reader = csv.DictReader(body)
    return Table(columns=list(reader.fieldnames or []), rows=list(reader), manifest=manifest)
