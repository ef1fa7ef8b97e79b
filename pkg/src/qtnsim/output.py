"""Result files: comma-separated data tables and JSON run manifests.

Data tables are UTF-8, newline-terminated, '.' decimal separator,
with '#'-prefixed metadata comment lines before a header row.  Every
table names its manifest; the manifest records the resolved
configuration, seed, tool version, output hashes, and the content hash
of any bundled data tables, so a manifest can be re-run to reproduce
the data files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "format_value",
    "write_table",
    "read_table",
    "file_sha256",
    "write_manifest",
    "read_manifest",
]


def format_value(value) -> str:
    """Locale-independent cell text; None becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, float):
        # float() strips numpy scalar wrappers so repr stays plain.
        return repr(float(value))
    return str(value)


def write_table(path, header, rows, metadata=None) -> None:
    """Write a comma-separated table with '#' metadata comment lines.

    ``metadata`` maps names to JSON-serializable values, one comment
    line each, in insertion order.
    """
    path = Path(path)
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key} = {json.dumps(value, sort_keys=True)}")
    lines.append(",".join(header))
    for row in rows:
        cells = [format_value(cell) for cell in row]
        if len(cells) != len(header):
            raise ValueError(f"row has {len(cells)} cells, header has {len(header)}")
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_table(path):
    """Read a table written by :func:`write_table`.

    Returns (metadata dict, header list, rows as string lists).
    """
    metadata = {}
    header = None
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, _, raw = line[1:].partition("=")
            metadata[key.strip()] = json.loads(raw.strip())
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return metadata, header, rows


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, subcommand, config, seed, outputs, data_tables=None) -> None:
    """Write a run manifest as stable JSON.

    ``outputs`` maps output file names (relative to the manifest) to
    their sha256 hex digests; ``data_tables`` maps bundled table names
    to content hashes.  No timestamps: re-running the same manifest
    must reproduce it exactly.
    """
    doc = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
        "data_tables": data_tables or {},
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("subcommand", "config", "seed", "version", "outputs"):
        if key not in doc:
            raise ValueError(f"manifest missing key: {key!r}")
    return doc
