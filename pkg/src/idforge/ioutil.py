"""Atomic writes and reproducibility manifests for pipeline outputs.

Every stage output embeds a manifest carrying the tool version, a hash of
the effective configuration, and the seed — enough to reproduce the file.
Manifests deliberately contain no timestamps: two runs with the same
inputs, config and seed must be byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Callable

from . import __version__


def manifest_comment(kind: str, config_hash: str, seed: int) -> str:
    """Single '#' line for CSV/text outputs."""
    return f"# idforge {__version__} kind={kind} config={config_hash} seed={seed}\n"


def manifest_header(kind: str, config_hash: str, seed: int) -> str:
    """NDJSON header object line."""
    return (
        json.dumps(
            {
                "_header": {
                    "tool": f"idforge {__version__}",
                    "kind": kind,
                    "config": config_hash,
                    "seed": seed,
                }
            },
            sort_keys=True,
        )
        + "\n"
    )


def manifest_dict(kind: str, config_hash: str, seed: int) -> dict:
    return {
        "tool": f"idforge {__version__}",
        "kind": kind,
        "config": config_hash,
        "seed": seed,
    }


def atomic_write(path: str | Path, write_fn: Callable, binary: bool = False) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        mode = "wb" if binary else "w"
        kwargs = {} if binary else {"encoding": "utf-8", "newline": ""}
        with os.fdopen(fd, mode, **kwargs) as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
