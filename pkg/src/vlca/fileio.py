"""Atomic file-writing helpers: write to a temp file, then rename over."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def _atomic_write(path: Path, data, mode: str, **open_kwargs) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, mode, **open_kwargs) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    _atomic_write(Path(path), text, "w", encoding="utf-8", newline="")


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    _atomic_write(Path(path), data, "wb")
