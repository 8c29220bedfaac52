"""Deterministic report emission and small orchestration helpers.

Output files must be byte-identical across runs and worker counts: floats
are serialized with their shortest round-trip repr, JSON keys are sorted,
CSV uses comma separators with LF endings, and every write is atomic
(temp file in the target directory, then rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path


def resolve_workers(explicit: int | None = None) -> int:
    """Worker count: explicit argument, else WORKERS env, else cpu count."""
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("WORKERS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"WORKERS must be a positive integer, got {env!r}")
        if n < 1:
            raise ValueError(f"WORKERS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def ordered_parallel_map(fn, items, workers: int | None = None) -> list:
    """Map with an order-fixed reduction; results match the sequential run."""
    items = list(items)
    n = resolve_workers(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def format_csv(header: list[str], rows) -> str:
    """CSV text with shortest round-trip float formatting and LF endings."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                # plain-float repr is the shortest round-trip form; numpy
                # scalars would otherwise print their type name
                cells.append(repr(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_text_atomic(path: Path, text: str) -> None:
    """Atomic write: temp file next to the target, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
