"""Point-wise sweep runner with a JSONL checkpoint and resume.

Points are JSON-serialisable dicts.  Each point is evaluated by a
module-level worker function, possibly in a process pool.  Finished points
are appended to the checkpoint by the parent process only, at most every
``checkpoint_interval`` seconds, so a killed sweep picks up where the last
flush left it.  Results always come back in point order, which makes the
output independent of the number of workers.
"""
from __future__ import annotations

import json
import logging
import os
import time
import traceback
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

log = logging.getLogger(__name__)

THREADS_ENV = "SINGLET_PUMP_THREADS"
CHECKPOINT_INTERVAL = 30.0


@dataclass(frozen=True)
class PointResult:
    point: dict
    ok: bool
    result: dict | None = None
    error: dict | None = None

    def to_record(self) -> dict:
        return {"key": point_key(self.point), "point": self.point, "ok": self.ok,
                "result": self.result, "error": self.error}


def point_key(point: dict) -> str:
    return json.dumps(point, sort_keys=True, separators=(",", ":"))


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: SINGLET_PUMP_THREADS wins over the requested value."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return max(1, requested or 1)


def load_checkpoint(path: Path) -> dict[str, PointResult]:
    """Records from a checkpoint file; a torn final line is ignored."""
    done: dict[str, PointResult] = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                log.warning("skipping unreadable checkpoint line in %s", path)
                continue
            done[rec["key"]] = PointResult(rec["point"], rec["ok"], rec.get("result"), rec.get("error"))
    return done


class _Writer:
    """Single writer for the checkpoint; flushes buffered records on a timer."""

    def __init__(self, path: Path | None, interval: float):
        self.path, self.interval = path, interval
        self.buffer: list[dict] = []
        self.last = time.monotonic()

    def add(self, res: PointResult) -> None:
        if self.path is None:
            return
        self.buffer.append(res.to_record())
        if time.monotonic() - self.last >= self.interval:
            self.flush()

    def flush(self) -> None:
        self.last = time.monotonic()
        if self.path is None or not self.buffer:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            for rec in self.buffer:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.buffer.clear()


def _call(worker: Callable[[dict], dict], point: dict) -> PointResult:
    try:
        return PointResult(point, True, worker(point))
    except Exception as exc:  # recorded per point; the sweep goes on
        return PointResult(point, False, error={"type": type(exc).__name__, "message": str(exc),
                                                "traceback": traceback.format_exc(limit=5)})


def run_points(points: Sequence[dict], worker: Callable[[dict], dict], *, workers: int = 1,
               checkpoint: Path | str | None = None,
               checkpoint_interval: float = CHECKPOINT_INTERVAL) -> list[PointResult]:
    """Evaluate every point, reusing finished ones from ``checkpoint``."""
    keys = [point_key(p) for p in points]
    if len(set(keys)) != len(keys):
        raise ValueError("sweep points must be distinct")
    path = Path(checkpoint) if checkpoint is not None else None
    done = load_checkpoint(path) if path is not None else {}
    todo = [p for p, k in zip(points, keys) if k not in done]
    if done:
        log.info("resuming: %d of %d points already in %s", len(points) - len(todo), len(points), path)
    writer = _Writer(path, checkpoint_interval)
    try:
        if workers <= 1 or len(todo) <= 1:
            for p in todo:
                res = _call(worker, p)
                done[point_key(p)] = res
                writer.add(res)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                pending = {pool.submit(_call, worker, p) for p in todo}
                while pending:
                    finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in finished:
                        res = fut.result()
                        done[point_key(res.point)] = res
                        writer.add(res)
    finally:
        writer.flush()
    return [done[k] for k in keys]


def failures(results: Sequence[PointResult]) -> list[dict]:
    return [r.to_record() for r in results if not r.ok]
