"""In-process job registry for long-running generation endpoints.

A job transitions pending -> done|failed exactly once; polling a finished
job always returns the identical result document.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..errors import ThemeWeaverError


@dataclass
class Job:
    job_id: str
    status: str = "pending"  # pending | done | failed
    result: Any = None
    error: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "result": self.result,
            "error": self.error,
        }


class JobManager:
    def __init__(self, max_workers: int = 4):
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, fn: Callable[[], Any]) -> Job:
        job = Job(job_id=f"job-{uuid.uuid4().hex[:12]}")
        with self._lock:
            self._jobs[job.job_id] = job

        def run():
            try:
                result = fn()
            except ThemeWeaverError as exc:
                job.error = {"code": exc.code, "message": exc.message}
                job.status = "failed"
            except Exception as exc:  # noqa: BLE001 - jobs must never vanish
                job.error = {"code": "internal_error", "message": str(exc)}
                job.status = "failed"
            else:
                job.result = result
                job.status = "done"

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
