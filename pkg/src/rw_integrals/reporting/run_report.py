"""
Run reports and resource metrics for CLI commands.

A RunReport records what a command checked and whether every check passed; the
ResourceMonitor samples the resident memory of the process on a background
thread so the report can carry its peak.
"""

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import psutil

from ..logging.logger import get_logger
from ..models.results import Residual

logger = get_logger(__name__)

MONITOR_INTERVAL = 0.05


class ResourceMonitor:
    """Peak resident memory of the current process, sampled on a daemon thread."""

    def __init__(self, interval: float = MONITOR_INTERVAL):
        self.interval = interval
        self._process = psutil.Process()
        self._peak_bytes = self._process.memory_info().rss
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def _sample(self) -> None:
        try:
            rss = self._process.memory_info().rss
        except psutil.Error:
            return
        self._peak_bytes = max(self._peak_bytes, rss)

    def _run(self) -> None:
        while not self._stop.wait(self.interval):
            self._sample()

    def start(self) -> "ResourceMonitor":
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, daemon=True, name="resource-monitor")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._sample()

    @property
    def peak_memory_mb(self) -> float:
        return self._peak_bytes / (1024 * 1024)

    def cpu_percent(self) -> float:
        """CPU use of this process since the previous call."""
        return float(self._process.cpu_percent(interval=None))

    def __enter__(self) -> "ResourceMonitor":
        return self.start()

    def __exit__(self, exc_type, exc_value, tb) -> None:
        self.stop()


def _jsonable(value: Any) -> Any:
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class RunReport:
    """Outcome of one command: pass iff every recorded check passed and no error occurred."""

    command: str
    config_digest: Optional[str] = None
    seed: Optional[int] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    wall_time: float = 0.0
    peak_memory_mb: Optional[float] = None
    error: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_check(self, check_id: str, residual: float, tolerance: float, **details) -> bool:
        """Record one check; returns whether it passed."""
        passed = bool(np.isfinite(residual)) and residual < tolerance
        self.checks.append({
            "id": check_id,
            "residual": float(residual),
            "tolerance": float(tolerance),
            "passed": passed,
            **_jsonable(details),
        })
        logger.log_check_result(check_id, float(residual), float(tolerance), passed)
        return passed

    def add_residual(self, result: Residual) -> bool:
        self.checks.append(result.to_dict())
        logger.log_check_result(result.check_id, float(result.residual), float(result.tolerance),
                                result.passed, component=result.component)
        return result.passed

    @property
    def passed(self) -> bool:
        return self.error is None and all(check["passed"] for check in self.checks)

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [check for check in self.checks if not check["passed"]]

    def finish(self, monitor: Optional[ResourceMonitor] = None) -> "RunReport":
        self.wall_time = time.perf_counter() - self._started
        if monitor is not None:
            self.peak_memory_mb = round(monitor.peak_memory_mb, 2)
            logger.performance.log_resource_usage(monitor.peak_memory_mb, monitor.cpu_percent())
        logger.performance.log_operation_timing(self.command, self.wall_time, success=self.passed)
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "parameters": _jsonable(self.parameters),
            "checks": self.checks,
            "pass": self.passed,
            "wall_time": round(self.wall_time, 6),
            "peak_memory_mb": self.peak_memory_mb,
        }
        if self.error is not None:
            data["error"] = self.error
        if self.extra:
            data["extra"] = _jsonable(self.extra)
        return data

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str), encoding="utf-8")
        logger.debug("Run report written", path=str(path))
        return path
