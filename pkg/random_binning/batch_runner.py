"""Batched trial execution with optional process parallelism.

Features:
- Trials split into batches of simulation.batch_size
- Sequential or ProcessPoolExecutor execution (sweep.workers)
- Graceful shutdown on SIGINT/SIGTERM between batches
- Progress callbacks
- Results ordered by trial index regardless of completion order
"""

import signal
import threading
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .config import get_config
from .logging_config import get_logger

logger = get_logger('batch_runner')


class RunStatus(Enum):
    """Status of a trial run."""
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    INTERRUPTED = "interrupted"


@dataclass
class RunResult:
    """Result of a trial run."""
    total: int
    records: list = field(default_factory=list)
    status: RunStatus = RunStatus.PENDING

    @property
    def completed(self) -> int:
        return len(self.records)

    @property
    def interrupted(self) -> bool:
        return self.status is RunStatus.INTERRUPTED


def _run_batch(fn: Callable[[int], Any], indices: list[int]) -> list:
    return [fn(i) for i in indices]


class TrialRunner:
    """Runs ``fn(trial_index)`` for every trial, in batches."""

    def __init__(
        self,
        batch_size: Optional[int] = None,
        workers: Optional[int] = None,
        handle_signals: bool = False,
    ):
        """Initialize trial runner.

        Args:
            batch_size: Trials per batch (default from config)
            workers: Worker processes; 1 runs in-process (default from config)
            handle_signals: Stop after the current batch on SIGINT/SIGTERM
        """
        config = get_config()
        self.batch_size = batch_size or config.simulation.batch_size
        self.workers = workers or config.sweep.workers
        self.handle_signals = handle_signals
        self._interrupted = False
        logger.debug(f"TrialRunner initialized (batch_size={self.batch_size}, workers={self.workers})")

    def _signal_handler(self, signum, frame):
        """Handle shutdown signals gracefully."""
        sig_name = signal.Signals(signum).name
        logger.warning(f"Received {sig_name}, stopping after the current batch...")
        self._interrupted = True

    def _install_handlers(self) -> dict:
        if not self.handle_signals or threading.current_thread() is not threading.main_thread():
            return {}
        previous = {}
        for sig in (signal.SIGINT, signal.SIGTERM):
            previous[sig] = signal.signal(sig, self._signal_handler)
        return previous

    def run(
        self,
        fn: Callable[[int], Any],
        trials: int,
        on_progress: Optional[Callable[[int, int], None]] = None,
        on_batch_complete: Optional[Callable[[int, int], None]] = None,
    ) -> RunResult:
        """Execute all trials.

        Args:
            fn: Picklable callable mapping a trial index to its record
            trials: Number of trials
            on_progress: Callback (done, total)
            on_batch_complete: Callback (batch_number, total_batches)

        Returns:
            RunResult with records sorted by trial index
        """
        self._interrupted = False
        result = RunResult(total=trials, status=RunStatus.IN_PROGRESS)
        batches = [
            list(range(start, min(start + self.batch_size, trials)))
            for start in range(0, trials, self.batch_size)
        ]
        logger.debug(f"Running {trials} trials in {len(batches)} batches")

        previous = self._install_handlers()
        by_batch: dict[int, list] = {}
        try:
            if self.workers > 1 and len(batches) > 1:
                self._run_parallel(fn, batches, by_batch, trials, on_progress, on_batch_complete)
            else:
                self._run_sequential(fn, batches, by_batch, trials, on_progress, on_batch_complete)
        finally:
            for sig, handler in previous.items():
                signal.signal(sig, handler)

        for batch_num in sorted(by_batch):
            result.records.extend(by_batch[batch_num])

        if self._interrupted:
            result.status = RunStatus.INTERRUPTED
            logger.warning(f"Run interrupted after {result.completed}/{trials} trials")
        else:
            result.status = RunStatus.COMPLETED
        return result

    def _run_sequential(self, fn, batches, by_batch, trials, on_progress, on_batch_complete):
        done = 0
        for batch_num, indices in enumerate(batches, 1):
            if self._interrupted:
                break
            by_batch[batch_num] = _run_batch(fn, indices)
            done += len(indices)
            if on_progress:
                on_progress(done, trials)
            if on_batch_complete:
                on_batch_complete(batch_num, len(batches))

    def _run_parallel(self, fn, batches, by_batch, trials, on_progress, on_batch_complete):
        done = 0
        completed_batches = 0
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            futures = {
                executor.submit(_run_batch, fn, indices): batch_num
                for batch_num, indices in enumerate(batches, 1)
            }
            for future in as_completed(futures):
                batch_num = futures[future]
                by_batch[batch_num] = future.result()
                done += len(by_batch[batch_num])
                completed_batches += 1
                if on_progress:
                    on_progress(done, trials)
                if on_batch_complete:
                    on_batch_complete(completed_batches, len(batches))
                if self._interrupted:
                    for pending in futures:
                        pending.cancel()
                    break
