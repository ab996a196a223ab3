"""Time system - builds time meshes and walks them, running per-step handlers."""

from __future__ import annotations
import math
from typing import Callable

import numpy as np

from src.systems.errors import SolverDivergedError, SolverError

MAX_STEPS = 2_000_000

StepHandler = Callable[[int, float, np.ndarray], None]


def uniform_mesh(t_start: float, t_end: float, dt: float) -> np.ndarray:
    """Steps of size dt; the last step lands exactly on t_end."""
    if dt <= 0:
        raise SolverError(f"dt must be positive, got {dt}")
    count = max(1, int(math.ceil((t_end - t_start) / dt - 1e-9)))
    mesh = t_start + dt * np.arange(count + 1)
    mesh[-1] = t_end
    return mesh


def geometric_mesh(t_start: float, t_end: float, steps: int) -> np.ndarray:
    """t_k = sigma g^k with g chosen so that `steps` steps reach t_end."""
    if t_start <= 0:
        raise SolverError("geometric mesh requires t_start > 0")
    mesh = np.geomspace(t_start, t_end, steps + 1)
    mesh[0], mesh[-1] = t_start, t_end
    return mesh


def refine_mesh(base: np.ndarray, max_step: Callable[[float, float], float]) -> np.ndarray:
    """Split each base interval so every sub-step respects max_step(t_a, t_b)."""
    out = [float(base[0])]
    for a, b in zip(base[:-1], base[1:]):
        t = float(a)
        b = float(b)
        while t < b:
            step = b - t
            for _ in range(80):
                limit = max_step(t, t + step)
                if step <= limit:
                    break
                step = 0.9 * limit
            if step <= 0 or not math.isfinite(step):
                raise SolverError(f"cannot find an admissible step at t={t}")
            nxt = t + step
            if b - nxt < 1e-9 * (b - float(a)):
                nxt = b
            out.append(nxt)
            t = nxt
            if len(out) > MAX_STEPS:
                raise SolverError(f"time mesh exceeds {MAX_STEPS} steps")
    return np.array(out)


class StepClock:
    """Walks a time mesh forward or backward and triggers step handlers."""

    def __init__(self, mesh: np.ndarray, backward: bool = False):
        self.mesh = np.asarray(mesh, dtype=float)
        self.backward = backward
        self.steps_taken = 0
        self._step_handlers: list[StepHandler] = []
        self._register_default_handlers()

    def _register_default_handlers(self) -> None:
        self._step_handlers.append(self._check_finite)

    def register_handler(self, handler: StepHandler) -> None:
        """Register a handler called as handler(step, time, state) after every step."""
        self._step_handlers.append(handler)

    @property
    def n_steps(self) -> int:
        return len(self.mesh) - 1

    def order(self) -> range:
        """Mesh indices in marching order."""
        return range(len(self.mesh) - 1, -1, -1) if self.backward else range(len(self.mesh))

    def advance(
        self,
        state: np.ndarray,
        step_fn: Callable[[int, float, float, np.ndarray], np.ndarray],
    ) -> np.ndarray:
        """March the whole mesh; step_fn(k, t_from, t_to, state) returns the next state."""
        indices = list(self.order())
        for handler in self._step_handlers:
            handler(0, float(self.mesh[indices[0]]), state)
        for step, (i_from, i_to) in enumerate(zip(indices[:-1], indices[1:]), start=1):
            t_from, t_to = float(self.mesh[i_from]), float(self.mesh[i_to])
            state = step_fn(step, t_from, t_to, state)
            self.steps_taken = step
            for handler in self._step_handlers:
                handler(step, t_to, state)
        return state

    def _check_finite(self, step: int, t: float, state: np.ndarray) -> None:
        if not np.all(np.isfinite(state)):
            raise SolverDivergedError(step, t)


class SnapshotRecorder:
    """Step handler that keeps every `stride`-th state plus the final one."""

    def __init__(self, total_steps: int, stride: int = 1):
        self.total_steps = total_steps
        self.stride = max(1, stride)
        self.times: list[float] = []
        self.states: list[np.ndarray] = []

    def __call__(self, step: int, t: float, state: np.ndarray) -> None:
        if step % self.stride == 0 or step == self.total_steps:
            self.times.append(t)
            self.states.append(np.array(state, copy=True))

    def ordered(self) -> tuple[np.ndarray, np.ndarray]:
        """Snapshots sorted by increasing time."""
        order = np.argsort(self.times, kind="stable")
        times = np.array(self.times)[order]
        return times, np.stack([self.states[i] for i in order])
