"""Adaptive Dormand-Prince 5(4) integration and dataset assembly.

The solver keeps a PI-controlled step size and fills a uniform sample
grid from the fifth-order dense interpolant, so trajectory files never
depend on the internal step sequence.  Failures (blowup, nan dynamics,
step underflow, step budget) raise IntegrationError carrying the
portion of the grid that was reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .systems import SystemSpec

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th- and embedded 4th-order weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# dense-output polynomial, one row per stage, columns are theta^1..theta^4
_P = np.array(
    [
        [
            1.0,
            -8048581381 / 2820520608,
            8663915743 / 2820520608,
            -12715105075 / 11282082432,
        ],
        [0.0, 0.0, 0.0, 0.0],
        [
            0.0,
            131558114200 / 32700410799,
            -68118460800 / 10900136933,
            87487479700 / 32700410799,
        ],
        [
            0.0,
            -1754552775 / 470086768,
            14199869525 / 1410260304,
            -10690763975 / 1880347072,
        ],
        [
            0.0,
            127303824393 / 49829197408,
            -318862633887 / 49829197408,
            701980252875 / 199316789632,
        ],
        [
            0.0,
            -282668133 / 205662961,
            2019193451 / 616988883,
            -1453857185 / 822651844,
        ],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_SAFETY = 0.9

RHS = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 1_000_000


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray


@dataclass
class RegressionDataset:
    """Sampled (t, x) inputs with divided-difference derivative targets."""

    times: np.ndarray
    states: np.ndarray
    targets: np.ndarray
    dt: float
    target_dim: int


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_time: float, partial: Trajectory):
        super().__init__(f"{message} (integrated up to t={last_time:.6g})")
        self.last_time = last_time
        self.partial = partial


def sample_grid(t0: float, t1: float, sample_dt: float) -> np.ndarray:
    if sample_dt <= 0:
        raise ValueError("sample_dt must be positive")
    n_float = (t1 - t0) / sample_dt
    n = round(n_float)
    if n < 1 or abs(n_float - n) > 1e-9:
        raise ValueError(
            f"span {(t0, t1)} is not an integer multiple of sample_dt={sample_dt}"
        )
    return np.linspace(t0, t1, n + 1)


def _error_norm(err: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(
    rhs: RHS, t0: float, x0: np.ndarray, f0: np.ndarray, cfg: IntegratorConfig
) -> float:
    scale = cfg.atol + cfg.rtol * np.abs(x0)
    d0 = float(np.sqrt(np.mean((x0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    f1 = np.asarray(rhs(t0 + h0, x0 + h0 * f0), dtype=float)
    if not np.all(np.isfinite(f1)):
        return h0
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1)


def integrate(
    rhs: RHS,
    x0: Sequence[float],
    span: tuple[float, float],
    sample_dt: float,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate rhs over span and sample on a uniform grid."""
    cfg = config if config is not None else IntegratorConfig()
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError(f"span must increase, got {span}")
    grid = sample_grid(t0, t1, sample_dt)
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValueError("initial state must be a finite vector")
    states = np.empty((len(grid), len(x)))
    states[0] = x
    gi = 1

    def fail(message: str, t: float) -> IntegrationError:
        return IntegrationError(
            message, t, Trajectory(grid[:gi].copy(), states[:gi].copy())
        )

    t = t0
    f = np.asarray(rhs(t, x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise fail("dynamics not finite at initial state", t)
    h = min(_initial_step(rhs, t, x, f, cfg), t1 - t0)
    err_old = 1.0
    k = np.empty((7, len(x)))
    steps = 0
    while gi < len(grid):
        steps += 1
        if steps > cfg.max_steps:
            raise fail(f"exceeded max_steps={cfg.max_steps}", t)
        if h < 1e-14 * max(abs(t), 1.0):
            raise fail("step size underflow", t)
        reached_end = h >= t1 - t
        if reached_end:
            h = t1 - t
        k[0] = f
        for i in range(1, 7):
            xi = x + h * (_A[i] @ k[:i])
            k[i] = rhs(t + _C[i] * h, xi)
        x_new = x + h * (_A[6] @ k[:6])
        err = h * (_E @ k)
        finite = np.all(np.isfinite(x_new)) and np.all(np.isfinite(err))
        if finite:
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = _error_norm(err, scale)
        if not finite or not np.isfinite(err_norm):
            h *= _MIN_FACTOR
            continue
        if err_norm > 1.0:
            h *= max(_MIN_FACTOR, min(1.0, _SAFETY * err_norm ** (-0.7 / 5)))
            continue
        t_new = t1 if reached_end else t + h
        if gi < len(grid) and grid[gi] <= t_new:
            q = k.T @ _P
            while gi < len(grid) and grid[gi] <= t_new:
                theta = min(max((grid[gi] - t) / h, 0.0), 1.0)
                p = theta ** np.arange(1, 5)
                states[gi] = x + h * (q @ p)
                gi += 1
        t, x, f = t_new, x_new, k[6]
        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err_norm ** (-0.7 / 5) * err_old ** (0.4 / 5)
        h *= max(_MIN_FACTOR, min(_MAX_FACTOR, factor))
        err_old = max(err_norm, 1e-14)
    return Trajectory(grid, states)


def integrate_fixed_step(
    rhs: RHS, x0: Sequence[float], span: tuple[float, float], n_steps: int
) -> np.ndarray:
    """Fixed-step variant (no controller); returns the final state."""
    t0, t1 = float(span[0]), float(span[1])
    h = (t1 - t0) / n_steps
    x = np.array(x0, dtype=float)
    k = np.empty((6, len(x)))
    for step in range(n_steps):
        t = t0 + step * h
        k[0] = rhs(t, x)
        for i in range(1, 6):
            k[i] = rhs(t + _C[i] * h, x + h * (_A[i] @ k[:i]))
        x = x + h * (_A[6] @ k)
    return x


# ------------------------------------------------------------------ datasets


def finite_differences(traj: Trajectory, target_dim: int) -> RegressionDataset:
    """Forward divided differences of one coordinate, anchored at the left."""
    if traj.times.shape[0] < 2:
        raise ValueError("need at least two samples")
    if not 0 <= target_dim < traj.states.shape[1]:
        raise ValueError(f"target_dim {target_dim} out of range")
    targets = np.diff(traj.states[:, target_dim]) / np.diff(traj.times)
    dt = float((traj.times[-1] - traj.times[0]) / (len(traj.times) - 1))
    return RegressionDataset(
        times=traj.times[:-1].copy(),
        states=traj.states[:-1].copy(),
        targets=targets,
        dt=dt,
        target_dim=target_dim,
    )


def make_trajectory(
    system: SystemSpec,
    split: str = "train",
    sample_dt: float = 0.1,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Simulate one split; the test split continues from the train end state."""
    if split == "train":
        return integrate(
            system.rhs, system.initial_state, system.train_span, sample_dt, config
        )
    if split == "test":
        train = integrate(
            system.rhs, system.initial_state, system.train_span, sample_dt, config
        )
        return integrate(
            system.rhs, train.states[-1], system.test_span, sample_dt, config
        )
    raise ValueError(f"split must be 'train' or 'test', got {split!r}")


def make_dataset(
    system: SystemSpec,
    sample_dt: float = 0.1,
    split: str = "train",
    config: IntegratorConfig | None = None,
) -> RegressionDataset:
    traj = make_trajectory(system, split, sample_dt, config)
    return finite_differences(traj, system.target_dim)


# ----------------------------------------------------------------- file I/O


def write_trajectory_csv(traj: Trajectory, variable_names: Sequence[str], path) -> None:
    with open(path, "w") as fh:
        fh.write("t," + ",".join(variable_names) + "\n")
        for t, row in zip(traj.times, traj.states):
            fh.write(",".join(f"{v:.17g}" for v in (t, *row)) + "\n")


def read_trajectory_csv(path) -> tuple[tuple[str, ...], Trajectory]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    names = tuple(header[1:])
    return names, Trajectory(data[:, 0], data[:, 1:])
