"""Benchmark dynamical systems and their sampling windows.

Each system fixes the state layout, the simulation windows used for
fitting and held-out scoring, and which state dimension's derivative
the search strategies try to recover (target_dim).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SystemSpec:
    name: str
    dim: int
    params: dict
    rhs: Callable[[float, np.ndarray], np.ndarray]
    initial_state: tuple[float, ...]
    train_span: tuple[float, float]
    test_span: tuple[float, float]
    target_dim: int
    variable_names: tuple[str, ...]


def lotka_volterra() -> SystemSpec:
    """Predator-prey: dx/dt = x(1.5 - y), dy/dt = -y(3 - x)."""
    alpha, beta, gamma, delta = 1.5, 1.0, 3.0, 1.0

    def rhs(t: float, s: np.ndarray) -> np.ndarray:
        x, y = s
        return np.array([x * (alpha - beta * y), -y * (gamma - delta * x)])

    return SystemSpec(
        name="lotka_volterra",
        dim=2,
        params={"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta},
        rhs=rhs,
        initial_state=(1.0, 1.0),
        train_span=(0.0, 10.0),
        test_span=(10.0, 15.0),
        target_dim=1,
        variable_names=("x", "y"),
    )


def simple_pendulum() -> SystemSpec:
    """Damped pendulum: theta1' = theta2, theta2' = -b theta2 - g sin(theta1)."""
    g, b = 9.81, 0.1

    def rhs(t: float, s: np.ndarray) -> np.ndarray:
        return np.array([s[1], -b * s[1] - g * math.sin(s[0])])

    return SystemSpec(
        name="simple_pendulum",
        dim=2,
        params={"g": g, "damping": b},
        rhs=rhs,
        initial_state=(0.4 * math.pi, 1.0),
        train_span=(0.0, 10.0),
        test_span=(10.0, 15.0),
        target_dim=1,
        variable_names=("theta1", "theta2"),
    )


def cart_pole_force(t: float) -> float:
    """External push on the cart."""
    return -0.2 + 0.5 * math.sin(6.0 * t)


def cart_pole() -> SystemSpec:
    """Forced cart-pole with unit masses and pole length.

    State is (w, x, y, z) = (pole angle, cart position, angular
    velocity, cart velocity); both accelerations share the
    denominator 2 - cos^2(w).
    """
    g = 9.81

    def rhs(t: float, s: np.ndarray) -> np.ndarray:
        w, x, y, z = s
        force = cart_pole_force(t)
        sw, cw = math.sin(w), math.cos(w)
        den = 2.0 - cw * cw
        w_acc = (-2.0 * g * sw - force * cw + sw * cw * y * y) / den
        x_acc = (sw * y * y + force + g * sw * cw) / den
        return np.array([y, z, w_acc, x_acc])

    return SystemSpec(
        name="cart_pole",
        dim=4,
        params={"m_cart": 1.0, "m_pole": 1.0, "length": 1.0, "g": g},
        rhs=rhs,
        initial_state=(0.3, 0.0, 1.0, 0.0),
        train_span=(0.0, 10.0),
        test_span=(10.0, 15.0),
        target_dim=2,
        variable_names=("w", "x", "y", "z"),
    )


_FACTORIES = {
    "lotka_volterra": lotka_volterra,
    "simple_pendulum": simple_pendulum,
    "cart_pole": cart_pole,
}

SYSTEM_NAMES = tuple(_FACTORIES)


def get_system(name: str) -> SystemSpec:
    if name not in _FACTORIES:
        raise KeyError(
            f"unknown system {name!r}; expected one of {', '.join(_FACTORIES)}"
        )
    return _FACTORIES[name]()


def expression_system(
    name: str,
    rhs_strings,
    initial_state,
    train_span=(0.0, 10.0),
    test_span=(10.0, 15.0),
    target_dim: int | None = None,
    variable_names=None,
) -> SystemSpec:
    """Build a system whose right-hand side is given as one expression
    string per dimension, e.g. ("x2", "-9.81 * sin(x1)")."""
    from .expressions import evaluate, parse_expr

    rhs_strings = tuple(rhs_strings)
    k = len(rhs_strings)
    if k == 0:
        raise ValueError("need at least one dimension")
    if variable_names is None:
        variable_names = tuple(f"x{i + 1}" for i in range(k))
    else:
        variable_names = tuple(variable_names)
    if len(variable_names) != k:
        raise ValueError("one variable name per dimension")
    exprs = tuple(parse_expr(s, variable_names) for s in rhs_strings)
    initial_state = tuple(float(v) for v in initial_state)
    if len(initial_state) != k:
        raise ValueError("initial_state length must match dimension count")
    if target_dim is None:
        target_dim = k - 1
    if not 0 <= target_dim < k:
        raise ValueError("target_dim out of range")

    def rhs(t: float, s: np.ndarray) -> np.ndarray:
        return np.array([evaluate(e, t, s) for e in exprs])

    return SystemSpec(
        name=name,
        dim=k,
        params={},
        rhs=rhs,
        initial_state=initial_state,
        train_span=(float(train_span[0]), float(train_span[1])),
        test_span=(float(test_span[0]), float(test_span[1])),
        target_dim=int(target_dim),
        variable_names=variable_names,
    )
