"""From-scratch cart-pole dynamics with normalization and observation noise.

Physics follows the canonical benchmark: force +-10 N, cart mass 1.0 kg,
pole mass 0.1 kg, half-pole length 0.5 m, g = 9.8 m/s^2, explicit Euler at
dt = 0.02 s (positions update with the old velocities). Each executed step
pays reward +1; an episode ends when |x| > 2.4, |theta| > 0.2095 rad, or the
horizon is reached, so total reward always equals episode length.

Observations are normalized feature-wise by (2.4, 2.5, 0.21, 2.5); the
velocity factors only hold for typically encountered values, so normalized
velocities may leave [-1, 1] and are deliberately not clipped. Observation
noise is additive zero-mean Gaussian per normalized feature and never
touches the underlying state.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

from .errors import ConfigurationError, UsageError

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_POLE_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_POLE_LENGTH
FORCE_MAG = 10.0
TIME_STEP = 0.02

X_LIMIT = 2.4
THETA_LIMIT = 0.2095
HORIZON = 200

# Feature order everywhere: (x, x_dot, theta, theta_dot).
NORM_FACTORS = np.array([2.4, 2.5, 0.21, 2.5])


@dataclass(frozen=True)
class EnvState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    step_count: int = 0
    terminated: bool = False


@dataclass(frozen=True)
class InitRanges:
    """Closed sampling intervals per feature, in raw (unnormalized) units."""

    x: tuple[float, float] = (-0.05, 0.05)
    x_dot: tuple[float, float] = (-0.05, 0.05)
    theta: tuple[float, float] = (-0.05, 0.05)
    theta_dot: tuple[float, float] = (-0.05, 0.05)

    def __post_init__(self):
        for name, (lo, hi) in self.items():
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ConfigurationError(f"init range for {name} must be a finite interval, got [{lo}, {hi}]")
        if self.x[0] < -X_LIMIT or self.x[1] > X_LIMIT:
            raise ConfigurationError(f"init range for x must lie inside [-{X_LIMIT}, {X_LIMIT}]")
        if self.theta[0] < -0.21 or self.theta[1] > 0.21:
            raise ConfigurationError("init range for theta must lie inside [-0.21, 0.21]")

    def items(self):
        return (("x", self.x), ("x_dot", self.x_dot), ("theta", self.theta), ("theta_dot", self.theta_dot))

    def contains(self, other: "InitRanges") -> bool:
        return all(
            lo <= olo and ohi <= hi
            for (_, (lo, hi)), (_, (olo, ohi)) in zip(self.items(), other.items())
        )


@dataclass(frozen=True)
class NoiseModel:
    """Std deviation of i.i.d. Gaussian noise added per normalized feature."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigurationError(f"noise sigma must be >= 0, got {self.sigma}")


def reset(ranges: InitRanges, rng: np.random.Generator) -> EnvState:
    """Fresh state with features drawn independently and uniformly; draw order x, x_dot, theta, theta_dot."""
    x = rng.uniform(*ranges.x)
    x_dot = rng.uniform(*ranges.x_dot)
    theta = rng.uniform(*ranges.theta)
    theta_dot = rng.uniform(*ranges.theta_dot)
    # ranges may legally touch the sliver between the termination bound and
    # the admissible range (e.g. theta in (0.2095, 0.21]); keep the invariant
    done = abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT
    return EnvState(x, x_dot, theta, theta_dot, terminated=done)


def step(state: EnvState, action: int, horizon: int = HORIZON) -> tuple[EnvState, float]:
    """One explicit-Euler step under action 0 (push left) or 1 (push right)."""
    if state.terminated:
        raise UsageError("cannot step a terminated state")
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action}")
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    ct, st = cos(state.theta), sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot**2 * st) / TOTAL_MASS
    theta_acc = (GRAVITY * st - ct * temp) / (
        HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * ct * ct / TOTAL_MASS)
    )
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * ct / TOTAL_MASS

    x = state.x + TIME_STEP * state.x_dot
    x_dot = state.x_dot + TIME_STEP * x_acc
    theta = state.theta + TIME_STEP * state.theta_dot
    theta_dot = state.theta_dot + TIME_STEP * theta_acc

    steps = state.step_count + 1
    done = abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT or steps >= horizon
    return EnvState(x, x_dot, theta, theta_dot, steps, done), 1.0


def normalize(state: EnvState) -> np.ndarray:
    """(x/2.4, x_dot/2.5, theta/0.21, theta_dot/2.5)."""
    return np.array([state.x, state.x_dot, state.theta, state.theta_dot]) / NORM_FACTORS


def observe(state: EnvState, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Normalized observation with additive Gaussian perturbation; the state itself is untouched."""
    obs = normalize(state)
    if noise.sigma == 0.0:
        return obs
    return obs + rng.normal(0.0, noise.sigma, size=4)
