"""Gradient ascent on piecewise-constant pulses, scored against the kinematical bounds.

The gradient of ``<A(tF)>`` is exact for the piecewise-constant model: the
derivative of each step exponential is taken in the eigenbasis of the step
Hamiltonian (divided differences of ``exp(-i lambda dt)``) and chained with
forward-propagated states and backward-propagated observables.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .bounds import KinematicalBounds, kinematical_bounds
from .dynamics import ControlModel, PulseSchedule, forward_states
from .errors import BoundsCollapsed, ConfigError, DimensionMismatch
from .matcore import expm_unitary_batch
from .states import DensityMatrix, Observable

log = logging.getLogger(__name__)

_DEGENERATE_GAP = 1e-12


@dataclass(frozen=True)
class OptimizationConfig:
    target_time: float = 20.0
    steps: int = 200
    iterations: int = 200
    learning_rate: float = 1.0
    initial_pulse: str = "random"  # zeros | constant | random
    initial_amplitude: float = 0.1
    seed: int = 0
    direction: str = "max"
    convergence_tol: float = 1e-6
    patience: int = 10
    max_backtracks: int = 30
    step_growth: float = 2.0

    def __post_init__(self):
        if not self.target_time > 0:
            raise ConfigError(f"target_time must be positive, got {self.target_time}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.initial_pulse not in ("zeros", "constant", "random"):
            raise ConfigError(f"initial_pulse must be zeros, constant or random, got {self.initial_pulse!r}")
        if self.direction not in ("max", "min"):
            raise ConfigError(f"direction must be max or min, got {self.direction!r}")
        if self.convergence_tol < 0:
            raise ConfigError("convergence_tol must be non-negative")

    def initial_amplitudes(self, n_controls: int) -> np.ndarray:
        shape = (self.steps, n_controls)
        if self.initial_pulse == "zeros":
            return np.zeros(shape)
        if self.initial_pulse == "constant":
            return np.full(shape, float(self.initial_amplitude))
        rng = np.random.default_rng(self.seed)
        a = self.initial_amplitude
        return rng.uniform(-a, a, size=shape)


class Yield(NamedTuple):
    fraction: float
    of_upper: float


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    best_pulses: PulseSchedule
    final_expectation: float
    bounds: KinematicalBounds
    yield_fraction: float
    yield_of_upper: float
    trajectory: np.ndarray = field(repr=False)
    converged: bool
    iterations: int
    seed: int
    direction: str


def yield_fraction(value: float, bounds: KinematicalBounds, direction: str = "max") -> Yield:
    """Achieved value relative to the bounds, in two conventions.

    ``fraction`` is range-normalized, ``(value - lower) / (upper - lower)``
    (mirrored for ``direction="min"``) and clamped to [0, 1]. ``of_upper`` is
    the plain ratio ``value / upper`` (``value / lower`` for minimization), or
    NaN when that denominator is zero.

    Raises:
        BoundsCollapsed: when ``upper == lower``.
    """
    width = bounds.upper - bounds.lower
    if width <= 0:
        raise BoundsCollapsed(f"bounds collapse to {bounds.upper}; yield undefined")
    if direction == "max":
        frac = (value - bounds.lower) / width
        ref = bounds.upper
    else:
        frac = (bounds.upper - value) / width
        ref = bounds.lower
    of_upper = value / ref if ref != 0 else float("nan")
    return Yield(float(min(1.0, max(0.0, frac))), float(of_upper))


class _Objective:
    """Caches the pieces shared by value and gradient evaluations."""

    def __init__(self, model: ControlModel, rho0: DensityMatrix, a: Observable, dt: float):
        if rho0.dim != model.dim or a.dim != model.dim:
            raise DimensionMismatch("model, state and observable dimensions differ")
        self.model = model
        self.rho0 = rho0.matrix
        self.a = a.matrix
        self.dt = dt
        self.ctrl = model.control_stack()

    def _steps(self, amps):
        return expm_unitary_batch(self.model.hamiltonians(amps), self.dt)

    def value(self, amps: np.ndarray) -> float:
        us, _, _ = self._steps(amps)
        u = np.eye(self.model.dim, dtype=complex)
        for step in us:
            u = step @ u
        return float(np.real(np.sum(self.a.T * (u @ self.rho0 @ u.conj().T))))

    def value_and_gradient(self, amps: np.ndarray) -> tuple[float, np.ndarray]:
        us, vals, vecs = self._steps(amps)
        n_steps = len(us)
        rhos = forward_states(self.model, None, self.rho0, us=us)
        value = float(np.real(np.sum(self.a.T * rhos[-1])))
        if self.ctrl.shape[0] == 0:
            return value, np.zeros((n_steps, 0))
        # lams[s] = observable propagated back to the end of step s
        lams = np.empty_like(us)
        lam = self.a.astype(complex)
        for s in range(n_steps - 1, -1, -1):
            lams[s] = lam
            lam = us[s].conj().T @ lam @ us[s]
        # d tr(A U rho U^dag) = 2 Re tr(dU_s . rho_{s-1} U_s^dag Lam_s)
        x = rhos[:-1] @ np.swapaxes(us.conj(), 1, 2) @ lams
        vh = np.swapaxes(vecs.conj(), 1, 2)
        y = vh @ x @ vecs
        phases = np.exp(-1j * vals * self.dt)
        dl = vals[:, :, None] - vals[:, None, :]
        dp = phases[:, :, None] - phases[:, None, :]
        same = np.abs(dl) < _DEGENERATE_GAP
        safe = np.where(same, 1.0, dl)
        phi = np.where(same, -1j * self.dt * phases[:, :, None], dp / safe)
        # control matrices in each step's eigenbasis: (S, M, N, N)
        b = np.einsum("sij,mjk,skl->smil", vh, self.ctrl, vecs)
        grad = 2.0 * np.real(np.einsum("sjk,smjk,skj->sm", phi, b, y))
        return value, grad


def gradient(model: ControlModel, pulses: PulseSchedule, rho0: DensityMatrix, a: Observable) -> np.ndarray:
    """Exact ``d<A(tF)>/d f_m[s]`` as an ``S x M`` array."""
    if pulses.n_controls != model.n_controls:
        raise DimensionMismatch(
            f"schedule has {pulses.n_controls} control(s), model has {model.n_controls}"
        )
    obj = _Objective(model, rho0, a, pulses.dt)
    return obj.value_and_gradient(pulses.amplitudes)[1]


def final_expectation(model: ControlModel, pulses: PulseSchedule, rho0: DensityMatrix, a: Observable) -> float:
    return _Objective(model, rho0, a, pulses.dt).value(pulses.amplitudes)


def optimize(
    model: ControlModel, rho0: DensityMatrix, a: Observable, config: OptimizationConfig
) -> OptimizationReport:
    """First-order ascent (descent for ``direction="min"``) with backtracking.

    A trial step ``x + lr * g`` is accepted only if it strictly improves the
    objective; otherwise ``lr`` is halved, up to ``max_backtracks`` times.
    After an accepted step ``lr`` grows by ``step_growth``. Stops when the
    best yield improves by less than ``convergence_tol`` over ``patience``
    consecutive iterations, when no improving step is found, or when the
    iteration budget runs out.
    """
    bounds = kinematical_bounds(a, rho0)
    sign = 1.0 if config.direction == "max" else -1.0
    obj = _Objective(model, rho0, a, config.target_time / config.steps)
    x = config.initial_amplitudes(model.n_controls)
    value, grad = obj.value_and_gradient(x)
    trajectory = [value]

    def pulses(amps):
        return PulseSchedule(0.0, config.target_time, amps)

    width = bounds.upper - bounds.lower
    if width <= 0:
        log.info("kinematical bounds collapsed; nothing to optimize")
        return OptimizationReport(
            pulses(x), value, bounds, 1.0, 1.0, np.array(trajectory), True, 0, config.seed, config.direction
        )

    lr = config.learning_rate
    converged = False
    stall = 0
    it = 0
    for it in range(1, config.iterations + 1):
        accepted = False
        for _ in range(config.max_backtracks):
            trial = x + sign * lr * grad
            v = obj.value(trial)
            if sign * (v - value) > 0:
                accepted = True
                break
            lr *= 0.5
        if not accepted:
            trajectory.append(value)
            converged = True
            break
        gain = sign * (v - value) / width
        x = trial
        value, grad = obj.value_and_gradient(x)
        lr *= config.step_growth
        trajectory.append(value)
        stall = stall + 1 if gain < config.convergence_tol else 0
        if stall >= config.patience:
            converged = True
            break

    y = yield_fraction(value, bounds, config.direction)
    log.debug("seed %d: %d iterations, yield %.6f", config.seed, it, y.fraction)
    return OptimizationReport(
        best_pulses=pulses(x),
        final_expectation=value,
        bounds=bounds,
        yield_fraction=y.fraction,
        yield_of_upper=y.of_upper,
        trajectory=np.array(trajectory),
        converged=converged,
        iterations=it,
        seed=config.seed,
        direction=config.direction,
    )


def multi_start(
    model: ControlModel,
    rho0: DensityMatrix,
    a: Observable,
    config: OptimizationConfig,
    seeds: Optional[Iterable[int]] = None,
    n_starts: int = 8,
) -> OptimizationReport:
    """Best report over several seeds; ties go to the lowest seed."""
    if seeds is None:
        seeds = range(config.seed, config.seed + n_starts)
    best = None
    for seed in sorted(seeds):
        rep = optimize(model, rho0, a, replace(config, seed=seed))
        if best is None or rep.yield_fraction > best.yield_fraction:
            best = rep
    return best
