"""Control-linear Hamiltonians and piecewise-constant propagation on U(N).

Time-ordered products put the latest step leftmost:
``U(tF, t0) = U_S ... U_2 U_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteAmplitude, ValidationError
from .matcore import HERMITIAN_TOL, check_hermitian, expm_unitary_batch
from .states import DensityMatrix, Observable


def _frozen(m) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class ControlModel:
    """``H(t) = H0 + sum_m f_m(t) H_m`` with Hermitian ``H0`` and ``H_m``."""

    h0: np.ndarray
    controls: tuple = ()
    labels: Optional[tuple] = None
    tol: float = HERMITIAN_TOL

    def __post_init__(self):
        h0 = check_hermitian(self.h0, self.tol, name="h0")
        ctrls = []
        for m, h in enumerate(self.controls):
            h = check_hermitian(h, self.tol, name=f"controls[{m}]")
            if h.shape != h0.shape:
                raise DimensionMismatch(f"controls[{m}] has shape {h.shape}, h0 has {h0.shape}")
            ctrls.append(_frozen(0.5 * (h + h.conj().T)))
        if self.labels is not None and len(self.labels) != len(ctrls):
            raise ValidationError("labels must name every control")
        object.__setattr__(self, "h0", _frozen(0.5 * (h0 + h0.conj().T)))
        object.__setattr__(self, "controls", tuple(ctrls))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def generators(self) -> list:
        return [self.h0, *self.controls]

    def control_stack(self) -> np.ndarray:
        if not self.controls:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack(self.controls)

    def hamiltonians(self, amplitudes: np.ndarray) -> np.ndarray:
        """Stack of step Hamiltonians for an ``S x M`` amplitude array."""
        amplitudes = np.asarray(amplitudes, dtype=float)
        hs = np.broadcast_to(self.h0, (amplitudes.shape[0], self.dim, self.dim)).copy()
        if self.controls:
            hs += np.einsum("sm,mij->sij", amplitudes, self.control_stack())
        return hs


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Piecewise-constant amplitudes on ``S`` uniform intervals of ``[t0, tF]``.

    ``amplitudes[s, m]`` is ``f_m`` on interval ``s``.
    """

    t0: float
    tF: float
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        if amps.ndim == 1:
            amps = amps[:, None]
        if amps.ndim != 2 or amps.shape[0] < 1:
            raise ValidationError(f"amplitudes must be an S x M array with S >= 1, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise NonFiniteAmplitude("pulse amplitudes must be finite")
        if not self.tF > self.t0:
            raise ValidationError(f"tF ({self.tF}) must exceed t0 ({self.t0})")
        amps.flags.writeable = False
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "tF", float(self.tF))
        object.__setattr__(self, "amplitudes", amps)

    @property
    def steps(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_controls(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def dt(self) -> float:
        return (self.tF - self.t0) / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.tF, self.steps + 1)

    @classmethod
    def zeros(cls, t0: float, tF: float, steps: int, n_controls: int) -> "PulseSchedule":
        return cls(t0, tF, np.zeros((steps, n_controls)))

    def concatenate(self, other: "PulseSchedule") -> "PulseSchedule":
        """Append ``other`` in time; both schedules must share the step width."""
        if not np.isclose(self.dt, other.dt, rtol=1e-12, atol=0):
            raise ValidationError("concatenated schedules must share the step width")
        return PulseSchedule(self.t0, self.tF + (other.tF - other.t0), np.vstack([self.amplitudes, other.amplitudes]))


def _check(model: ControlModel, pulses: PulseSchedule) -> None:
    if pulses.n_controls != model.n_controls:
        raise DimensionMismatch(
            f"schedule has {pulses.n_controls} control(s), model has {model.n_controls}"
        )


def step_propagators(model: ControlModel, pulses: PulseSchedule) -> np.ndarray:
    """Exact per-interval propagators ``exp(-i H_s dt)``, shape ``(S, N, N)``."""
    _check(model, pulses)
    us, _, _ = expm_unitary_batch(model.hamiltonians(pulses.amplitudes), pulses.dt)
    return us


def propagate(model: ControlModel, pulses: PulseSchedule) -> np.ndarray:
    """Total propagator ``U(tF, t0)``."""
    u = np.eye(model.dim, dtype=complex)
    for step in step_propagators(model, pulses):
        u = step @ u
    return u


def propagate_backward(model: ControlModel, pulses: PulseSchedule) -> np.ndarray:
    """Propagator from ``tF`` back to ``t0``: steps in reverse order with ``-dt``.

    Equals ``propagate(model, pulses)^dagger``, built independently.
    """
    _check(model, pulses)
    us, _, _ = expm_unitary_batch(model.hamiltonians(pulses.amplitudes), -pulses.dt)
    u = np.eye(model.dim, dtype=complex)
    for step in us[::-1]:
        u = step @ u
    return u


def forward_states(model: ControlModel, pulses: PulseSchedule, rho0: np.ndarray, us=None) -> np.ndarray:
    """Density matrices at the ``S + 1`` grid times, as a raw ``(S+1, N, N)`` array."""
    if us is None:
        us = step_propagators(model, pulses)
    rhos = np.empty((len(us) + 1, model.dim, model.dim), dtype=complex)
    rhos[0] = rho0
    for s, u in enumerate(us):
        rhos[s + 1] = u @ rhos[s] @ u.conj().T
    return rhos


def simulate_expectation(
    model: ControlModel, pulses: PulseSchedule, rho0: DensityMatrix, a: Observable
) -> np.ndarray:
    """``<A(t_s)>`` at every grid time ``t_0 .. t_S``."""
    if rho0.dim != model.dim or a.dim != model.dim:
        raise DimensionMismatch("model, state and observable dimensions differ")
    rhos = forward_states(model, pulses, rho0.matrix)
    return np.real(np.einsum("ij,sji->s", a.matrix, rhos))


def constant_schedule(t0: float, tF: float, steps: int, values: Sequence[float]) -> PulseSchedule:
    return PulseSchedule(t0, tF, np.tile(np.asarray(values, dtype=float), (steps, 1)))
