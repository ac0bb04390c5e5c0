"""Density matrices, observables and ensemble averages."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, InvalidState, NonRealExpectation, NotUnitary
from .matcore import (
    DEGENERACY_RTOL,
    HERMITIAN_TOL,
    EigDecomposition,
    check_hermitian,
    degeneracy_groups,
    hermitian_eig,
    unitarity_error,
)

TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
UNITARY_TOL = 1e-9


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix.

    Construction validates the invariants; a trace off by less than
    ``TRACE_TOL`` is silently renormalized, anything larger is rejected.
    """

    matrix: np.ndarray
    tol: float = HERMITIAN_TOL

    def __post_init__(self):
        try:
            m = check_hermitian(self.matrix, self.tol, name="rho0")
        except Exception as exc:
            raise InvalidState(f"invalid density matrix: {exc}") from exc
        m = 0.5 * (m + m.conj().T)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"invalid density matrix: rho0 trace is {tr!r}, expected 1")
        m = m / tr
        lam_min = float(np.linalg.eigvalsh(m)[0])
        if lam_min < -POSITIVITY_TOL:
            raise InvalidState(
                f"invalid density matrix: rho0 has negative eigenvalue {lam_min:.3e}"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def diagonal(cls, weights) -> "DensityMatrix":
        return cls(np.diag(np.asarray(weights, dtype=float)))


class Eigenspace(NamedTuple):
    value: float
    multiplicity: int
    projector: np.ndarray


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator with its eigenstructure cached at construction.

    ``eigenspaces`` lists ``(a_i, d(i), P_i)`` in decreasing order of ``a_i``.
    Eigenvalues closer than ``1e-8 * max(1, max|A|)`` share an eigenspace.
    """

    matrix: np.ndarray
    tol: float = HERMITIAN_TOL
    eig: EigDecomposition = field(init=False)
    eigenspaces: tuple = field(init=False)

    def __post_init__(self):
        m = check_hermitian(self.matrix, self.tol, name="observable")
        m = 0.5 * (m + m.conj().T)
        eig = hermitian_eig(m, self.tol)
        spaces = []
        for group in degeneracy_groups(eig.values, float(np.max(np.abs(m))), DEGENERACY_RTOL):
            v = eig.vectors[:, group]
            spaces.append(
                Eigenspace(float(np.mean(eig.values[group])), len(group), _frozen(v @ v.conj().T))
            )
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "eig", eig)
        object.__setattr__(self, "eigenspaces", tuple(spaces))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class EnsembleDecomposition(NamedTuple):
    weights: np.ndarray
    states: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.states * self.weights) @ self.states.conj().T


def ensemble_decomposition(rho: DensityMatrix) -> EnsembleDecomposition:
    """Split ``rho`` into non-increasing weights ``w_k`` and orthonormal states ``|Psi_k>``.

    Weights are clamped into [0, 1] and renormalized to sum to one.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    eig = hermitian_eig(rho.matrix)
    w = np.clip(eig.values, 0.0, 1.0)
    w = w / w.sum()
    return EnsembleDecomposition(w, eig.vectors)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def expectation(a: Observable, rho: DensityMatrix) -> float:
    """Ensemble average ``tr(A rho)``.

    Raises:
        NonRealExpectation: if the imaginary part exceeds ``1e-10 * max(1, max|A|)``.
    """
    _check_dims(a.dim, rho.dim)
    val = complex(np.sum(a.matrix.T * rho.matrix))
    tol = 1e-10 * max(1.0, float(np.max(np.abs(a.matrix))))
    if abs(val.imag) > tol:
        raise NonRealExpectation(f"tr(A rho) has imaginary part {val.imag:.3e}")
    return val.real


def evolve_state(rho0: DensityMatrix, u, tol: float = UNITARY_TOL) -> DensityMatrix:
    """Return ``U rho0 U^dagger``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != rho0.matrix.shape:
        raise DimensionMismatch(f"dimension mismatch: U {u.shape} vs rho {rho0.matrix.shape}")
    err = unitarity_error(u)
    if err > tol:
        raise NotUnitary(f"U is not unitary: max|U^dagger U - I| = {err:.3e}")
    return DensityMatrix(u @ rho0.matrix @ u.conj().T)
