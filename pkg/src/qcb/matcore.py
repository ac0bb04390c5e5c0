"""Dense complex matrix kernels for small Hermitian problems (N <= ~16).

Eigendecompositions are delegated to LAPACK via ``numpy.linalg.eigh``; this
module adds the ordering, tie-breaking and validation that the rest of the
package relies on.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, NotHermitian, ValidationError

HERMITIAN_TOL = 1e-10
DEGENERACY_RTOL = 1e-8

# Greedy Gram-Schmidt threshold for picking a canonical basis of a degenerate
# eigenspace; some projector column always has residual >= 1/sqrt(N).
_CANONICAL_PICK = 1e-3


class EigDecomposition(NamedTuple):
    """Eigenvalues sorted descending, column ``k`` of ``vectors`` paired with ``values[k]``."""

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a square complex array, raising on bad shapes."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T)))


def check_hermitian(h, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    m = as_matrix(h, name)
    err = hermiticity_error(m)
    if err > tol:
        raise NotHermitian(f"{name} is not Hermitian: max|H - H^dagger| = {err:.3e} > {tol:.1e}")
    return m


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def degeneracy_groups(values: np.ndarray, scale: float, rtol: float = DEGENERACY_RTOL) -> list[list[int]]:
    """Group indices of a descending value vector into runs of equal values.

    Two neighbours belong to one group when they differ by less than
    ``rtol * max(1, scale)``.
    """
    thresh = rtol * max(1.0, scale)
    groups = [[0]]
    for k in range(1, len(values)):
        if abs(values[k - 1] - values[k]) < thresh:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude entry (first on ties) is real positive."""
    mags = np.abs(v)
    k = int(np.argmax(mags > mags.max() * (1 - 1e-12)))
    return v * (np.conj(v[k]) / mags[k])


def _canonical_basis(vectors: np.ndarray) -> np.ndarray:
    n, d = vectors.shape
    proj = vectors @ vectors.conj().T
    picked: list[np.ndarray] = []
    for j in range(n):
        r = proj[:, j].copy()
        for q in picked:
            r -= q * np.vdot(q, r)
        for q in picked:
            r -= q * np.vdot(q, r)
        nrm = np.linalg.norm(r)
        if nrm > _CANONICAL_PICK:
            picked.append(r / nrm)
            if len(picked) == d:
                break
    return np.column_stack(picked)


def hermitian_eig(h, tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix with deterministic output.

    Eigenvalues come back in non-increasing order. Each eigenvector is
    phase-fixed so its largest-magnitude entry is real and positive. Inside a
    degenerate eigenspace the basis is rebuilt canonically by Gram-Schmidt on
    the eigenspace projector's columns taken in index order, so the result does
    not depend on which basis LAPACK happened to return.

    Raises:
        NotHermitian: if ``max|H - H^dagger| > tol``.
    """
    m = check_hermitian(h, tol)
    m = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(m)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    scale = float(np.max(np.abs(m)))
    for group in degeneracy_groups(vals, scale):
        if len(group) > 1:
            vecs[:, group] = _canonical_basis(vecs[:, group])
        for k in group:
            vecs[:, k] = fix_phase(vecs[:, k])
    return EigDecomposition(vals, vecs)


def expm_unitary(h, dt: float, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Exact propagator ``exp(-i H dt)`` (hbar = 1) via eigendecomposition."""
    m = check_hermitian(h, tol)
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (vecs * np.exp(-1j * vals * dt)) @ vecs.conj().T


def expm_unitary_batch(hs: np.ndarray, dt: float):
    """Batched ``exp(-i H_s dt)`` for a stack of Hermitian matrices, no validation.

    Returns the propagators together with the eigenvalues and eigenvectors
    used to build them (the optimizer reuses these for exact derivatives).
    """
    vals, vecs = np.linalg.eigh(hs)
    phases = np.exp(-1j * vals * dt)
    us = (vecs * phases[:, None, :]) @ np.swapaxes(vecs.conj(), -1, -2)
    return us, vals, vecs


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    check_same_shape(a, b)
    return a @ b - b @ a


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tr(A^dagger B)``."""
    a = as_matrix(a)
    b = as_matrix(b)
    check_same_shape(a, b)
    return complex(np.vdot(a, b))


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-random element of U(n) (QR of a Ginibre matrix, phases fixed)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (z + z.conj().T)
