"""Kinematical bounds on ``tr(A U rho U^dagger)`` over unitary ``U``.

The bounds pair the ensemble weights (descending) with the observable's
eigenvalues, descending for the maximum and ascending for the minimum. For
decoupled systems the pairing is done block by block.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NotBlockDiagonal, ValidationError
from .states import DensityMatrix, Observable, ensemble_decomposition, expectation

BLOCK_TOL = 1e-10


@dataclass(frozen=True)
class KinematicalBounds:
    """Lower and upper kinematical bounds plus the index pairings attaining them.

    ``pairing_max[k] = (state, slot)`` means ensemble state ``state`` (weights
    descending) is sent to eigenvector ``slot`` (eigenvalues descending).
    """

    lower: float
    upper: float
    pairing_max: tuple
    pairing_min: tuple


@dataclass(frozen=True)
class SubspacePartition:
    """Disjoint 0-based index blocks covering ``0..N-1``."""

    blocks: tuple
    block_probabilities: Optional[tuple] = None

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValidationError("partition blocks must be non-empty")
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(len(flat))):
            raise ValidationError(f"blocks {blocks} do not partition 0..{len(flat) - 1}")
        object.__setattr__(self, "blocks", blocks)
        if self.block_probabilities is not None:
            p = tuple(float(x) for x in self.block_probabilities)
            if len(p) != len(blocks) or abs(sum(p) - 1.0) > 1e-10:
                raise ValidationError(f"block probabilities {p} must sum to 1")
            object.__setattr__(self, "block_probabilities", p)

    @property
    def dim(self) -> int:
        return sum(len(b) for b in self.blocks)

    def with_probabilities(self, rho: DensityMatrix) -> "SubspacePartition":
        diag = np.real(np.diag(rho.matrix))
        p = [float(diag[list(b)].sum()) for b in self.blocks]
        return SubspacePartition(self.blocks, p)


class AttainmentStatus(str, Enum):
    AT_UPPER = "AtUpper"
    AT_LOWER = "AtLower"
    INTERIOR = "Interior"


@dataclass(frozen=True)
class Attainment:
    status: AttainmentStatus
    value: float
    gap_to_upper: float
    gap_to_lower: float
    # eigenspace-spanning sufficient condition, evaluated for the reported side
    span_condition: Optional[bool] = None


def _check_dims(a: Observable, rho: DensityMatrix) -> None:
    if a.dim != rho.dim:
        raise DimensionMismatch(f"dimension mismatch: observable {a.dim} vs rho {rho.dim}")


def _paired_sums(weights: np.ndarray, eigvals_desc: np.ndarray) -> tuple[float, float]:
    upper = float(np.dot(weights, eigvals_desc))
    lower = float(np.dot(weights, eigvals_desc[::-1]))
    return lower, upper


def kinematical_bounds(a: Observable, rho0: DensityMatrix) -> KinematicalBounds:
    """Bounds ``sum_k lambda_{N-k+1} w_k <= <A> <= sum_k lambda_k w_k``."""
    _check_dims(a, rho0)
    ens = ensemble_decomposition(rho0)
    lower, upper = _paired_sums(ens.weights, a.eig.values)
    n = a.dim
    return KinematicalBounds(
        lower=lower,
        upper=upper,
        pairing_max=tuple((k, k) for k in range(n)),
        pairing_min=tuple((k, n - 1 - k) for k in range(n)),
    )


def optimal_unitary(a: Observable, rho0: DensityMatrix, direction: str = "max") -> np.ndarray:
    """Unitary sending the k-th ensemble state onto the k-th paired eigenvector.

    With ``direction="max"`` the k-th largest weight goes to the k-th largest
    eigenvalue, which places each weight block inside the right eigenspace and
    so attains the upper bound; ``"min"`` pairs with ascending eigenvalues.
    """
    _check_dims(a, rho0)
    if direction not in ("max", "min"):
        raise ValidationError(f"direction must be 'max' or 'min', got {direction!r}")
    ens = ensemble_decomposition(rho0)
    targets = a.eig.vectors if direction == "max" else a.eig.vectors[:, ::-1]
    return targets @ ens.states.conj().T


def span_condition(a: Observable, rho: DensityMatrix, direction: str = "max", tol: float = 1e-8) -> bool:
    """Check whether the ensemble states fill the eigenspaces in bound-attaining order.

    For the upper bound, the first ``d(1)`` ensemble states (weights descending)
    must lie in the top eigenspace, the next ``d(2)`` in the second, and so on;
    for the lower bound the eigenspaces are taken in increasing order. This is
    sufficient for attainment but not necessary when weights are degenerate.
    """
    _check_dims(a, rho)
    ens = ensemble_decomposition(rho)
    spaces = a.eigenspaces if direction == "max" else a.eigenspaces[::-1]
    start = 0
    for space in spaces:
        block = ens.states[:, start : start + space.multiplicity]
        inside = np.linalg.norm(space.projector @ block, axis=0)
        if np.any(np.abs(inside - 1.0) > tol):
            return False
        start += space.multiplicity
    return True


def check_attainment(a: Observable, rho: DensityMatrix, tol: float = 1e-9) -> Attainment:
    """Classify ``<A>_rho`` against the kinematical bounds of ``rho``'s spectrum.

    When the bounds coincide the state is reported as ``AtUpper``.
    """
    b = kinematical_bounds(a, rho)
    value = expectation(a, rho)
    gap_up = b.upper - value
    gap_lo = value - b.lower
    if abs(gap_up) <= tol:
        return Attainment(AttainmentStatus.AT_UPPER, value, gap_up, gap_lo, span_condition(a, rho, "max"))
    if abs(gap_lo) <= tol:
        return Attainment(AttainmentStatus.AT_LOWER, value, gap_up, gap_lo, span_condition(a, rho, "min"))
    return Attainment(AttainmentStatus.INTERIOR, value, gap_up, gap_lo)


def _block_pieces(a: Observable, rho0: DensityMatrix, partition: SubspacePartition, tol: float):
    _check_dims(a, rho0)
    if partition.dim != a.dim:
        raise DimensionMismatch(f"partition covers {partition.dim} indices, system has {a.dim}")
    mask = np.zeros((a.dim, a.dim), dtype=bool)
    for b in partition.blocks:
        mask[np.ix_(b, b)] = True
    off = np.abs(rho0.matrix[~mask])
    if off.size and off.max() > tol:
        raise NotBlockDiagonal(
            f"rho0 couples different blocks (max off-block entry {off.max():.3e})"
        )
    for b in partition.blocks:
        idx = np.ix_(b, b)
        yield b, a.matrix[idx], rho0.matrix[idx]


def decoupled_bounds(
    a: Observable, rho0: DensityMatrix, partition: SubspacePartition, tol: float = BLOCK_TOL
) -> KinematicalBounds:
    """Per-block kinematical bounds for a system whose dynamics preserve ``partition``.

    Each block contributes ``sum_n w_n^(i) lambda_n^(i)`` (upper) and the
    reversed pairing (lower), where ``w^(i)`` are the unnormalized eigenvalues
    of the block of ``rho0`` and ``lambda^(i)`` those of ``P_i A P_i``. Pairings
    are recorded with global basis indices of the block-local eigenbases, in
    block order.

    Raises:
        NotBlockDiagonal: if ``rho0`` has an off-block entry above ``tol``.
    """
    lower = upper = 0.0
    pmax, pmin = [], []
    offset = 0
    for b, a_i, rho_i in _block_pieces(a, rho0, partition, tol):
        w = np.clip(np.linalg.eigvalsh(0.5 * (rho_i + rho_i.conj().T))[::-1], 0.0, None)
        lam = np.linalg.eigvalsh(0.5 * (a_i + a_i.conj().T))[::-1]
        lo, up = _paired_sums(w, lam)
        lower += lo
        upper += up
        n_i = len(b)
        pmax += [(offset + k, offset + k) for k in range(n_i)]
        pmin += [(offset + k, offset + n_i - 1 - k) for k in range(n_i)]
        offset += n_i
    return KinematicalBounds(lower, upper, tuple(pmax), tuple(pmin))


def decoupled_optimal_unitary(
    a: Observable,
    rho0: DensityMatrix,
    partition: SubspacePartition,
    direction: str = "max",
    tol: float = BLOCK_TOL,
) -> np.ndarray:
    """Block-diagonal unitary attaining :func:`decoupled_bounds` in ``direction``."""
    n = a.dim
    u = np.zeros((n, n), dtype=complex)
    for b, a_i, rho_i in _block_pieces(a, rho0, partition, tol):
        idx = np.ix_(b, b)
        p = float(np.trace(rho_i).real)
        if p <= 0.0:
            u[idx] = np.eye(len(b))
            continue
        u[idx] = optimal_unitary(Observable(a_i), DensityMatrix(rho_i / p), direction)
    return u


def haar_expectation_samples(
    a: Observable,
    rho0: DensityMatrix,
    count: int,
    seed: int = 0,
    blocks: Optional[Sequence[Sequence[int]]] = None,
) -> np.ndarray:
    """Expectations of ``A`` over Haar-random unitaries, vectorized.

    With ``blocks`` the unitaries are drawn block-diagonally (Haar on each
    block). Intended as a brute-force soundness oracle for the bounds.
    """
    rng = np.random.default_rng(seed)
    n = a.dim
    if blocks is None:
        blocks = [list(range(n))]
    us = np.zeros((count, n, n), dtype=complex)
    for b in blocks:
        d = len(b)
        z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=1, axis2=2)
        q = q * (diag / np.abs(diag))[:, None, :]
        bi = np.asarray(b)
        us[:, bi[:, None], bi[None, :]] = q
    rho_t = us @ rho0.matrix @ np.swapaxes(us.conj(), 1, 2)
    return np.real(np.einsum("ij,sji->s", a.matrix, rho_t))
