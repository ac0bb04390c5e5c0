"""Lie-algebra rank test for complete controllability, and decoupling detection.

Skew-Hermitian matrices are handled as real vectors of length ``2 N^2``
(real and imaginary parts). The Hilbert-Schmidt inner product of two
skew-Hermitian matrices is real and equals the Euclidean product of these
vectors, so orthogonalization runs over the reals. Doing it over the complex
numbers would silently span all of gl(N).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .bounds import SubspacePartition
from .dynamics import ControlModel
from .errors import BasisNotAdapted, DimensionMismatch, ValidationError
from .matcore import HERMITIAN_TOL, check_hermitian
from .states import DensityMatrix

CLOSURE_TOL = 1e-8
COUPLING_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LieClosureReport:
    """Orthonormal basis of the real Lie algebra generated by ``-i H_m``.

    ``generations`` counts bracket rounds that contributed new directions.
    ``ideal_dimension`` is filled in only when the ideal criterion was
    requested; it is the dimension of the traceless part of the ideal
    generated by the control Hamiltonians.
    """

    dimension: int
    basis: tuple = field(repr=False)
    generations: int
    controllable: bool
    n: int
    ideal_dimension: Optional[int] = None

    @property
    def ideal_controllable(self) -> Optional[bool]:
        if self.ideal_dimension is None:
            return None
        return self.ideal_dimension == self.n * self.n - 1


class _Span:
    """Incrementally built orthonormal basis with twice-iterated Gram-Schmidt."""

    def __init__(self, n: int, tol: float):
        self.n = n
        self.tol = tol
        self.vecs: list[np.ndarray] = []
        self._mat = np.zeros((0, 2 * n * n))

    def __len__(self):
        return len(self.vecs)

    def residual(self, v: np.ndarray) -> np.ndarray:
        r = v
        for _ in range(2):
            if len(self.vecs):
                r = r - self._mat.T @ (self._mat @ r)
        return r

    def add(self, x: np.ndarray, operand_scale: float | None = None) -> bool:
        """Append the normalized residual of ``x`` if it is a genuinely new direction.

        ``operand_scale`` (``|X| |Y|`` for a bracket ``[X, Y]``) sets an absolute
        floor: brackets that vanish analytically come out at roundoff size and
        would otherwise pass a purely relative test.
        """
        v = np.concatenate([x.real.ravel(), x.imag.ravel()])
        scale = np.linalg.norm(v)
        if scale == 0.0:
            return False
        r = self.residual(v)
        nrm = np.linalg.norm(r)
        if nrm <= self.tol * scale:
            return False
        if operand_scale is not None and nrm <= self.tol * operand_scale:
            return False
        self.vecs.append(r / nrm)
        self._mat = np.vstack([self._mat, r / nrm])
        return True

    def matrix(self, k: int) -> np.ndarray:
        v = self.vecs[k]
        nn = self.n * self.n
        return (v[:nn] + 1j * v[nn:]).reshape(self.n, self.n)


def _skew(generators, tol) -> list[np.ndarray]:
    if len(generators) == 0:
        raise ValidationError("at least one generator is required")
    mats = [check_hermitian(g, tol, name=f"generator[{k}]") for k, g in enumerate(generators)]
    shape = mats[0].shape
    for k, m in enumerate(mats):
        if m.shape != shape:
            raise DimensionMismatch(f"generator[{k}] has shape {m.shape}, expected {shape}")
    return [-1j * 0.5 * (m + m.conj().T) for m in mats]


def _close(span: _Span, seeds: list, partners) -> int:
    """Breadth-first bracket closure.

    Each round brackets the previous round's new elements with every element
    returned by ``partners(span)``; stops when a round adds nothing or the
    span is full.
    """
    full = span.n * span.n
    frontier = seeds
    generations = 0
    while frontier and len(span) < full:
        new = []
        for x in frontier:
            for k in partners(span):
                y = span.matrix(k) if isinstance(k, int) else k
                c = x @ y - y @ x
                if span.add(c, np.linalg.norm(x) * np.linalg.norm(y)):
                    new.append(span.matrix(len(span) - 1))
                    if len(span) == full:
                        break
            if len(span) == full:
                break
        if new:
            generations += 1
        frontier = new
    return generations


def lie_closure(generators: Sequence, tol: float = CLOSURE_TOL, hermitian_tol: float = HERMITIAN_TOL) -> LieClosureReport:
    """Dimension and basis of the Lie algebra generated by ``{-i H_m}``.

    Args:
        generators: Hermitian matrices ``H_0, ..., H_M`` of equal size.
        tol: a bracket adds a new direction when its residual after projecting
            out the current span exceeds ``tol`` times its own Frobenius norm.
    """
    skews = _skew(generators, hermitian_tol)
    n = skews[0].shape[0]
    span = _Span(n, tol)
    seeds = []
    for x in skews:
        if span.add(x):
            seeds.append(span.matrix(len(span) - 1))
    generations = _close(span, seeds, lambda s: range(len(s)))
    basis = tuple(span.matrix(k) for k in range(len(span)))
    return LieClosureReport(len(span), basis, generations, len(span) == n * n, n)


def ideal_dimension(report: LieClosureReport, controls: Sequence, tol: float = CLOSURE_TOL) -> int:
    """Dimension of the traceless part of the ideal generated by ``-i H_1 .. -i H_M`` in the closure.

    The identity direction is central, so it never affects brackets; it is
    removed from each control before closing under brackets with the full
    algebra.
    """
    n = report.n
    span = _Span(n, tol)
    if not controls:
        return 0
    seeds = []
    for x in _skew(controls, HERMITIAN_TOL):
        x = x - np.trace(x) / n * np.eye(n)
        if span.add(x):
            seeds.append(span.matrix(len(span) - 1))
    algebra = list(report.basis)
    _close(span, seeds, lambda s: algebra)
    return len(span)


def is_completely_controllable(
    model: ControlModel, tol: float = CLOSURE_TOL, ideal: bool = False
) -> tuple[bool, LieClosureReport]:
    """Rank test: the system is completely controllable iff the closure has dimension ``N^2``."""
    report = lie_closure(model.generators, tol)
    if ideal:
        report = LieClosureReport(
            report.dimension,
            report.basis,
            report.generations,
            report.controllable,
            report.n,
            ideal_dimension(report, model.controls, tol),
        )
    return report.controllable, report


def detect_decoupling(
    model: ControlModel, tol: float = COUPLING_TOL, rho: Optional[DensityMatrix] = None
) -> SubspacePartition:
    """Split the basis into blocks that no Hamiltonian term connects.

    Works only in the model's own basis, which must diagonalize ``H0``.
    Blocks are the connected components of the graph with an edge ``(i, j)``
    whenever some ``|H_m[i, j]| > tol``, ordered by smallest index.

    Raises:
        BasisNotAdapted: if ``H0`` has an off-diagonal entry above ``tol``.
    """
    n = model.dim
    off = np.abs(model.h0 - np.diag(np.diag(model.h0)))
    if off.max(initial=0.0) > tol:
        raise BasisNotAdapted(
            f"h0 is not diagonal (max off-diagonal {off.max():.3e}); "
            "transform the model to the eigenbasis of h0 before detecting decoupling"
        )
    adj = np.zeros((n, n), dtype=bool)
    for h in model.controls:
        adj |= np.abs(h) > tol
    np.fill_diagonal(adj, False)
    _, labels = connected_components(adj, directed=False)
    blocks: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    ordered = sorted(blocks.values(), key=lambda b: b[0])
    part = SubspacePartition(ordered)
    if rho is not None:
        part = part.with_probabilities(rho)
    return part


def block_closures(model: ControlModel, partition: SubspacePartition, tol: float = CLOSURE_TOL) -> list[LieClosureReport]:
    """Lie closure of each block's restricted generators.

    Complete controllability of every block is reported, not turned into a
    verdict about the whole system.
    """
    reports = []
    for b in partition.blocks:
        idx = np.ix_(b, b)
        reports.append(lie_closure([g[idx] for g in model.generators], tol))
    return reports
