"""JSON model and pulse files.

Model file keys: ``dim``, ``h0``, ``controls``, optional ``labels``,
``rho0`` and ``observable``. Matrix entries are real numbers or ``[re, im]``
pairs. Observables may be given as a matrix or one of the aliases ``h0``,
``control:m`` (1-based), ``identity`` and ``projector:k`` (1-based basis
state).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .dynamics import ControlModel, PulseSchedule
from .errors import ModelFileError, QCBError
from .states import DensityMatrix, Observable

FILE_HERMITIAN_TOL = 1e-8
BUNDLED = (
    "modified_oscillator",
    "perturbed_oscillator",
    "two_block_decoupled",
    "two_level_controllable",
)


@dataclass(frozen=True, eq=False)
class ModelFile:
    model: ControlModel
    rho0: Optional[DensityMatrix]
    observable_spec: Any
    source: str

    def observable(self, spec: Any = None) -> Observable:
        spec = self.observable_spec if spec is None else spec
        if spec is None:
            raise ModelFileError(f"{self.source}: observable: missing (give it in the file or via --observable)")
        return Observable(resolve_observable(spec, self.model, self.source), tol=FILE_HERMITIAN_TOL)

    def require_rho0(self) -> DensityMatrix:
        if self.rho0 is None:
            raise ModelFileError(f"{self.source}: rho0: missing (give it in the file or via --rho0)")
        return self.rho0


def _entry(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ModelFileError(f"{where}: boolean is not a matrix entry")
    if isinstance(x, (int, float)):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(float(x[0]), float(x[1]))
    raise ModelFileError(f"{where}: entry must be a number or [re, im], got {x!r}")


def parse_matrix(data, where: str, dim: Optional[int] = None) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ModelFileError(f"{where}: expected a nested array (list of rows)")
    n = len(data)
    if any(len(r) != n for r in data):
        raise ModelFileError(f"{where}: matrix is not square")
    if dim is not None and n != dim:
        raise ModelFileError(f"{where}: matrix is {n}x{n} but dim is {dim}")
    m = np.array([[_entry(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(data)])
    err = float(np.max(np.abs(m - m.conj().T)))
    if err > FILE_HERMITIAN_TOL:
        raise ModelFileError(f"{where}: not Hermitian (max|M - M^dagger| = {err:.3e})")
    return m


def matrix_to_json(m: np.ndarray) -> list:
    """Real entries stay plain numbers; complex ones become ``[re, im]``."""
    m = np.asarray(m)
    if np.all(m.imag == 0):
        return [[float(x) for x in row] for row in m.real]
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def resolve_observable(spec, model: ControlModel, source: str = "observable") -> np.ndarray:
    if isinstance(spec, list):
        return parse_matrix(spec, f"{source}: observable", model.dim)
    if not isinstance(spec, str):
        raise ModelFileError(f"{source}: observable: expected a matrix or alias, got {spec!r}")
    s = spec.strip()
    n = model.dim
    if s == "h0":
        return np.array(model.h0)
    if s == "identity":
        return np.eye(n, dtype=complex)
    kind, _, arg = s.partition(":")
    if kind in ("control", "projector") and arg:
        try:
            k = int(arg)
        except ValueError:
            raise ModelFileError(f"{source}: observable: bad index in {spec!r}") from None
        if kind == "control":
            if not 1 <= k <= model.n_controls:
                raise ModelFileError(f"{source}: observable: {spec!r} but model has {model.n_controls} control(s)")
            return np.array(model.controls[k - 1])
        if not 1 <= k <= n:
            raise ModelFileError(f"{source}: observable: {spec!r} outside 1..{n}")
        p = np.zeros((n, n), dtype=complex)
        p[k - 1, k - 1] = 1.0
        return p
    raise ModelFileError(f"{source}: observable: unknown alias {spec!r} (use h0, control:m, identity, projector:k)")


def _loads(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ModelFileError(
            f"{source}:{exc.lineno}:{exc.colno}: parse error: {exc.msg}\n    {context}"
        ) from None


def resolve_model_path(path_or_name: Union[str, Path]) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name.removesuffix(".json")
    if name in BUNDLED:
        return Path(str(resources.files("qcb") / "examples" / f"{name}.json"))
    raise ModelFileError(f"{path_or_name}: no such model file or bundled example")


def parse_rho(data, where: str, dim: int) -> DensityMatrix:
    m = parse_matrix(data, where, dim)
    try:
        return DensityMatrix(m, tol=FILE_HERMITIAN_TOL)
    except QCBError as exc:
        raise ModelFileError(f"{where}: {exc}") from None


def load_model(path_or_name: Union[str, Path]) -> ModelFile:
    path = resolve_model_path(path_or_name)
    source = str(path)
    doc = _loads(path.read_text(), source)
    if not isinstance(doc, dict):
        raise ModelFileError(f"{source}: top level must be an object")
    for key in ("dim", "h0"):
        if key not in doc:
            raise ModelFileError(f"{source}: {key}: missing")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ModelFileError(f"{source}: dim: must be a positive integer, got {dim!r}")
    h0 = parse_matrix(doc["h0"], f"{source}: h0", dim)
    controls = doc.get("controls", [])
    if not isinstance(controls, list):
        raise ModelFileError(f"{source}: controls: must be a list of matrices")
    ctrls = [parse_matrix(c, f"{source}: controls[{k}]", dim) for k, c in enumerate(controls)]
    labels = doc.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != len(ctrls):
            raise ModelFileError(f"{source}: labels: must name every control")
        labels = tuple(str(x) for x in labels)
    model = ControlModel(h0, tuple(ctrls), labels, tol=FILE_HERMITIAN_TOL)
    rho0 = None
    if doc.get("rho0") is not None:
        rho0 = parse_rho(doc["rho0"], f"{source}: rho0", dim)
    return ModelFile(model, rho0, doc.get("observable"), source)


def load_rho(spec: str, dim: int) -> DensityMatrix:
    """``--rho0`` argument: a path to a JSON matrix file or an inline JSON matrix."""
    p = Path(spec)
    if p.exists():
        text, where = p.read_text(), str(p)
    else:
        text, where = spec, "--rho0"
    data = _loads(text, where)
    if isinstance(data, dict):
        if "rho0" not in data:
            raise ModelFileError(f"{where}: rho0: missing")
        data = data["rho0"]
    return parse_rho(data, f"{where}: rho0", dim)


def pulses_to_json(p: PulseSchedule) -> dict:
    return {
        "t0": p.t0,
        "tF": p.tF,
        "steps": p.steps,
        "amplitudes": [[float(x) for x in row] for row in p.amplitudes],
    }


def _format_float(x: float) -> str:
    return format(x, ".17g")


def dump_pulses(p: PulseSchedule, path: Union[str, Path]) -> None:
    """Write a pulse file; numbers carry 17 significant digits so reading back is exact."""
    rows = ",\n    ".join("[" + ", ".join(_format_float(x) for x in row) + "]" for row in p.amplitudes)
    text = (
        "{\n"
        f'  "t0": {_format_float(p.t0)},\n'
        f'  "tF": {_format_float(p.tF)},\n'
        f'  "steps": {p.steps},\n'
        f'  "amplitudes": [\n    {rows}\n  ]\n'
        "}\n"
    )
    Path(path).write_text(text)


def load_pulses(path: Union[str, Path]) -> PulseSchedule:
    source = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"{source}: cannot read pulse file: {exc.strerror}") from None
    doc = _loads(text, source)
    if not isinstance(doc, dict):
        raise ModelFileError(f"{source}: top level must be an object")
    for key in ("t0", "tF", "steps", "amplitudes"):
        if key not in doc:
            raise ModelFileError(f"{source}: {key}: missing")
    amps = doc["amplitudes"]
    if not isinstance(amps, list) or len(amps) != doc["steps"]:
        raise ModelFileError(f"{source}: amplitudes: expected {doc['steps']} rows")
    widths = {len(r) if isinstance(r, list) else -1 for r in amps}
    if len(widths) != 1 or -1 in widths:
        raise ModelFileError(f"{source}: amplitudes: rows must be lists of equal length")
    arr = np.array(amps, dtype=float).reshape(len(amps), widths.pop())
    try:
        return PulseSchedule(float(doc["t0"]), float(doc["tF"]), arr)
    except QCBError as exc:
        raise ModelFileError(f"{source}: {exc}") from None
