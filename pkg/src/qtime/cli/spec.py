"""Loading and validation of JSON model specifications.

Complex numbers are ``[re, im]`` pairs; a bare real number is also accepted.
Every validation failure raises :class:`SpecError` carrying the dotted field
path and, where it can be found, the line in the source text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..qcore import completeness_defect, orthonormality_defect

DEFAULT_TOLERANCES = {"hermitian": 1e-10, "norm": 1e-10, "orthonormal": 1e-10, "check": 1e-10}
SEED_MAX = 2**64


class SpecError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{path}{where}: {message}")


@dataclass(frozen=True)
class Basis:
    labels: tuple[str, ...]
    vectors: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    dim: int
    hamiltonian: np.ndarray
    initial_state: np.ndarray
    experiment: str
    params: dict
    seed: int
    tolerances: dict
    clock: dict | None = None
    interaction: dict | None = None
    post_state: np.ndarray | None = None
    bases: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def basis(self, name: str) -> Basis:
        try:
            return self.bases[name]
        except KeyError:
            raise SpecError(f"bases.{name}", "no such basis in spec") from None


class _Locator:
    """Best-effort mapping from a dotted field path to a line in the JSON text."""

    def __init__(self, text: str):
        self.text = text

    def line(self, path: str) -> int | None:
        pos = 0
        for part in path.split("."):
            if part.isdigit():
                continue
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(self.text, pos)
            if m is None:
                return None
            pos = m.start()
        return self.text.count("\n", 0, pos) + 1


def _complex(x, path: str) -> complex:
    if isinstance(x, bool):
        raise ValueError(f"{path}: expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ValueError("expected a number or [re, im] pair")


def _vector(x, path: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise ValueError("expected a non-empty list of complex entries")
    v = np.array([_complex(e, path) for e in x])
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected {dim} entries, got {v.shape[0]}")
    return v


def _matrix(x, path: str, dim: int) -> np.ndarray:
    if not isinstance(x, list) or len(x) != dim:
        raise ValueError(f"expected {dim} rows")
    return np.array([_vector(row, path, dim) for row in x])


class _Validator:
    def __init__(self, text: str, data: dict):
        self.loc = _Locator(text)
        self.data = data

    def fail(self, path: str, message: str):
        raise SpecError(path, message, self.loc.line(path))

    def get(self, obj: dict, key: str, path: str, required: bool = True):
        if not isinstance(obj, dict):
            self.fail(path.rsplit(".", 1)[0], "expected an object")
        if key not in obj:
            if required:
                self.fail(path, "required field is missing")
            return None
        return obj[key]

    def convert(self, fn, path: str, *args):
        try:
            return fn(*args)
        except ValueError as exc:
            self.fail(path, str(exc))

    def unit_norm(self, v: np.ndarray, path: str, tol: float):
        if abs(np.linalg.norm(v) - 1) > tol:
            self.fail(path, f"state must have unit norm (got {np.linalg.norm(v):.6g})")

    def hermitian(self, h: np.ndarray, path: str, tol: float):
        dev = float(np.max(np.abs(h - h.conj().T)))
        if dev > tol:
            self.fail(path, f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.1e})")


def parse_spec(text: str, seed: int | None = None, tol: float | None = None) -> ModelSpec:
    """Parse and validate a JSON spec; ``seed``/``tol`` override the file values."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("<json>", exc.msg, exc.lineno) from None
    if not isinstance(data, dict):
        raise SpecError("<root>", "spec must be a JSON object", 1)
    v = _Validator(text, data)

    tols = dict(DEFAULT_TOLERANCES)
    raw_tols = v.get(data, "tolerances", "tolerances", required=False) or {}
    if not isinstance(raw_tols, dict):
        v.fail("tolerances", "expected an object")
    for key, val in raw_tols.items():
        if key not in DEFAULT_TOLERANCES:
            v.fail(f"tolerances.{key}", f"unknown tolerance; expected one of {sorted(DEFAULT_TOLERANCES)}")
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            v.fail(f"tolerances.{key}", "tolerance must be a positive number")
        tols[key] = float(val)
    if tol is not None:
        if not tol > 0:
            raise SpecError("--tol", "tolerance must be positive")
        tols["check"] = float(tol)

    system = v.get(data, "system", "system")
    dim = v.get(system, "dim", "system.dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        v.fail("system.dim", "dimension must be a positive integer")
    ham = v.convert(_matrix, "system.hamiltonian", v.get(system, "hamiltonian", "system.hamiltonian"), "system.hamiltonian", dim)
    v.hermitian(ham, "system.hamiltonian", tols["hermitian"])

    psi = v.convert(_vector, "initial_state", v.get(data, "initial_state", "initial_state"), "initial_state", dim)
    v.unit_norm(psi, "initial_state", tols["norm"])

    post = v.get(data, "post_state", "post_state", required=False)
    if post is not None:
        post = v.convert(_vector, "post_state", post, "post_state", dim)
        v.unit_norm(post, "post_state", tols["norm"])

    clock = v.get(data, "clock", "clock", required=False)
    if clock is not None:
        d_c = v.get(clock, "d_C", "clock.d_C")
        if isinstance(d_c, bool) or not isinstance(d_c, int) or d_c < 2:
            v.fail("clock.d_C", "clock dimension must be an integer >= 2")
        omega = v.get(clock, "omega", "clock.omega")
        if isinstance(omega, bool) or not isinstance(omega, (int, float)) or not omega > 0:
            v.fail("clock.omega", "omega must be a positive number")
        centered = v.get(clock, "centered", "clock.centered", required=False)
        if centered is not None and not isinstance(centered, bool):
            v.fail("clock.centered", "expected true or false")
        clock = {"d_C": d_c, "omega": float(omega), "centered": True if centered is None else centered}

    inter = v.get(data, "interaction", "interaction", required=False)
    if inter is not None:
        if clock is None:
            v.fail("interaction", "an interaction needs a clock section")
        n = clock["d_C"] * dim
        mat = v.convert(_matrix, "interaction.matrix", v.get(inter, "matrix", "interaction.matrix"), "interaction.matrix", n)
        v.hermitian(mat, "interaction.matrix", tols["hermitian"])
        td = v.get(inter, "time_diagonal", "interaction.time_diagonal", required=False)
        if td is not None and not isinstance(td, bool):
            v.fail("interaction.time_diagonal", "expected true or false")
        inter = {"matrix": mat, "time_diagonal": bool(td)}

    bases = {}
    raw_bases = v.get(data, "bases", "bases", required=False) or {}
    if not isinstance(raw_bases, dict):
        v.fail("bases", "expected an object mapping names to bases")
    for name, entry in raw_bases.items():
        path = f"bases.{name}"
        if isinstance(entry, dict):
            vecs_raw = v.get(entry, "vectors", f"{path}.vectors")
            labels = v.get(entry, "labels", f"{path}.labels", required=False)
        else:
            vecs_raw, labels = entry, None
        if not isinstance(vecs_raw, list) or not vecs_raw:
            v.fail(path, "expected a non-empty list of vectors")
        vecs = tuple(v.convert(_vector, f"{path}.{i}", x, f"{path}.{i}", dim) for i, x in enumerate(vecs_raw))
        if labels is None:
            labels = [str(i) for i in range(len(vecs))]
        if not isinstance(labels, list) or len(labels) != len(vecs) or not all(isinstance(s, str) for s in labels):
            v.fail(f"{path}.labels", "labels must be a list of strings, one per vector")
        if orthonormality_defect(vecs) > tols["orthonormal"]:
            v.fail(path, "basis vectors are not orthonormal")
        bases[name] = Basis(tuple(labels), vecs)

    exp = v.get(data, "experiment", "experiment")
    name = v.get(exp, "name", "experiment.name")
    from .experiments import EXPERIMENTS

    if name not in EXPERIMENTS:
        v.fail("experiment.name", f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")
    params = v.get(exp, "params", "experiment.params", required=False) or {}
    if not isinstance(params, dict):
        v.fail("experiment.params", "expected an object")

    file_seed = v.get(data, "seed", "seed", required=False)
    if file_seed is not None and (isinstance(file_seed, bool) or not isinstance(file_seed, int) or not 0 <= file_seed < SEED_MAX):
        v.fail("seed", "seed must be an unsigned 64-bit integer")
    if seed is not None and not 0 <= seed < SEED_MAX:
        raise SpecError("--seed", "seed must be an unsigned 64-bit integer")
    final_seed = seed if seed is not None else (file_seed if file_seed is not None else 0)

    return ModelSpec(
        dim=dim,
        hamiltonian=ham,
        initial_state=psi,
        experiment=name,
        params=params,
        seed=int(final_seed),
        tolerances=tols,
        clock=clock,
        interaction=inter,
        post_state=post,
        bases=bases,
        raw=data,
    )


def require_complete(spec: ModelSpec, name: str) -> Basis:
    b = spec.basis(name)
    if len(b.vectors) != spec.dim or completeness_defect(b.vectors) > spec.tolerances["orthonormal"]:
        raise SpecError(f"bases.{name}", "basis must be complete for this experiment")
    return b


def param(spec: ModelSpec, key: str, default: Any = None, kind=None):
    """Experiment parameter with an optional type check."""
    if key not in spec.params:
        if default is None:
            raise SpecError(f"experiment.params.{key}", "required parameter is missing")
        return default
    val = spec.params[key]
    if kind is not None:
        ok = isinstance(val, kind) and not (isinstance(val, bool) and kind is not bool)
        if kind is float:
            ok = isinstance(val, (int, float)) and not isinstance(val, bool)
        if not ok:
            raise SpecError(f"experiment.params.{key}", f"expected {kind.__name__}")
    return float(val) if kind is float else val
