"""CSV/JSON interchange for every data type the library produces.

Floats are written with ``repr`` (shortest round-tripping form), so finite
doubles survive a write/read cycle bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import PreconditionError
from .function_space import SampledFunction
from .kernels import KernelModel
from .operator_learning import KoopmanModel, SnapshotPairs
from .reasoning import EmbeddingStore, ReasoningTriple, RelationFamily, RelationOperator
from .scattering import ScatteringCoefficients
from .spectral import Spectrum, ThresholdParams


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, rows, header=None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _read_rows(path, header: bool = False) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    return rows[1:] if header else rows


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


# -- sampled functions ----------------------------------------------------------


def function_to_csv(f: SampledFunction, path) -> None:
    if f.is_complex:
        rows = [[_fmt(v.real), _fmt(v.imag)] for v in f.samples]
    else:
        rows = [[_fmt(v)] for v in f.samples]
    _write_rows(path, rows)


def function_from_csv(path) -> SampledFunction:
    rows = _read_rows(path)
    if not rows:
        raise PreconditionError(f"{path}: no samples")
    if len(rows[0]) == 2:
        return SampledFunction(np.array([complex(float(a), float(b)) for a, b in rows]))
    return SampledFunction(np.array([float(r[0]) for r in rows]))


def function_to_json(f: SampledFunction):
    if f.is_complex:
        return [[float(v.real), float(v.imag)] for v in f.samples]
    return [float(v) for v in f.samples]


def function_from_json(data) -> SampledFunction:
    if data and isinstance(data[0], list):
        return SampledFunction(np.array([complex(a, b) for a, b in data]))
    return SampledFunction(np.array(data, dtype=float))


# -- spectra and thresholds ------------------------------------------------------


def spectrum_to_csv(s: Spectrum, path) -> None:
    _write_rows(path, [[k, _fmt(c.real), _fmt(c.imag)] for k, c in enumerate(s.coeffs)], ["k", "re", "im"])


def spectrum_from_csv(path) -> Spectrum:
    rows = _read_rows(path, header=True)
    coeffs = np.zeros(len(rows), dtype=complex)
    for k, re, im in rows:
        coeffs[int(k)] = complex(float(re), float(im))
    return Spectrum(coeffs)


def spectrum_to_json(s: Spectrum) -> dict:
    return {"re": s.coeffs.real.tolist(), "im": s.coeffs.imag.tolist()}


def spectrum_from_json(d: dict) -> Spectrum:
    return Spectrum(np.array(d["re"]) + 1j * np.array(d["im"]))


def save_threshold(params: ThresholdParams, path, loss_trace=None) -> Path | None:
    """Write theta as JSON; a loss trace goes to ``<stem>.loss.json`` beside it."""
    path = Path(path)
    dump_json({"theta": params.theta.tolist()}, path)
    if loss_trace is None:
        return None
    sidecar = path.with_name(path.stem + ".loss.json")
    dump_json({"loss_trace": [float(v) for v in loss_trace]}, sidecar)
    return sidecar


def load_threshold(path) -> ThresholdParams:
    return ThresholdParams(np.array(load_json(path)["theta"], dtype=float))


# -- kernels ---------------------------------------------------------------------


def training_set_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Feature columns followed by one label column; a non-numeric first row is a header."""
    rows = _read_rows(path)
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
    data = np.array([[float(v) for v in r] for r in rows])
    if data.ndim != 2 or data.shape[1] < 2:
        raise PreconditionError(f"{path}: expected feature columns followed by a label column")
    return data[:, :-1], data[:, -1]


def training_set_to_csv(X, y, path) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != len(y):
        X = X.T
    header = [f"x{i}" for i in range(X.shape[1])] + ["y"]
    _write_rows(path, [[_fmt(v) for v in row] + [_fmt(t)] for row, t in zip(X, y)], header)


def save_kernel_model(m: KernelModel, path) -> None:
    dump_json(m.to_dict(), path)


def load_kernel_model(path) -> KernelModel:
    return KernelModel.from_dict(load_json(path))


# -- scattering ------------------------------------------------------------------


def scattering_to_json(S: ScatteringCoefficients) -> dict:
    return {
        "n": S.n,
        "J": S.J,
        "paths": {key: np.asarray(v, dtype=float).tolist() for key, v in S.as_dict().items()},
    }


def scattering_from_json(d: dict) -> ScatteringCoefficients:
    order0 = None
    order1, order2 = {}, {}
    for key, values in d["paths"].items():
        arr = np.array(values, dtype=float)
        if key == "0":
            order0 = arr
        elif key.startswith("1:"):
            order1[int(key[2:])] = arr
        elif key.startswith("2:"):
            a, b = key[2:].split(",")
            order2[(int(a), int(b))] = arr
        else:
            raise PreconditionError(f"unrecognized scattering path {key!r}")
    return ScatteringCoefficients(d["n"], d["J"], order0, order1, order2)


def scattering_to_csv(S: ScatteringCoefficients, path) -> None:
    rows = []
    for key, values in S.as_dict().items():
        rows.extend([key, i, _fmt(v)] for i, v in enumerate(values))
    _write_rows(path, rows, ["path", "index", "value"])


# -- dynamics / Koopman ------------------------------------------------------------


def snapshots_to_csv(pairs: SnapshotPairs, path) -> None:
    p = pairs.X.shape[1]
    header = [f"x{i}" for i in range(p)] + [f"y{i}" for i in range(p)]
    _write_rows(path, [[_fmt(v) for v in np.concatenate([x, y])] for x, y in zip(pairs.X, pairs.Y)], header)


def snapshots_from_csv(path) -> SnapshotPairs:
    rows = _read_rows(path, header=True)
    data = np.array([[float(v) for v in r] for r in rows])
    if data.shape[1] % 2:
        raise PreconditionError(f"{path}: snapshot CSV needs an even number of columns")
    p = data.shape[1] // 2
    return SnapshotPairs(data[:, :p], data[:, p:])


def trajectory_to_csv(traj, path) -> None:
    traj = np.asarray(traj)
    _write_rows(path, [[_fmt(v) for v in row] for row in traj], [f"x{i}" for i in range(traj.shape[1])])


def save_koopman(m: KoopmanModel, path) -> None:
    dump_json(m.to_dict(), path)


def load_koopman(path) -> KoopmanModel:
    return KoopmanModel.from_dict(load_json(path))


def eigenvalues_to_csv(eigs, path) -> None:
    _write_rows(path, [[_fmt(w.real), _fmt(w.imag), _fmt(abs(w))] for w, _ in eigs], ["re", "im", "magnitude"])


# -- reasoning -------------------------------------------------------------------


def save_store(store: EmbeddingStore, path) -> None:
    dump_json(store.to_dict(), path)


def load_store(path) -> EmbeddingStore:
    return EmbeddingStore({k: np.array(v, dtype=float) for k, v in load_json(path).items()})


def triples_to_csv(triples, path) -> None:
    _write_rows(path, [[t.subject, t.relation, t.object] for t in triples], ["subject", "relation", "object"])


def triples_from_csv(path) -> list[ReasoningTriple]:
    return [ReasoningTriple(*r[:3]) for r in _read_rows(path, header=True)]


def save_relation_family(family: RelationFamily, path) -> None:
    dump_json(family.to_dict(), path)


def load_relation_family(path) -> dict[str, RelationOperator]:
    d = load_json(path)
    return {r: RelationOperator.from_dict(v) for r, v in d["relations"].items()}


# -- matrices --------------------------------------------------------------------


def matrix_to_csv(M, path) -> None:
    _write_rows(path, [[_fmt(v) for v in row] for row in np.atleast_2d(M)])


def matrix_from_csv(path) -> np.ndarray:
    return np.array([[float(v) for v in r] for r in _read_rows(path)])
