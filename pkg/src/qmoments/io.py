"""Moment files: labelled observables with either a state or tabulated moments.

Layout::

    {"format": "qmoments-moments", "version": 1,
     "observables": [{"label": [observer, setting, index], "matrix": [[[re, im], ...], ...]}, ...],
     "state": {"vector": [[re, im], ...]} | {"density": [[[re, im], ...], ...]},
     "means": [...], "second": <moment tensor>, "third": <moment tensor>}

Operator matrices and a state select the quantum route; otherwise ``second``
and ``third`` (central moments) are required.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .hilbert import HilbertSpace, Operator, State
from .moments import Label, MomentTensor, ObservableSet

FORMAT = "qmoments-moments"
VERSION = 1


class MomentFileError(ValueError):
    pass


def complex_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise MomentFileError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_complex(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


@dataclass
class MomentFile:
    labels: tuple[Label, ...]
    obs: ObservableSet | None = None
    state: State | None = None
    means: np.ndarray | None = None
    second: MomentTensor | None = None
    third: MomentTensor | None = None

    @property
    def quantum(self) -> bool:
        return self.obs is not None and self.state is not None


def parse_moment_file(data: dict) -> MomentFile:
    if not isinstance(data, dict):
        raise MomentFileError("moment file must hold a JSON object")
    if data.get("format") != FORMAT:
        raise MomentFileError(f"format must be {FORMAT!r}")
    if data.get("version") != VERSION:
        raise MomentFileError(f"unsupported version {data.get('version')!r}")
    try:
        entries = data["observables"]
        labels = tuple(Label.coerce(e["label"]) for e in entries)
        obs = state = None
        if all("matrix" in e for e in entries) and "state" in data:
            mats = [complex_array(e["matrix"]) for e in entries]
            dim = mats[0].shape[0]
            dims = tuple(data.get("factor_dims", [dim]))
            space = HilbertSpace(dims)
            obs = ObservableSet([(lab, Operator(space, m)) for lab, m in zip(labels, mats)], space)
            st = data["state"]
            if "vector" in st:
                state = State.pure(space, complex_array(st["vector"]), normalize=True)
            else:
                state = State.mixed(space, complex_array(st["density"]))
        second = MomentTensor.from_json(data["second"]) if "second" in data else None
        third = MomentTensor.from_json(data["third"]) if "third" in data else None
        means = np.asarray(data["means"], dtype=float) if "means" in data else None
    except MomentFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MomentFileError(f"malformed moment file: {exc}") from exc
    if obs is None and (second is None or third is None):
        raise MomentFileError("need operator matrices with a state, or both 'second' and 'third' tables")
    if second is not None and set(second.labels) != set(labels):
        raise MomentFileError("second-moment labels do not match the observables block")
    return MomentFile(labels, obs, state, means, second, third)


def load_moment_file(path) -> MomentFile:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MomentFileError(f"cannot read {path}: {exc}") from exc
    return parse_moment_file(data)


def moment_file_from_state(state: State, obs: ObservableSet) -> dict:
    out = {
        "format": FORMAT,
        "version": VERSION,
        "factor_dims": list(obs.space.factor_dims),
        "observables": [{"label": list(lab), "matrix": encode_complex(op.matrix)} for lab, op in obs],
    }
    if state.vector is not None:
        out["state"] = {"vector": encode_complex(state.vector)}
    else:
        out["state"] = {"density": encode_complex(state.density)}
    return out


def load_schema(name: str) -> dict:
    return json.loads(resources.files("qmoments.schemas").joinpath(f"{name}.json").read_text())


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, full double precision."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
