"""Closed-form linear readout: ridge training, forward pass, persistence.

Training stacks collected reservoir states into a design matrix with a
trailing ones column (for the bias), builds the +1/-1 teacher matrix for
classification tasks, and solves the regularized normal equations in one
shot.  Regression targets ride the same path as complex numbers with zero
imaginary part.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cxnum
from .reservoir import COMPLEX, REALPAIR

_MAGIC = b"CVM1"
_DOMAIN_CODE = {COMPLEX: 0, REALPAIR: 1}
_DOMAIN_NAME = {0: COMPLEX, 1: REALPAIR}


@dataclass(frozen=True)
class ReadoutModel:
    """Trained output weights (n_out, n_res) and bias (n_out,)."""

    w_out: np.ndarray
    b_out: np.ndarray
    value_domain: str = COMPLEX

    def __post_init__(self):
        if self.w_out.ndim != 2 or self.b_out.shape != (self.w_out.shape[0],):
            raise ValueError("inconsistent readout dimensions")
        self.w_out.setflags(write=False)
        self.b_out.setflags(write=False)


@dataclass(frozen=True)
class TrainingBatch:
    """Collected states (N, n_res), matching targets (N, n_out), ridge lam."""

    states: np.ndarray
    targets: np.ndarray
    lam: float
    value_domain: str = COMPLEX

    def __post_init__(self):
        if len(self.states) != len(self.targets) or len(self.states) < 1:
            raise ValueError("states and targets must have equal nonzero length")
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")


def assemble_design(states) -> np.ndarray:
    """Stack states as rows and append a ones column for the bias."""
    arr = np.asarray(states, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError("states must form a rectangular (N, n_res) block")
    n = arr.shape[0]
    if n < 1:
        raise ValueError("need at least one state")
    return np.hstack([arr, np.ones((n, 1), dtype=np.complex128)])


def build_teacher(labels, n_classes: int) -> np.ndarray:
    """Teacher matrix with +1 at each sample's class and -1 elsewhere."""
    idx = np.asarray(labels, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("labels must be a flat sequence")
    if n_classes < 1:
        raise ValueError("n_classes must be >= 1")
    if idx.size and (idx.min() < 0 or idx.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    teacher = -np.ones((idx.size, n_classes), dtype=np.complex128)
    teacher[np.arange(idx.size), idx] = 1.0
    return teacher


def train(batch: TrainingBatch) -> ReadoutModel:
    """Solve the ridge normal equations; splits the bias off the last column."""
    design = assemble_design(batch.states)
    targets = cxnum.as_cmatrix(batch.targets)
    params = cxnum.solve_regularized(design, targets, batch.lam)
    return ReadoutModel(
        w_out=np.ascontiguousarray(params[:, :-1]),
        b_out=np.ascontiguousarray(params[:, -1]),
        value_domain=batch.value_domain,
    )


def forward(model: ReadoutModel, x) -> np.ndarray:
    """Output vector W_out x + b_out for one state."""
    x = cxnum.as_cvector(x)
    if x.shape[0] != model.w_out.shape[1]:
        raise ValueError(
            f"state length {x.shape[0]} != n_res {model.w_out.shape[1]}"
        )
    return model.w_out @ x + model.b_out


def forward_batch(model: ReadoutModel, states) -> np.ndarray:
    """Outputs for a block of states, one row per state."""
    arr = np.asarray(states, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[1] != model.w_out.shape[1]:
        raise ValueError(f"states must be (N, {model.w_out.shape[1]})")
    return arr @ model.w_out.T + model.b_out


def save_model(model: ReadoutModel, path) -> None:
    """Write the CVM1 binary: magic, domain byte, dims, then f64 pairs."""
    n_out, n_res = model.w_out.shape
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<B", _DOMAIN_CODE[model.value_domain])
    blob += struct.pack("<II", n_out, n_res)
    blob += np.ascontiguousarray(model.w_out, dtype="<c16").tobytes()
    blob += np.ascontiguousarray(model.b_out, dtype="<c16").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_model(path) -> ReadoutModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a CVM1 model file")
    domain_code = struct.unpack_from("<B", raw, 4)[0]
    if domain_code not in _DOMAIN_NAME:
        raise ValueError(f"{path}: unknown value domain code {domain_code}")
    n_out, n_res = struct.unpack_from("<II", raw, 5)
    need = 13 + 16 * (n_out * n_res + n_out)
    if len(raw) != need:
        raise ValueError(f"{path}: truncated model file ({len(raw)} != {need})")
    w = np.frombuffer(raw, dtype="<c16", count=n_out * n_res, offset=13)
    b = np.frombuffer(raw, dtype="<c16", count=n_out, offset=13 + 16 * n_out * n_res)
    return ReadoutModel(
        w_out=w.reshape(n_out, n_res).astype(np.complex128),
        b_out=b.astype(np.complex128),
        value_domain=_DOMAIN_NAME[domain_code],
    )
