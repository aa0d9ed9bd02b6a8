"""Leaky echo-state engine over complex or split-real signals.

The recurrent and input weights are drawn once from a seeded generator and
never trained.  The complex variant uses an amplitude-saturating,
phase-preserving activation, so the state path rotates with any global phase
applied to the inputs; the split-real variant (the real-valued baseline)
feeds real and imaginary parts through separate channels with a plain tanh.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import cxnum
from ._kernels import MODE_COMPLEX, MODE_REALPAIR, drive

log = logging.getLogger(__name__)

SIMPLIFIED = "simplified"
GENERAL = "general"
COMPLEX = "complex"
REALPAIR = "realpair"


@dataclass(frozen=True)
class ReservoirConfig:
    """Hyperparameters of one network.

    ``n_in`` counts complex input channels; in the split-real domain the
    effective input width doubles because real and imaginary parts arrive on
    separate channels.  The recurrent matrix is first rescaled to
    ``init_spectral_radius`` and then normalized to
    ``desired_spectral_radius`` (two explicit steps).  ``delta`` and
    ``time_const`` only matter in the general dynamics mode.
    """

    n_in: int
    n_res: int
    init_spectral_radius: float = 0.16
    desired_spectral_radius: float = 0.10
    leak_rate: float = 0.30
    dynamics_mode: str = SIMPLIFIED
    delta: float = 1.0
    time_const: float = 1.0
    input_scale: float = 1.0
    seed: int = 0
    value_domain: str = COMPLEX

    def __post_init__(self):
        if self.n_in < 1 or self.n_res < 1:
            raise ValueError("n_in and n_res must be >= 1")
        if not 0.0 <= self.leak_rate <= 1.0:
            raise ValueError(f"leak_rate must lie in [0, 1], got {self.leak_rate}")
        if self.desired_spectral_radius <= 0.0 or self.init_spectral_radius <= 0.0:
            raise ValueError("spectral radii must be positive")
        if self.dynamics_mode not in (SIMPLIFIED, GENERAL):
            raise ValueError(f"unknown dynamics_mode {self.dynamics_mode!r}")
        if self.value_domain not in (COMPLEX, REALPAIR):
            raise ValueError(f"unknown value_domain {self.value_domain!r}")
        if self.dynamics_mode == GENERAL:
            if self.delta <= 0.0 or self.time_const <= 0.0:
                raise ValueError("delta and time_const must be positive")
            if self.delta / self.time_const > 1.0:
                raise ValueError("delta/time_const must be <= 1 in general mode")
        if self.input_scale <= 0.0:
            raise ValueError("input_scale must be positive")

    @property
    def input_width(self) -> int:
        """Width of the vectors actually fed to the network."""
        return 2 * self.n_in if self.value_domain == REALPAIR else self.n_in

    @property
    def state_coefs(self) -> tuple[float, float]:
        """(keep, gain) multipliers of previous state and fresh activation."""
        if self.dynamics_mode == SIMPLIFIED:
            return 1.0 - self.leak_rate, self.leak_rate
        ratio = self.delta / self.time_const
        return 1.0 - self.leak_rate * ratio, ratio

    @property
    def mode(self) -> int:
        return MODE_COMPLEX if self.value_domain == COMPLEX else MODE_REALPAIR


@dataclass(frozen=True)
class ReservoirWeights:
    """Fixed input and recurrent weights; never trained, never mutated."""

    w_in: np.ndarray
    w_res: np.ndarray

    def __post_init__(self):
        self.w_in.setflags(write=False)
        self.w_res.setflags(write=False)


@dataclass(frozen=True)
class ReservoirState:
    """State vector and the number of steps taken to reach it."""

    x: np.ndarray
    t: int = 0


def zero_state(config: ReservoirConfig) -> ReservoirState:
    return ReservoirState(np.zeros(config.n_res, dtype=np.complex128), 0)


def _draw(config: ReservoirConfig, attempt: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([config.seed, attempt])
    shape_in = (config.n_res, config.input_width)
    shape_res = (config.n_res, config.n_res)
    if config.value_domain == COMPLEX:
        # Uniform over the unit disk: isotropic in phase, no preferred axis.
        def disk(shape):
            radius = np.sqrt(rng.uniform(size=shape))
            theta = rng.uniform(0.0, 2.0 * np.pi, size=shape)
            return radius * np.exp(1j * theta)

        return disk(shape_in), disk(shape_res)
    w_in = rng.uniform(-1.0, 1.0, size=shape_in).astype(np.complex128)
    w_res = rng.uniform(-1.0, 1.0, size=shape_res).astype(np.complex128)
    return w_in, w_res


def init_weights(config: ReservoirConfig) -> ReservoirWeights:
    """Draw seeded weights and pin the recurrent spectral radius.

    The recurrent matrix is rescaled to ``init_spectral_radius`` and then
    normalized to ``desired_spectral_radius``.  A degenerate all-zero draw is
    redrawn with an incremented sub-seed and reported in the log.
    """
    for attempt in range(16):
        w_in, w_res = _draw(config, attempt)
        radius = cxnum.max_eigval_magnitude(w_res)
        if not np.any(w_in) or not np.any(w_res) or radius == 0.0:
            log.warning(
                "degenerate weight draw for seed=%s (attempt %d); redrawing",
                config.seed,
                attempt,
            )
            continue
        w_res = w_res * (config.init_spectral_radius / radius)
        w_res = normalize_spectral(w_res, config.desired_spectral_radius)
        return ReservoirWeights(w_in=w_in, w_res=np.ascontiguousarray(w_res))
    raise RuntimeError(f"could not draw usable weights for seed={config.seed}")


def normalize_spectral(w, sigma_d: float) -> np.ndarray:
    """Rescale a square matrix so its spectral radius equals ``sigma_d``."""
    w = cxnum.as_cmatrix(w)
    if sigma_d <= 0.0:
        raise ValueError("target spectral radius must be positive")
    radius = cxnum.max_eigval_magnitude(w)
    if radius == 0.0:
        raise ValueError("cannot normalize a matrix with zero spectral radius")
    return w * (sigma_d / radius)


def activate(z):
    """Amplitude-saturating, phase-preserving activation tanh(|z|) e^{j arg z}.

    Total on scalars and arrays; the phase of zero is defined as zero, so
    activate(0) == 0 exactly.
    """
    arr = np.asarray(z, dtype=np.complex128)
    mag = np.abs(arr)
    scale = np.ones_like(mag)
    nonzero = mag > 0.0
    scale[nonzero] = np.tanh(mag[nonzero]) / mag[nonzero]
    out = arr * scale
    return out if out.ndim else complex(out)


def split_realpair(seq) -> np.ndarray:
    """Widen complex vectors to concatenated [real | imag] channels."""
    arr = np.asarray(seq, dtype=np.complex128)
    return np.concatenate([arr.real, arr.imag], axis=-1).astype(np.complex128)


def _check_sequence(config: ReservoirConfig, sequence) -> np.ndarray:
    seq = np.ascontiguousarray(np.asarray(sequence, dtype=np.complex128))
    if seq.ndim != 2 or seq.shape[1] != config.input_width:
        raise ValueError(
            f"sequence must be (steps, {config.input_width}), got {seq.shape}"
        )
    return seq


def step(
    weights: ReservoirWeights,
    state: ReservoirState,
    u,
    config: ReservoirConfig,
) -> ReservoirState:
    """Advance one step; identical arithmetic to run_collect."""
    u = cxnum.as_cvector(u)
    if u.shape[0] != config.input_width:
        raise ValueError(f"input length {u.shape[0]} != width {config.input_width}")
    _, final = run_collect(weights, config, u[None, :], [], initial=state)
    return final


def run_collect(
    weights: ReservoirWeights,
    config: ReservoirConfig,
    sequence,
    collect_at,
    initial: ReservoirState | None = None,
) -> tuple[np.ndarray, ReservoirState]:
    """Drive the network through ``sequence`` recording requested states.

    ``collect_at`` must be strictly increasing step indices below the
    sequence length (validated before any stepping); pass ``range(len(seq))``
    for a full trace.  Returns the recorded states (rows) and the final
    state; the state is carried across calls through ``initial``, so a split
    sequence chained through the returned state reproduces a one-shot run
    bit for bit.
    """
    seq = _check_sequence(config, sequence)
    steps = seq.shape[0]
    collect = np.asarray(list(collect_at), dtype=np.int64)
    if collect.size:
        if np.any(collect[1:] <= collect[:-1]):
            raise ValueError("collect_at indices must be strictly increasing")
        if collect[0] < 0 or collect[-1] >= steps:
            raise ValueError(
                f"collect_at out of range for sequence of {steps} steps"
            )
    if initial is None:
        initial = zero_state(config)
    x0 = np.ascontiguousarray(initial.x, dtype=np.complex128)
    if x0.shape != (config.n_res,):
        raise ValueError(f"state length {x0.shape} != n_res {config.n_res}")
    keep, gain = config.state_coefs
    states, x = drive(
        seq,
        np.ascontiguousarray(weights.w_in),
        np.ascontiguousarray(weights.w_res),
        x0,
        float(config.input_scale),
        float(keep),
        float(gain),
        config.mode,
        collect,
    )
    return states, ReservoirState(x, initial.t + steps)
