"""Compiled inner loop of the reservoir recurrence.

The state update is inherently sequential, so the whole drive runs inside a
single numba-compiled loop with a fixed scalar operation order.  That keeps
results bit-identical between one-shot runs, split-and-chain runs and
single-step calls, and makes the measured cost track the arithmetic
(n_res^2 work per step) instead of interpreter overhead.  No fastmath, no
internal parallelism.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from numba import types

MODE_COMPLEX = 0
MODE_REALPAIR = 1

# Weight matrices arrive read-only (they are frozen after construction), so
# the array arguments are declared readonly; outputs are allocated inside.
_C2_RO = types.Array(types.complex128, 2, "C", readonly=True)
_C1_RO = types.Array(types.complex128, 1, "C", readonly=True)
_I1_RO = types.Array(types.int64, 1, "C", readonly=True)
_SIGNATURE = types.Tuple((types.complex128[:, ::1], types.complex128[::1]))(
    _C2_RO, _C2_RO, _C2_RO, _C1_RO,
    types.float64, types.float64, types.float64, types.int64, _I1_RO,
)


@numba.njit(_SIGNATURE, cache=True)
def drive(seq, w_in, w_res, x0, input_scale, keep, gain, mode, collect):
    """Run the leaky update over ``seq`` and record states at ``collect``.

    seq      (T, width)  input vectors, one per step
    w_in     (n, width)  input weights
    w_res    (n, n)      recurrent weights
    x0       (n,)        initial state (copied, not mutated)
    keep     scalar multiplying the previous state
    gain     scalar multiplying the new activation
    mode     MODE_COMPLEX: tanh(|z|) e^{j arg z};  MODE_REALPAIR: tanh(Re z)
    collect  strictly increasing step indices to record

    Returns (recorded states (len(collect), n), final state (n,)).
    """
    steps, width = seq.shape
    n = w_res.shape[0]
    x = x0.copy()
    z = np.empty(n, np.complex128)
    su = np.empty(width, np.complex128)
    out = np.empty((collect.size, n), np.complex128)
    ci = 0
    for t in range(steps):
        for k in range(width):
            su[k] = input_scale * seq[t, k]
        for i in range(n):
            # Four independent partial sums keep the recurrent product
            # throughput-bound at every reservoir size; the summation order
            # is fixed, so results stay bit-reproducible.
            s0 = 0.0 + 0.0j
            s1 = 0.0 + 0.0j
            s2 = 0.0 + 0.0j
            s3 = 0.0 + 0.0j
            for k in range(width):
                s0 = s0 + w_in[i, k] * su[k]
            k = 0
            while k + 4 <= n:
                s0 = s0 + w_res[i, k] * x[k]
                s1 = s1 + w_res[i, k + 1] * x[k + 1]
                s2 = s2 + w_res[i, k + 2] * x[k + 2]
                s3 = s3 + w_res[i, k + 3] * x[k + 3]
                k += 4
            while k < n:
                s0 = s0 + w_res[i, k] * x[k]
                k += 1
            z[i] = (s0 + s1) + (s2 + s3)
        for i in range(n):
            if mode == MODE_COMPLEX:
                zr = z[i].real
                zi = z[i].imag
                m = math.sqrt(zr * zr + zi * zi)
                if m == 0.0:
                    a = 0.0 + 0.0j
                else:
                    a = z[i] * (math.tanh(m) / m)
            else:
                a = complex(math.tanh(z[i].real), 0.0)
            x[i] = keep * x[i] + gain * a
        if ci < collect.size and collect[ci] == t:
            for i in range(n):
                out[ci, i] = x[i]
            ci += 1
    return out, x
