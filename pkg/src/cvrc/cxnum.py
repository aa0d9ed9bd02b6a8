"""Minimal dense complex linear algebra used by the reservoir toolkit.

Everything runs on contiguous ``complex128`` arrays (pairs of 64-bit floats;
the readout solve at lambda ~ 1e-12 is too ill-conditioned for 32-bit).  The
heavy lifting is delegated to numpy/scipy; this module pins down the exact
contracts the rest of the package relies on: shape validation, the ridge
normal-equation solve via Cholesky (never an explicit inverse), and a
deterministic spectral-radius estimator.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "SolverFailure",
    "NoConvergence",
    "as_cmatrix",
    "as_cvector",
    "matmul",
    "hermitian",
    "solve_regularized",
    "spectral_radius",
    "max_eigval_magnitude",
]

# Fixed start-vector seed so the radius estimate is a pure function of its input.
_START_SEED = 0x5EED


class SolverFailure(Exception):
    """The regularized Hermitian solve could not be factorized."""


class NoConvergence(Exception):
    """Spectral-radius iteration hit the iteration cap; carries the last estimate."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def as_cmatrix(a) -> np.ndarray:
    """Coerce to a 2-D complex128 matrix with at least one row and column."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m.shape}")
    return m


def as_cvector(v) -> np.ndarray:
    """Coerce to a 1-D complex128 vector of length >= 1."""
    u = np.asarray(v, dtype=np.complex128)
    if u.ndim != 1 or u.shape[0] < 1:
        raise ValueError(f"expected a 1-D vector of length >= 1, got shape {u.shape}")
    return u


def matmul(a, b) -> np.ndarray:
    """Complex matrix product a @ b with explicit dimension checking."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def hermitian(a) -> np.ndarray:
    """Hermitian (conjugate) transpose."""
    return as_cmatrix(a).conj().T


def solve_regularized(x, d, lam: float) -> np.ndarray:
    """Ridge solution ``((X^H X + lam I)^-1 X^H D)^T``.

    The inner Hermitian system is positive definite for lam > 0 and positive
    semidefinite otherwise; it is solved through a Cholesky factorization,
    never by forming an inverse.  The returned matrix stacks the trained
    output map and bias column when X carries a trailing ones column.

    Raises SolverFailure when the factorization breaks down (singular system
    at lam == 0); the message names the offending leading minor.
    """
    x = as_cmatrix(x)
    d = as_cmatrix(d)
    if x.shape[0] != d.shape[0]:
        raise ValueError(f"row mismatch: X has {x.shape[0]} rows, D has {d.shape[0]}")
    lam = float(lam)
    if lam < 0.0:
        raise ValueError(f"regularization must be nonnegative, got {lam}")

    xh = x.conj().T
    gram = xh @ x
    gram[np.diag_indices_from(gram)] += lam
    rhs = xh @ d
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
        params = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise SolverFailure(
            f"Cholesky factorization of X^H X + lam I failed (lam={lam:g}): {err}"
        ) from err
    return params.T.copy()


def spectral_radius(w, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest eigenvalue magnitude of a square matrix by block power iteration.

    A two-column orthonormal block is iterated (deterministic seeded start)
    and the radius read off the 2x2 Rayleigh projection; the block handles
    real-valued matrices whose dominant eigenvalues form a conjugate pair,
    where single-vector iteration cannot settle.  Convergence is certified
    by the subspace residual ||W Q - Q T||, which guards against spectra
    whose leading magnitudes tie beyond a pair; raises NoConvergence with
    the last estimate after ``max_iter``.
    """
    w = as_cmatrix(w)
    n, m = w.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {w.shape}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if n == 1:
        return float(abs(w[0, 0]))
    if not np.any(w):
        return 0.0

    rng = np.random.default_rng(_START_SEED)
    q = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    q, _ = np.linalg.qr(q)

    estimate = 0.0
    y = w @ q
    for _ in range(max_iter):
        scale = np.linalg.norm(y)
        if scale == 0.0 or not np.isfinite(scale):
            # Block landed in the nullspace (nilpotent w): radius is zero.
            return 0.0
        q, _ = np.linalg.qr(y)
        y = w @ q
        t = q.conj().T @ y
        evals, evecs = np.linalg.eig(t)
        lead = int(np.argmax(np.abs(evals)))
        mu = evals[lead]
        s = evecs[:, lead]
        estimate = float(abs(mu))
        # Certify through the Ritz residual ||W u - mu u|| with u = Q s;
        # W u is y @ s, so this costs no extra matrix product.
        residual = np.linalg.norm(y @ s - mu * (q @ s))
        if residual <= tol * max(1.0, estimate):
            return estimate
    raise NoConvergence(
        f"spectral radius did not converge in {max_iter} iterations "
        f"(last estimate {estimate:.12g})",
        estimate=estimate,
    )


def max_eigval_magnitude(w) -> float:
    """Exact spectral radius through a full eigensolve.

    Used where the power-iteration tolerance is not tight enough, e.g. the
    recurrent-weight normalization whose rescale must be idempotent to
    near machine precision.
    """
    w = as_cmatrix(w)
    if w.shape[0] != w.shape[1]:
        raise ValueError(f"matrix must be square, got {w.shape}")
    return float(np.abs(np.linalg.eigvals(w)).max())
