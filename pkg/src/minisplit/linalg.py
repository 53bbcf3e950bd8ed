"""Small deterministic linear-algebra kernels used throughout the package."""

import numpy as np

from .errors import NotRepresentableError

#: Power iteration caps; successive Rayleigh quotients must agree to this
#: relative tolerance before the iteration stops.
_POWER_MAX_ITERS = 10_000
_POWER_RTOL = 1e-12


def _power_start(k):
    # all-ones start with a tiny index-dependent tilt so the start vector is
    # never orthogonal to the dominant eigenvector of a structured matrix
    v = np.ones(k) + 1e-6 * np.arange(k)
    return v / np.linalg.norm(v)


def top_singular_triple(a, *, rtol=_POWER_RTOL, max_iters=_POWER_MAX_ITERS):
    """Dominant singular triple (sigma, u, v) of a 2-D array.

    Deterministic power iteration on the smaller Gram matrix of ``a``.
    Returns ``sigma >= 0`` and unit vectors with ``a @ v ~= sigma * u``.
    Loosened ``rtol``/``max_iters`` give cheap approximate pairs (enough for
    subgradient directions); the defaults give the singular value to full
    working accuracy.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a nonempty matrix")
    rows, cols = a.shape
    if rows <= cols:
        gram = a @ a.T
        q = _power_start(rows)
    else:
        gram = a.T @ a
        q = _power_start(cols)

    rho = q @ (gram @ q)
    for _ in range(max_iters):
        w = gram @ q
        norm = np.linalg.norm(w)
        if norm == 0.0:
            rho = 0.0
            break
        q = w / norm
        rho_next = q @ (gram @ q)
        if abs(rho_next - rho) <= rtol * max(abs(rho_next), 1e-30):
            rho = rho_next
            break
        rho = rho_next

    sigma = np.sqrt(max(rho, 0.0))
    if rows <= cols:
        u = q
        av = a.T @ u
        v = av / np.linalg.norm(av) if np.linalg.norm(av) > 0 else np.zeros(cols)
    else:
        v = q
        au = a @ v
        u = au / np.linalg.norm(au) if np.linalg.norm(au) > 0 else np.zeros(rows)
    return sigma, u, v


def spectral_norm(a):
    """Largest singular value of ``a`` (deterministic power iteration)."""
    sigma, _, _ = top_singular_triple(a)
    return sigma


def consensus_variance(x):
    """Mean squared deviation of the blocks of ``x`` from their average.

    ``x`` is an (n, d) array of n points; returns (1/n) sum_i ||x_i - mean||^2.
    Zero exactly when all blocks agree.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xbar = x.mean(axis=0)
    diff = x - xbar
    return float(np.sum(diff * diff) / x.shape[0])


def psd_factor(a, *, tol=1e-8, ref=None, label="matrix"):
    """Factor a symmetric PSD matrix as ``B @ B.T`` with B of full column rank.

    Tolerances scale with ``max(||a||, ref)``; pass ``ref`` when ``a`` is a
    residual of larger matrices so floating-point noise around zero is still
    accepted. Eigenvalues below the scaled ``-tol`` raise
    :class:`NotRepresentableError`; small negative ones are clamped to zero
    and their columns dropped, so ``B`` has one column per strictly positive
    eigenvalue.
    """
    a = np.asarray(a, dtype=float)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    scale = max(scale, float(ref) if ref is not None else 0.0)
    if scale == 0.0:
        return np.zeros((a.shape[0], 0))
    if not np.allclose(a, a.T, atol=1e-12 * max(scale, 1.0)):
        raise NotRepresentableError(f"{label} is not symmetric")
    vals, vecs = np.linalg.eigh((a + a.T) / 2.0)
    if vals[0] < -tol * scale:
        raise NotRepresentableError(
            f"{label} has negative eigenvalue {vals[0]:.3e}; no PSD factorization"
        )
    keep = vals > tol * scale
    return vecs[:, keep] * np.sqrt(vals[keep])
