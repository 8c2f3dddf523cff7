"""Symmetric-matrix kernels built on a single eigendecomposition backend.

Every matrix function used elsewhere in the package (log, exp, square roots,
powers, inverse) goes through :func:`spd_map`, which diagonalises the input
with ``numpy.linalg.eigh`` and maps the eigenvalues.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

# Smallest admissible eigenvalue relative to the largest one.
SPD_REL_TOL = 1e-12

_POSITIVE_TAGS = {"log", "sqrt", "inv_sqrt", "inv", "pow"}


class EigenPair(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def symmetrize(M) -> np.ndarray:
    """Return ``(M + M.T) / 2`` as a float array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    return 0.5 * (M + M.T)


def _check_finite(M):
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")


def sym_eig(M) -> EigenPair:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input is symmetrized first so that only the numerically symmetric part
    is decomposed.
    """
    M = symmetrize(M)
    _check_finite(M)
    values, vectors = np.linalg.eigh(M)
    return EigenPair(values, vectors)


def check_spd(M, name="matrix") -> np.ndarray:
    """Return the symmetrized matrix, raising unless it is SPD."""
    values = sym_eig(M).values
    _require_positive(values, name)
    return symmetrize(M)


def is_spd(M) -> bool:
    try:
        check_spd(M)
    except (NotPositiveDefinite, InvalidInput):
        return False
    return True


def _require_positive(values, name="matrix"):
    lo, hi = values[0], values[-1]
    if hi <= 0 or lo <= SPD_REL_TOL * hi:
        raise NotPositiveDefinite(
            f"{name} is not positive definite (smallest eigenvalue {lo:.3e}, "
            f"largest {hi:.3e})",
            eigenvalue=float(lo),
        )


def _scalar_function(f, t) -> Callable[[np.ndarray], np.ndarray]:
    if f == "log":
        return np.log
    if f == "exp":
        return np.exp
    if f == "sqrt":
        return np.sqrt
    if f == "inv_sqrt":
        return lambda x: 1.0 / np.sqrt(x)
    if f == "inv":
        return lambda x: 1.0 / x
    if f == "pow":
        if t is None:
            raise InvalidInput("pow requires an exponent t")
        return lambda x: x ** t
    raise InvalidInput(f"unknown matrix function {f!r}")


def spd_map(M, f: Union[str, Callable], t: float | None = None) -> np.ndarray:
    """Apply a scalar function to the eigenvalues of a symmetric matrix.

    Parameters
    ----------
    M : ndarray, shape (p, p)
        Symmetric input. Must be SPD for every tag except ``"exp"``.
    f : {"log", "exp", "sqrt", "inv_sqrt", "pow", "inv"}
        Which function to apply.
    t : float, optional
        Exponent for ``f="pow"``.

    Returns
    -------
    ndarray, shape (p, p)
        ``V diag(f(w)) V.T`` where ``M = V diag(w) V.T``.

    Raises
    ------
    NotPositiveDefinite
        If ``f`` requires positivity and ``M`` is not SPD.
    """
    func = _scalar_function(f, t)
    w, V = sym_eig(M)
    if f in _POSITIVE_TAGS:
        _require_positive(w)
    if f == "pow" and t == 0:
        return np.eye(len(w))
    out = (V * func(w)) @ V.T
    return 0.5 * (out + out.T)


def logm(M):
    return spd_map(M, "log")


def expm(M):
    return spd_map(M, "exp")


def sqrtm(M):
    return spd_map(M, "sqrt")


def invsqrtm(M):
    return spd_map(M, "inv_sqrt")


def invm(M):
    return spd_map(M, "inv")


def powm(M, t):
    return spd_map(M, "pow", t)


def ridge(M, scale=1e-8) -> np.ndarray:
    """Add ``scale * Tr(M)/p * I`` when ``M`` is not SPD, else return ``M``.

    Used to lift rank-deficient scatter matrices into the SPD cone.
    """
    M = symmetrize(M)
    if is_spd(M):
        return M
    p = M.shape[0]
    tr = np.trace(M)
    shift = scale * tr / p if tr > 0 else scale
    return M + shift * np.eye(p)


def logdet(M) -> float:
    sign, val = np.linalg.slogdet(M)
    if sign <= 0:
        raise NotPositiveDefinite("determinant is not positive")
    return float(val)
