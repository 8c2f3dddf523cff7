"""Affine-invariant geometry of SPD matrices and their products.

A point is a :class:`ProductPoint` ``(A, A_1, ..., A_K)``. With tag ``"M"`` it
lives on the plain product of SPD cones; with tag ``"SM"`` every matrix is
constrained to unit determinant, which is a totally geodesic submanifold, so
the exponential map, geodesics and distance are shared and only the tangent
projection and retraction differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NotPositiveDefinite
from .spd import (
    check_spd,
    expm,
    invsqrtm,
    logdet,
    logm,
    sqrtm,
    symmetrize,
)

MANIFOLD_TAGS = ("M", "SM")
UNIT_DET_TOL = 1e-9


@dataclass(frozen=True)
class ProductPoint:
    center: np.ndarray
    classes: tuple
    tag: str = "M"

    def __post_init__(self):
        if self.tag not in MANIFOLD_TAGS:
            raise InvalidInput(f"unknown manifold tag {self.tag!r}")
        center = np.asarray(self.center, dtype=float)
        classes = tuple(np.asarray(Ak, dtype=float) for Ak in self.classes)
        p = center.shape[0]
        for Ak in classes:
            if Ak.shape != center.shape:
                raise InvalidInput("all matrices of a point must share one shape")
        if center.ndim != 2 or center.shape != (p, p):
            raise InvalidInput(f"expected square matrices, got {center.shape}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "classes", classes)

    @property
    def p(self) -> int:
        return self.center.shape[0]

    @property
    def K(self) -> int:
        return len(self.classes)

    def matrices(self):
        return (self.center, *self.classes)

    def validate(self):
        """Raise unless every component is SPD (and unit-det on SM)."""
        for M in self.matrices():
            check_spd(M)
            if self.tag == "SM":
                det = np.exp(logdet(M))
                if abs(det - 1.0) > UNIT_DET_TOL:
                    raise InvalidInput(f"SM point has determinant {det!r}")
        return self


@dataclass(frozen=True)
class ProductTangent:
    center: np.ndarray
    classes: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(
            self, "classes", tuple(np.asarray(c, dtype=float) for c in self.classes)
        )

    def matrices(self):
        return (self.center, *self.classes)

    def __mul__(self, alpha):
        return ProductTangent(alpha * self.center, tuple(alpha * c for c in self.classes))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        return ProductTangent(
            self.center + other.center,
            tuple(a + b for a, b in zip(self.classes, other.classes)),
        )

    def __sub__(self, other):
        return self + (-other)


def point_from(matrices: Sequence, tag="M") -> ProductPoint:
    center, *classes = matrices
    return ProductPoint(center, tuple(classes), tag)


def tangent_from(matrices: Sequence) -> ProductTangent:
    center, *classes = matrices
    return ProductTangent(center, tuple(classes))


def _ambient(theta: ProductPoint, xi):
    mats = xi.matrices() if isinstance(xi, ProductTangent) else tuple(xi)
    if len(mats) != theta.K + 1:
        raise InvalidInput(f"expected {theta.K + 1} matrices, got {len(mats)}")
    for M in mats:
        if np.shape(M) != theta.center.shape:
            raise InvalidInput("tangent/point dimension mismatch")
    return mats


def zero_tangent(theta: ProductPoint) -> ProductTangent:
    z = np.zeros_like(theta.center)
    return ProductTangent(z, tuple(z.copy() for _ in theta.classes))


# --- single-matrix kernels ----------------------------------------------------


def spd_inner(A, xi, eta) -> float:
    Ainv_xi = np.linalg.solve(A, xi)
    Ainv_eta = np.linalg.solve(A, eta)
    return float(np.sum(Ainv_xi * Ainv_eta.T))


def spd_exp(A, xi):
    """``A expm(A^{-1} xi)`` computed in the symmetric congruence form."""
    A_half = sqrtm(A)
    A_ihalf = invsqrtm(A)
    return symmetrize(A_half @ expm(A_ihalf @ xi @ A_ihalf) @ A_half)


def spd_log(A, B):
    """Riemannian logarithm: the tangent vector at ``A`` pointing to ``B``."""
    A_half = sqrtm(A)
    A_ihalf = invsqrtm(A)
    return symmetrize(A_half @ logm(A_ihalf @ B @ A_ihalf) @ A_half)


def spd_retract(A, xi):
    with np.errstate(over="ignore", invalid="ignore"):
        R = symmetrize(A + xi + 0.5 * xi @ np.linalg.solve(A, xi))
    try:
        return check_spd(R, "retraction")
    except InvalidInput as exc:  # non-finite entries after an oversized step
        raise NotPositiveDefinite(f"retraction failed: {exc}") from exc


def unit_det(M):
    """Rescale an SPD matrix to determinant one."""
    p = M.shape[0]
    return M / np.exp(logdet(M) / p)


def _generalized_eig(A, B):
    """Eigenpairs of ``A^{-1} B`` with ``V.T @ A @ V = I`` (both SPD).

    Avoids forming ``A^{-1/2} B A^{-1/2}`` explicitly, whose eigenvalue spread
    is the product of the two condition numbers.
    """
    A = check_spd(A, "A")
    B = check_spd(B, "B")
    if A.shape != B.shape:
        raise InvalidInput("arguments differ in dimension")
    w, V = scipy.linalg.eigh(B, A)
    if w[0] <= 0:
        raise NotPositiveDefinite("generalized eigenvalue is not positive", eigenvalue=float(w[0]))
    return w, V


def geodesic(A, B, t: float):
    """Point at parameter ``t`` on the geodesic from ``A`` (t=0) to ``B`` (t=1).

    Equals ``A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}``; evaluated as
    ``A V diag(w^t) V^T A`` from the generalized eigenpairs of ``(B, A)``.
    """
    if t == 0:
        return check_spd(A, "A")
    if t == 1:
        return check_spd(B, "B")
    w, V = _generalized_eig(A, B)
    AV = np.asarray(A, dtype=float) @ V
    return symmetrize((AV * w ** t) @ AV.T)


def riemannian_distance(A, B) -> float:
    """Affine-invariant distance ``||logm(A^{-1/2} B A^{-1/2})||_F``."""
    w, _ = _generalized_eig(A, B)
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def sq_distance_egrad(C, B):
    """Euclidean gradient in ``B`` of ``d_R(C, B)**2``.

    The Riemannian gradient is ``-2 Log_B(C)``; mapping it back through the
    metric gives ``-2 B^{-1/2} logm(B^{-1/2} C B^{-1/2}) B^{-1/2}``, which
    equals ``-2 V diag(log w) V^T`` for the generalized eigenpairs of ``(C, B)``.
    """
    w, V = _generalized_eig(B, C)
    return symmetrize(-2.0 * (V * np.log(w)) @ V.T)


# --- product-manifold operations ----------------------------------------------


def inner(theta: ProductPoint, xi, eta) -> float:
    """Affine-invariant metric summed over all components."""
    xs = _ambient(theta, xi)
    es = _ambient(theta, eta)
    return sum(spd_inner(A, x, e) for A, x, e in zip(theta.matrices(), xs, es))


def norm(theta: ProductPoint, xi) -> float:
    return float(np.sqrt(max(inner(theta, xi, xi), 0.0)))


def project_tangent(theta: ProductPoint, ambient) -> ProductTangent:
    """Orthogonal projection of ambient matrices onto the tangent space.

    On ``M`` this symmetrizes each component; on ``SM`` it additionally removes
    the component along ``A`` so that ``Tr(A^{-1} xi) = 0``.
    """
    mats = _ambient(theta, ambient)
    out = []
    p = theta.p
    for A, X in zip(theta.matrices(), mats):
        X = symmetrize(X)
        if theta.tag == "SM":
            X = X - (np.trace(np.linalg.solve(A, X)) / p) * A
            X = symmetrize(X)
        out.append(X)
    return tangent_from(out)


def exp_map(theta: ProductPoint, xi) -> ProductPoint:
    mats = _ambient(theta, xi)
    out = [spd_exp(A, X) for A, X in zip(theta.matrices(), mats)]
    if theta.tag == "SM":
        # exact on the submanifold; the rescale only removes rounding drift
        out = [unit_det(M) for M in out]
    return point_from(out, theta.tag)


def retract(theta: ProductPoint, xi) -> ProductPoint:
    """Second-order retraction ``A + xi + xi A^{-1} xi / 2`` (det-normalized on SM).

    Raises :class:`NotPositiveDefinite` if a component leaves the SPD cone,
    which the optimizer treats as a rejected step.
    """
    mats = _ambient(theta, xi)
    out = [spd_retract(A, X) for A, X in zip(theta.matrices(), mats)]
    if theta.tag == "SM":
        out = [unit_det(M) for M in out]
    return point_from(out, theta.tag)


def egrad_to_rgrad(theta: ProductPoint, egrad) -> ProductTangent:
    mats = _ambient(theta, egrad)
    return project_tangent(theta, [A @ G @ A for A, G in zip(theta.matrices(), mats)])


def product_geodesic(a: ProductPoint, b: ProductPoint, t: float) -> ProductPoint:
    if a.K != b.K or a.p != b.p:
        raise InvalidInput("geodesic endpoints live on different manifolds")
    out = [geodesic(A, B, t) for A, B in zip(a.matrices(), b.matrices())]
    if a.tag == "SM":
        out = [unit_det(M) for M in out]
    return point_from(out, a.tag)


def product_distance(a: ProductPoint, b: ProductPoint) -> float:
    return float(
        np.sqrt(sum(riemannian_distance(A, B) ** 2 for A, B in zip(a.matrices(), b.matrices())))
    )
