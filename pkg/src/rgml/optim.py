"""Riemannian gradient descent with Armijo backtracking on product SPD manifolds."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import manifold as mf
from .costs import PairDifferences, RgmlParams, class_scatter, rgml_cost, rgml_egrad
from .errors import InvalidInput, NotPositiveDefinite
from .spd import ridge

log = logging.getLogger(__name__)

STATUSES = ("converged", "max_iters", "line_search_failed")


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 200
    grad_norm_tol: float = 1e-6
    initial_step: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    min_step: float = 1e-12
    # Later iterations start the backtracking from
    # optimism * 2 * (previous decrease) / ||grad||^2; None keeps initial_step.
    optimism: Optional[float] = 2.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise InvalidInput("max_iters must be non-negative")
        for name in ("grad_norm_tol", "initial_step", "armijo_slope", "min_step"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise InvalidInput("armijo_shrink must lie in (0, 1)")
        if self.optimism is not None and not self.optimism > 0:
            raise InvalidInput("optimism must be positive or None")


class TraceRecord(NamedTuple):
    iter: int
    cost: float
    grad_norm: float
    step: float


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    status: str = "max_iters"

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    @property
    def costs(self):
        return np.array([r.cost for r in self.records])

    @property
    def grad_norms(self):
        return np.array([r.grad_norm for r in self.records])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TraceRecord._fields)
            for r in self.records:
                writer.writerow([r.iter, repr(r.cost), repr(r.grad_norm), repr(r.step)])


def _safe_cost(cost, theta):
    try:
        value = float(cost(theta))
    except (NotPositiveDefinite, np.linalg.LinAlgError, FloatingPointError):
        return np.inf
    return value if np.isfinite(value) else np.inf


def minimize(
    cost: Callable[[mf.ProductPoint], float],
    egrad: Callable,
    theta0: mf.ProductPoint,
    opts: SolverOptions | None = None,
):
    """Minimize ``cost`` by Riemannian gradient descent from ``theta0``.

    Parameters
    ----------
    cost : callable
        Maps a :class:`~rgml.manifold.ProductPoint` to a float.
    egrad : callable
        Euclidean gradient of ``cost``; returns ``K + 1`` matrices.
    theta0 : ProductPoint
        Feasible starting point; its tag selects ``M`` or ``SM`` geometry.
    opts : SolverOptions, optional

    Returns
    -------
    theta : ProductPoint
        Final (and lowest-cost) iterate.
    trace : SolverTrace
        Per-iteration cost, Riemannian gradient norm and accepted step.
    """
    opts = opts or SolverOptions()
    theta = theta0
    f = float(cost(theta))
    if not np.isfinite(f):
        raise InvalidInput("cost is not finite at the initial point")
    trace = SolverTrace()
    f_prev = None

    for it in range(opts.max_iters + 1):
        g = mf.egrad_to_rgrad(theta, egrad(theta))
        gn2 = mf.inner(theta, g, g)
        gn = float(np.sqrt(max(gn2, 0.0)))
        if it == 0:
            trace.records.append(TraceRecord(0, f, gn, 0.0))
        else:
            trace.records[-1] = trace.records[-1]._replace(grad_norm=gn)
        if gn <= opts.grad_norm_tol:
            trace.status = "converged"
            break
        if it == opts.max_iters:
            trace.status = "max_iters"
            break

        alpha = opts.initial_step
        if opts.optimism is not None and f_prev is not None and f_prev > f:
            guess = opts.optimism * 2.0 * (f_prev - f) / gn2
            if np.isfinite(guess) and guess > 0:
                alpha = guess

        accepted = None
        while alpha >= opts.min_step:
            try:
                candidate = mf.retract(theta, -alpha * g)
            except NotPositiveDefinite:
                alpha *= opts.armijo_shrink
                continue
            f_new = _safe_cost(cost, candidate)
            if f_new <= f - opts.armijo_slope * alpha * gn2:
                accepted = candidate
                break
            alpha *= opts.armijo_shrink

        if accepted is None:
            trace.status = "line_search_failed"
            log.debug("line search failed at iteration %d (grad norm %.3e)", it, gn)
            break
        theta, f_prev, f = accepted, f, f_new
        # grad_norm is filled in at the top of the next iteration
        trace.records.append(TraceRecord(it + 1, f, np.nan, alpha))

    return theta, trace


def default_init(pairs: PairDifferences, tag: str = "M") -> mf.ProductPoint:
    """Start every matrix at half the pooled within-class scatter."""
    if tag not in mf.MANIFOLD_TAGS:
        raise InvalidInput(f"unknown manifold tag {tag!r}")
    A0 = ridge(0.5 * class_scatter(pairs).S)
    if tag == "SM":
        A0 = mf.unit_det(A0)
    return mf.ProductPoint(A0, tuple(A0.copy() for _ in range(pairs.K)), tag)


def fit_rgml(
    pairs: PairDifferences,
    params: RgmlParams | None = None,
    opts: SolverOptions | None = None,
    theta0: mf.ProductPoint | None = None,
):
    """Minimize the RGML objective; returns ``(theta, trace)``."""
    params = params or RgmlParams()
    if theta0 is None:
        theta0 = default_init(pairs, params.manifold)
    return minimize(
        lambda th: rgml_cost(th, pairs, params),
        lambda th: rgml_egrad(th, pairs, params),
        theta0,
        opts,
    )
