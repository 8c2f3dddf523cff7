"""Exit criteria. Run with ``pytest tests/test_acceptance.py -s`` to see the report.

Each check prints one ``[PASS]``/``[FAIL]`` line and then asserts.
"""

import time

import numpy as np
import pytest

from rgml import manifold as mf
from rgml.baselines import SyntheticSpec, gmml, synth_generate
from rgml.bench import ExperimentConfig, cross_validate, evaluate, knn_predict, stratified_split
from rgml.costs import PairDifferences, RgmlParams, build_pairs, class_scatter, rgml_cost, rgml_egrad, tyler_loss
from rgml.data import load_dataset
from rgml.optim import SolverOptions, default_init, fit_rgml, minimize
from rgml.spd import invsqrtm

from conftest import DATA, random_point, random_spd, random_vectors

WORKERS = 1
_CACHE = {}


def report(label, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else ""))
    return ok


def table_error(dataset, method, rate):
    key = (dataset, method, rate)
    if key not in _CACHE:
        cfg = ExperimentConfig(str(DATA / f"{dataset}.csv"), "class", method,
                               mislabel_rate=rate, repeats=200, seed=0)
        rec = cross_validate(cfg, workers=WORKERS)
        assert rec.failed_repeats == 0
        _CACHE[key] = rec.mean_error_pct
    return _CACHE[key]


# --- 1. benchmark errors ---------------------------------------------------------------------------

TABLE_TARGETS = [
    ("wine", "rgml_gaussian", 0.0, 2.07, 1.5),
    ("wine", "rgml_tyler", 0.0, 2.12, 1.5),
    ("wine", "gmml", 0.0, 2.16, 1.5),
    ("wine", "euclidean", 0.0, 30.12, 2.0),
    ("wine", "scm", 0.0, 10.03, 2.0),
    ("iris", "euclidean", 0.0, 3.93, 1.5),
    ("iris", "rgml_gaussian", 0.0, 2.47, 1.5),
]


@pytest.mark.parametrize("dataset,method,rate,target,tol", TABLE_TARGETS)
def test_c1_table_row(dataset, method, rate, target, tol):
    err = table_error(dataset, method, rate)
    ok = abs(err - target) <= tol
    report(f"C1 {dataset} {method} {rate:.0%}", ok, f"{err:.2f}% (target {target} +/- {tol})")
    assert ok


def test_c1_wine_robustness_ordering():
    tyler = table_error("wine", "rgml_tyler", 0.10)
    gauss = table_error("wine", "rgml_gaussian", 0.10)
    ok = tyler <= gauss + 0.5
    report("C1 wine 10% tyler <= gaussian + 0.5", ok, f"tyler {tyler:.2f}%, gaussian {gauss:.2f}%")
    assert ok


def test_c1_wine_monotone_degradation():
    """Mean error non-decreasing in the mislabel rate (0.5-point slack)."""
    rates = (0.0, 0.05, 0.10, 0.15)
    all_ok = True
    for method in ("euclidean", "scm", "gmml", "rgml_gaussian", "rgml_tyler"):
        errs = [table_error("wine", method, r) for r in rates]
        ok = all(b >= a - 0.5 for a, b in zip(errs, errs[1:]))
        report(f"C1 wine {method} monotone in mislabel rate", ok,
               " / ".join(f"{e:.2f}" for e in errs))
        all_ok &= ok
    assert all_ok


# --- 2. convergence on Wine -------------------------------------------------------------


@pytest.mark.parametrize("cost", ["gaussian", "tyler"])
def test_c2_wine_convergence(cost):
    ds = load_dataset(DATA / "wine.csv", "class")
    n = 75 * ds.K * (ds.K - 1)
    pairs = build_pairs(ds, n, n, 0)
    params = RgmlParams(0.05, cost)
    start = time.perf_counter()
    _, trace = fit_rgml(pairs, params, SolverOptions(max_iters=40, grad_norm_tol=1e-4))
    elapsed = time.perf_counter() - start
    monotone = bool(np.all(np.diff(trace.costs) <= 0))
    reached = trace.grad_norms.min() <= 1e-4
    ok = monotone and reached and trace.iterations <= 40 and elapsed < 10
    report(f"C2 wine h_{cost[0].upper()} convergence", ok,
           f"{trace.iterations} iterations, final grad norm {trace.grad_norms[-1]:.2e}, "
           f"monotone={monotone}, {elapsed:.2f}s")
    assert ok


# --- 3. gradient correctness ------------------------------------------------------------


@pytest.mark.parametrize("cost,tag", [("gaussian", "M"), ("tyler", "SM")])
@pytest.mark.parametrize("p", [3, 8])
@pytest.mark.parametrize("K", [2, 4])
def test_c3_gradient_finite_differences(cost, tag, p, K):
    rng = np.random.default_rng(1000 * p + 10 * K + len(cost))
    per_class = [random_vectors(rng, 20 + 3 * k, p, random_spd(rng, p)) for k in range(K)]
    pairs = PairDifferences.from_vectors(per_class, random_vectors(rng, 10, p))
    params = RgmlParams(0.05, cost)
    h = 1e-4
    worst = 0.0
    for _ in range(10):
        theta = random_point(rng, p, K, tag)
        g = mf.egrad_to_rgrad(theta, rgml_egrad(theta, pairs, params))
        for _ in range(20):
            xi = mf.project_tangent(theta, [rng.standard_normal((p, p)) for _ in range(K + 1)])
            f = lambda t: rgml_cost(mf.retract(theta, t * xi), pairs, params)
            fd = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
            an = mf.inner(theta, g, xi)
            worst = max(worst, abs(fd - an) / abs(an))
    ok = worst <= 1e-5
    report(f"C3 gradient {cost} p={p} K={K}", ok, f"max relative error {worst:.2e}")
    assert ok


# --- 4. closed-form oracle ----------------------------------------------------------------


def test_c4_gmml_closed_form():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10):
        S, D = random_spd(rng, 6, cond=20), random_spd(rng, 6, cond=20)
        cost = lambda th: np.trace(np.linalg.solve(th.center, S)) + np.trace(th.center @ D)

        def egrad(th):
            Ai = np.linalg.inv(th.center)
            return [D - Ai @ S @ Ai]

        theta, _ = minimize(cost, egrad, mf.ProductPoint(np.eye(6), ()),
                            SolverOptions(grad_norm_tol=1e-8, max_iters=1000))
        worst = max(worst, mf.riemannian_distance(theta.center, gmml(S, D, 0.5)))
    ok = worst <= 1e-5
    report("C4 Riemannian GD vs GMML closed form", ok, f"max d_R {worst:.2e}")
    assert ok


# --- 5. geometry suite -------------------------------------------------------------------


def test_c5_geometry():
    rng = np.random.default_rng(5)
    results = {}

    inv = 0.0
    for _ in range(20):
        A, B = random_spd(rng, 5), random_spd(rng, 5)
        C = rng.standard_normal((5, 5))
        inv = max(inv, abs(mf.riemannian_distance(C @ A @ C.T, C @ B @ C.T) - mf.riemannian_distance(A, B)))
    results["affine invariance"] = (inv <= 1e-8, f"{inv:.1e}")

    geo = 0.0
    for _ in range(20):
        A, B = random_spd(rng, 5), random_spd(rng, 5)
        d = mf.riemannian_distance(A, B)
        geo = max(geo, np.abs(mf.geodesic(A, B, 0) - A).max(), np.abs(mf.geodesic(A, B, 1) - B).max())
        for t in (0.25, 0.5, 0.8):
            geo = max(geo, abs(mf.riemannian_distance(A, mf.geodesic(A, B, t)) - t * d))
    results["geodesic identities"] = (geo <= 1e-8, f"{geo:.1e}")

    ratios = []
    for tag in ("M", "SM"):
        for _ in range(5):
            theta = random_point(rng, 4, 2, tag)
            xi = mf.project_tangent(theta, [rng.standard_normal((4, 4)) for _ in range(3)])

            def gap(t):
                r, e = mf.retract(theta, t * xi), mf.exp_map(theta, t * xi)
                return np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(r.matrices(), e.matrices())))

            ratios.append(gap(0.02) / gap(0.01))
    results["retraction third order"] = (
        all(6 <= r <= 10 for r in ratios), f"halving ratios in [{min(ratios):.2f}, {max(ratios):.2f}]"
    )

    per_class = [random_vectors(rng, 30, 4, random_spd(rng, 4)) for _ in range(3)]
    pairs = PairDifferences.from_vectors(per_class)
    params = RgmlParams(0.05, "tyler")
    theta = default_init(pairs, "SM")
    worst_det = 0.0
    for _ in range(100):
        theta, _ = minimize(lambda th: rgml_cost(th, pairs, params),
                            lambda th: rgml_egrad(th, pairs, params), theta,
                            SolverOptions(max_iters=1, optimism=None, initial_step=0.3))
        worst_det = max(worst_det, max(abs(np.linalg.det(M) - 1) for M in theta.matrices()))
    results["SM determinant over 100 steps"] = (worst_det < 1e-8, f"max |det-1| {worst_det:.1e}")

    for name, (ok, detail) in results.items():
        report(f"C5 {name}", ok, detail)
    assert all(ok for ok, _ in results.values())


# --- 6. g-convexity ----------------------------------------------------------------------


def test_c6_midpoint_convexity():
    rng = np.random.default_rng(6)
    per_class = [random_vectors(rng, 25, 4, random_spd(rng, 4)) for _ in range(3)]
    pairs = PairDifferences.from_vectors(per_class)
    all_ok = True
    for cost, tag in (("gaussian", "M"), ("tyler", "SM")):
        params = RgmlParams(0.05, cost)
        h = lambda th: rgml_cost(th, pairs, params)
        worst = -np.inf
        for _ in range(100):
            a = random_point(rng, 4, 3, tag, cond=50)
            b = random_point(rng, 4, 3, tag, cond=50)
            worst = max(worst, h(mf.product_geodesic(a, b, 0.5)) - 0.5 * (h(a) + h(b)))
        ok = worst <= 1e-9
        report(f"C6 midpoint convexity h_{cost[0].upper()}", ok, f"max gap {worst:.3e}")
        all_ok &= ok
    assert all_ok


def test_c6_two_start_agreement():
    rng = np.random.default_rng(66)
    ds = load_dataset(DATA / "iris.csv", "class")
    pairs = build_pairs(ds, 450, 450, 1)
    all_ok = True
    for cost, tag in (("gaussian", "M"), ("tyler", "SM")):
        params = RgmlParams(0.05, cost)
        opts = SolverOptions(grad_norm_tol=1e-8, max_iters=3000)
        _, t1 = fit_rgml(pairs, params, opts)
        _, t2 = fit_rgml(pairs, params, opts, theta0=random_point(rng, ds.p, ds.K, tag))
        rel = abs(t1.costs[-1] - t2.costs[-1]) / abs(t1.costs[-1])
        ok = rel <= 1e-6
        report(f"C6 two-start agreement h_{cost[0].upper()}", ok, f"relative cost gap {rel:.1e}")
        all_ok &= ok
    assert all_ok


# --- 7. covariance view ---------------------------------------------------------------------


def test_c7_pair_scatter_expectation():
    rng = np.random.default_rng(7)
    p, K = 5, 3
    spec = SyntheticSpec([rng.standard_normal(p) * 3 for _ in range(K)],
                         [random_spd(rng, p, cond=10) for _ in range(K)], 3000)
    ds = synth_generate(spec, 0)
    pairs = build_pairs(ds, 10_000, 10, 1)
    target = sum(w * C for w, C in zip(pairs.weights, spec.covariances))
    err = np.linalg.norm(0.5 * class_scatter(pairs).S - target) / np.linalg.norm(target)
    ok = err <= 0.05
    report("C7 half pair scatter vs mean class covariance", ok, f"relative error {err:.3f}")
    assert ok


# --- 8. scale invariances -----------------------------------------------------------------


def test_c8_scale_invariances():
    rng = np.random.default_rng(8)
    A = random_spd(rng, 6)
    X = random_vectors(rng, 40, 6)
    gap = max(abs(tyler_loss(a * A, X) - tyler_loss(A, X)) for a in (1e-3, 1e3))
    ok_tyler = gap <= 1e-10
    report("C8 Tyler loss scale invariance", ok_tyler, f"max gap {gap:.1e}")

    ds = load_dataset(DATA / "wine.csv", "class")
    tr, te = stratified_split(ds.labels, 0.5, rng)
    train, test = ds.subset(tr), ds.subset(te)
    M = np.cov(train.features.T)
    preds = lambda B: knn_predict(train.features @ invsqrtm(B), train.labels,
                                  test.features @ invsqrtm(B), 5)
    base = preds(M)
    ok_knn = all(np.array_equal(preds(c * M), base) for c in (1e-3, 0.37, 5.0, 1e3))
    ok_knn &= all(evaluate(c * M, train, test) == evaluate(M, train, test) for c in (1e-3, 1e3))
    report("C8 k-NN predictions invariant to A -> cA", ok_knn)
    assert ok_tyler and ok_knn


# --- 9. determinism -------------------------------------------------------------------------


@pytest.mark.parametrize("method", ["rgml_tyler", "gmml"])
def test_c9_determinism(method):
    cfg = ExperimentConfig(str(DATA / "iris.csv"), "class", method, mislabel_rate=0.1,
                           repeats=6, seed=123)
    a = cross_validate(cfg, timing=False).to_json()
    b = cross_validate(cfg, timing=False).to_json()
    c = cross_validate(cfg, workers=3, timing=False).to_json()
    ok = a == b == c
    report(f"C9 byte-identical JSON ({method}, sequential x2 + 3 workers)", ok)
    assert ok
