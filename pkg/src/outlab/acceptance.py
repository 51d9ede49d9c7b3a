"""Acceptance catalog: each check runs at its stated size and tolerance.

Shared by ``outlab verify --suite acceptance`` and the test suite. Every
check returns a :class:`CriterionResult`; nothing here raises on a failed
check.
"""
from __future__ import annotations

import math
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .ensembles import (
    ATOM_KINDS,
    PerturbedModel,
    assemble_dense,
    mean_shift_factors,
    row_sum_projector,
    sample_iid_matrix,
    unit_ones_vector,
)
from .experiments import (
    ExperimentConfig,
    clt_passes,
    clt_summary,
    run_experiment,
    run_trials,
    summarize,
)
from .outlier import (
    WeinsteinDeterminant,
    char_poly_ratio_oracle,
    detect_outliers,
    outlier_eigenvector,
    spectral_radius_guard,
    weinstein_det,
)
from .stats import (
    circular_law_distance,
    esd_histogram,
    interlacing_check,
    kpoint_estimate,
    power_norm_ratio,
    spectral_radius,
)

SEED = 20260101


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.title}: {self.summary} ({self.seconds:.1f} s)"


# --------------------------------------------------------------------------


def oracle_equivalence(instances=100, points=10, seed=SEED):
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_hess = 0.0
    evaluated = skipped = 0
    trial = 0
    while evaluated < instances:
        trial += 1
        n = int(rng.integers(4, 61))
        k = int(rng.integers(1, 4))
        atom = ATOM_KINDS[int(rng.integers(len(ATOM_KINDS)))]
        X = sample_iid_matrix(n, atom, seed, trial)
        if spectral_radius_guard(X / math.sqrt(n), 0.2)[0] >= 1.4:
            skipped += 1
            continue
        A = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2 * n) * 3
        B = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / math.sqrt(2)
        model = PerturbedModel(X, A, B)
        hess = WeinsteinDeterminant(model)
        for _ in range(points):
            z = rng.uniform(1.5, 4.0) * np.exp(1j * rng.uniform(-math.pi, math.pi))
            ref = char_poly_ratio_oracle(model, z)
            tol = 1.0 + abs(ref)
            worst = max(worst, abs(weinstein_det(model, z) - ref) / tol)
            worst_hess = max(worst_hess, abs(hess(z) - ref) / tol)
        evaluated += 1
    ok = worst <= 1e-8 and worst_hess <= 1e-8
    return ok, (f"max scaled error {worst:.2e} (dense LU), {worst_hess:.2e} (Hessenberg) "
                f"over {instances * points} points"), {
        "max_scaled_error": worst, "max_scaled_error_hessenberg": worst_hess,
        "instances": instances, "guard_rejections": skipped}


def figure1(trials=20, seed=SEED):
    cfg = ExperimentConfig("fig1", trials=trials, master_seed=seed)
    records = run_trials(cfg)
    summ = summarize(cfg, records)["aggregate"]
    agree = [r.stats.get("solver_agreement") for r in records if not r.failed]
    all_agree = len(agree) == trials and all(a is not None and a <= 1e-6 for a in agree)
    frac = summ["fraction_matching_predictions"]
    ok = frac >= 0.9 and all_agree
    return ok, (f"{frac:.0%} of trials with 3 outliers inside n^-1/4 circles; "
                f"max solver disagreement {summ['max_solver_disagreement']:.1e}"), {
        "fraction": frac, "solver_agreement": agree, "max_distances": summ["max_distances"]}


def figure3(trials=50, eig_trials=20, seed=SEED):
    cfg = ExperimentConfig("fig3", trials=trials, master_seed=seed)
    records = run_trials(cfg)
    frac = summarize(cfg, records)["aggregate"]["fraction_matching_predictions"]
    n = 500
    worst_dist = worst_res = 0.0
    located = 0
    for t in range(eig_trials):
        X = sample_iid_matrix(n, "rademacher", seed + 1, t)
        A, B = mean_shift_factors(n, 1.0)
        model = PerturbedModel(X, A, B)
        report = detect_outliers(model, 0.1)
        if report.count != 1:
            continue
        located += 1
        z = report.zeros[0].position
        v = outlier_eigenvector(X, z)
        worst_dist = max(worst_dist, float(np.linalg.norm(v - unit_ones_vector(n))))
        worst_res = max(worst_res, float(np.linalg.norm(model.matvec(v) - z * v)))
    bound = 5 / math.sqrt(n)
    ok = frac >= 0.9 and located == eig_trials and worst_dist <= bound and worst_res <= 1e-6
    return ok, (f"{frac:.0%} single outlier near sqrt(50); eigenvector distance {worst_dist:.3f} "
                f"<= {bound:.3f} needed, residual {worst_res:.1e}"), {
        "fraction": frac, "eigenvector_max_distance": worst_dist, "eigenvector_max_residual": worst_res,
        "eigenvector_trials_located": located}


def figure4(trials=20, seed=SEED):
    cfg = ExperimentConfig("fig4", trials=trials, master_seed=seed)
    records = run_trials(cfg)
    summ = summarize(cfg, records)["aggregate"]
    frac = summ["fraction_matching_predictions"]
    return frac >= 0.8, f"{frac:.0%} of trials with one outlier within 1000^-1/4 of 2", {
        "fraction": frac, "max_distances": summ["max_distances"], "counts": summ["outlier_counts"]}


def fuss_catalan_edge(m):
    """Limit of ||(X/sqrt(n))^m||_op: sqrt((m+1)^(m+1) / m^m)."""
    return math.sqrt((m + 1) ** (m + 1) / m ** m)


def norms(trials=5, n=1000, seed=SEED):
    radii, ratios = [], []
    for t in range(trials):
        X = sample_iid_matrix(n, "rademacher", seed, t)
        radii.append(spectral_radius(linalg.eigenvalues(X / math.sqrt(n))))
        ratios.append([power_norm_ratio(X, m) for m in (1, 2, 3)])
    ratios = np.array(ratios)
    radius_ok = all(0.9 <= r <= 1.15 for r in radii)
    per_m = [bool(np.all((ratios[:, j] >= 0.8) & (ratios[:, j] <= 1.2))) for j in range(3)]
    limits = [fuss_catalan_edge(m) / (m + 1) for m in (1, 2, 3)]
    summary = (f"radius in [{min(radii):.3f}, {max(radii):.3f}]; ratio ranges "
               + ", ".join(f"m={m}: [{ratios[:, m - 1].min():.3f}, {ratios[:, m - 1].max():.3f}]"
                           for m in (1, 2, 3))
               + "; Fuss-Catalan limits " + ", ".join(f"{x:.3f}" for x in limits))
    return radius_ok and all(per_m), summary, {
        "spectral_radius": radii, "power_norm_ratio": ratios.tolist(), "band_ok_per_m": per_m,
        "fuss_catalan_ratio_limits": limits}


def circular_law(trials=10, n=1000, seed=SEED):
    P = row_sum_projector(n)
    rows = {"iid": [], "zero_row_sum": []}
    radius_zrs = []
    for t in range(trials):
        X = sample_iid_matrix(n, "rademacher", seed + 7, t)
        for label, M in (("iid", X / math.sqrt(n)), ("zero_row_sum", X @ P / math.sqrt(n))):
            eigs = linalg.eigenvalues(M)
            rows[label].append(circular_law_distance(eigs))
            if label == "zero_row_sum":
                radius_zrs.append(spectral_radius(eigs))
    p90 = {k: np.percentile(np.array(v), 90, axis=0).tolist() for k, v in rows.items()}
    ok = all(max(v) <= 0.06 for v in p90.values()) and all(0.9 <= r <= 1.15 for r in radius_zrs)
    return ok, (f"90th percentile KS (radial, angular): iid {p90['iid'][0]:.3f}, {p90['iid'][1]:.3f}; "
                f"zero row sum {p90['zero_row_sum'][0]:.3f}, {p90['zero_row_sum'][1]:.3f}; "
                f"zero-row-sum radius in [{min(radius_zrs):.3f}, {max(radius_zrs):.3f}]"), {
        "p90": p90, "zero_row_sum_radius": radius_zrs}


def char_poly_invariance(trials=20, n=100, seed=SEED):
    P = row_sum_projector(n)
    phi = unit_ones_vector(n)
    worst = {1: 0.0, 10: 0.0, 1000: 0.0}
    rng = np.random.default_rng(seed)
    for t in range(trials):
        X = sample_iid_matrix(n, "rademacher", seed + 11, t)
        M = X @ P / math.sqrt(n)
        base = linalg.eigenvalues(M)
        for size in worst:
            psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            psi -= np.vdot(phi, psi) * phi
            psi *= size / np.linalg.norm(psi)
            pert = linalg.eigenvalues(M + np.outer(phi, psi.conj()))
            worst[size] = max(worst[size], linalg.matching_distance(base, pert))
    ok = max(worst.values()) <= 1e-6
    return ok, "max matching distance " + ", ".join(f"|psi|={k}: {v:.1e}" for k, v in worst.items()), {
        "max_matching_distance": worst}


def clt(trials=400, n=2000, seed=SEED):
    cfg = ExperimentConfig("clt", n=n, trials=trials, master_seed=seed)
    records = run_trials(cfg)
    Z = np.array([r.stats["Z"] for r in records if not r.failed])
    s = clt_summary(Z)
    ok = len(Z) == trials and clt_passes(s)
    return ok, ("mean " + ", ".join(f"{x:+.3f}" for x in s["mean"])
                + "; variance " + ", ".join(f"{x:.3f}" for x in s["variance"])
                + "; 4th moment " + ", ".join(f"{x:.3f}" for x in s["fourth_moment"])
                + f"; corr {s['corr']:+.3f}"), s


def laurent_comparison(trials=200, series=2000, stability_trials=100, seed=SEED):
    cfg = ExperimentConfig("laurent_compare", n=500, trials=trials, master_seed=seed,
                           series_per_trial=series // trials)
    base = summarize(cfg, run_trials(cfg))["aggregate"]
    big = ExperimentConfig("laurent_compare", n=1000, trials=stability_trials, master_seed=seed + 1,
                           series_per_trial=0)
    big_agg = summarize(big, [r for r in run_trials(big)])["aggregate"]
    m500 = [m for m, _ in base["model_count_moments"]]
    m1000 = [m for m, _ in big_agg["model_count_moments"]]
    stability = [abs(a - b) / a if a else math.inf for a, b in zip(m500, m1000)]
    ok = (base["mean_count_relative_difference"] <= 0.2 and base["histogram_agrees"]
          and all(s <= 0.25 for s in stability))
    summary = (f"mean count model {base['mean_model_count']:.3f} vs series {base['mean_series_count']:.3f} "
               f"(rel {base['mean_count_relative_difference']:.3f}); histogram z max "
               f"{max(base['histogram_z']):.2f}; E[N], E[N^2] at n=500 {m500[0]:.3f}, {m500[1]:.3f} "
               f"vs n=1000 {m1000[0]:.3f}, {m1000[1]:.3f}")
    return ok, summary, {"n500": base, "n1000_moments": big_agg["model_count_moments"],
                         "stability_relative": stability}


def gps_adjudication(trials=5000, order=200, seed=SEED):
    cfg = ExperimentConfig("gps_check", trials=trials, order=order, master_seed=seed)
    agg = summarize(cfg, run_trials(cfg))["aggregate"]
    winner = agg["matching_formula"]
    rel = {k: [round(x, 3) for x in v["relative_error"]] for k, v in agg["verdict"].items()}
    desc = {"linear": "1/(pi(1-|w|^2))", "squared": "1/(pi(1-|w|^2)^2)"}
    summary = (f"matching formula: {winner} {desc.get(winner, '')}; relative errors linear {rel['linear']}, "
               f"squared {rel['squared']}")
    return winner is not None, summary, agg


def property_suites(seed=SEED):
    rng = np.random.default_rng(seed)
    failures = []
    # linalg invariants
    for t in range(20):
        n = int(rng.integers(3, 31))
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        eigs = linalg.eigenvalues(M)
        fro = np.linalg.norm(M)
        if abs(eigs.sum() - np.trace(M)) > 1e-8 * fro:
            failures.append(f"trace n={n}")
        d = linalg.det(M)
        if abs(np.prod(eigs) - d) > 1e-7 * abs(d):
            failures.append(f"determinant n={n}")
        sv = linalg.singular_values(M)
        if abs(np.prod(sv) - abs(d)) > 1e-9 * abs(d):
            failures.append(f"svd/det n={n}")
        if abs(linalg.operator_norm(M, tol=1e-10) - sv[0]) > 2e-10 * sv[0]:
            failures.append(f"operator norm n={n}")
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        if linalg.matching_distance(eigs, linalg.eigenvalues(Q.conj().T @ M @ Q)) > 1e-7:
            failures.append(f"similarity n={n}")
    # projector algebra
    for n in (1, 2, 7, 64):
        P = row_sum_projector(n)
        if max(np.abs(P @ P - P).max(), np.abs(P - P.conj().T).max(), np.abs(P @ unit_ones_vector(n)).max()) > 1e-13:
            failures.append(f"projector n={n}")
    # interlacing sweep
    violations = 0
    for t in range(200):
        n = int(rng.integers(2, 51))
        M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        if not interlacing_check(M, (u, v)).holds:
            violations += 1
    if violations:
        failures.append(f"interlacing violations {violations}")
    # counting identities
    pts = [rng.standard_normal(int(rng.integers(0, 6))) * 2 + 1j * rng.standard_normal(1) for _ in range(30)]
    est = kpoint_estimate(pts, 1, 3, 4, (1.0, 4.0))
    inside = np.mean([np.sum((np.abs(p) >= 1.0) & (np.abs(p) < 4.0)) for p in pts])
    if abs(float(np.sum(est.density * est.cell_areas.ravel())) - inside) > 1e-12 * max(inside, 1):
        failures.append("kpoint counting identity")
    eigs = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    h = esd_histogram(eigs, (-1, 1, -1, 1), 10)
    if h.counts.sum() + h.out_of_window != eigs.size:
        failures.append("histogram conservation")
    # reproducibility across worker counts
    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for workers in (1, 2):
            out = Path(tmp) / f"w{workers}"
            run_experiment(ExperimentConfig("fig1", n=60, trials=4, master_seed=seed, workers=workers, out=str(out)))
            blobs.append((out / "eigenvalues.csv").read_bytes())
        if blobs[0] != blobs[1]:
            failures.append("worker-count reproducibility")
    ok = not failures
    return ok, "all property checks green" if ok else "failures: " + "; ".join(failures), {"failures": failures}


CATALOG = [
    (1, "oracle equivalence", oracle_equivalence),
    (2, "figure 1 outliers", figure1),
    (3, "figure 3 mean shift", figure3),
    (4, "figure 4 small mean", figure4),
    (5, "power norms", norms),
    (6, "circular law", circular_law),
    (7, "char-poly invariance", char_poly_invariance),
    (8, "bilinear CLT", clt),
    (9, "Laurent comparison", laurent_comparison),
    (10, "GPS adjudication", gps_adjudication),
    (11, "property suites", property_suites),
]

TITLES = {num: title for num, title, _ in CATALOG}


def run_criterion(number: int) -> CriterionResult:
    for num, title, fn in CATALOG:
        if num == number:
            start = time.perf_counter()
            passed, summary, details = fn()
            return CriterionResult(num, title, bool(passed), summary, details, time.perf_counter() - start)
    raise KeyError(number)


def run_catalog(only=None, stream=sys.stdout):
    results = []
    for num, _, _ in CATALOG:
        if only and num not in only:
            continue
        res = run_criterion(num)
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
    return results
