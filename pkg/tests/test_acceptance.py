"""Acceptance gate: ten criteria, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they pass.  The replicated benchmarks honor
``SLOPEPATH_ACCEPTANCE_REPLICATES`` (default 25) for the scaling study;
the fixed-size table reproduction always uses 100 replicates.
"""

import math
import os
import time

import numpy as np
import pytest

from slopepath import (
    ProblemInstance,
    bh_sequence,
    check_optimality,
    eval_path,
    gaussian_sequence,
    oscar_sequence,
    qs_sequence,
    run_experiment,
    run_path,
    solve_slope,
    sorted_l1_prox,
    sphericity_ratio,
    validate_ray,
)
from slopepath.datagen import ScenarioSpec, generate
from slopepath.engine import PathOptions

from conftest import prox_bruteforce, random_ascending_weights

SCALING_REPLICATES = int(os.environ.get("SLOPEPATH_ACCEPTANCE_REPLICATES", "25"))


def _criterion(num: int, description: str, ok: bool, detail: str = "") -> None:
    tag = "PASS" if ok else "FAIL"
    suffix = f"  [{detail}]" if detail else ""
    print(f"[{tag}] criterion {num}: {description}{suffix}")
    assert ok, f"criterion {num} failed: {description} {detail}"


# --- shared corpus for criteria 2 and 3 ------------------------------------


def _corpus_instances():
    """20 small instances drawn from both scenario generators."""
    specs = []
    for i in range(10):
        p = (2, 4, 6, 8, 10)[i % 5]
        n = min(30, p + 4 + 2 * i)
        specs.append(ScenarioSpec(scenario=1, p=p, n=n, seed=1000 + i))
    for i in range(10):
        p = 2 + (i % 9)
        n = min(30, p + 3 + 2 * i)
        specs.append(ScenarioSpec(scenario=2, p=p, n=n, seed=2000 + i))
    return [generate(spec)[0] for spec in specs]


def _design_directions(p, n):
    return {
        "bh": bh_sequence(p, 0.1),
        "gauss": gaussian_sequence(p, n, 0.1),
        "oscar": oscar_sequence(p, 1.0),
        "qs": qs_sequence(p),
    }


@pytest.fixture(scope="module")
def oracle_corpus():
    """All (instance, design) paths plus sampled eta values."""
    rng = np.random.default_rng(99)
    runs = []
    for instance in _corpus_instances():
        for design, lam_bar in _design_directions(instance.p, instance.n).items():
            ray = validate_ray(np.zeros(instance.p), lam_bar)
            path = run_path(instance, ray)
            eta_last = max((e.eta for e in path.breakpoints()), default=1.0)
            etas = rng.uniform(0.0, 1.05 * eta_last, size=20)
            runs.append((instance, design, ray, path, etas))
    return runs


def test_criterion_1_canonical_path():
    instance = ProblemInstance(y=np.array([3.0, 1.0]), X=np.eye(2))
    ray = validate_ray(np.zeros(2), 0.5 * np.array([0.0, 2.0]))
    path = run_path(instance, ray)

    fuses = [e for e in path.events if e.kind == "fuse"]
    others = [e for e in path.events if e.kind not in ("fuse", "terminate")]
    ok = (len(fuses) == 2 and not others
          and abs(fuses[0].eta - 2.0) <= 1e-10
          and abs(fuses[1].eta - 4.0) <= 1e-10
          and len(path.segments) == 3)
    if ok:
        rng = np.random.default_rng(1)
        for eta in rng.uniform(0.0, 2.0, 50):
            ok &= bool(np.max(np.abs(eval_path(path, eta)
                                     - np.array([3.0 - eta, 1.0]))) <= 1e-10)
        for eta in rng.uniform(2.0, 4.0, 50):
            target = (4.0 - eta) / 2.0 * np.ones(2)
            ok &= bool(np.max(np.abs(eval_path(path, eta) - target)) <= 1e-10)
        for eta in rng.uniform(4.0, 20.0, 50):
            ok &= bool(np.max(np.abs(eval_path(path, eta))) == 0.0)
    _criterion(1, "canonical 2x2 path: fuses at eta=2,4 and exact segments", ok)


def test_criterion_2_oracle_equivalence(oracle_corpus):
    t0 = time.time()
    worst = 0.0
    for instance, design, ray, path, etas in oracle_corpus:
        for eta in etas:
            beta_path = eval_path(path, float(eta))
            beta_ref = solve_slope(instance, ray.at(float(eta))).beta
            scale = 1.0 + float(np.max(np.abs(beta_ref)))
            worst = max(worst, float(np.max(np.abs(beta_path - beta_ref))) / scale)
    elapsed = time.time() - t0
    ok = worst <= 1e-6 and elapsed <= 120.0
    _criterion(2, "path matches the independent solver on 20x4x20 probes", ok,
               f"worst rel err {worst:.2e}, {elapsed:.0f}s")


def test_criterion_3_kkt_along_path(oracle_corpus):
    worst = 0.0
    checked = 0
    ok = True
    for instance, design, ray, path, _ in oracle_corpus:
        for seg in path.segments:
            mid = 0.5 * (seg.eta_start + seg.eta_end) \
                if math.isfinite(seg.eta_end) else seg.eta_start + 1.0
            lam = ray.at(mid)
            tol = 1e-7 * (1.0 + float(lam.max()))
            beta = eval_path(path, mid)
            report = check_optimality(beta, instance.gradient(beta), lam,
                                      tol_eq=tol, tol_ineq=tol)
            ok &= report.optimal
            worst = max(worst, report.worst_magnitude / (1.0 + float(lam.max())))
            checked += 1
    _criterion(3, "grouped optimality verdict holds at every segment midpoint",
               ok, f"{checked} midpoints, worst scaled violation {worst:.2e}")


def test_criterion_4_prox_against_bruteforce():
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(500):
        p = int(rng.integers(1, 7))
        v = rng.standard_normal(p) * rng.uniform(0.3, 3.0)
        lam = random_ascending_weights(rng, p, scale=rng.uniform(0.2, 2.5))
        ours = sorted_l1_prox(v, lam)
        brute = prox_bruteforce(v, lam)
        worst = max(worst, float(np.max(np.abs(ours - brute))))
    _criterion(4, "sorted-L1 prox equals brute-force enumeration on 500 cases",
               worst <= 1e-8, f"worst abs err {worst:.2e}")


def test_criterion_5_sphericity_values():
    r1 = sphericity_ratio(1)
    r100 = sphericity_ratio(100)
    r10000 = sphericity_ratio(10000)
    ok = (r1 == 1.0) and (1.46 <= r100 <= 1.48) and (1.81 <= r10000 <= 1.83)
    _criterion(5, "contour-roundness ratios at p=1,100,10000", ok,
               f"rho={r1:.3f},{r100:.4f},{r10000:.4f}")


def test_criterion_6_quasi_spherical_minimality():
    from slopepath import contour_extremes
    rng = np.random.default_rng(66)
    ok = True
    for p in (2, 5, 10, 50):
        rho = sphericity_ratio(p)
        for _ in range(100):
            lam = random_ascending_weights(rng, p)
            mx, mn = contour_extremes(lam, r=1.0)
            ok &= (mx / mn) >= rho - 1e-9
        mx, mn = contour_extremes(qs_sequence(p), r=1.0)
        ok &= (mx / mn) <= rho + 1e-9
    _criterion(6, "random weight ratios never beat the quasi-spherical design", ok)


def test_criterion_7_vertex_equality():
    worst = 0.0
    for p in range(2, 201):
        lam = qs_sequence(p)
        top_sums = np.cumsum(lam[::-1])
        products = top_sums / np.sqrt(np.arange(1, p + 1))
        worst = max(worst, float(np.max(np.abs(products - 1.0))))
    _criterion(7, "all flat-vertex penalties of the quasi-spherical design equal 1",
               worst <= 1e-12, f"worst dev {worst:.2e}")


def test_criterion_8_table_reproduction():
    t0 = time.time()
    rep1 = run_experiment(scenario=1, sizes=[(20, 200)], designs=["bh", "qs"],
                          replicates=100, seed_base=42)
    rep2 = run_experiment(scenario=2, sizes=[(20, 200)], designs=["qs"],
                          replicates=100, seed_base=42)
    elapsed = time.time() - t0

    bh = rep1.cell("bh", 20, 200)
    qs1 = rep1.cell("qs", 20, 200)
    qs2 = rep2.cell("qs", 20, 200)
    checks = {
        "bh nonzero": (bh.mean_nonzero, 14.3, 1.5),
        "qs groups": (qs1.mean_nonzero_groups, 10.9, 1.5),
        "bh events": (bh.mean_fuse_split_events, 140.0, 35.0),
        "s2 qs events": (qs2.mean_fuse_split_events, 52.0, 15.0),
    }
    ok = elapsed <= 300.0
    details = []
    for name, (value, target, width) in checks.items():
        ok &= abs(value - target) <= width
        details.append(f"{name}={value:.1f} (want {target}+-{width})")
    _criterion(8, "benchmark table cells at (20,200) with 100 replicates", ok,
               "; ".join(details) + f"; {elapsed:.0f}s")


def test_criterion_9_event_count_scaling():
    t0 = time.time()
    report = run_experiment(
        scenario=1, sizes=[(20, 200), (40, 400), (80, 800)],
        designs=["bh", "qs"], replicates=SCALING_REPLICATES, seed_base=7)
    elapsed = time.time() - t0
    ok = elapsed <= 1200.0
    details = [f"{SCALING_REPLICATES} reps, {elapsed:.0f}s"]
    for design in ("bh", "qs"):
        e20 = report.cell(design, 20, 200).mean_fuse_split_events
        e40 = report.cell(design, 40, 400).mean_fuse_split_events
        e80 = report.cell(design, 80, 800).mean_fuse_split_events
        for label, ratio in ((f"{design} 40/20", e40 / e20),
                             (f"{design} 80/40", e80 / e40)):
            ok &= 3.0 <= ratio <= 5.5
            details.append(f"{label}={ratio:.2f}")
    _criterion(9, "fuse/split event counts grow ~quadratically with dimension",
               ok, "; ".join(details))


def test_criterion_10_incremental_linear_algebra():
    instance, _ = generate(ScenarioSpec(scenario=2, p=80, n=800, seed=5))
    ray = validate_ray(np.zeros(80), qs_sequence(80))
    path = run_path(instance, ray, PathOptions(validate_every=50))
    diag = path.provenance["diagnostics"]
    errors = [err for _, err in diag["gram_checks"]]
    worst = max(errors) if errors else float("nan")
    ok = (len(errors) >= 10 and worst <= 1e-8
          and diag["fallback_refactorizations"] == 0)
    _criterion(10, "cached grouped-Gram inverse stays faithful over a long path",
               ok, f"{len(errors)} checks, worst rel err {worst:.2e}, "
                   f"{diag['fallback_refactorizations']} fallbacks")
