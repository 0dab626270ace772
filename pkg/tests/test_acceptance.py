"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is fixed
here; the expected values were computed from independent oracles (dense
linear algebra, exhaustive enumeration, brute-force quadrature, Monte Carlo
with standard errors) before being frozen.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from isde.bounds import BoundParams, selection_bound
from isde.combinatorics import FeatureSubset, enumerate_partitions, enumerate_subsets
from isde.diagnostics import risk_decomposition_report
from isde.gaussian import (
    GaussianBlockSpec,
    GaussianCopulaDensity,
    Structure,
    block_eigenvalues,
    covariance_matrix,
    det_block_perturbed,
    det_equicorrelated,
    equicorrelation,
    kl_almost_independent,
    kl_block_projection,
    kl_equicorrelated_structure,
    kl_js_bound_check,
    optimal_structure,
    sample_gaussian_copula_block,
    structure_partition,
)
from isde.kernels import EPANECHNIKOV
from isde.mirror_kde import BandwidthRule, MirrorKdeModel, fit
from isde.pipeline import IsdeConfig, run, split_data
from isde.scoring import ScoreTable, build_score_table, partition_score
from isde.solver import solve_branch_and_bound, solve_dp

from _oracles import (
    best_partition_exhaustive,
    gauss_log_pdf,
    integrate_model_1d,
    integrate_model_2d,
)


def report(number, name):
    print(f"\nACCEPTANCE {number:02d} {name}: PASS")


def admissible_epsilons(d, k_star, sigma):
    cap = (1.0 + (k_star - 1) * sigma) / max(k_star, d - k_star + 1)
    return [0.0, 0.3 * cap, 0.7 * cap]


def test_01_determinant_oracle():
    checked = 0
    for p in range(1, 13):
        for sigma in np.arange(0.1, 0.95, 0.1):
            closed = det_equicorrelated(p, float(sigma))
            direct = np.linalg.det(equicorrelation(p, float(sigma)))
            assert closed == pytest.approx(direct, rel=1e-9)
            checked += 1
    for d in range(1, 13):
        for k_star in (k for k in range(1, d + 1) if d % k == 0):
            for sigma in (0.1, 0.5, 0.9):
                for eps in admissible_epsilons(d, k_star, sigma):
                    spec = GaussianBlockSpec(d, k_star, sigma, eps)
                    closed = det_block_perturbed(spec)
                    direct = np.linalg.det(covariance_matrix(spec))
                    assert closed == pytest.approx(direct, rel=1e-9)
                    checked += 1
    assert checked >= 300
    report(1, f"determinant oracle ({checked} cases)")


def test_02_spectrum_oracle():
    checked = 0
    for d in range(1, 13):
        for k_star in (k for k in range(1, d + 1) if d % k == 0):
            for sigma in (0.1, 0.4, 0.8):
                for eps in admissible_epsilons(d, k_star, sigma):
                    spec = GaussianBlockSpec(d, k_star, sigma, eps)
                    pairs = block_eigenvalues(spec)
                    assert sum(m for _, m in pairs) == d
                    closed = np.sort(np.concatenate([[v] * m for v, m in pairs]))
                    numeric = np.sort(np.linalg.eigvalsh(covariance_matrix(spec)))
                    assert float(np.max(np.abs(closed - numeric))) < 1e-8
                    checked += 1
    report(2, f"spectrum oracle ({checked} cases)")


def test_03_kl_oracle_monte_carlo():
    start = time.time()
    rng = np.random.default_rng(314)
    n_mc = 1_000_000
    for case in range(10):
        k_star = int(rng.integers(1, 4))
        blocks = int(rng.integers(1, 3))
        d = max(2, k_star * blocks)
        if d % k_star:
            d = k_star * blocks + k_star
        sigma = float(rng.uniform(0.1, 0.7))
        eps = float(rng.uniform(0, 0.5)) * admissible_epsilons(d, k_star, sigma)[2] / 0.7
        spec = GaussianBlockSpec(d, k_star, sigma, eps)
        cov = covariance_matrix(spec)
        sizes = []
        rem = d
        while rem:
            s = int(rng.integers(1, rem + 1))
            sizes.append(s)
            rem -= s
        partition = structure_partition(d, tuple(sizes))

        z = rng.standard_normal((n_mc, d)) @ np.linalg.cholesky(cov).T
        logs = gauss_log_pdf(z, cov)
        for block in partition.blocks:
            idx = np.asarray(block.columns())
            logs = logs - gauss_log_pdf(z[:, idx], cov[np.ix_(idx, idx)])
        mc_mean = float(np.mean(logs))
        mc_se = float(np.std(logs, ddof=1) / math.sqrt(n_mc))
        closed = kl_block_projection(cov, partition)
        assert abs(mc_mean - closed) <= 3.0 * max(mc_se, 1e-12), (
            case, spec, sizes, mc_mean, mc_se, closed,
        )
    elapsed = time.time() - start
    assert elapsed < 30.0
    report(3, f"KL projection vs Monte Carlo ({elapsed:.1f} s)")


def test_04_almost_independence_expansion():
    for d, k_star, sigma in ((4, 2, 0.3), (6, 3, 0.5), (6, 2, 0.1)):
        exact, leading = kl_almost_independent(GaussianBlockSpec(d, k_star, sigma, 1e-3))
        ratio = exact / leading
        assert 0.99 <= ratio <= 1.01, (d, k_star, sigma, ratio)
    report(4, "almost-independence quadratic expansion")


def test_05_optimal_structure_exhaustive():
    def all_structures(d, k):
        def rec(rem, mx):
            if rem == 0:
                yield ()
                return
            for first in range(min(rem, mx, k), 0, -1):
                for rest in rec(rem - first, first):
                    yield (first,) + rest

        yield from rec(d, d)

    mismatches = 0
    for d in range(1, 9):
        for k in range(1, d + 1):
            for sigma in (0.1, 0.5, 0.9):
                brute = min(
                    all_structures(d, k),
                    key=lambda s: kl_equicorrelated_structure(d, sigma, Structure(s)),
                )
                got = tuple(sorted(optimal_structure(d, k, sigma).sizes, reverse=True))
                mismatches += got != brute
    assert mismatches == 0
    report(5, "optimal structure equals exhaustive argmin")


def test_06_solver_exactness():
    start = time.time()
    rng = np.random.default_rng(99)

    def table_of(d, k, inf_fraction=0.0):
        entries = {}
        for s in enumerate_subsets(d, k):
            if inf_fraction and rng.random() < inf_fraction:
                entries[s] = -math.inf
            else:
                entries[s] = float(rng.normal())
        return ScoreTable(
            d=d, k=k, n=1, m=2, beta=2.0, kernel_name="epanechnikov", entries=entries
        )

    for trial in range(200):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        table = table_of(d, k, inf_fraction=0.1 if trial % 4 == 0 else 0.0)
        oracle_partition, oracle_value = best_partition_exhaustive(table)
        for solve in (solve_dp, solve_branch_and_bound):
            partition, value = solve(table)
            assert partition == oracle_partition
            assert value == oracle_value

    for k in (2, 3):
        for _ in range(50):
            table = table_of(12, k)
            p_dp, v_dp = solve_dp(table)
            p_bb, v_bb = solve_branch_and_bound(table)
            assert p_dp == p_bb
            assert v_dp == pytest.approx(v_bb, rel=1e-12)
    elapsed = time.time() - start
    assert elapsed < 10.0
    report(6, f"solver exactness, 200 small + 100 at d=12 ({elapsed:.1f} s)")


def test_07_mirror_normalisation():
    rng = np.random.default_rng(7)
    fits = 0
    for _ in range(8):
        m = int(rng.integers(2, 40))
        h = float(rng.uniform(0.02, 0.45))
        model = MirrorKdeModel(FeatureSubset(1, 1), h, EPANECHNIKOV, rng.uniform(0, 1, (m, 1)))
        assert abs(integrate_model_1d(model) - 1.0) < 1e-6
        fits += 1
    for _ in range(8):
        m = int(rng.integers(2, 25))
        h = float(rng.uniform(0.05, 0.45))
        model = MirrorKdeModel(
            FeatureSubset(0b11, 2), h, EPANECHNIKOV, rng.uniform(0, 1, (m, 2))
        )
        assert abs(integrate_model_2d(model) - 1.0) < 1e-6
        fits += 1
    mc = np.random.default_rng(77).uniform(0, 1, (1_000_000, 3))
    for _ in range(4):
        m = int(rng.integers(5, 25))
        h = float(rng.uniform(0.08, 0.4))
        model = MirrorKdeModel(
            FeatureSubset(0b111, 3), h, EPANECHNIKOV, rng.uniform(0, 1, (m, 3))
        )
        assert abs(float(np.mean(model.evaluate(mc))) - 1.0) < 1e-2
        fits += 1
    assert fits == 20
    report(7, "mirror-image normalisation (20 fits)")


def test_08_boundary_bias():
    h, m, refits = 0.02, 100_000, 60
    recorded = {}
    for p in (1, 2):
        plain_vals, mirror_vals = [], []
        for seed in range(refits):
            rng = np.random.default_rng(seed)
            samples = rng.uniform(0, 1, (m, p))
            model = MirrorKdeModel(FeatureSubset((1 << p) - 1, p), h, EPANECHNIKOV, samples)
            corner = np.zeros((1, p))
            plain_vals.append(float(model.evaluate_plain(corner)[0]))
            mirror_vals.append(float(model.evaluate(corner)[0]))
        plain = float(np.mean(plain_vals))
        mirror = float(np.mean(mirror_vals))
        orthant_limit = 1.0 / 2**p
        stated_limit = (2**p - 1) / 2**p
        recorded[p] = (plain, orthant_limit, stated_limit)
        assert abs(plain - orthant_limit) <= 0.1 * orthant_limit, (p, plain)
        assert abs(mirror - 1.0) <= 0.1, (p, mirror)
    # record the discrepancy with the alternative stated limit: in 2-d the
    # orthant-mass value 1/4 is observed, not 3/4
    print(
        "\nboundary-bias record: "
        + "; ".join(
            f"p={p}: plain={v[0]:.4f}, orthant limit={v[1]:.2f}, "
            f"alternative stated limit={v[2]:.2f}"
            for p, v in recorded.items()
        )
    )
    assert abs(recorded[2][0] - 0.75) > 0.4  # the 2-d alternative is refuted
    report(8, "boundary bias: plain halves per axis, mirror corrects")


def test_09_structure_recovery():
    start = time.time()
    spec = GaussianBlockSpec(6, 2, 0.6, 0.0)
    hits = 0
    for seed in range(10):
        data = sample_gaussian_copula_block(spec, 4000, seed)
        result = run(data, IsdeConfig(k=2, seed=seed))
        hits += result.partition.to_index_lists() == [[1, 2], [3, 4], [5, 6]]
    elapsed = time.time() - start
    assert hits >= 8, hits
    assert elapsed < 60.0
    report(9, f"structure recovery {hits}/10 ({elapsed:.1f} s)")


def test_10_risk_decomposition_inequality():
    truth = GaussianCopulaDensity.from_spec(GaussianBlockSpec(4, 2, 0.5, 0.05))
    holds = 0
    for seed in range(10):
        rep = risk_decomposition_report(truth, IsdeConfig(k=2, seed=seed), n_mc=8000, n_data=1000)
        assert rep.mc_failures == 0
        holds += rep.inequality_ok
    assert holds == 10, holds
    report(10, "risk-decomposition inequality within 3 se (10 trials)")


def test_11_selection_bound_coverage():
    truth = GaussianCopulaDensity.from_spec(GaussianBlockSpec(4, 2, 0.1, 0.0))
    partitions = list(enumerate_partitions(4, 2))
    bound = selection_bound(BoundParams(d=4, k=2, n=1000, m=500, A=1.0, delta_n=0.05))
    rule = BandwidthRule()
    covered = 0
    max_disc = 0.0
    for seed in range(100):
        data = truth.sample(1500, np.random.default_rng(seed))
        config = IsdeConfig(k=2, split_fraction=1.0 / 3.0, seed=seed)
        w, z = split_data(data, config)
        assert w.shape[0] == 500 and z.shape[0] == 1000
        table, models = build_score_table(w, z, 2, rule, EPANECHNIKOV)
        selected, _ = solve_dp(table)
        mc = truth.sample(3000, np.random.default_rng(100_000 + seed))
        pop = {s: float(np.mean(mod.log_evaluate(mc[:, s.columns()]))) for s, mod in models.items()}
        pop_best = max(
            partitions, key=lambda p: (sum(pop[b] for b in p.blocks), p.block_count)
        )
        pop_gap = sum(pop[b] for b in pop_best.blocks) - sum(pop[b] for b in selected.blocks)
        emp_gap = partition_score(table, pop_best) - partition_score(table, selected)
        disc = abs(pop_gap - emp_gap)
        max_disc = max(max_disc, disc)
        covered += disc < bound
    assert covered >= 95, covered
    report(11, f"selection-bound coverage {covered}/100 (max disc {max_disc:.4f} vs {bound:.4f})")


def test_12_kl_js_control():
    rng = np.random.default_rng(1212)
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(2, 50))
        a = float(rng.uniform(0.2, 2.5))
        s = int(rng.integers(1, 4))
        half_lo, half_hi = math.exp(-0.5 * a * s), math.exp(0.5 * a * s)
        p = rng.uniform(half_lo, half_hi, n)
        q = rng.uniform(half_lo, half_hi, n)
        p /= p.sum()
        q /= q.sum()
        kl, js, holds = kl_js_bound_check(p, q, a, s)
        violations += not holds
        assert js <= math.log(2.0) + 1e-12
    assert violations == 0
    report(12, "KL controlled by JS on 1000 envelope pairs")


def test_13_cli_determinism(tmp_path):
    data_path = tmp_path / "data.csv"
    synth = subprocess.run(
        [sys.executable, "-m", "isde", "synth", "--d", "3", "--kstar", "1",
         "--sigma", "0", "--n", "300", "--seed", "5", "--output", str(data_path)],
        capture_output=True, text=True,
    )
    assert synth.returncode == 0, synth.stderr
    outputs = []
    for tag in ("a", "b"):
        out_path = tmp_path / f"fit_{tag}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "isde", "fit", "--input", str(data_path),
             "--k", "2", "--seed", "11", "--output", str(out_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(out_path.read_bytes())
    assert outputs[0] == outputs[1]
    json.loads(outputs[0])  # the artefact is valid JSON
    report(13, "byte-identical fit output across reruns")
