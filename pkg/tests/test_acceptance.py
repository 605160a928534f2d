"""Exit criteria.  Each test records one PASS/FAIL line shown at the end of the run."""
import math
import statistics
import time

import mpmath as mp
import numpy as np

from apcval.admission import (
    Decision,
    EquivParams,
    Mode,
    Regime,
    TTestParams,
    equivalence_pass,
    induce_params,
    min_n_bound,
    normalized_threshold_e,
    normalized_threshold_t,
    plan_n_e,
    plan_n_t,
    revised_alpha_planned,
    revised_ttest_pass,
    ttest_pass,
)
from apcval.normal_dist import cdf, quantile, tail
from apcval.power_sim import SimDesign, pass_probability_mc, stability_scan
from apcval.sde_model import SampleSummary, proof_of_concept_sample, summarize


def timed(fn, repeat=1):
    """Return (result, median wall time in seconds)."""
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def test_c1_planner_golden_value(record_criterion):
    p = TTestParams(alpha_t=0.05, beta_t=0.025, d_r=0.01, v=0.05)
    (n_t, n_e), secs = timed(lambda: (plan_n_t(p), plan_n_e(induce_params(p))), repeat=5)
    ok = n_t == 385 and n_e == 385 and secs < 1e-3
    record_criterion("C1 planner golden value n=385 (t and induced)", ok,
                     f"n_t={n_t} n_e={n_e} {secs * 1e3:.3f} ms")
    assert ok


def test_c2_lower_bound_golden_value(record_criterion):
    bound, secs = timed(lambda: min_n_bound(0.15, 0.01, 0.025), repeat=5)
    ok = abs(bound - 864.33) <= 0.01 and secs < 1e-3
    record_criterion("C2 lower bound on n = 864.33 +- 0.01", ok, f"{bound:.4f} {secs * 1e3:.3f} ms")
    assert ok


def test_c3_critical_ratio(record_criterion):
    def run():
        ratio = stability_scan(0.05, 0.025, 2.0, 3.0, 0.001)
        v_hat = 0.15
        onset = next(v for v in np.arange(0.350, 0.450, 0.0001)
                     if revised_alpha_planned(v / v_hat, 0.05, 0.025).underflowed)
        return ratio, onset

    (ratio, onset), secs = timed(run)
    ok = 2.60 <= ratio <= 2.64 and 0.390 <= onset <= 0.396 and secs < 1.0
    record_criterion("C3 critical ratio in [2.60, 2.64], v onset in [0.390, 0.396]", ok,
                     f"ratio={ratio} v={onset:.4f} {secs:.3f} s")
    assert ok


def test_c4_identity(record_criterion):
    rng = np.random.default_rng(2019)

    def run():
        tuples = 0
        worst = 0.0
        mismatches = 0
        while tuples < 10_000:
            alpha, beta = rng.uniform(0.05, 0.2), rng.uniform(0.025, 0.2)
            d_r = rng.choice([0.005, 0.01, 0.02])
            v = rng.uniform(0.02, 0.3)
            v_hat = v * rng.uniform(0.5, 2.0)
            p = TTestParams(alpha, beta, d_r, v)
            n = plan_n_t(p)
            if n < min_n_bound(v_hat, d_r, beta):
                continue
            s = SampleSummary(n, 1.0, rng.uniform(-1.2, 1.2) * d_r, v_hat)
            r = revised_ttest_pass(s, d_r, beta)
            e = induce_params(p)
            q = equivalence_pass(s, e.delta, e.alpha_e)
            if r.decision != q.decision:
                mismatches += 1
            worst = max(worst, abs(r.threshold - q.threshold) / d_r)
            tuples += 1

        norm_worst = 0.0
        for _ in range(10_000):
            alpha, beta = rng.uniform(0.001, 0.4), rng.uniform(0.001, 0.4)
            ratio = rng.uniform(0.5, 2.0)
            e = induce_params(TTestParams(alpha, beta, 0.01))
            diff = abs(normalized_threshold_t(ratio, alpha, beta, 0.01)
                       - normalized_threshold_e(ratio, e.alpha_e, e.beta_e, e.delta))
            norm_worst = max(norm_worst, diff)
        return tuples, mismatches, worst, norm_worst

    (tuples, mismatches, worst, norm_worst), secs = timed(run)
    ok = mismatches == 0 and worst <= 1e-9 and norm_worst <= 1e-12 and secs < 10
    record_criterion("C4 revised t-test == induced equivalence test", ok,
                     f"{tuples} tuples, {mismatches} mismatches, max diff {worst:.1e}*d_r, "
                     f"normalized {norm_worst:.1e}, {secs:.2f} s")
    assert ok


def test_c5_pathology(record_criterion):
    def run():
        v_hat = 0.15
        p = TTestParams(0.05, 0.025, 0.01, 2.7 * v_hat)
        s = SampleSummary(plan_n_t(p), 1.0, 0.009, v_hat)
        e = induce_params(p)
        return revised_ttest_pass(s, p.d_r, p.beta_t), equivalence_pass(s, e.delta, e.alpha_e)

    (rev, eq), secs = timed(run, repeat=5)
    ok = (rev.mode is Mode.ALWAYS_PASS and rev.threshold == math.inf
          and math.isfinite(eq.threshold) and eq.mode is Mode.REGULAR and eq.decision is Decision.FAIL
          and secs < 1e-3)
    record_criterion("C5 v/v_hat=2.7: revised ALWAYS_PASS, induced finite", ok,
                     f"revised thr={rev.threshold} induced thr={eq.threshold:.6f} {eq.decision.value} "
                     f"{secs * 1e3:.3f} ms")
    assert ok


def test_c6_proof_of_concept(record_criterion):
    def run():
        out = {}
        for m in (1, 10, 100):
            s = summarize(proof_of_concept_sample(1000, m))
            t_stat = abs(s.d_bar) * math.sqrt(s.n) / s.v_hat
            out[m] = (t_stat, ttest_pass(s, 0.10), equivalence_pass(s, 0.01, 0.025))
        return out

    res, secs = timed(run)
    # brute force: d_bar = 5/(1000 m), v_hat = sqrt((9 - 25/1000)/999)/m
    brute_t = 0.005 * math.sqrt(1000) / math.sqrt((9 - 25 / 1000) / 999)
    ok = (all(r[1].decision is Decision.FAIL for r in res.values())
          and all(abs(r[0] - brute_t) < 1e-9 for r in res.values())
          and abs(brute_t - 1.668) < 5e-4 and quantile(0.95) < brute_t
          and res[100][2].decision is Decision.PASS
          and res[1][2].decision is Decision.FAIL
          and secs < 1.0)
    record_criterion("C6 proof of concept: t-test fails for all m, equivalence passes m=100 only", ok,
                     f"t={brute_t:.4f} eq m=1 {res[1][2].decision.value} m=100 {res[100][2].decision.value} "
                     f"{secs:.3f} s")
    assert ok


def test_c7_fig2_features(record_criterion):
    sigma, reps, seed = 0.15, 100_000, 20190101
    t = TTestParams(0.05, 0.025, 0.01, sigma)
    e = EquivParams(0.025, 0.05, 0.01)
    mu_grid = tuple(np.round(np.linspace(-0.03, 0.03, 61), 6))

    def run():
        n_correct = plan_n_t(t)
        at_zero = pass_probability_mc(SimDesign(Regime.TTEST, t, n_correct, (0.0,), sigma, reps, seed)).points[0]
        flat = pass_probability_mc(SimDesign(Regime.EQUIVALENCE, e, 385, mu_grid, sigma, reps, seed))
        inner = [pass_probability_mc(SimDesign(Regime.TTEST, t, n, (0.005,), sigma, reps, seed)).points[0].pass_prob
                 for n in (385, 1540, 6160)]
        return at_zero, flat, inner

    (at_zero, flat, inner), secs = timed(run)
    ok = (abs(at_zero.pass_prob - 0.95) <= 0.01
          and flat.pass_probs.max() <= 0.001
          and inner[0] > inner[1] > inner[2]
          and secs < 60)
    record_criterion("C7 Fig. 2 features (MC 1e5 replicates)", ok,
                     f"P(0)={at_zero.pass_prob:.4f} flat max={flat.pass_probs.max()} "
                     f"inner={[round(x, 4) for x in inner]} {secs:.2f} s")
    assert ok


def test_c8_numerical_kernel(record_criterion):
    mp.mp.dps = 40
    x = mp.mpf("8.31")
    mills = float(mp.npdf(x) / x * mp.fsum((-1) ** k * mp.fac2(2 * k - 1) / x ** (2 * k) for k in range(12)))

    def run():
        lo = np.logspace(-12, math.log10(0.5), 500)
        p = np.concatenate([lo, 1.0 - lo[::-1]])
        roundtrip = float(np.max(np.abs(cdf(quantile(p)) - p)))
        tail_rel = abs(tail(8.31) - mills) / mills
        xs = np.linspace(9, 37, 200)
        collapse = bool(np.all(1.0 - cdf(xs) == 0.0) and np.all(tail(xs) > 0.0))
        return roundtrip, tail_rel, collapse, p.size

    (roundtrip, tail_rel, collapse, size), secs = timed(run)
    ok = size == 1000 and roundtrip <= 1e-9 and tail_rel <= 1e-6 and collapse and secs < 1.0
    record_criterion("C8 numerical kernel", ok,
                     f"roundtrip {roundtrip:.1e} over {size} pts, tail(8.31) rel {tail_rel:.1e}, "
                     f"1-cdf collapse={collapse}, {secs * 1e3:.1f} ms")
    assert ok
