"""Acceptance gate: one test per headline behaviour of the laboratory.

Every test certifies a single end-to-end claim at its stated tolerance
and prints one PASS/FAIL line with the measured margins; tests with a
runtime budget enforce it.  A failing test prints its full measured
table so the output is diagnosable without a rerun.

Run with ``pytest -v tests/test_acceptance.py`` for the per-claim verdicts.
"""

import json
import math
import random
import time

import numpy as np

from ghostslit import (
    Central,
    Conditioned,
    GaussianPairState,
    Inclusive,
    OracleConfig,
    QuadratureSpec,
    SlitConfig,
    cd_small_a_formula,
    cd_wide_slit_limit,
    derived_widths,
    inclusive_density,
    integrate_real_line,
    kappa_integrated_density,
    psi_momentum,
    psi_position,
    sample_central,
    sample_inclusive,
    spread,
    total_variance_report,
    zscore_report,
)
from ghostslit.cli import main
from ghostslit.oracle import _chunk_rng, _chunk_sizes, _fold_summaries

STATE = GaussianPairState(0.6, 0.8)
S_K, S_Y, _ = derived_widths(STATE)


def test_inclusive_spread_is_width_independent():
    t0 = time.perf_counter()
    widths = np.geomspace(0.01, 10.0, 20)
    values = np.array([spread(STATE, SlitConfig(float(a)), Inclusive()).delta_k2
                       for a in widths])
    elapsed = time.perf_counter() - t0
    worst = float(np.max(np.abs(values - 0.5)))
    variation = float((values.max() - values.min()) / values.min())
    print(f"PASS inclusive width-independence: max|spread-0.5|={worst:.2e} "
          f"(tol 1e-8), variation={variation:.2e} (tol 1e-9), "
          f"{elapsed:.2f}s (budget 5s)")
    assert worst <= 1e-8
    assert variation <= 1e-9
    assert elapsed < 5.0


def test_central_spread_matches_small_width_expansion():
    t0 = time.perf_counter()
    widths = np.array([0.05, 0.1, 0.2])
    rels, gaps = [], []
    for a in widths:
        slit = SlitConfig(float(a))
        numeric = spread(STATE, slit, Central()).delta_k2
        formula = cd_small_a_formula(STATE, slit)
        gaps.append(abs(numeric - formula))
        rels.append(gaps[-1] / numeric)
    slope = float(np.polyfit(np.log(widths), np.log(gaps), 1)[0])
    elapsed = time.perf_counter() - t0
    print(f"PASS small-width expansion: max rel diff={max(rels):.2e} "
          f"(tol 1e-4), residual slope={slope:.3f} (4 +- 0.5), "
          f"{elapsed:.2f}s (budget 10s)")
    assert max(rels) <= 1e-4
    assert 3.5 <= slope <= 4.5
    assert elapsed < 10.0


def test_central_spread_rises_as_the_slit_narrows():
    values = [spread(STATE, SlitConfig(a), Central()).delta_k2
              for a in (0.1, 0.2, 0.4, 0.8)]
    margins = [u - v for u, v in zip(values, values[1:])]
    wide = spread(STATE, SlitConfig(15.0 * S_Y), Central()).delta_k2
    wide_gap = abs(wide - cd_wide_slit_limit(STATE))
    print(f"PASS narrowing direction: spreads {values[0]:.6f} > "
          f"{values[1]:.6f} > {values[2]:.6f} > {values[3]:.6f} "
          f"(min margin {min(margins):.2e}, tol 1e-9); no-slit gap "
          f"{wide_gap:.2e} (tol 1e-6)")
    assert all(m > 1e-9 for m in margins)
    assert values[0] > cd_wide_slit_limit(STATE)
    assert wide_gap <= 1e-6


def test_detector_momentum_integral_matches_incoherent_density():
    slit = SlitConfig(0.7)
    rels = {}
    for k2 in (0.0, 0.3, 1.0):
        total = kappa_integrated_density(STATE, slit, k2).value.real
        reference = inclusive_density(STATE, slit, k2)
        rels[k2] = abs(total - reference) / reference
    worst = max(rels.values())
    print(f"PASS projection completeness: rel diffs "
          + " ".join(f"k2={k}:{v:.2e}" for k, v in rels.items())
          + " (tol 1e-8)")
    assert worst <= 1e-8


def test_variance_decomposition_closes():
    residuals = {}
    for a in (0.5, 1.0):
        residuals[a] = total_variance_report(STATE, SlitConfig(a)).residual
    worst = max(residuals.values())
    print("PASS variance decomposition: residuals "
          + " ".join(f"a={a}:{r:.2e}" for a, r in residuals.items())
          + " (tol 1e-6)")
    assert worst <= 1e-6


def test_off_axis_conditioning_reverses_the_trend_somewhere():
    # probe detector momenta at 1, 2, 3 marginal widths; the claim is that
    # at least one of them shows the spread growing with the slit width
    widths = (0.1, 0.4, 0.8)
    found = False
    print("off-axis trend table (spread vs slit half-width):")
    for mult in (1, 2, 3):
        kappa = mult * S_K
        row = [spread(STATE, SlitConfig(a), Conditioned(kappa=kappa)).delta_k2
               for a in widths]
        increasing = all(v - u > 1e-9 for u, v in zip(row, row[1:]))
        found = found or increasing
        print(f"  kappa={kappa:.2f}: "
              + " ".join(f"a={a}:{v:.9f}" for a, v in zip(widths, row))
              + ("  <- increasing" if increasing else "  <- decreasing"))
    verdict = "PASS" if found else "FAIL"
    print(f"{verdict} off-axis reversal: increasing trend "
          f"{'found' if found else 'absent'} for detector momenta "
          f"{{1,2,3}}x{S_K} over widths {widths}")
    assert found, (
        "no probed off-axis detector momentum shows the spread increasing "
        "with slit width on this grid; the reversal appears only at larger "
        "momenta and widths (e.g. kappa=4*s_k between a=1.2 and a=2.0)")


def test_state_representations_are_mutually_consistent():
    spec = QuadratureSpec()
    sp, sm = STATE.sigma_plus, STATE.sigma_minus
    s, p = STATE.ssum, STATE.sprod
    k2_width = p * math.sqrt(2.0 / s)  # k2 std of |momentum amplitude|^2

    def nested(outer_width, inner_width, outer_fn):
        def rows(xs):
            out = np.empty(xs.size)
            for i, x in enumerate(xs):
                out[i] = outer_fn(float(x), inner_width)
            return out
        return integrate_real_line(rows, outer_width, spec).value.real

    # normalization of each representation by nested 2-D quadrature
    def momentum_slice(k1, w):
        return integrate_real_line(
            lambda k2: np.array([abs(psi_momentum(STATE, k1, v)) ** 2
                                 for v in k2]), w, spec).value.real

    def position_slice(y1, w):
        return integrate_real_line(
            lambda y2: np.array([abs(psi_position(STATE, y1, v)) ** 2
                                 for v in y2]), w, spec).value.real

    from ghostslit import psi_mixed
    def mixed_slice(y1, w):
        return integrate_real_line(
            lambda k2: np.array([abs(psi_mixed(STATE, y1, v)) ** 2
                                 for v in k2]), w, spec).value.real

    norms = {
        "momentum": nested(max(sp, sm) * math.sqrt(2.0), k2_width,
                           momentum_slice),
        "mixed": nested(S_Y, S_K, mixed_slice),
        "position": nested(2.0 / math.sqrt(s), 1.0 / math.sqrt(s),
                           position_slice),
    }
    norm_dev = max(abs(v - 1.0) for v in norms.values())

    # transform consistency: the synthesis of the momentum representation
    # must land on the position representation pointwise
    grid = np.array([-0.8, -0.3, 0.0, 0.4, 1.1])
    fourier_err = 0.0
    for y1 in grid:
        for y2 in grid:
            def outer(k1s):
                out = np.empty(k1s.size, dtype=complex)
                for i, k1 in enumerate(k1s):
                    inner = integrate_real_line(
                        lambda k2: np.array(
                            [psi_momentum(STATE, float(k1), v)
                             * np.exp(1j * v * y2) for v in k2]),
                        k2_width, spec)
                    out[i] = inner.value * np.exp(1j * float(k1) * y1)
                return out
            value = integrate_real_line(
                outer, max(sp, sm) * math.sqrt(2.0), spec).value / (2 * math.pi)
            fourier_err = max(fourier_err,
                              abs(value - psi_position(STATE, y1, y2)))

    # uncertainty product: exact from the derived widths, and re-measured
    # from the second moments of the two pure representations
    assert derived_widths(STATE)[2] == 0.5

    def sum_momentum_slice(k1, w):
        return integrate_real_line(
            lambda k2: np.array([(k1 + v) ** 2
                                 * abs(psi_momentum(STATE, k1, v)) ** 2
                                 for v in k2]), w, spec).value.real

    def mean_position_slice(y1, w):
        return integrate_real_line(
            lambda y2: np.array([0.25 * (y1 + v) ** 2
                                 * abs(psi_position(STATE, y1, v)) ** 2
                                 for v in y2]), w, spec).value.real

    var_ksum = nested(max(sp, sm) * math.sqrt(2.0), k2_width,
                      sum_momentum_slice)
    var_ymean = nested(2.0 / math.sqrt(s), 1.0 / math.sqrt(s),
                       mean_position_slice)
    product = math.sqrt(var_ksum) * math.sqrt(var_ymean)
    product_dev = abs(product - 0.5)

    print(f"PASS state integrity: max |norm-1|={norm_dev:.2e} (tol 1e-9); "
          f"transform grid max err={fourier_err:.2e} (tol 1e-8); "
          f"uncertainty product dev={product_dev:.2e} (tol 1e-10)")
    assert norm_dev <= 1e-9
    assert fourier_err <= 1e-8
    assert product_dev <= 1e-10


def test_monte_carlo_concords_with_quadrature():
    t0 = time.perf_counter()
    slit = SlitConfig(0.5)
    cfg = OracleConfig(n_samples=100_000, seed=1)

    inclusive_stats = sample_inclusive(STATE, slit, cfg)
    z_inclusive = zscore_report(
        inclusive_stats, spread(STATE, slit, Inclusive()).delta_k2)

    central_stats = sample_central(STATE, slit,
                                   OracleConfig(n_samples=100_000, seed=2))
    z_central = zscore_report(
        central_stats, spread(STATE, slit, Central()).delta_k2)
    elapsed = time.perf_counter() - t0
    print(f"PASS sampling concordance: z_inclusive={z_inclusive:+.2f}, "
          f"z_central={z_central:+.2f} (|z| <= 4), no envelope violations, "
          f"{elapsed:.2f}s (budget 30s)")
    assert abs(z_inclusive) <= 4.0
    assert abs(z_central) <= 4.0
    assert elapsed < 30.0


def test_identical_runs_produce_identical_results(tmp_path):
    # byte-level sweep determinism, both output formats, sampling included
    digests = {}
    for fmt in ("csv", "json"):
        out = tmp_path / f"sweep.{fmt}"
        argv = ["--sigma-plus", "0.6", "--sigma-minus", "0.8",
                "--scheme", "inclusive", "--a-steps", "3",
                "--mc-samples", "5000", "--format", fmt, "--out", str(out)]
        assert main(argv) == 0
        first = out.read_bytes()
        assert main(argv) == 0
        digests[fmt] = (first == out.read_bytes())

    # worker-arrangement independence of the sampler: chunk summaries
    # computed in shuffled order must fold to the bit-identical result
    from scipy.special import ndtri
    cfg = OracleConfig(n_samples=50_000, seed=7)
    slit = SlitConfig(0.5)
    reference = sample_inclusive(STATE, slit, cfg)
    jobs = list(enumerate(_chunk_sizes(cfg.n_samples)))
    random.Random(1).shuffle(jobs)
    summaries = {}
    for index, size in jobs:
        rng = _chunk_rng(cfg.seed, index)
        u = rng.random((size, 2)) * (1.0 - 2.0 ** -52) + 2.0 ** -53
        y = S_Y * ndtri(u[:, 0])
        k2 = S_K * ndtri(u[:, 1])
        acc = k2[np.abs(y) <= slit.half_width]
        mean = float(acc.mean())
        summaries[index] = (acc.size, mean, float(np.sum((acc - mean) ** 2)))
    n, mean, m2 = _fold_summaries(summaries[i] for i in sorted(summaries))
    fold_ok = (n == reference.n_accepted and mean == reference.mean
               and math.sqrt(m2 / (n - 1)) == reference.std)

    print(f"PASS determinism: csv byte-identical={digests['csv']}, "
          f"json byte-identical={digests['json']}, "
          f"shuffled-fold identical={fold_ok}")
    assert digests["csv"] and digests["json"]
    assert fold_ok
