"""Acceptance gate: each test enforces one verification criterion end to end.

Every test prints a single `[criterion] PASS/FAIL` line (visible with -s or on
failure) and asserts both the substance of the criterion and its runtime
budget, so a pass here means the shipped defaults reproduce the expected
behavior within the stated tolerances.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from rdpclab.cli import main
from rdpclab.instances import random_codec, random_source
from rdpclab.metrics import (
    RdpcBudget,
    bhattacharyya_bound,
    classification_margin,
    distortion_closed_form,
    metric_report,
    w1_mixture_bound,
)
from rdpclab.model import ChannelNoise, LinearCodec
from rdpclab.sweep import SweepConfig, analyze_sweep, run_sweep
from rdpclab.verify import (
    check_barrier_gradients,
    check_bhattacharyya,
    check_bound_chain,
    check_codec_gradients,
    check_distortion,
    check_quantile_w2,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def report(name: str, passed: bool, detail: str) -> None:
    print(f"[{name}] {'PASS' if passed else 'FAIL'}: {detail}")


@pytest.fixture(scope="module")
def m_sweep():
    config = SweepConfig.from_file(CONFIG_DIR / "rate_vs_dist_by_m.json")
    start = time.monotonic()
    rows = run_sweep(config)
    return rows, time.monotonic() - start


@pytest.fixture(scope="module")
def cls_sweep():
    config = SweepConfig.from_file(CONFIG_DIR / "rate_vs_dist_by_cls.json")
    start = time.monotonic()
    rows = run_sweep(config)
    return rows, time.monotonic() - start


def median_curves(rows):
    """median rate per (m, perc, cls) over seeds, keyed by dist budget."""
    import pandas as pd

    df = pd.DataFrame(rows)
    return {
        key: group.groupby("dist_budget")["rate_nats"].median()
        for key, group in df.groupby(["m", "perc_budget", "cls_budget"])
    }, df


def test_gradient_fidelity():
    """Analytic gradients of both descent objectives match central finite
    differences (h=1e-5) with relative error < 1e-4 on 50 feasible instances."""
    start = time.monotonic()
    codec = check_codec_gradients(instances=25, seed=0)
    barrier = check_barrier_gradients(instances=25, seed=1)
    elapsed = time.monotonic() - start
    worst = max(codec["worst_rel_err"], barrier["worst_rel_err"])
    ok = codec["passed"] and barrier["passed"] and elapsed < 10.0
    report("gradient_fidelity", ok, f"worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert codec["passed"], codec
    assert barrier["passed"], barrier
    assert elapsed < 10.0


def test_distortion_closed_form_vs_monte_carlo():
    """Closed-form distortion within 4 standard errors of the 2e5-sample
    Monte Carlo estimate on 10 random instances."""
    start = time.monotonic()
    result = check_distortion(instances=10, count=200_000, seed=2)
    elapsed = time.monotonic() - start
    ok = result["passed"] and elapsed < 30.0
    report("distortion_closed_form", ok, f"worst z {result['worst_z']:.2f}, {elapsed:.1f}s")
    assert result["passed"], result
    assert elapsed < 30.0


def test_bhattacharyya_bound_vs_bayes_error():
    """Monte Carlo Bayes error (1e6 samples) stays below the bound + 3 SE on
    10 instances, and the two bound routes agree to 1e-10."""
    start = time.monotonic()
    result = check_bhattacharyya(instances=10, count=1_000_000, seed=3)
    elapsed = time.monotonic() - start
    ok = result["passed"] and elapsed < 60.0
    report(
        "bhattacharyya_bound",
        ok,
        f"rel err {result['worst_rel_err']:.2e}, bound excess {result['worst_bound_excess']:.2e}, {elapsed:.1f}s",
    )
    assert result["passed"], result
    assert elapsed < 60.0


def test_wasserstein_bound_chain():
    """The mixture W1 bound holds link by link on 1-D and 2-D instances
    (exact assignment at k=512, 20 bootstrap resamples, 3-SE slack), and the
    commuting closed form matches quantile-grid transport within 1e-2."""
    start = time.monotonic()
    chain = check_bound_chain(k=512, resamples=20, seed=4)
    quantile = check_quantile_w2(k=512)
    elapsed = time.monotonic() - start
    ok = chain["passed"] and quantile["passed"] and elapsed < 120.0
    report(
        "wasserstein_chain",
        ok,
        f"links ok={chain['passed']}, quantile err {quantile['worst_abs_err']:.2e}, {elapsed:.1f}s",
    )
    assert chain["passed"], chain
    assert quantile["passed"], quantile
    assert elapsed < 120.0


def test_rate_curve_shape_across_m(m_sweep):
    """At (P, C) = (4.1, 0.1) over a 6-point distortion grid and 5 seeds:
    the m=1 median rate is invariant to the distortion budget within 1%, and
    the m=2 curve lies at or below the m=3 curve at every grid point."""
    rows, elapsed = m_sweep
    curves, _ = median_curves(rows)
    m1 = curves[(1, 4.1, 0.1)].to_numpy()
    variation = (m1.max() - m1.min()) / m1.min()
    m2 = curves[(2, 4.1, 0.1)]
    m3 = curves[(3, 4.1, 0.1)]
    m2_le_m3 = bool(np.all(m2.to_numpy() <= m3.to_numpy() + 1e-12))
    ok = variation < 0.01 and m2_le_m3 and elapsed < 600.0
    report(
        "rate_curve_shape_m",
        ok,
        f"m=1 variation {variation * 100:.2f}%, m2<=m3 {m2_le_m3}, {elapsed:.0f}s",
    )
    assert variation < 0.01
    assert m2_le_m3
    assert elapsed < 600.0


def test_rate_curve_shape_across_cls(cls_sweep):
    """Tightening the classification budget costs rate: the C=0.1 median
    curve lies pointwise at or above the C=0.3 curve on the shared grid."""
    rows, elapsed = cls_sweep
    curves, _ = median_curves(rows)
    tight = curves[(2, 4.1, 0.1)].to_numpy()
    loose = curves[(2, 4.1, 0.3)].to_numpy()
    pointwise = bool(np.all(tight >= loose - 1e-12))
    ok = pointwise and elapsed < 600.0
    report("rate_curve_shape_cls", ok, f"C=0.1 >= C=0.3 pointwise {pointwise}, {elapsed:.0f}s")
    assert pointwise
    assert elapsed < 600.0


def test_rate_curves_monotone_convex(m_sweep, cls_sweep):
    """Every median rate-vs-distortion curve from both sweeps is
    non-increasing within 2% of its range and has second differences above
    -2% of range (flat curves pass trivially)."""
    import pandas as pd

    results = analyze_sweep(pd.DataFrame(m_sweep[0] + cls_sweep[0]))
    ok = results["all_curves_ok"]
    detail = "; ".join(
        f"m={c['m']} C={c['cls_budget']:g} mono={c['non_increasing']} convex={c['convex']} flat={c['flat']}"
        for c in results["curves"]
    )
    report("rate_curves_monotone_convex", ok, detail)
    assert ok, results["curves"]


def test_reparameterization_invariance():
    """All metrics are unchanged within 1e-8 under (E, D) -> (ME, D M^-1).

    At zero channel noise the output law depends on the codec only through
    the product DE, so the invariance holds for any invertible M; with noise
    the D Diag(sigma) D^T term breaks it unless M is orthogonal and the noise
    isotropic. Both exact regimes are checked, 10 random M each.
    """
    rng = np.random.default_rng(5)
    budgets = RdpcBudget(dist=6.0, perc=4.1, cls=0.3)
    worst = 0.0

    def close(a, b):
        nonlocal worst
        worst = max(worst, abs(a - b))
        return abs(a - b) <= 1e-8 * (1.0 + abs(a))

    for trial in range(10):
        src = random_source(rng, 5)
        codec = random_codec(rng, 5, 2)
        m_mat = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
        assert abs(np.linalg.det(m_mat)) > 1e-6
        reparam = LinearCodec(enc=m_mat @ codec.enc, dec=codec.dec @ np.linalg.inv(m_mat))

        zero = ChannelNoise(sigma=np.zeros(2))
        assert close(
            distortion_closed_form(src, codec, zero), distortion_closed_form(src, reparam, zero)
        )
        assert close(w1_mixture_bound(src, codec, zero), w1_mixture_bound(src, reparam, zero))
        assert close(bhattacharyya_bound(src, codec, zero), bhattacharyya_bound(src, reparam, zero))
        assert close(
            classification_margin(src, codec, zero, budgets.cls),
            classification_margin(src, reparam, zero, budgets.cls),
        )

        # orthogonal reparameterization with isotropic noise: every report field
        q_mat, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        ortho = LinearCodec(enc=q_mat @ codec.enc, dec=codec.dec @ q_mat.T)
        iso = ChannelNoise(sigma=np.full(2, 0.3))
        a = metric_report(src, codec, iso, budgets).to_dict()
        b = metric_report(src, ortho, iso, budgets).to_dict()
        for key in a:
            assert close(a[key], b[key]), (trial, key, a[key], b[key])

    report("reparameterization_invariance", True, f"worst abs diff {worst:.2e}")


def test_sweep_determinism(tmp_path, capsys):
    """Rerunning the sweep command with a fixed config yields byte-identical CSVs."""
    config = {
        "n": 5,
        "cn_seed": 4,
        "m": [1, 2],
        "dist_grid": [6.0],
        "perc_grid": [4.1],
        "cls_grid": [0.1],
        "seeds": [0, 1],
        "solver": {"max_outer": 2, "codec_iters": 1500, "inner_iters": 100, "barrier_max_updates": 12},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out_a)]) == 0
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out_b)]) == 0
    capsys.readouterr()
    identical = out_a.read_bytes() == out_b.read_bytes()
    report("sweep_determinism", identical, f"{out_a.stat().st_size} bytes each")
    assert identical
