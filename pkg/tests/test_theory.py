import json
import os

import numpy as np
import pytest

from mixupgeom import kernels
from mixupgeom.etf import build_simplex_etf
from mixupgeom.kernels import pure
from mixupgeom.mixup import DIFFERENT_CLASS, SAME_CLASS
from mixupgeom.theory import (
    TheoryParams,
    amplify,
    assemble_feature,
    epsilon_amplification,
    features_from_csv,
    features_to_compact_json,
    features_to_csv,
    generate_configuration,
    solve_different_class,
    solve_same_class,
)
from mixupgeom.ufm import UfmConfig, per_sample_grad, per_sample_loss

PARAMS = TheoryParams(C=10, m=3.0, lambda_h=1e-6, d=100)


def test_params_validation():
    with pytest.raises(ValueError):
        TheoryParams(C=1, m=1.0, lambda_h=1e-6, d=5)
    with pytest.raises(ValueError):
        TheoryParams(C=3, m=1.0, lambda_h=0.0, d=5)
    with pytest.raises(ValueError):
        TheoryParams(C=3, m=1.0, lambda_h=1e-6, d=2)


def test_same_class_solution_structure():
    sol = solve_same_class(PARAMS)
    assert sol.k < 0
    assert sol.residual <= 1e-12
    assert sol.inner_self == pytest.approx(-9.0 * sol.k)
    assert sol.coeff == pytest.approx(-9.0 * sol.k / 9.0)


def test_same_class_feature_on_ray_and_stationary():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    sol = solve_same_class(PARAMS)
    rec = assemble_feature(sol, frame, 4, 4)
    # on the ray through w_4
    w = frame.rows[4]
    off_ray = rec.h - (rec.h @ w / (w @ w)) * w
    assert np.linalg.norm(off_ray) < 1e-10
    cfg = UfmConfig(lambda_h=1e-6)
    grad = per_sample_grad(frame.rows, rec.h, 4, 4, 1.0, cfg)
    assert np.linalg.norm(grad) < 1e-8


def test_same_class_is_lambda_independent():
    sol_a = solve_same_class(PARAMS)
    sol_b = solve_same_class(PARAMS)
    assert sol_a.k == sol_b.k  # bit-exact


def test_diff_probability_bookkeeping():
    for lam in (0.1, 0.3, 0.5, 0.8):
        sol = solve_different_class(PARAMS, lam)
        C, m2, lh = PARAMS.C, PARAMS.m**2, PARAMS.lambda_h
        total = sol.p_i + sol.p_ip + (C - 2) * sol.p_tail
        assert total == pytest.approx(1.0, abs=1e-12)
        assert sol.p_i - lam == pytest.approx(
            (1 - C) * lh * sol.inner_i / (C * m2), abs=1e-14
        )
        assert sol.p_ip - (1 - lam) == pytest.approx(
            (1 - C) * lh * sol.inner_ip / (C * m2), abs=1e-14
        )


def test_diff_feature_in_span_and_stationary():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    cfg = UfmConfig(lambda_h=1e-6)
    for lam in (0.2, 0.5, 0.9):
        sol = solve_different_class(PARAMS, lam)
        rec = assemble_feature(sol, frame, 1, 7)
        basis = np.stack([frame.rows[1], frame.rows[7]])
        coef, *_ = np.linalg.lstsq(basis.T, rec.h, rcond=None)
        assert np.linalg.norm(rec.h - basis.T @ coef) < 1e-10
        grad = per_sample_grad(frame.rows, rec.h, 1, 7, lam, cfg)
        assert np.linalg.norm(grad) < 1e-8


def test_swap_symmetry():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    for lam in (0.15, 0.4):
        a = assemble_feature(solve_different_class(PARAMS, lam), frame, 2, 5)
        b = assemble_feature(solve_different_class(PARAMS, 1.0 - lam), frame, 5, 2)
        assert np.linalg.norm(a.h - b.h) < 1e-8


def test_boundary_lambda_one_matches_same_class():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    same = assemble_feature(solve_same_class(PARAMS), frame, 0, 0)
    diff = assemble_feature(solve_different_class(PARAMS, 1.0), frame, 0, 3)
    assert np.linalg.norm(diff.h - same.h) <= 1e-6 * np.linalg.norm(same.h)


def test_p_i_monotone_in_lambda():
    values = [
        solve_different_class(PARAMS, lam).p_i for lam in np.linspace(0.05, 0.95, 19)
    ]
    assert all(b - a >= -1e-9 for a, b in zip(values, values[1:]))


def test_two_class_case():
    params = TheoryParams(C=2, m=1.0, lambda_h=1e-3, d=2)
    sol = solve_different_class(params, 0.3)
    assert sol.p_tail == 0.0
    assert sol.inner_i + sol.inner_ip == pytest.approx(0.0, abs=1e-12)
    frame = build_simplex_etf(2, 2, 1.0, seed=0)
    rec = assemble_feature(sol, frame, 0, 1)
    grad = per_sample_grad(frame.rows, rec.h, 0, 1, 0.3, UfmConfig(lambda_h=1e-3))
    assert np.linalg.norm(grad) < 1e-8


def test_amplification_profile():
    assert epsilon_amplification(0.5) == pytest.approx(0.4, abs=1e-15)
    assert epsilon_amplification(0.2) == pytest.approx(
        epsilon_amplification(0.8), abs=1e-15
    )
    assert epsilon_amplification(0.0) < 0
    assert epsilon_amplification(1.0) < 0


def test_amplify_shifts_along_row_sum():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    rec = assemble_feature(solve_different_class(PARAMS, 0.5), frame, 0, 1)
    amp = amplify(rec, frame)
    shift = amp.h - rec.h
    expected = 0.4 * (frame.rows[0] + frame.rows[1])
    assert np.allclose(shift, expected, atol=1e-12)
    assert amp.amplified and not rec.amplified
    same = assemble_feature(solve_same_class(PARAMS), frame, 2, 2)
    assert amplify(same, frame) is same


def test_generate_configuration_order_and_count():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    lams = [0.25, 0.75]
    records = generate_configuration(PARAMS, frame, [0, 1, 2], lams)
    assert len(records) == len(lams) * 9
    # lambda-major, then ordered pair in nested subset order
    assert records[0].lam == 0.25 and records[9].lam == 0.75
    kinds = [r.kind for r in records[:9]]
    assert kinds.count(SAME_CLASS) == 3 and kinds.count(DIFFERENT_CLASS) == 6


def test_amplified_configuration_increases_mean_loss():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    lams = list(np.linspace(0.1, 0.9, 9))
    cfg = UfmConfig(lambda_h=1e-6)

    def mean_loss(records):
        return np.mean(
            [
                per_sample_loss(frame.rows, r.h, r.class_i, r.class_ip, r.lam, cfg)
                for r in records
            ]
        )

    plain = generate_configuration(PARAMS, frame, [0, 1, 2], lams)
    amped = generate_configuration(PARAMS, frame, [0, 1, 2], lams, amplified=True)
    assert mean_loss(amped) > mean_loss(plain)


def test_feature_csv_round_trip(tmp_path):
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    records = generate_configuration(PARAMS, frame, [0, 1], [0.3])
    path = tmp_path / "features.csv"
    features_to_csv(records, path)
    loaded = features_from_csv(path)
    assert len(loaded) == len(records)
    for a, b in zip(records, loaded):
        assert (a.class_i, a.class_ip, a.lam, a.kind, a.amplified) == (
            b.class_i,
            b.class_ip,
            b.lam,
            b.kind,
            b.amplified,
        )
        assert np.array_equal(a.h, b.h)


def test_feature_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("class_i,class_ip,lambda,kind,amplified,h_0\n0,1,x,same_class,0,1.0\n")
    with pytest.raises(ValueError, match=":2:"):
        features_from_csv(bad)


def test_compact_json():
    frame = build_simplex_etf(10, 100, 3.0, seed=0)
    records = generate_configuration(PARAMS, frame, [0, 1], [0.4])
    doc = json.loads(features_to_compact_json(PARAMS, records))
    assert len(doc) == len(records)
    same_keys = {"K", "inner_i", "coeff_i", "coeff_ip"}
    diff_keys = {"K_lambda", "inner_i", "coeff_i", "coeff_ip"}
    for rec, entry in zip(records, doc):
        assert set(entry) == (same_keys if rec.kind == SAME_CLASS else diff_keys)


def test_assemble_rejects_mismatched_frame():
    frame = build_simplex_etf(5, 8, 3.0, seed=0)
    sol = solve_same_class(PARAMS)  # C=10 solution
    with pytest.raises(ValueError):
        assemble_feature(sol, frame, 0, 0)


def test_backends_agree_bit_for_bit():
    if kernels.BACKEND == "pure":
        pytest.skip("compiled backend not available")
    for C, m2, lh in [(10, 9.0, 1e-6), (3, 1.0, 1e-2), (5, 9.0, 1e-2)]:
        assert kernels.solve_same_class_k(C, m2, lh) == pure.solve_same_class_k(
            C, m2, lh
        )
        for lam in (0.1, 0.5, 0.73):
            assert kernels.solve_diff_k(C, m2, lh, lam) == pure.solve_diff_k(
                C, m2, lh, lam
            )
