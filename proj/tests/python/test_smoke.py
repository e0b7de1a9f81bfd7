"""Smoke tests for the python bindings."""

import math

import pytest

hdivred = pytest.importorskip("hdivred")


def test_space_info_matches_the_structured_counts():
    info = hdivred.space_info(3, [64, 64, 32], 0)
    assert info["ndofs"] == 401408
    info1 = hdivred.space_info(3, [32, 32, 16], 1)
    assert info1["ndofs"] == 401408
    single = hdivred.space_info(3, [1, 1, 1], 0)
    assert single["ndofs"] == 6
    assert single["broken_ndofs"] == 6


def test_solve_methods_agree():
    base = {
        "cells": [2, 2, 2],
        "order": 0,
        "method": "hybridization",
        "preconditioner": "jacobi",
        "rtol": 1e-12,
        "maxit": 500,
    }
    hyb = hdivred.solve(base)
    asm = hdivred.solve({**base, "method": "assembled"})
    con = hdivred.solve({**base, "method": "condensation"})
    assert hyb["converged"] and asm["converged"] and con["converged"]
    assert hyb["solution_checksum"] == pytest.approx(asm["solution_checksum"], rel=1e-8)
    assert con["solution_checksum"] == pytest.approx(asm["solution_checksum"], rel=1e-8)
    x, y = hyb["solution"], asm["solution"]
    scale = max(abs(v) for v in x)
    assert max(abs(a - b) for a, b in zip(x, y)) <= 1e-8 * scale


def test_solve_is_deterministic():
    config = {
        "cells": [2, 2, 2],
        "order": 0,
        "coeff_preset": "soft-hard",
        "p": 4,
        "method": "hybridization",
        "preconditioner": "amg",
    }
    first = hdivred.solve(config)
    second = hdivred.solve(config)
    assert first["solution"] == second["solution"]
    assert first["iterations"] == second["iterations"]


def test_verify_fast_passes():
    ok, report = hdivred.verify("fast")
    assert ok, report
    assert "PASS" in report


def test_bench_returns_sorted_records():
    records = hdivred.bench([2], [0, 4], ["hybridization"], order=0, precond="jacobi", rtol=1e-10)
    assert len(records) == 2
    assert [r["p"] for r in records] == [0, 4]
    for r in records:
        assert r["iterations"] >= 0
        assert r["final_relative_residual"] <= 1e-10


def test_export_import_round_trip(tmp_path):
    prefix = str(tmp_path / "instance")
    config = {"cells": [2, 2, 2], "order": 0}
    hdivred.export_instance(config, prefix)
    result = hdivred.import_solve(prefix, method="hybridization", precond="jacobi")
    direct = hdivred.solve({**config, "method": "hybridization", "preconditioner": "jacobi"})
    assert result["converged"]
    assert result["solution_checksum"] == pytest.approx(direct["solution_checksum"], rel=1e-9)


def test_hybridized_matrix_shape():
    (nrows, ncols, offsets, cols, vals), g = hdivred.hybridized_matrix({"cells": [2, 2, 2], "order": 0})
    assert nrows == ncols == 12  # interior faces of the 2x2x2 mesh
    assert len(g) == nrows
    assert len(offsets) == nrows + 1
    assert len(cols) == len(vals) == offsets[-1]
    assert all(math.isfinite(v) for v in vals)
