import json
import math
import warnings
from math import comb
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfim_magic.entropy import (
    PURE_CHAIN,
    REDUCED_BLOCK,
    DensityPoint,
    density_sweep,
    importance_sampled_alpha,
    m0_cardinality,
    m2_pure,
    m2_reduced,
    results_from_csv,
    results_to_csv,
    results_to_json,
    single_site_m2,
)
from tfim_magic.errors import CapacityError, NumericalError
from tfim_magic.freefermion import (
    FINITE_CHAIN,
    THERMODYNAMIC,
    CorrelationKernel,
    build_kernel_finite,
    build_kernel_thermodynamic,
)
from tfim_magic.oracle import ground_state_of, m2_direct

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden_ed_m2.json").read_text())["rows"]


@pytest.mark.parametrize("row", GOLDEN, ids=lambda r: f"N{r['N']}-lam{r['lambda']}")
def test_golden_pure_and_blocks(row):
    kern = build_kernel_finite(row["lambda"], row["N"])
    assert m2_pure(kern).m2 == pytest.approx(row["m2"], abs=1e-9)
    for L, ref in row["block_m2"].items():
        assert m2_reduced(kern, int(L)).m2 == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("lam", [0.0, 1e6])
@pytest.mark.parametrize("n", [2, 6, 9])
def test_stabilizer_limits_finite(lam, n):
    assert m2_pure(build_kernel_finite(lam, n)).m2 < 1e-6


def test_stabilizer_limits_blocks():
    for lam in (0.0, 1e4, 1e6):
        assert m2_reduced(build_kernel_thermodynamic(lam, 6), 6).m2 < 1e-6
    assert m2_reduced(build_kernel_thermodynamic(1e6, 1), 1).m2 == pytest.approx(0.0, abs=1e-12)


def test_oracle_example():
    kern = build_kernel_finite(1.5, 8)
    assert m2_pure(kern).m2 == pytest.approx(m2_direct(ground_state_of(8, 1.5)).m2, abs=1e-8)


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("n", [3, 6, 10])
def test_pure_normalization(lam, n):
    res = m2_pure(build_kernel_finite(lam, n))
    assert res.sum_sq == pytest.approx(2.0**n, rel=1e-8)
    assert res.kind == PURE_CHAIN and res.backend == FINITE_CHAIN


def test_normalization_violation_raises():
    bad = CorrelationKernel(FINITE_CHAIN, 2, np.full((2, 2), 0.5), 1.0)
    with pytest.raises(NumericalError):
        m2_pure(bad)


def test_thermodynamic_pure_formula_warns():
    with pytest.warns(UserWarning):
        m2_pure(build_kernel_thermodynamic(1.0, 4))


def test_full_block_equals_pure():
    kern = build_kernel_finite(0.8, 7)
    assert m2_reduced(kern, 7).m2 == pytest.approx(m2_pure(kern).m2, abs=1e-9)


def test_single_site_block():
    kern = build_kernel_thermodynamic(2.0, 3)
    assert m2_reduced(kern, 1).m2 == pytest.approx(single_site_m2(2.0), abs=1e-10)


def test_single_site_closed_form():
    assert single_site_m2(1e6) == pytest.approx(0.0, abs=1e-11)
    assert single_site_m2(0.0) == pytest.approx(0.0, abs=1e-12)
    g2 = (2 / math.pi) ** 2
    assert single_site_m2(1.0) == pytest.approx(math.log2((1 + g2) / (1 + g2 * g2)), abs=1e-12)
    assert single_site_m2(1.0) == pytest.approx(0.27146, abs=1e-5)


@given(st.floats(0.0, 8.0), st.integers(1, 5), st.integers(0, 6))
@settings(max_examples=30, deadline=None)
def test_block_location_independence(lam, L, s):
    kern = build_kernel_thermodynamic(lam, L + s)
    assert m2_reduced(kern, L, start=s).m2 == m2_reduced(kern, L, start=0).m2


@pytest.mark.parametrize("lam", [0.1, 0.6, 1.0, 2.0, 5.0, 1e6])
@pytest.mark.parametrize("n", [1, 4, 8, 12])
def test_importance_sampled_identity(lam, n):
    assert importance_sampled_alpha(lam, n) == pytest.approx(single_site_m2(lam), abs=1e-12)


def test_importance_sampling_underestimates_at_criticality():
    assert importance_sampled_alpha(1.0, 8) == pytest.approx(0.2715, abs=1e-3)
    assert importance_sampled_alpha(1.0, 8) < 0.44 - 0.1


def test_cardinality_generic_and_stabilizer():
    card, m0 = m0_cardinality(build_kernel_finite(2.0, 4))
    assert card == 70 and m0 == pytest.approx(math.log2(70) - 4)
    # near λ → ∞ the off-diagonal kernel entries are O(1/λ); 1e-6 is the
    # threshold that separates them from the 2^N diagonal monomials
    card, m0 = m0_cardinality(build_kernel_finite(1e6, 4), zero_tol=1e-6)
    assert card == 16 and m0 == 0.0


@pytest.mark.parametrize("lam", [0.7, 1.3])
@pytest.mark.parametrize("n", [2, 5, 8, 10])
def test_cardinality_is_central_binomial(lam, n):
    assert m0_cardinality(build_kernel_finite(lam, n))[0] == comb(2 * n, n)


@pytest.mark.parametrize("lam", [0.1, 0.6, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("n", [2, 5, 9, 12])
def test_bounds_pure(lam, n):
    res = m2_pure(build_kernel_finite(lam, n))
    assert 0 <= res.m2 <= res.m0 + 1e-12
    assert res.m2 <= n - 0.5 * math.log2(n) + 1


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_bounds_blocks(lam):
    kern = build_kernel_thermodynamic(lam, 9)
    for L in range(1, 10):
        res = m2_reduced(kern, L)
        assert 0 <= res.m2 <= res.m0 + 1e-12


def test_capacity_cap():
    with pytest.raises(CapacityError):
        m2_pure(build_kernel_finite(1.0, 6), cap=5)
    with pytest.raises(CapacityError):
        m2_reduced(build_kernel_thermodynamic(1.0, 6), 6, cap=5)
    with pytest.raises(ValueError):
        m2_reduced(build_kernel_thermodynamic(1.0, 3), 4)


def test_sweep_figure_grid():
    lambdas = (0.1, 0.3, 0.6, 1.0, 2.0, 2.5, 5.0)
    sweep = density_sweep(lambdas, range(5, 13), backend=FINITE_CHAIN)
    assert sweep.ok and len(sweep.rows) == 56
    for lam in lambdas:
        m2 = [r.m2 for r in sweep.rows if r.lam == lam]
        assert all(b > a for a, b in zip(m2, m2[1:]))


def test_sweep_reduced_and_errors():
    sweep = density_sweep([1.0], range(1, 12), mode="reduced")
    assert len(sweep.rows) == 11 and all(isinstance(p, DensityPoint) for p in sweep.rows)
    assert all(p.result.kind == REDUCED_BLOCK for p in sweep.rows)
    with pytest.raises(ValueError):
        density_sweep([], [3])
    bad = density_sweep([1.0], [3, 20], backend=FINITE_CHAIN)
    assert len(bad.rows) == 1 and len(bad.failures) == 1
    assert bad.failures[0]["error"].startswith("CapacityError")


def test_sweep_finite_reduced_blocks():
    sweep = density_sweep([2.0], [2, 3], mode="reduced", backend=FINITE_CHAIN, chain_size=12)
    assert sweep.rows[0].result.meta["chain_size"] == 12


def test_csv_json_round_trip():
    with warnings.catch_warnings():
        rows = density_sweep([0.5, 2.0], [3, 4], backend=FINITE_CHAIN).rows
    text = results_to_csv(rows, runtime=False, header_comment="hello\nworld")
    assert text.startswith("# hello\n# world\nlambda,N_or_L,")
    back = results_from_csv(text)
    assert [(r.lam, r.sites, r.m2, r.sum_quart) for r in back] == [(r.lam, r.sites, r.m2, r.sum_quart) for r in rows]
    payload = json.loads(results_to_json(rows, runtime=False, config={"a": 1}))
    assert payload["config"] == {"a": 1} and len(payload["results"]) == 4
