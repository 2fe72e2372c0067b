import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfim_magic.errors import CapacityError, QuadratureError
from tfim_magic.freefermion import (
    FINITE_CHAIN,
    THERMODYNAMIC,
    CorrelationKernel,
    QuadratureConfig,
    build_kernel,
    build_kernel_finite,
    build_kernel_thermodynamic,
    critical_correlator,
    free_fermion_energy,
    is_critical,
    read_kernel_csv,
    thermodynamic_correlator,
    validate_lambda,
    write_kernel_csv,
)
from tfim_magic.oracle import ground_state_of, majorana_pair_expectations

lambdas = st.floats(0.0, 20.0, allow_nan=False)


def test_lambda_validation():
    assert validate_lambda(2) == 2.0
    assert is_critical(1.0) and not is_critical(1.1)
    for bad in (-0.1, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            validate_lambda(bad)


def test_g0_anchor_values():
    assert thermodynamic_correlator(1e6, 0) == pytest.approx(1.0, abs=1e-6)
    assert abs(thermodynamic_correlator(0.0, 0)) < 1e-12
    assert thermodynamic_correlator(1.0, 0) == pytest.approx(2 / math.pi, abs=1e-12)


def test_lambda_zero_single_offset():
    # only the A_{l+1} B_l bond survives when the field is off
    vals = {r: thermodynamic_correlator(0.0, r) for r in range(-4, 5)}
    assert vals[-1] == pytest.approx(-1.0, abs=1e-12)
    for r, v in vals.items():
        if r != -1:
            assert abs(v) < 1e-12


@pytest.mark.parametrize("r", [-5, -1, 0, 1, 2, 7, 20, 33])
def test_critical_closed_form(r):
    assert thermodynamic_correlator(1.0, r) == pytest.approx(critical_correlator(r), abs=1e-11)


@given(lambdas, st.integers(-40, 40))
@settings(max_examples=60, deadline=None)
def test_correlator_bounded(lam, r):
    assert abs(thermodynamic_correlator(lam, r)) <= 1.0


def test_quadrature_failure_carries_iterates():
    q = QuadratureConfig(base_nodes=16, max_doublings=1, abs_tol=1e-300)
    with pytest.raises(QuadratureError) as info:
        thermodynamic_correlator(0.7, 3, q)
    assert info.value.last is not None and info.value.previous is not None


def test_quadrature_config_validation():
    for kw in ({"base_nodes": 4}, {"max_doublings": 0}, {"abs_tol": 0}):
        with pytest.raises(ValueError):
            QuadratureConfig(**kw)


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.0])
def test_quadrature_convergence(lam):
    coarse = QuadratureConfig(abs_tol=1e-10)
    fine = QuadratureConfig(abs_tol=0.5e-10)
    for r in range(-6, 7):
        a = thermodynamic_correlator(lam, r, coarse)
        b = thermodynamic_correlator(lam, r, fine)
        assert abs(a - b) <= coarse.abs_tol


def test_offset_limit():
    with pytest.raises(ValueError):
        thermodynamic_correlator(1.0, 5000)


@pytest.mark.parametrize("lam", [2.0, 5.0])
def test_exponential_decay_off_criticality(lam):
    r = np.arange(3, 15)
    g = np.abs([thermodynamic_correlator(lam, int(x)) for x in r])
    slope = np.polyfit(r, np.log(g), 1)[0]
    xi = -1.0 / slope
    assert xi > 0
    g0 = abs(thermodynamic_correlator(lam, 0))
    # a slightly larger ξ bounds every point from above
    assert np.all(g < g0 * np.exp(-r / (1.05 * xi)))


def test_power_law_at_criticality():
    r = np.arange(1, 31)
    g = np.abs([thermodynamic_correlator(1.0, int(x)) for x in r])
    loglin = np.polyfit(r, np.log(g), 1, full=True)[1][0]
    loglog = np.polyfit(np.log(r), np.log(g), 1, full=True)[1][0]
    assert loglog < 0.1 * loglin


def test_thermodynamic_kernel_examples():
    k = build_kernel_thermodynamic(1.0, 2)
    assert k.is_toeplitz(0.0)
    assert np.allclose(np.diag(k.entries), 2 / math.pi)
    k = build_kernel_thermodynamic(1e6, 2)
    assert np.allclose(k.entries, np.eye(2), atol=1e-6)
    k = build_kernel_thermodynamic(0.0, 3)
    assert np.allclose(k.entries, -np.eye(3, k=-1), atol=1e-12)


@given(st.floats(0.0, 6.0), st.integers(1, 9))
@settings(max_examples=25, deadline=None)
def test_thermodynamic_kernel_toeplitz_exact(lam, n):
    k = build_kernel_thermodynamic(lam, n)
    assert k.is_toeplitz(0.0)
    assert np.all(np.abs(k.entries) <= 1)


def test_kernel_is_immutable_and_checked():
    k = build_kernel_thermodynamic(0.5, 3)
    with pytest.raises(ValueError):
        k.entries[0, 0] = 1.0
    with pytest.raises(ValueError):
        CorrelationKernel(THERMODYNAMIC, 2, np.full((2, 2), 1.5), 1.0)
    with pytest.raises(ValueError):
        CorrelationKernel("bogus", 1, np.eye(1), 1.0)
    blk = k.block(1, 2)
    assert blk.size == 2 and np.array_equal(blk.entries, k.entries[1:3, 1:3])


def test_finite_product_state_limit():
    k = build_kernel_finite(1e6, 4)
    assert np.allclose(k.entries, np.eye(4), atol=1e-6)


@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 1.5, 3.0])
@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_finite_kernel_matches_ed(lam, n):
    k = build_kernel_finite(lam, n)
    gs = ground_state_of(n, lam)
    assert np.abs(majorana_pair_expectations(gs) - k.entries).max() < 1e-10
    assert abs(k.meta["energy"] - gs.energy) < 1e-9


@pytest.mark.parametrize("lam", [0.4, 1.0, 1.8])
def test_open_chain_matches_ed(lam):
    k = build_kernel_finite(lam, 6, boundary="open")
    gs = ground_state_of(6, lam, boundary="open")
    assert np.abs(majorana_pair_expectations(gs) - k.entries).max() < 1e-10


@pytest.mark.parametrize("lam", [0.3, 0.9, 1.0, 1.7, 4.0])
@pytest.mark.parametrize("n", [3, 4, 7, 10])
def test_momentum_energy_matches_sectors(lam, n):
    k = build_kernel_finite(lam, n)
    for sector, e in k.meta["sector_energies"].items():
        assert free_fermion_energy(lam, n, sector) == pytest.approx(e, abs=1e-10)


def test_finite_vs_thermodynamic_backends():
    # small critical ring: short-range entries close but not equal; entries
    # near the corners see the wrap bond and differ by O(1)
    fin = build_kernel_finite(1.0, 8).entries
    tl = build_kernel_thermodynamic(1.0, 8).entries
    offset = np.abs(np.subtract.outer(np.arange(8), np.arange(8)))
    diff = np.abs(fin - tl)[offset <= 3].max()
    assert 0 < diff < 0.05
    assert np.abs(fin - tl).max() > 0.05
    # large gapped ring: agree in the bulk
    fin = build_kernel_finite(2.0, 64).entries[24:40, 24:40]
    tl = build_kernel_thermodynamic(2.0, 16).entries
    assert np.abs(fin - tl).max() < 1e-6


def test_finite_chain_cap():
    with pytest.raises(CapacityError):
        build_kernel_finite(1.0, 10, cap=8)
    with pytest.raises(ValueError):
        build_kernel_finite(1.0, 1)
    with pytest.raises(ValueError):
        build_kernel(1.0, 3, backend="nope")


@pytest.mark.parametrize("backend", [THERMODYNAMIC, FINITE_CHAIN])
def test_csv_round_trip(tmp_path, backend):
    k = build_kernel(0.7, 5, backend)
    path = tmp_path / "k.csv"
    write_kernel_csv(k, path)
    back = read_kernel_csv(path)
    assert back.backend == backend and back.size == 5 and back.lam == 0.7
    assert np.array_equal(back.entries, k.entries)
    assert path.read_bytes().splitlines()[0] == b"lambda,N,backend"


def test_read_rejects_foreign_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_kernel_csv(p)
