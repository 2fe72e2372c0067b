"""Stabilizer Rényi entropies from Wick determinants.

Every Pauli string is, up to a phase, one ordered Majorana monomial, and only
balanced monomials have nonzero ground-state expectation, so

    Σ_P ⟨P⟩^4 = Σ_{|I|=|J|} det(G[I, J])^4

over all pairs of equal-size site subsets. sum_sq and sum_quart below are these
two power sums.
"""

import csv
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .errors import CapacityError, MagicError, NumericalError
from .freefermion import (
    DEFAULT_QUADRATURE,
    FINITE_CHAIN,
    THERMODYNAMIC,
    build_kernel,
    thermodynamic_correlator,
    validate_lambda,
)
from .wick import monomial_count

PURE_CHAIN = "pure_chain"
REDUCED_BLOCK = "reduced_block"

DEFAULT_CAP = 14
DEFAULT_ZERO_TOL = 1e-10

RESULT_COLUMNS = (
    "lambda", "N_or_L", "kind", "backend", "m2", "m0", "sum_sq", "sum_quart", "runtime_ms",
)  # fmt: skip


@dataclass
class EntropyResult:
    m2: float
    sum_sq: float
    sum_quart: float
    lam: float
    sites: int
    kind: str
    backend: str
    m0: float = None
    cardinality: int = None
    zero_tol: float = None
    runtime_ms: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def density(self):
        return self.m2 / self.sites

    def row(self, runtime=True):
        r = {
            "lambda": self.lam,
            "N_or_L": self.sites,
            "kind": self.kind,
            "backend": self.backend,
            "m2": self.m2,
            "m0": self.m0,
            "sum_sq": self.sum_sq,
            "sum_quart": self.sum_quart,
            "runtime_ms": round(self.runtime_ms, 3),
        }
        if not runtime:
            del r["runtime_ms"]
        return r


@dataclass
class DensityPoint:
    lam: float
    L: int
    alpha_L: float
    epsilon_L: float = None
    result: EntropyResult = None

    def row(self):
        return {"lambda": self.lam, "L": self.L, "alpha_L": self.alpha_L, "epsilon_L": self.epsilon_L}


def _stabilizer_entropy(sum_quart, norm):
    m2 = -math.log2(sum_quart / norm)
    # exact stabilizer states give ±ulp around zero
    if -1e-12 < m2 < 0:
        m2 = 0.0
    return m2


def _check_cap(n, cap):
    if n > cap:
        raise CapacityError(
            f"N={n} exceeds cap {cap} ({monomial_count(n):,} determinants); raise the cap to force"
        )


def m2_pure(kernel, cap=DEFAULT_CAP, zero_tol=DEFAULT_ZERO_TOL, threads=1):
    """M₂ = -log₂(2^{-N} Σ C⁴) treating the kernel as a pure N-site state.

    For the finite-chain backend this is exact and Σ C² = 2^N is enforced. A
    thermodynamic kernel describes a mixed block, so the normalization only
    triggers a warning there.
    """
    n = kernel.size
    _check_cap(n, cap)
    t0 = time.perf_counter()
    s2, s4, card, per_k = kernels.minor_power_sums(kernel.entries, zero_tol=zero_tol, threads=threads)
    runtime = 1e3 * (time.perf_counter() - t0)
    rel = abs(s2 / 2.0**n - 1.0)
    if rel > 1e-6:
        msg = f"Σ C² = {s2:.12g} deviates from 2^{n} by {rel:.2e} (relative)"
        if kernel.backend == FINITE_CHAIN:
            raise NumericalError(msg)
        warnings.warn(msg + "; a thermodynamic block is not a pure state", stacklevel=2)
    return EntropyResult(
        m2=_stabilizer_entropy(s4, 2.0**n),
        sum_sq=s2,
        sum_quart=s4,
        lam=kernel.lam,
        sites=n,
        kind=PURE_CHAIN,
        backend=kernel.backend,
        m0=math.log2(card) - n,
        cardinality=card,
        zero_tol=zero_tol,
        runtime_ms=runtime,
        meta={"per_k": per_k.tolist()},
    )


def m2_reduced(kernel, L, start=0, cap=DEFAULT_CAP, zero_tol=DEFAULT_ZERO_TOL, threads=1):
    """M₂(ρ_L) = -log₂(Σ C⁴ / Σ C²) over monomials supported on an L-site block.

    ``m0`` is the matching cardinality entropy log₂(card / Σ C²), which reduces
    to log₂ card - N for a pure state.
    """
    if not 1 <= L <= kernel.size:
        raise ValueError(f"need 1 <= L <= {kernel.size}")
    _check_cap(L, cap)
    block = kernel.block(start, L)
    t0 = time.perf_counter()
    s2, s4, card, per_k = kernels.minor_power_sums(block.entries, zero_tol=zero_tol, threads=threads)
    runtime = 1e3 * (time.perf_counter() - t0)
    return EntropyResult(
        m2=_stabilizer_entropy(s4, s2),
        sum_sq=s2,
        sum_quart=s4,
        lam=kernel.lam,
        sites=L,
        kind=REDUCED_BLOCK,
        backend=kernel.backend,
        m0=math.log2(card / s2),
        cardinality=card,
        zero_tol=zero_tol,
        runtime_ms=runtime,
        meta={"block_start": start, "chain_size": kernel.size, "per_k": per_k.tolist()},
    )


def single_site_m2(lam, q=DEFAULT_QUADRATURE):
    """log₂[(1 + ⟨σᶻ⟩²) / (1 + ⟨σᶻ⟩⁴)] with ⟨σᶻ⟩ = G_0(λ)."""
    g2 = thermodynamic_correlator(lam, 0, q) ** 2
    return math.log2((1.0 + g2) / (1.0 + g2 * g2))


def importance_sampled_alpha(lam, n_sites, q=DEFAULT_QUADRATURE):
    """Density estimate from the σᶻ-string subgroup only.

    Keeping G_r ≈ G_0 δ_{r0}, only diagonal monomials I = J survive with
    |C| = |G_0|^k; there are C(N, k) of them at order k. The restricted sums
    are accumulated term by term and must reproduce :func:`single_site_m2`.
    """
    if n_sites < 1:
        raise ValueError("N must be >= 1")
    g = thermodynamic_correlator(lam, 0, q)
    terms = [(comb(n_sites, k), g ** (2 * k)) for k in range(n_sites + 1)]
    den = kernels.tree_sum([c * t for c, t in terms])
    num = kernels.tree_sum([c * t * t for c, t in terms])
    alpha = -math.log2(num / den) / n_sites
    closed = single_site_m2(lam, q)
    if abs(alpha - closed) > 1e-12 * max(1.0, abs(closed)):
        raise AssertionError(f"Z-subgroup estimate {alpha!r} != closed form {closed!r}")
    return alpha


def m0_cardinality(kernel, zero_tol=DEFAULT_ZERO_TOL, cap=DEFAULT_CAP, threads=1):
    """(number of balanced monomials with |C| > zero_tol, log₂(card) - N)."""
    _check_cap(kernel.size, cap)
    _, _, card, _ = kernels.minor_power_sums(kernel.entries, zero_tol=zero_tol, threads=threads)
    return card, math.log2(card) - kernel.size


@dataclass
class SweepResult:
    rows: list
    failures: list

    @property
    def ok(self):
        return not self.failures


def density_sweep(
    lambdas,
    sizes,
    mode="pure",
    backend=THERMODYNAMIC,
    boundary="periodic",
    chain_size=None,
    q=DEFAULT_QUADRATURE,
    cap=DEFAULT_CAP,
    zero_tol=DEFAULT_ZERO_TOL,
    threads=1,
):
    """Evaluate every (λ, size) pair in λ-major order.

    ``mode="pure"`` gives one :class:`EntropyResult` per chain length N;
    ``mode="reduced"`` gives a :class:`DensityPoint` per block length L. In
    reduced mode the thermodynamic kernel of size L already is the block; the
    finite backend cuts the block out of a ring of ``chain_size`` sites
    (default: 4·max(L), at least 16). Failures are collected, not raised.
    """
    lambdas = [validate_lambda(x) for x in lambdas]
    sizes = [int(s) for s in sizes]
    if not lambdas or not sizes:
        raise ValueError("need at least one λ and one size")
    if mode not in ("pure", "reduced"):
        raise ValueError(f"mode must be 'pure' or 'reduced', got {mode!r}")
    if chain_size is None:
        chain_size = max(16, 4 * max(sizes))
    rows, failures = [], []
    for lam in lambdas:
        for n in sizes:
            try:
                if mode == "pure":
                    kern = build_kernel(lam, n, backend, boundary, q)
                    rows.append(m2_pure(kern, cap, zero_tol, threads))
                else:
                    size = n if backend == THERMODYNAMIC else max(chain_size, n)
                    kern = build_kernel(lam, size, backend, boundary, q)
                    res = m2_reduced(kern, n, 0, cap, zero_tol, threads)
                    rows.append(DensityPoint(lam, n, res.m2 / n, None, res))
            except (MagicError, ValueError, np.linalg.LinAlgError) as exc:
                failures.append({"lambda": lam, "size": n, "error": f"{type(exc).__name__}: {exc}"})
    return SweepResult(rows, failures)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_to_csv(results, runtime=True, header_comment=None):
    buf = io.StringIO()
    if header_comment:
        for line in header_comment.splitlines():
            buf.write(f"# {line}\n")
    cols = [c for c in RESULT_COLUMNS if runtime or c != "runtime_ms"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in results:
        d = r.row(runtime)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def results_to_json(results, runtime=True, config=None):
    payload = {"results": [r.row(runtime) for r in results]}
    if config is not None:
        payload = {"config": config, **payload}
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def results_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for d in csv.DictReader(lines):
        out.append(
            EntropyResult(
                m2=float(d["m2"]),
                sum_sq=float(d["sum_sq"]),
                sum_quart=float(d["sum_quart"]),
                lam=float(d["lambda"]),
                sites=int(d["N_or_L"]),
                kind=d["kind"],
                backend=d["backend"],
                m0=float(d["m0"]) if d.get("m0") else None,
                runtime_ms=float(d["runtime_ms"]) if d.get("runtime_ms") else 0.0,
            )
        )
    return out


__all__ = [
    "EntropyResult",
    "DensityPoint",
    "SweepResult",
    "m2_pure",
    "m2_reduced",
    "single_site_m2",
    "importance_sampled_alpha",
    "m0_cardinality",
    "density_sweep",
    "results_to_csv",
    "results_to_json",
    "results_from_csv",
]
