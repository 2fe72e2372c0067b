"""Least-squares fits and the figure-data drivers built on them."""

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import DensityPoint, m2_pure, m2_reduced, single_site_m2
from .errors import FitError, UndefinedReferenceError
from .freefermion import (
    DEFAULT_QUADRATURE,
    FINITE_CHAIN,
    THERMODYNAMIC,
    build_kernel_finite,
    build_kernel_thermodynamic,
)

FIGURE_LAMBDAS = (0.1, 0.3, 0.6, 1.0, 2.0, 2.5, 5.0)
FIT_N = tuple(range(5, 13))
FIT_L = tuple(range(5, 12))
ALPHA_FLOOR = 1e-9


@dataclass
class FitResult:
    model: str
    params: tuple
    param_errors: tuple
    residual_rms: float
    points_used: list
    residuals: list = field(default_factory=list)
    max_rel_residual: float = None
    accepted: bool = True

    def as_dict(self):
        return {
            "model": self.model,
            "params": list(self.params),
            "param_errors": list(self.param_errors),
            "residual_rms": self.residual_rms,
            "max_rel_residual": self.max_rel_residual,
            "accepted": self.accepted,
            "points_used": [list(p) for p in self.points_used],
        }


def fit_linear(points):
    """OLS line ``y = α x + β`` with standard errors from the residual variance."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise FitError("linear fit needs at least 3 points")
    x, y = np.array(pts).T
    if np.ptp(x) == 0:
        raise FitError("rank deficient: all x equal")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    alpha = float(np.sum((x - xm) * (y - ym)) / sxx)
    beta = float(ym - alpha * xm)
    res = y - (alpha * x + beta)
    s2 = float(np.sum(res**2) / (len(x) - 2))
    se_a = math.sqrt(s2 / sxx)
    se_b = math.sqrt(s2 * (1.0 / len(x) + xm * xm / sxx))
    return FitResult(
        model="linear_in_N",
        params=(alpha, beta),
        param_errors=(se_a, se_b),
        residual_rms=float(np.sqrt(np.mean(res**2))),
        points_used=pts,
        residuals=res.tolist(),
    )


def fit_inverse(points, max_rel_residual=0.1):
    """Least squares of ``ε = γ / L`` through the origin.

    ``accepted`` is False when any point misses the fitted curve by more than
    ``max_rel_residual`` of its own value, i.e. the data do not follow 1/L.
    """
    pts = [(float(L), float(e)) for L, e in points]
    if len(pts) < 3:
        raise FitError("inverse fit needs at least 3 points")
    L, eps = np.array(pts).T
    if np.any(L < 1):
        raise FitError("L must be >= 1")
    u = 1.0 / L
    suu = float(np.sum(u * u))
    gamma = float(np.sum(u * eps) / suu)
    res = eps - gamma * u
    s2 = float(np.sum(res**2) / (len(L) - 1))
    rel = np.abs(res) / np.maximum(np.abs(eps), np.finfo(float).tiny)
    worst = float(rel.max())
    return FitResult(
        model="inverse_in_L",
        params=(gamma,),
        param_errors=(math.sqrt(s2 / suu),),
        residual_rms=float(np.sqrt(np.mean(res**2))),
        points_used=pts,
        residuals=res.tolist(),
        max_rel_residual=worst,
        accepted=worst < max_rel_residual,
    )


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------


def chain_entropy(lam, n_sites, backend=FINITE_CHAIN, q=DEFAULT_QUADRATURE, threads=1):
    """M₂ of an N-site chain for the fig1a series.

    The finite ring is a pure state and uses the pure normalization. A
    thermodynamic kernel is the reduced state of N sites of the infinite chain,
    so it goes through the mixed-state formula instead.
    """
    if backend == FINITE_CHAIN:
        return m2_pure(build_kernel_finite(lam, n_sites), threads=threads)
    if backend == THERMODYNAMIC:
        return m2_reduced(build_kernel_thermodynamic(lam, n_sites, q), n_sites, threads=threads)
    raise ValueError(f"unknown backend {backend!r}")


def block_density(lam, L, backend=THERMODYNAMIC, chain_size=64, q=DEFAULT_QUADRATURE, threads=1):
    """α_L = M₂(ρ_L) / L for the first L sites."""
    if backend == THERMODYNAMIC:
        kern = build_kernel_thermodynamic(lam, L, q)
    elif backend == FINITE_CHAIN:
        kern = build_kernel_finite(lam, max(chain_size, L))
    else:
        raise ValueError(f"unknown backend {backend!r}")
    res = m2_reduced(kern, L, threads=threads)
    return DensityPoint(float(lam), L, res.m2 / L, None, res)


def extensive_fit(lam, n_range=FIT_N, backend=FINITE_CHAIN, q=DEFAULT_QUADRATURE, threads=1):
    """Fit M₂ = αN + β; returns (FitResult, list of EntropyResult)."""
    results = [chain_entropy(lam, n, backend, q, threads) for n in n_range]
    return fit_linear([(r.sites, r.m2) for r in results]), results


def block_error(alpha, alpha_L, absolute=False):
    """ε_L: |α - α_L| / α, or the bare |α - α_L| when ``absolute``."""
    if absolute:
        return abs(alpha - alpha_L)
    if alpha <= ALPHA_FLOOR:
        raise UndefinedReferenceError(f"reference density {alpha!r} too small for a relative error")
    return abs(alpha - alpha_L) / alpha


def error_scaling(
    lam,
    L_range=FIT_L,
    backend=THERMODYNAMIC,
    alpha=None,
    n_range=FIT_N,
    fit_backend=FINITE_CHAIN,
    absolute=False,
    q=DEFAULT_QUADRATURE,
    threads=1,
):
    """[(L, ε_L)] with ε_L = |α - α_L| / α, or |α - α_L| when ``absolute``.

    The reference α defaults to the fitted slope over ``n_range`` on
    ``fit_backend``.

    Raises
    ------
    UndefinedReferenceError
        If α is below 1e-9 bits per site (stabilizer limits).
    """
    if alpha is None:
        alpha = extensive_fit(lam, n_range, fit_backend, q, threads)[0].params[0]
    if alpha <= ALPHA_FLOOR:
        raise UndefinedReferenceError(f"α({lam}) = {alpha!r}: ε_L undefined")
    out = []
    for L in L_range:
        pt = block_density(lam, L, backend, q=q, threads=threads)
        out.append((L, block_error(alpha, pt.alpha_L, absolute)))
    return out


def figure_data(
    lambdas=FIGURE_LAMBDAS,
    n_range=FIT_N,
    L_range=FIT_L,
    critical_lambda=1.0,
    fit_backend=FINITE_CHAIN,
    block_backend=THERMODYNAMIC,
    q=DEFAULT_QUADRATURE,
    threads=1,
):
    """Everything behind the three figures, as plain rows plus a summary dict."""
    fig1a, fig1b, fits = [], [], {}
    for lam in lambdas:
        fit, results = extensive_fit(lam, n_range, fit_backend, q, threads)
        a, b = fit.params
        fits[lam] = fit
        for r in results:
            fig1a.append(
                {"lambda": lam, "N": r.sites, "m2": r.m2, "m0": r.m0, "kind": r.kind,
                 "fit_m2": a * r.sites + b}  # fmt: skip
            )
        a1 = single_site_m2(lam, q)
        fig1b.append(
            {
                "lambda": lam,
                "inv_lambda": 1.0 / lam,
                "alpha": a,
                "alpha_err": fit.param_errors[0],
                "alpha_1": a1,
                "abs_gap": abs(a - a1),
                "rel_gap": abs(a - a1) / a if a > ALPHA_FLOOR else None,
            }
        )
    if critical_lambda in fits:
        alpha_c = fits[critical_lambda].params[0]
    else:
        alpha_c = extensive_fit(critical_lambda, n_range, fit_backend, q, threads)[0].params[0]
    fig1c = []
    for L in L_range:
        pt = block_density(critical_lambda, L, block_backend, q=q, threads=threads)
        fig1c.append(
            {
                "L": L,
                "alpha_L": pt.alpha_L,
                "epsilon_rel": block_error(alpha_c, pt.alpha_L),
                "epsilon_abs": block_error(alpha_c, pt.alpha_L, absolute=True),
            }
        )
    gamma_rel = fit_inverse([(r["L"], r["epsilon_rel"]) for r in fig1c])
    gamma_abs = fit_inverse([(r["L"], r["epsilon_abs"]) for r in fig1c])
    for r in fig1c:
        r["fit_rel"] = gamma_rel.params[0] / r["L"]
        r["fit_abs"] = gamma_abs.params[0] / r["L"]
    summary = {
        "fit_backend": fit_backend,
        "block_backend": block_backend,
        "n_range": list(n_range),
        "L_range": list(L_range),
        "critical_lambda": critical_lambda,
        "linear_fits": {repr(lam): f.as_dict() for lam, f in fits.items()},
        "alpha_critical": alpha_c,
        "gamma_relative": gamma_rel.as_dict(),
        "gamma_absolute": gamma_abs.as_dict(),
    }
    return fig1a, fig1b, fig1c, summary
