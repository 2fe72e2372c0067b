"""Majorana two-point kernels ⟨A_l B_m⟩ of the transverse-field Ising ground state.

The stored matrix is real: ``G[l, m] = -i ⟨A_l B_m⟩``, so that ``G[l, l] = ⟨σ^z_l⟩``
and the all-up product state has ``G = 1``. For ``H = -Σ X_l X_{l+1} - λ Σ Z_l``
the bulk couples ``A_{l+1}`` to ``B_l``, so at λ = 0 the only surviving entry is
``G[l+1, l] = -1``; the thermodynamic integrand carries the matching sign of
the ``sin θ sin rθ`` term.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import CapacityError, QuadratureError

THERMODYNAMIC = "thermodynamic"
FINITE_CHAIN = "finite_chain"
BACKENDS = (THERMODYNAMIC, FINITE_CHAIN)

MAX_OFFSET = 4096
FINITE_CAP = 2048


def validate_lambda(lam):
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"transverse field must be finite and >= 0, got {lam}")
    return lam


def is_critical(lam, tol=1e-12):
    return abs(float(lam) - 1.0) <= tol


@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss-Legendre node doubling: stop when two iterates differ by < abs_tol."""

    base_nodes: int = 64
    max_doublings: int = 14
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.base_nodes < 16:
            raise ValueError("base_nodes must be >= 16")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be >= 1")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True, eq=False)
class CorrelationKernel:
    """Immutable ⟨A_l B_m⟩ data (times -i) for ``size`` sites.

    ``meta`` holds backend-specific details: boundary, parity sector and
    ground energy for the finite chain, the quadrature config for the
    thermodynamic one.
    """

    backend: str
    size: int
    entries: np.ndarray
    lam: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.array(self.entries, dtype=np.float64)
        if g.shape != (self.size, self.size):
            raise ValueError(f"entries must be {self.size}x{self.size}, got {g.shape}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if np.any(np.abs(g) > 1 + 1e-9):
            raise ValueError("kernel entries must lie in [-1, 1]")
        g.setflags(write=False)
        object.__setattr__(self, "entries", g)

    def block(self, start, length):
        """Kernel restricted to sites ``start .. start+length-1`` (0-based)."""
        if start < 0 or length < 1 or start + length > self.size:
            raise ValueError("block out of range")
        sub = self.entries[start : start + length, start : start + length]
        meta = dict(self.meta, block_start=start)
        return CorrelationKernel(self.backend, length, sub, self.lam, meta)

    def is_toeplitz(self, tol=0.0):
        g = self.entries
        return bool(np.all(np.abs(g[1:, 1:] - g[:-1, :-1]) <= tol))


# --------------------------------------------------------------------------
# thermodynamic limit
# --------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _gl_nodes(n):
    x, w = roots_legendre(n)
    theta = 0.5 * math.pi * (x + 1.0)
    return theta, 0.5 * math.pi * w


def _integrand(lam, r, theta):
    # λ - cos θ written as (λ - 1) + 2 sin²(θ/2) to keep precision near λ = 1
    d = (lam - 1.0) + 2.0 * np.sin(0.5 * theta) ** 2
    s = np.sin(theta)
    return (d * np.cos(r * theta) + s * np.sin(r * theta)) / np.hypot(s, d)


def _gl_integral(lam, r, n):
    theta, w = _gl_nodes(n)
    return float(np.dot(w, _integrand(lam, r, theta))) / math.pi


@lru_cache(maxsize=16384)
def _thermodynamic_cached(lam, r, q):
    n = q.base_nodes
    if abs(r) > 16:
        n = max(n, 8 * abs(r))
    prev = _gl_integral(lam, r, n)
    for _ in range(q.max_doublings):
        n *= 2
        cur = _gl_integral(lam, r, n)
        if abs(cur - prev) < q.abs_tol:
            if abs(cur) > 1 + 1e-9:
                raise QuadratureError(f"|G_{r}({lam})| = {abs(cur)} exceeds 1", cur, prev)
            return min(1.0, max(-1.0, cur))
        prev = cur
    raise QuadratureError(
        f"G_{r}({lam}) did not converge to {q.abs_tol} in {q.max_doublings} doublings",
        cur,
        prev,
    )


def thermodynamic_correlator(lam, r, q=DEFAULT_QUADRATURE):
    """Infinite-chain ``-i ⟨A_l B_{l+r}⟩``.

    Computed as ``(1/π) ∫_0^π [(λ - cos θ) cos rθ + sin θ sin rθ] / ω(θ) dθ`` with
    ``ω = sqrt(sin²θ + (λ - cos θ)²)``. ``G_0(λ) = ⟨σ^z⟩`` and ``G_0(λ→∞) = 1``.

    Raises
    ------
    QuadratureError
        If node doubling fails to converge within ``q.max_doublings``.
    """
    lam = validate_lambda(lam)
    r = int(r)
    if abs(r) > MAX_OFFSET:
        raise ValueError(f"|r| must be <= {MAX_OFFSET}")
    return _thermodynamic_cached(lam, r, q)


def critical_correlator(r):
    """Closed form at λ = 1, where the integrand collapses to sin((r + 1/2)θ)."""
    return 2.0 / (math.pi * (2 * r + 1))


def build_kernel_thermodynamic(lam, n_sites, q=DEFAULT_QUADRATURE):
    """Toeplitz block ``G[l, m] = G_{m-l}(λ)`` from 2N-1 quadratures."""
    lam = validate_lambda(lam)
    if n_sites < 1:
        raise ValueError("N must be >= 1")
    offsets = {r: thermodynamic_correlator(lam, r, q) for r in range(1 - n_sites, n_sites)}
    idx = np.arange(n_sites)
    diff = idx[None, :] - idx[:, None]
    g = np.vectorize(offsets.__getitem__, otypes=[float])(diff)
    return CorrelationKernel(THERMODYNAMIC, n_sites, g, lam, {"quadrature": q})


# --------------------------------------------------------------------------
# finite chain
# --------------------------------------------------------------------------


def coupling_matrix(lam, n_sites, boundary="periodic", sector=1):
    """Real M with ``H = i Σ_{lm} M[l, m] A_l B_m`` on the given parity sector.

    On a ring the wrap bond ``X_N X_1`` carries the fermion parity ``Π Z``;
    ``sector=+1`` (even parity) gives antiperiodic fermions, ``-1`` periodic.
    """
    m = np.diag(np.full(n_sites, float(lam)))
    m[np.arange(1, n_sites), np.arange(n_sites - 1)] = -1.0
    if boundary == "periodic":
        m[0, n_sites - 1] += 1.0 if sector == 1 else -1.0
    elif boundary != "open":
        raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")
    return m


def _sector_ground(m, sector):
    u, s, vt = np.linalg.svd(m)
    occ = np.ones(len(s))
    energy = -float(s.sum())
    if sector is not None:
        parity = np.sign(np.linalg.det(u) * np.linalg.det(vt))
        if parity != sector:
            # flip the softest mode to land in the requested parity sector
            occ[-1] = -1.0
            energy += 2.0 * float(s[-1])
    return (u * occ) @ vt, energy, s


def free_fermion_energy(lam, n_sites, sector=1):
    """Momentum-sum ground energy of one parity sector of the periodic chain.

    Independent of the singular-value route. Single-mode energies are
    ``|λ - e^{ik}|`` with antiperiodic momenta k = 2π(n + 1/2)/N for even parity
    and periodic ones k = 2πn/N for odd parity. The filled sea of the odd sector
    has parity sign(λ - 1), so for λ > 1 the k = 0 mode (energy λ - 1) is flipped.
    """
    lam = float(lam)
    shift = 0.5 if sector == 1 else 0.0
    k = 2 * np.pi * (np.arange(n_sites) + shift) / n_sites
    energy = -float(np.abs(lam - np.exp(1j * k)).sum())
    if sector == -1 and lam > 1:
        energy += 2 * (lam - 1)
    return energy


def build_kernel_finite(lam, n_sites, boundary="periodic", cap=FINITE_CAP):
    """Exact ground-state kernel of the N-site chain (2N Majoranas).

    The coupling block is factorized as ``M = U Σ V^T``; the ground state has
    ``G = U V^T``. On a ring each parity sector is solved separately and the
    lower energy wins, ties going to the even sector.

    Raises
    ------
    CapacityError
        If ``n_sites`` exceeds ``cap``.
    """
    lam = validate_lambda(lam)
    if n_sites < 2:
        raise ValueError("N must be >= 2")
    if n_sites > cap:
        raise CapacityError(f"N={n_sites} exceeds finite-chain cap {cap}")
    if boundary == "open":
        g, energy, _ = _sector_ground(coupling_matrix(lam, n_sites, "open"), None)
        meta = {"boundary": "open", "sector": None, "energy": energy}
    else:
        g_e, e_e, _ = _sector_ground(coupling_matrix(lam, n_sites, "periodic", 1), 1)
        g_o, e_o, _ = _sector_ground(coupling_matrix(lam, n_sites, "periodic", -1), -1)
        tie = 1e-12 * max(1.0, abs(e_e))
        if e_o < e_e - tie:
            g, energy, sector = g_o, e_o, -1
        else:
            g, energy, sector = g_e, e_e, 1
        meta = {
            "boundary": "periodic",
            "sector": sector,
            "energy": energy,
            "sector_energies": {1: e_e, -1: e_o},
        }
    return CorrelationKernel(FINITE_CHAIN, n_sites, np.clip(g, -1.0, 1.0), lam, meta)


def build_kernel(lam, n_sites, backend=THERMODYNAMIC, boundary="periodic", q=DEFAULT_QUADRATURE):
    if backend == THERMODYNAMIC:
        return build_kernel_thermodynamic(lam, n_sites, q)
    if backend == FINITE_CHAIN:
        return build_kernel_finite(lam, n_sites, boundary)
    raise ValueError(f"unknown backend {backend!r}")


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def write_kernel_csv(kernel, path):
    """Header ``lambda,N,backend``, one metadata row, then the N×N matrix.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_kernel_rows(kernel, path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_kernel_rows(kernel, fh)


def _write_kernel_rows(kernel, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda", "N", "backend"])
    w.writerow([repr(kernel.lam), kernel.size, kernel.backend])
    for row in kernel.entries:
        w.writerow([repr(float(v)) for v in row])


def read_kernel_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["lambda", "N", "backend"]:
        raise ValueError(f"{path}: not a kernel CSV")
    lam, n, backend = float(rows[1][0]), int(rows[1][1]), rows[1][2]
    g = np.array([[float(v) for v in row] for row in rows[2 : 2 + n]])
    return CorrelationKernel(backend, n, g, lam, {"source": str(path)})
