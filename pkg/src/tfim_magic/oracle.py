"""Brute-force reference: dense ED of the Ising ring and 4^N Pauli enumeration.

Basis index convention: site 1 is the most significant bit, bit value 0 is σᶻ = +1.
Nothing here uses free-fermion machinery except the cross-checks at the bottom,
which compare against it.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from . import kernels
from .entropy import PURE_CHAIN, REDUCED_BLOCK, EntropyResult, m2_pure, m2_reduced
from .errors import CapacityError, NumericalError
from .freefermion import FINITE_CHAIN, build_kernel_finite, free_fermion_energy, validate_lambda
from .wick import (
    MajoranaMonomial,
    majorana_to_pauli,
    monomial_expectation,
)

ED_CAP = 14
PURE_PAULI_CAP = 10
MIXED_PAULI_CAP = 8
DEGENERACY_TOL = 1e-10


@dataclass
class DenseState:
    amplitudes: np.ndarray
    n_qubits: int
    energy: float = None
    degenerate: bool = False
    alternatives: list = field(default_factory=list)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError("amplitude vector has wrong length")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1) > 1e-10:
            raise ValueError(f"state not normalized (|ψ| = {norm})")

    def density_matrix(self):
        return DenseDensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.n_qubits)


@dataclass
class DenseDensityMatrix:
    matrix: np.ndarray
    n_qubits: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if abs(np.trace(m) - 1) > 1e-10:
            raise ValueError("trace must be 1")
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix not Hermitian")
        self.matrix = m

    def purity(self):
        return float(np.real(np.vdot(self.matrix, self.matrix)))


def _site_bit(site, n):
    return 1 << (n - site)


def build_hamiltonian(n_sites, lam, boundary="periodic", cap=ED_CAP):
    """Sparse ``H = -Σ X_i X_{i+1} - λ Σ Z_i``; a ring wraps bond (N, 1)."""
    lam = validate_lambda(lam)
    if n_sites < 2:
        raise ValueError("N must be >= 2")
    if n_sites > cap:
        raise CapacityError(f"ED limited to N <= {cap}")
    if boundary not in ("periodic", "open"):
        raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")
    dim = 2**n_sites
    b = np.arange(dim)
    diag = np.zeros(dim)
    for site in range(1, n_sites + 1):
        diag -= lam * (1 - 2 * ((b & _site_bit(site, n_sites)) != 0))
    bonds = [(i, i + 1) for i in range(1, n_sites)]
    if boundary == "periodic":
        bonds.append((n_sites, 1))
    rows, cols, vals = [b], [b], [diag]
    for i, j in bonds:
        mask = _site_bit(i, n_sites) | _site_bit(j, n_sites)
        rows.append(b ^ mask)
        cols.append(b)
        vals.append(-np.ones(dim))
    h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return h.tocsr()


def parity_diagonal(n_sites):
    """Eigenvalues of Π Z on the computational basis."""
    b = np.arange(2**n_sites)
    pop = np.array([bin(x).count("1") for x in b])
    return 1 - 2 * (pop % 2)


def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def ground_state(h, n_qubits=None):
    """Lowest eigenvector with the largest amplitude made real positive.

    If the two lowest levels are within ``DEGENERACY_TOL``, the state returned
    is the even-parity (Π Z = +1) combination and the odd one is kept in
    ``alternatives``; ``degenerate`` is set.
    """
    dim = h.shape[0]
    n = int(round(math.log2(dim))) if n_qubits is None else n_qubits
    if dim <= 4096:
        w, v = np.linalg.eigh(h.toarray())
        w, v = w[:2], v[:, :2]
    else:
        v0 = np.ones(dim) / math.sqrt(dim)
        w, v = eigsh(h, k=2, which="SA", v0=v0, tol=1e-13, maxiter=100000)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    gap = w[1] - w[0]
    if gap >= DEGENERACY_TOL:
        psi = _fix_phase(v[:, 0].astype(np.complex128))
        return DenseState(psi / np.linalg.norm(psi), n, float(w[0]))
    par = parity_diagonal(n)
    states = []
    for p in (1, -1):
        sub = v * (par == p)[:, None]
        # the component with the largest weight in this sector
        col = sub[:, np.argmax(np.linalg.norm(sub, axis=0))]
        nrm = np.linalg.norm(col)
        if nrm > 1e-6:
            states.append(_fix_phase(col.astype(np.complex128) / nrm))
    if not states:
        raise NumericalError("degenerate ground space has no parity-definite state")
    main = DenseState(states[0], n, float(w[0]), True)
    main.alternatives = [DenseState(s, n, float(w[0])) for s in states[1:]]
    return main


def ground_state_of(n_sites, lam, boundary="periodic"):
    return ground_state(build_hamiltonian(n_sites, lam, boundary), n_sites)


def pauli_expectation(state, pauli):
    """⟨P⟩ (with P's own phase) for a :class:`DenseState` or density matrix."""
    x, z = pauli.masks()
    n = pauli.n_sites
    dim = 2**n
    b = np.arange(dim)
    signs = 1 - 2 * (np.array([bin(v).count("1") for v in (b & z)]) % 2)
    # word operator = i^{#Y} X^x Z^z
    ny = bin(x & z).count("1")
    coeff = pauli.coefficient * (1j**ny)
    if isinstance(state, DenseState):
        psi = state.amplitudes
        val = np.sum(np.conj(psi[b ^ x]) * signs * psi)
    else:
        rho = state.matrix if isinstance(state, DenseDensityMatrix) else np.asarray(state)
        val = np.sum(signs * rho[b, b ^ x])
    return complex(coeff * val)


def m2_direct(state, cap_pure=PURE_PAULI_CAP, cap_mixed=MIXED_PAULI_CAP, m0_tol=None):
    """M₂ = -log₂[Σ_P tr⁴(Pρ) / (2^n tr ρ²)] by enumerating all 4^n Pauli words.

    Pauli traces come from one Walsh-Hadamard transform per X-mask, never from
    explicit Pauli matrices. ``m0_tol`` also counts |tr(Pρ)| > m0_tol.
    """
    if isinstance(state, DenseState):
        n, kind = state.n_qubits, PURE_CHAIN
        if n > cap_pure:
            raise CapacityError(f"pure enumeration limited to n <= {cap_pure}")
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
    else:
        dm = state if isinstance(state, DenseDensityMatrix) else DenseDensityMatrix(state, int(round(math.log2(len(state)))))
        n, kind = dm.n_qubits, REDUCED_BLOCK
        if n > cap_mixed:
            raise CapacityError(f"mixed enumeration limited to n <= {cap_mixed}")
        rho = dm.matrix
    s2, s4 = kernels.pauli_power_sums(rho)
    m2 = -math.log2(s4 / s2)
    if -1e-12 < m2 < 0:
        m2 = 0.0
    res = EntropyResult(m2=m2, sum_sq=s2, sum_quart=s4, lam=float("nan"), sites=n, kind=kind, backend="ed")
    if m0_tol is not None:
        card = int(np.count_nonzero(kernels.pauli_spectrum(rho) > m0_tol))
        res.cardinality = card
        res.m0 = math.log2(card / s2)
        res.zero_tol = m0_tol
    return res


def partial_trace(state, keep):
    """Reduced density matrix on the contiguous 1-based inclusive range ``keep``."""
    first, last = keep
    n = state.n_qubits
    if not 1 <= first <= last <= n:
        raise ValueError(f"keep range {keep} outside 1..{n}")
    psi = state.amplitudes.reshape(2 ** (first - 1), 2 ** (last - first + 1), 2 ** (n - last))
    rho = np.einsum("aib,ajb->ij", psi, psi.conj())
    return DenseDensityMatrix(rho, last - first + 1)


# --------------------------------------------------------------------------
# typicality
# --------------------------------------------------------------------------


def haar_state(n_qubits, rng):
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return DenseState(v / np.linalg.norm(v), n_qubits)


def epsilon_ab(state, n_a, floor=1e-9):
    """(M_AB - M_A - M_B) / M_AB with A the first ``n_a`` qubits; None if M_AB ≈ 0."""
    n = state.n_qubits
    m_ab = m2_direct(state).m2
    if m_ab < floor:
        return None
    m_a = m2_direct(partial_trace(state, (1, n_a))).m2
    m_b = m2_direct(partial_trace(state, (n_a + 1, n))).m2
    return (m_ab - m_a - m_b) / m_ab


@dataclass
class TypicalityStats:
    mean: float
    std: float
    stderr: float
    samples: list
    excluded: int


def typicality_demo(n_total, n_a, seed=0, trials=20, states=None):
    """ε_AB over Haar-random states, one child generator per trial.

    ``states`` replaces the random draw (used to feed degenerate inputs).
    """
    if n_total > PURE_PAULI_CAP:
        raise CapacityError(f"typicality demo limited to n_total <= {PURE_PAULI_CAP}")
    if not 1 <= n_a < n_total:
        raise ValueError("need 1 <= n_A < n_total")
    if states is None:
        children = np.random.SeedSequence(seed).spawn(trials)
        states = [haar_state(n_total, np.random.default_rng(c)) for c in children]
    samples, excluded = [], 0
    for st in states:
        e = epsilon_ab(st, n_a)
        if e is None:
            excluded += 1
        else:
            samples.append(e)
    arr = np.array(samples)
    if len(arr) == 0:
        return TypicalityStats(float("nan"), float("nan"), float("nan"), [], excluded)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return TypicalityStats(float(arr.mean()), std, std / math.sqrt(len(arr)), samples, excluded)


# --------------------------------------------------------------------------
# cross-module checks
# --------------------------------------------------------------------------


def majorana_pair_expectations(state):
    """-i⟨A_l B_m⟩ on a dense state, as an N×N real matrix (1-based sites → 0-based)."""
    n = state.n_qubits
    g = np.zeros((n, n))
    for l in range(1, n + 1):
        for m in range(1, n + 1):
            mono = MajoranaMonomial((l,), (m,))
            p = majorana_to_pauli(mono, n)
            # p carries the monomial's phase, so ⟨p⟩ = ⟨A_l B_m⟩
            val = pauli_expectation(state, p)
            g[l - 1, m - 1] = (-1j * val).real
    return g


def cross_check(n_sites, lam, tol=1e-8, boundary="periodic", block_max=4):
    """Free-fermion vs ED equivalences at one (N, λ); returns a list of row dicts."""
    if n_sites > PURE_PAULI_CAP:
        raise CapacityError(f"oracle check limited to N <= {PURE_PAULI_CAP}")
    kern = build_kernel_finite(lam, n_sites, boundary)
    gs = ground_state_of(n_sites, lam, boundary)
    rows = []

    def add(check, ff, ed, limit=tol):
        diff = abs(ff - ed)
        rows.append(
            {
                "check": check,
                "N": n_sites,
                "lambda": lam,
                "free_fermion": ff,
                "oracle": ed,
                "abs_diff": diff,
                "tol": limit,
                "pass": bool(diff <= limit),
            }
        )

    add("ground_energy", kern.meta["energy"], gs.energy)
    if boundary == "periodic":
        add("momentum_energy", free_fermion_energy(lam, n_sites, kern.meta["sector"]), gs.energy)
    g_ed = majorana_pair_expectations(gs)
    add("kernel_max_entry_diff", 0.0, float(np.abs(g_ed - kern.entries).max()))
    add("m2_pure", m2_pure(kern).m2, m2_direct(gs).m2)
    for L in range(1, min(block_max, n_sites - 1) + 1):
        dm = partial_trace(gs, (1, L))
        red = m2_reduced(kern, L)
        add(f"m2_block_L{L}", red.m2, m2_direct(dm).m2)
        add(f"purity_block_L{L}", red.sum_sq / 2**L, dm.purity())
    if n_sites >= 2:
        mono = MajoranaMonomial((1, 2), (1, 2))
        p = majorana_to_pauli(mono, n_sites)
        add("four_point_A1A2B1B2", monomial_expectation(kern, mono).real,
            (pauli_expectation(gs, p)).real)  # fmt: skip
    return rows
