"""Pauli strings ↔ ordered Majorana monomials, and Wick determinants.

Sites are 1-based here to match the usual ``A_l = Z_1 ⋯ Z_{l-1} X_l`` and
``B_l = Z_1 ⋯ Z_{l-1} Y_l`` notation. Phases are fourth roots of unity stored as
an integer exponent ``e`` (phase = i^e), so products never touch floating point.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .kernels import batched_det_np, colex_subsets

_PHASES = (1, 1j, -1, -1j)

# single-qubit products: (a, b) -> (exponent of i, result)
_PAULI_MUL = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}  # fmt: skip


@dataclass(frozen=True)
class PauliString:
    """``i^phase · word[0] ⊗ word[1] ⊗ ⋯`` with word letters in IXYZ."""

    word: str
    phase: int = 0

    def __post_init__(self):
        if set(self.word) - set("IXYZ"):
            raise ValueError(f"bad Pauli word {self.word!r}")
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def n_sites(self):
        return len(self.word)

    @property
    def coefficient(self):
        return _PHASES[self.phase]

    def __mul__(self, other):
        if self.n_sites != other.n_sites:
            raise ValueError("length mismatch")
        e = self.phase + other.phase
        out = []
        for a, b in zip(self.word, other.word):
            de, c = _PAULI_MUL[a, b]
            e += de
            out.append(c)
        return PauliString("".join(out), e)

    def masks(self):
        """(x_mask, z_mask) with site 1 the most significant bit; Y sets both."""
        n = self.n_sites
        x = z = 0
        for pos, c in enumerate(self.word):
            bit = 1 << (n - 1 - pos)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
        return x, z

    def to_matrix(self):
        single = {
            "I": np.eye(2),
            "X": np.array([[0, 1], [1, 0]]),
            "Y": np.array([[0, -1j], [1j, 0]]),
            "Z": np.diag([1.0, -1.0]),
        }
        out = np.array([[1.0 + 0j]])
        for c in self.word:
            out = np.kron(out, single[c])
        return self.coefficient * out


@dataclass(frozen=True)
class MajoranaMonomial:
    """``A_{a_1} ⋯ A_{a_k} B_{b_1} ⋯ B_{b_l}`` with strictly increasing site lists."""

    a_sites: tuple = ()
    b_sites: tuple = ()

    def __post_init__(self):
        a, b = tuple(int(i) for i in self.a_sites), tuple(int(j) for j in self.b_sites)
        for s in (a, b):
            if any(x >= y for x, y in zip(s, s[1:])) or (s and s[0] < 1):
                raise ValueError(f"site list must be strictly increasing and >= 1: {s}")
        object.__setattr__(self, "a_sites", a)
        object.__setattr__(self, "b_sites", b)

    @property
    def balanced(self):
        return len(self.a_sites) == len(self.b_sites)

    @property
    def order(self):
        return len(self.a_sites)


def majorana_a(l, n):
    return PauliString("Z" * (l - 1) + "X" + "I" * (n - l))


def majorana_b(l, n):
    return PauliString("Z" * (l - 1) + "Y" + "I" * (n - l))


def majorana_to_pauli(m, n_sites):
    """The Pauli string (with its exact phase) equal to the monomial ``m``."""
    top = max(m.a_sites + m.b_sites, default=0)
    if top > n_sites:
        raise ValueError(f"site {top} out of range for N={n_sites}")
    out = PauliString("I" * n_sites)
    for l in m.a_sites:
        out = out * majorana_a(l, n_sites)
    for l in m.b_sites:
        out = out * majorana_b(l, n_sites)
    return out


def pauli_to_majorana(p):
    """Return ``(m, e)`` with ``p = i^e · m``.

    Sweeps from the right. An odd number of Majoranas on site l drags a Z over
    every site to its left, so the letter still owed at site l is the target
    letter times Z^(string parity); X owes A_l, Y owes B_l, Z owes both.
    """
    flip = {"I": "Z", "Z": "I", "X": "Y", "Y": "X"}
    a, b = [], []
    odd = False
    for pos in range(p.n_sites, 0, -1):
        c = p.word[pos - 1]
        if odd:
            c = flip[c]
        if c in "XZ":
            a.append(pos)
        if c in "YZ":
            b.append(pos)
        if c in "XY":
            odd = not odd
    a.reverse()
    b.reverse()
    m = MajoranaMonomial(tuple(a), tuple(b))
    rebuilt = majorana_to_pauli(m, p.n_sites)
    if rebuilt.word != p.word:
        raise AssertionError("Majorana image does not reproduce the Pauli word")
    return m, (p.phase - rebuilt.phase) % 4


def wick_determinant(kernel, m):
    """det of the k×k block ``G[a_r, b_c]``; unbalanced monomials give exactly 0."""
    if not m.balanced:
        return 0.0
    if m.order == 0:
        return 1.0
    g = kernel.entries if hasattr(kernel, "entries") else np.asarray(kernel)
    rows = np.asarray(m.a_sites) - 1
    cols = np.asarray(m.b_sites) - 1
    return float(batched_det_np(g[np.ix_(rows, cols)][None])[0])


def monomial_expectation(kernel, m):
    """Complex ⟨A_{a_1}⋯A_{a_k} B_{b_1}⋯B_{b_k}⟩ from the Pfaffian of the contractions.

    With ⟨A A⟩ = ⟨B B⟩ = δ and ⟨A_i B_j⟩ = i G[i, j] the Pfaffian collapses to
    ``(-1)^{k(k-1)/2} i^k det G_sub``.
    """
    if not m.balanced:
        return 0j
    k = m.order
    sign = -1 if (k * (k - 1) // 2) % 2 else 1
    return sign * _PHASES[k % 4] * wick_determinant(kernel, m)


def monomial_count(n_sites, k_max=None):
    k_max = n_sites if k_max is None else k_max
    return sum(comb(n_sites, k) ** 2 for k in range(k_max + 1))


def enumerate_balanced_monomials(n_sites, k_max=None, start=0, stop=None):
    """Every balanced monomial with order <= k_max, each exactly once.

    Order: k ascending, then a-subset in colex order, then b-subset in colex
    order. ``start``/``stop`` slice the stream by global index so disjoint
    ranges can be handed to different workers.
    """
    k_max = n_sites if k_max is None else k_max
    if not 0 <= k_max <= n_sites:
        raise ValueError("need 0 <= k_max <= N")
    total = monomial_count(n_sites, k_max)
    stop = total if stop is None else min(stop, total)
    base = 0
    for k in range(k_max + 1):
        subs = colex_subsets(n_sites, k) + 1
        c = len(subs)
        block = c * c
        lo, hi = max(start - base, 0), min(stop - base, block)
        for idx in range(lo, hi):
            i, j = divmod(idx, c)
            yield MajoranaMonomial(tuple(subs[i]), tuple(subs[j]))
        base += block
        if base >= stop:
            return


def colex_rank(subset):
    """0-based colex rank of a strictly increasing tuple of 1-based sites."""
    return sum(comb(s - 1, i + 1) for i, s in enumerate(subset))


def monomial_index(m, n_sites):
    """Global position of ``m`` in :func:`enumerate_balanced_monomials` order."""
    if not m.balanced:
        raise ValueError("only balanced monomials are enumerated")
    k = m.order
    base = monomial_count(n_sites, k - 1) if k else 0
    return base + colex_rank(m.a_sites) * comb(n_sites, k) + colex_rank(m.b_sites)
