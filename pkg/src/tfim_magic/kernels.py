"""Hot inner loops: minor-determinant power sums and Pauli-spectrum power sums.

Every kernel exists twice, a numba version (``*_nb``) and a vectorized numpy
version (``*_np``). Both perform the same floating-point operations in the same
order (partial-pivot LU, Walsh-Hadamard butterflies, compensated pairwise
tree), so the two paths agree bit for bit. ``minor_power_sums`` and
``pauli_power_sums`` dispatch on :data:`tfim_magic._accel.NUMBA_ENABLED`.
"""

from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from itertools import combinations

import numpy as np

from ._accel import NUMBA_ENABLED, njit, prange

# Elements of a (chunk, n_cols, k, k) minor stack built per numpy step.
_NP_CHUNK_ELEMS = 1 << 22


# --------------------------------------------------------------------------
# compensated pairwise tree
# --------------------------------------------------------------------------


def tree_sum_np(values, axis=-1):
    """Compensated pairwise sum along ``axis`` with a fixed reduction tree.

    Adjacent pairs are combined level by level with an error-free TwoSum; the
    rounding errors ride along in a parallel tree and are added back once at the
    root. An odd trailing element is carried to the next level unchanged.
    """
    s = np.moveaxis(np.asarray(values, dtype=np.float64), axis, -1)
    n = s.shape[-1]
    if n == 0:
        return np.zeros(s.shape[:-1])
    s = s.copy()
    c = np.zeros_like(s)
    while n > 1:
        h = n // 2
        a = s[..., 0 : 2 * h : 2]
        b = s[..., 1 : 2 * h : 2]
        t = a + b
        bp = t - a
        e = (a - (t - bp)) + (b - bp)
        cn = c[..., 0 : 2 * h : 2] + c[..., 1 : 2 * h : 2] + e
        if n % 2:
            t = np.concatenate([t, s[..., n - 1 : n]], axis=-1)
            cn = np.concatenate([cn, c[..., n - 1 : n]], axis=-1)
        s, c = t, cn
        n = s.shape[-1]
    return s[..., 0] + c[..., 0]


@njit(cache=True)
def tree_sum_nb(buf, n):
    """In-place version of :func:`tree_sum_np` on ``buf[:n]`` (1-D)."""
    if n == 0:
        return 0.0
    comp = np.zeros(n)
    while n > 1:
        h = n // 2
        for i in range(h):
            a = buf[2 * i]
            b = buf[2 * i + 1]
            t = a + b
            bp = t - a
            e = (a - (t - bp)) + (b - bp)
            ce = comp[2 * i] + comp[2 * i + 1] + e
            buf[i] = t
            comp[i] = ce
        if n % 2:
            buf[h] = buf[n - 1]
            comp[h] = comp[n - 1]
            n = h + 1
        else:
            n = h
    return buf[0] + comp[0]


def tree_sum(values):
    """Deterministic compensated sum of a 1-D sequence."""
    arr = np.array(values, dtype=np.float64).ravel()
    if NUMBA_ENABLED:
        return float(tree_sum_nb(arr, arr.shape[0]))
    return float(tree_sum_np(arr))


# --------------------------------------------------------------------------
# subsets
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def colex_subsets(n, k):
    """All k-subsets of ``range(n)`` as a (C(n,k), k) int64 array, colex order."""
    subs = sorted(combinations(range(n), k), key=lambda c: c[::-1])
    arr = np.array(subs, dtype=np.int64).reshape(len(subs), k)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# determinants
# --------------------------------------------------------------------------


@njit(cache=True)
def det_inplace_nb(a, k):
    """Determinant of ``a[:k, :k]`` by LU with partial pivoting; destroys ``a``."""
    sign = 1.0
    for c in range(k):
        p = c
        best = abs(a[c, c])
        for r in range(c + 1, k):
            v = abs(a[r, c])
            if v > best:
                best = v
                p = r
        if best == 0.0:
            return 0.0
        if p != c:
            for j in range(k):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            sign = -sign
        piv = a[c, c]
        for r in range(c + 1, k):
            f = a[r, c] / piv
            for j in range(c + 1, k):
                a[r, j] -= f * a[c, j]
    d = 1.0
    for c in range(k):
        d *= a[c, c]
    return sign * d


def batched_det_np(stack):
    """Determinants of a (B, k, k) stack, same arithmetic as :func:`det_inplace_nb`."""
    a = np.array(stack, dtype=np.float64)
    nb, k = a.shape[0], a.shape[-1]
    sign = np.ones(nb)
    dead = np.zeros(nb, dtype=bool)
    idx = np.arange(nb)
    for c in range(k):
        col = np.abs(a[:, c:, c])
        p = c + np.argmax(col, axis=1)
        dead |= col[idx, p - c] == 0.0
        swap = p != c
        if swap.any():
            rows_c = a[idx, c].copy()
            a[idx, c] = a[idx, p]
            a[idx, p] = rows_c
            sign[swap] = -sign[swap]
        piv = np.where(dead, 1.0, a[:, c, c])
        if c + 1 < k:
            f = a[:, c + 1 :, c] / piv[:, None]
            a[:, c + 1 :, c + 1 :] -= f[:, :, None] * a[:, c, None, c + 1 :]
    d = np.ones(nb)
    for c in range(k):
        d *= a[:, c, c]
    return np.where(dead, 0.0, sign * d)


# --------------------------------------------------------------------------
# minor power sums
# --------------------------------------------------------------------------


@njit(parallel=True, cache=True)
def _minor_partials_nb(g, rows, cols, zero_tol, out_sq, out_q, out_cnt):
    n_i = rows.shape[0]
    n_j = cols.shape[0]
    k = rows.shape[1]
    for ii in prange(n_i):
        a = np.empty((k, k))
        sq = np.empty(n_j)
        q = np.empty(n_j)
        cnt = 0
        for jj in range(n_j):
            for r in range(k):
                gr = rows[ii, r]
                for c in range(k):
                    a[r, c] = g[gr, cols[jj, c]]
            d = det_inplace_nb(a, k)
            s = d * d
            sq[jj] = s
            q[jj] = s * s
            if abs(d) > zero_tol:
                cnt += 1
        out_sq[ii] = tree_sum_nb(sq, n_j)
        out_q[ii] = tree_sum_nb(q, n_j)
        out_cnt[ii] = cnt


def _minor_partials_np_chunk(g, rows, cols, zero_tol):
    k = rows.shape[1]
    n_i, n_j = rows.shape[0], cols.shape[0]
    stack = g[rows[:, None, :, None], cols[None, :, None, :]]
    d = batched_det_np(stack.reshape(n_i * n_j, k, k)).reshape(n_i, n_j)
    sq = d * d
    q = sq * sq
    return (
        tree_sum_np(sq, axis=1),
        tree_sum_np(q, axis=1),
        np.count_nonzero(np.abs(d) > zero_tol, axis=1),
    )


def minor_row_partials(g, k, zero_tol=1e-10, threads=1, use_numba=None):
    """Per-row-subset partial sums of det², det⁴ and nonzero count at order k.

    Entry ``ii`` holds the sums over all column subsets J for the ii-th row
    subset in colex order. Row subsets are independent, which is how work is
    split across threads without affecting the result.
    """
    g = np.ascontiguousarray(g, dtype=np.float64)
    n = g.shape[0]
    subs = colex_subsets(n, k)
    n_i = subs.shape[0]
    use_numba = NUMBA_ENABLED if use_numba is None else use_numba
    if use_numba:
        out_sq = np.empty(n_i)
        out_q = np.empty(n_i)
        out_cnt = np.empty(n_i, dtype=np.int64)
        _minor_partials_nb(g, subs, subs, zero_tol, out_sq, out_q, out_cnt)
        return out_sq, out_q, out_cnt
    per_row = max(1, subs.shape[0] * max(k, 1) ** 2)
    step = max(1, _NP_CHUNK_ELEMS // per_row)
    starts = range(0, n_i, step)

    def work(s):
        return _minor_partials_np_chunk(g, subs[s : s + step], subs, zero_tol)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def minor_power_sums(g, k_max=None, zero_tol=1e-10, threads=1, use_numba=None):
    """Σ det², Σ det⁴ and #(|det| > zero_tol) over all square minors of ``g``.

    Returns ``(sum_sq, sum_quart, count, per_k)`` where ``per_k`` is a (k_max+1, 3)
    array of the per-order totals. The empty minor (k=0, det 1) is included.
    """
    n = g.shape[0]
    k_max = n if k_max is None else k_max
    per_k = np.zeros((k_max + 1, 3))
    for k in range(k_max + 1):
        sq, q, cnt = minor_row_partials(g, k, zero_tol, threads, use_numba)
        per_k[k] = tree_sum(sq), tree_sum(q), int(cnt.sum())
    return (
        tree_sum(per_k[:, 0]),
        tree_sum(per_k[:, 1]),
        int(per_k[:, 2].sum()),
        per_k,
    )


# --------------------------------------------------------------------------
# Pauli spectrum power sums
# --------------------------------------------------------------------------


def _wht_rows_np(v):
    v = np.array(v, dtype=np.complex128)
    rows, n = v.shape
    h = 1
    while h < n:
        w = v.reshape(rows, n // (2 * h), 2, h)
        a = w[:, :, 0, :].copy()
        b = w[:, :, 1, :]
        w[:, :, 0, :] = a + b
        w[:, :, 1, :] = a - b
        h *= 2
    return v


@njit(parallel=True, cache=True)
def _pauli_partials_nb(rho, out_sq, out_q):
    dim = rho.shape[0]
    for x in prange(dim):
        v = np.empty(dim, dtype=np.complex128)
        for b in range(dim):
            v[b] = rho[b, b ^ x]
        h = 1
        while h < dim:
            for i in range(0, dim, 2 * h):
                for j in range(i, i + h):
                    p = v[j]
                    m = v[j + h]
                    v[j] = p + m
                    v[j + h] = p - m
            h *= 2
        sq = np.empty(dim)
        q = np.empty(dim)
        for z in range(dim):
            s = v[z].real * v[z].real + v[z].imag * v[z].imag
            sq[z] = s
            q[z] = s * s
        out_sq[x] = tree_sum_nb(sq, dim)
        out_q[x] = tree_sum_nb(q, dim)


def pauli_spectrum(rho):
    """|tr(ρ X^x Z^z)| for every mask pair as a (2^n, 2^n) array indexed [x, z]."""
    rho = np.asarray(rho, dtype=np.complex128)
    dim = rho.shape[0]
    b = np.arange(dim)
    v = rho[b[None, :], b[None, :] ^ b[:, None]]
    return np.abs(_wht_rows_np(v))


def pauli_power_sums(rho, use_numba=None):
    """Σ_P tr²(Pρ) and Σ_P tr⁴(Pρ) over all 4^n Pauli words (n = log2 dim)."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    dim = rho.shape[0]
    use_numba = NUMBA_ENABLED if use_numba is None else use_numba
    if use_numba:
        sq = np.empty(dim)
        q = np.empty(dim)
        _pauli_partials_nb(rho, sq, q)
    else:
        b = np.arange(dim)
        v = _wht_rows_np(rho[b[None, :], b[None, :] ^ b[:, None]])
        s = v.real * v.real + v.imag * v.imag
        sq = tree_sum_np(s, axis=1)
        q = tree_sum_np(s * s, axis=1)
    return tree_sum(sq), tree_sum(q)
