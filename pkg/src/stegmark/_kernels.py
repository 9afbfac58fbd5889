"""Hot inner loops, each in a numba flavour and a numpy flavour.

The public name (``permutation``, ``fnv1a64``, ``svd_batch``, ...) is bound
to one of the two at import time according to :data:`stegmark._accel.USE_NUMBA`.
Both flavours are always importable as ``<name>_jit`` / ``<name>_numpy`` so
the test suite and the benchmark can compare them directly.  Outputs of the
two flavours are identical for the integer kernels; the SVD kernels agree to
rounding.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

SVD_TOL = 1e-12
SVD_MAX_SWEEPS = 30
# columns with squared norm below this fraction of ||A||_F^2 are rounding noise
NEGLIGIBLE = 1e-30


# --------------------------------------------------------------------------
# keyed Fisher-Yates permutation


@njit
def permutation_jit(n, seed):
    perm = np.arange(n, dtype=np.int64)
    x = np.uint64(seed)
    golden = np.uint64(GOLDEN)
    m1 = np.uint64(MIX1)
    m2 = np.uint64(MIX2)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    zero = np.uint64(0)
    for i in range(n - 1, 0, -1):
        bound = np.uint64(i + 1)
        rem = (zero - bound) % bound  # 2**64 mod bound
        limit = zero - rem
        while True:
            x += golden
            z = x
            z = (z ^ (z >> s30)) * m1
            z = (z ^ (z >> s27)) * m2
            z = z ^ (z >> s31)
            if rem == zero or z < limit:
                break
        j = np.int64(z % bound)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


def permutation_numpy(n, seed):
    # Sequential by nature; plain Python integers keep it exact.
    perm = list(range(n))
    x = int(seed) & MASK64
    two64 = 1 << 64
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = two64 - (two64 % bound)
        while True:
            x = (x + GOLDEN) & MASK64
            z = x
            z = ((z ^ (z >> 30)) * MIX1) & MASK64
            z = ((z ^ (z >> 27)) * MIX2) & MASK64
            z ^= z >> 31
            if z < limit:
                break
        j = z % bound
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


# --------------------------------------------------------------------------
# FNV-1a 64


@njit
def fnv1a64_jit(data):
    h = np.uint64(FNV_OFFSET)
    p = np.uint64(FNV_PRIME)
    for i in range(data.shape[0]):
        h = (h ^ np.uint64(data[i])) * p
    return h


def fnv1a64_numpy(data):
    h = FNV_OFFSET
    for byte in data.tobytes():
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


# --------------------------------------------------------------------------
# one-sided Jacobi SVD on a stack of small square matrices


@njit
def _complete_columns(u, sigma, smax):
    # Replace numerically null columns of u by an orthonormal completion,
    # projecting each basis vector off the accepted columns and keeping the
    # largest residual.
    n = u.shape[0]
    cutoff = 1e-12 * max(smax, 1e-300)
    for j in range(n):
        if sigma[j] > cutoff:
            continue
        best = np.zeros(n)
        bestnorm = -1.0
        for e in range(n):
            cand = np.zeros(n)
            cand[e] = 1.0
            for _ in range(2):
                for k in range(n):
                    if k == j or (sigma[k] <= cutoff and k > j):
                        continue
                    dot = 0.0
                    for r in range(n):
                        dot += u[r, k] * cand[r]
                    for r in range(n):
                        cand[r] -= dot * u[r, k]
            norm = 0.0
            for r in range(n):
                norm += cand[r] * cand[r]
            norm = np.sqrt(norm)
            if norm > bestnorm:
                bestnorm = norm
                best = cand / norm
        for r in range(n):
            u[r, j] = best[r]


@njit
def svd_batch_jit(a):
    nb = a.shape[0]
    n = a.shape[1]
    us = np.empty_like(a)
    vs = np.empty_like(a)
    ss = np.empty((nb, n))
    sweeps_used = np.zeros(nb, dtype=np.int64)
    for b in range(nb):
        u = a[b].copy()
        v = np.eye(n)
        floor = NEGLIGIBLE * np.sum(u * u)
        converged = False
        sweeps = 0
        while sweeps < SVD_MAX_SWEEPS:
            sweeps += 1
            rotated = False
            for p in range(n - 1):
                for q in range(p + 1, n):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for r in range(n):
                        alpha += u[r, p] * u[r, p]
                        beta += u[r, q] * u[r, q]
                        gamma += u[r, p] * u[r, q]
                    if abs(gamma) <= SVD_TOL * np.sqrt(alpha * beta):
                        continue
                    if min(alpha, beta) <= floor:
                        continue
                    rotated = True
                    zeta = (beta - alpha) / (2.0 * gamma)
                    sgn = 1.0 if zeta >= 0.0 else -1.0
                    t = sgn / (abs(zeta) + math.hypot(1.0, zeta))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = c * t
                    for r in range(n):
                        up = u[r, p]
                        uq = u[r, q]
                        u[r, p] = c * up - s * uq
                        u[r, q] = s * up + c * uq
                        vp = v[r, p]
                        vq = v[r, q]
                        v[r, p] = c * vp - s * vq
                        v[r, q] = s * vp + c * vq
            if not rotated:
                converged = True
                break
        sweeps_used[b] = sweeps if converged else -1
        sigma = np.empty(n)
        for j in range(n):
            norm = 0.0
            for r in range(n):
                norm += u[r, j] * u[r, j]
            sigma[j] = np.sqrt(norm)
        order = np.argsort(-sigma, kind="mergesort")
        smax = sigma[order[0]]
        for jj in range(n):
            j = order[jj]
            ss[b, jj] = sigma[j]
            for r in range(n):
                vs[b, r, jj] = v[r, j]
                us[b, r, jj] = u[r, j] / sigma[j] if sigma[j] > 0.0 else 0.0
        _complete_columns(us[b], ss[b], smax)
    return us, ss, vs, sweeps_used


def _complete_columns_numpy(u, sigma):
    n = u.shape[0]
    cutoff = 1e-12 * max(sigma.max(), 1e-300)
    for j in range(n):
        if sigma[j] > cutoff:
            continue
        keep = [k for k in range(n) if k != j and (sigma[k] > cutoff or k < j)]
        basis = u[:, keep]
        cands = np.eye(n)
        for _ in range(2):
            cands -= basis @ (basis.T @ cands)
        norms = np.linalg.norm(cands, axis=0)
        e = int(np.argmax(norms))
        u[:, j] = cands[:, e] / norms[e]


def svd_batch_numpy(a):
    """Batched Jacobi: every pair rotation is applied to all blocks at once."""
    u = np.array(a, dtype=np.float64, copy=True)
    nb, n, _ = u.shape
    v = np.broadcast_to(np.eye(n), u.shape).copy()
    active = np.ones(nb, dtype=bool)
    floor = NEGLIGIBLE * np.einsum("bij,bij->b", u, u)
    sweeps_used = np.full(nb, -1, dtype=np.int64)
    for sweep in range(1, SVD_MAX_SWEEPS + 1):
        rotated = np.zeros(nb, dtype=bool)
        for p in range(n - 1):
            for q in range(p + 1, n):
                up = u[:, :, p]
                uq = u[:, :, q]
                alpha = np.einsum("ij,ij->i", up, up)
                beta = np.einsum("ij,ij->i", uq, uq)
                gamma = np.einsum("ij,ij->i", up, uq)
                rot = active & (np.abs(gamma) > SVD_TOL * np.sqrt(alpha * beta))
                rot &= np.minimum(alpha, beta) > floor
                if not rot.any():
                    continue
                rotated |= rot
                g = np.where(rot, gamma, 1.0)
                zeta = (beta - alpha) / (2.0 * g)
                sgn = np.where(zeta >= 0.0, 1.0, -1.0)
                t = sgn / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = np.where(rot, 1.0 / np.sqrt(1.0 + t * t), 1.0)
                s = np.where(rot, c * t, 0.0)
                c = c[:, None]
                s = s[:, None]
                new_p = c * up - s * uq
                new_q = s * up + c * uq
                u[:, :, p] = new_p
                u[:, :, q] = new_q
                vp = v[:, :, p].copy()
                vq = v[:, :, q]
                v[:, :, p] = c * vp - s * vq
                v[:, :, q] = s * vp + c * vq
        done = active & ~rotated
        sweeps_used[done] = sweep
        active &= rotated
        if not active.any():
            break
    sigma = np.sqrt(np.einsum("bij,bij->bj", u, u))
    order = np.argsort(-sigma, axis=1, kind="stable")
    sigma = np.take_along_axis(sigma, order, axis=1)
    u = np.take_along_axis(u, order[:, None, :], axis=2)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(sigma[:, None, :] > 0.0, u / sigma[:, None, :], 0.0)
    cutoff = 1e-12 * np.maximum(sigma[:, 0], 1e-300)
    for b in np.nonzero((sigma <= cutoff[:, None]).any(axis=1))[0]:
        _complete_columns_numpy(u[b], sigma[b])
    return u, sigma, v, sweeps_used


# --------------------------------------------------------------------------
# k-means nearest-centroid assignment (squared Euclidean, lowest index wins)


@njit
def assign_jit(pixels, centroids):
    n = pixels.shape[0]
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = -1
        bestd = 0
        for c in range(k):
            d = 0
            for ch in range(pixels.shape[1]):
                diff = pixels[i, ch] - centroids[c, ch]
                d += diff * diff
            if best < 0 or d < bestd:
                best = c
                bestd = d
        labels[i] = best
        dists[i] = bestd
    return labels, dists


def assign_numpy(pixels, centroids):
    diff = pixels[:, None, :] - centroids[None, :, :]
    d = np.einsum("nkc,nkc->nk", diff, diff)
    labels = np.argmin(d, axis=1)
    return labels.astype(np.int64), d[np.arange(len(pixels)), labels]


# --------------------------------------------------------------------------
# pixel value differencing block loops
#
# ``small``/``large`` are the ordered pair members of every block, already in
# traversal order; ``lo``/``hi``/``nbits`` describe the range table and
# ``which`` maps a difference 0..255 to its range index.


@njit
def pvd_skip_jit(small, large, lo, hi, which):
    out = np.empty(small.shape[0], dtype=np.bool_)
    for i in range(small.shape[0]):
        d = large[i] - small[i]
        m = hi[which[d]] - d
        fl = m >> 1
        ce = -((-m) >> 1)
        if d & 1:
            out[i] = small[i] - ce < 0 or large[i] + fl > 255
        else:
            out[i] = small[i] - fl < 0 or large[i] + ce > 255
    return out


def pvd_skip_numpy(small, large, lo, hi, which):
    d = large - small
    m = hi[which[d]] - d
    fl = m >> 1
    ce = -((-m) >> 1)
    odd = (d & 1) == 1
    new_small = np.where(odd, small - ce, small - fl)
    new_large = np.where(odd, large + fl, large + ce)
    return (new_small < 0) | (new_large > 255)


@njit
def pvd_embed_jit(small, large, skip, bits, lo, nbits, which):
    nb = small.shape[0]
    out_s = small.copy()
    out_l = large.copy()
    pos = 0
    total = bits.shape[0]
    for i in range(nb):
        if pos >= total:
            break
        if skip[i]:
            continue
        d = large[i] - small[i]
        k = which[d]
        n = nbits[k]
        val = 0
        for t in range(n):
            bit = bits[pos + t] if pos + t < total else 0
            val = (val << 1) | bit
        pos += n
        m = lo[k] + val - d
        fl = m >> 1
        ce = -((-m) >> 1)
        if d & 1:
            out_s[i] = small[i] - ce
            out_l[i] = large[i] + fl
        else:
            out_s[i] = small[i] - fl
            out_l[i] = large[i] + ce
    return out_s, out_l


def pvd_embed_numpy(small, large, skip, bits, lo, nbits, which):
    d = large - small
    k = which[d]
    n = np.where(skip, 0, nbits[k])
    start = np.concatenate(([0], np.cumsum(n)[:-1]))
    used = (start < len(bits)) & (n > 0)
    width = int(nbits.max())
    padded = np.zeros(len(bits) + width, dtype=np.int64)
    padded[: len(bits)] = bits
    idx = start[used, None] + np.arange(width)[None, :]
    nu = n[used, None]
    take = np.arange(width)[None, :] < nu
    weights = np.where(take, 1 << np.maximum(nu - 1 - np.arange(width)[None, :], 0), 0)
    val = (padded[idx] * weights).sum(axis=1)
    m = lo[k[used]] + val - d[used]
    fl = m >> 1
    ce = -((-m) >> 1)
    odd = (d[used] & 1) == 1
    out_s = small.copy()
    out_l = large.copy()
    out_s[used] = np.where(odd, small[used] - ce, small[used] - fl)
    out_l[used] = np.where(odd, large[used] + fl, large[used] + ce)
    return out_s, out_l


@njit
def pvd_extract_jit(small, large, skip, lo, nbits, which):
    total = 0
    for i in range(small.shape[0]):
        if not skip[i]:
            total += nbits[which[large[i] - small[i]]]
    out = np.empty(total, dtype=np.uint8)
    pos = 0
    for i in range(small.shape[0]):
        if skip[i]:
            continue
        d = large[i] - small[i]
        k = which[d]
        n = nbits[k]
        val = d - lo[k]
        for t in range(n):
            out[pos + t] = (val >> (n - 1 - t)) & 1
        pos += n
    return out


def pvd_extract_numpy(small, large, skip, lo, nbits, which):
    d = (large - small)[~skip]
    k = which[d]
    n = nbits[k]
    val = d - lo[k]
    width = int(nbits.max())
    shifts = n[:, None] - 1 - np.arange(width)[None, :]
    mask = shifts >= 0
    bitgrid = (val[:, None] >> np.maximum(shifts, 0)) & 1
    return bitgrid[mask].astype(np.uint8)


# --------------------------------------------------------------------------
# dispatch

if USE_NUMBA:
    permutation = permutation_jit
    fnv1a64_array = fnv1a64_jit
    svd_batch = svd_batch_jit
    assign = assign_jit
    pvd_skip = pvd_skip_jit
    pvd_embed = pvd_embed_jit
    pvd_extract = pvd_extract_jit
else:
    permutation = permutation_numpy
    fnv1a64_array = fnv1a64_numpy
    svd_batch = svd_batch_numpy
    assign = assign_numpy
    pvd_skip = pvd_skip_numpy
    pvd_embed = pvd_embed_numpy
    pvd_extract = pvd_extract_numpy


KERNELS = {
    "permutation": (permutation_jit, permutation_numpy),
    "fnv1a64": (fnv1a64_jit, fnv1a64_numpy),
    "svd_batch": (svd_batch_jit, svd_batch_numpy),
    "assign": (assign_jit, assign_numpy),
    "pvd_skip": (pvd_skip_jit, pvd_skip_numpy),
    "pvd_embed": (pvd_embed_jit, pvd_embed_numpy),
    "pvd_extract": (pvd_extract_jit, pvd_extract_numpy),
}
