"""Compiled inner loops shared by rm_core and the decoder.

All index arithmetic uses the repo-wide convention: bit k of a length-s
binary vector is bit (s - 1 - k) of the integer, so the trailing vector
entry is the least significant bit.
"""

import numpy as np
from numba import njit

# i ** e for e = 0..3
UNITS = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


@njit(cache=True)
def popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def fwht_inplace(x):
    n = x.shape[0]
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for j in range(start, start + h):
                u = x[j]
                v = x[j + h]
                x[j] = u + v
                x[j + h] = u - v
        h *= 2


@njit(cache=True)
def rm_exponents(P, b, out):
    """Write (2 b.a + a.P.a) mod 4 for every index into ``out``.

    P and b are uint8 arrays with the leading entry as the most significant
    bit.  Runs in O(m 2^m) using per-row masks of the strict upper triangle.
    """
    m = b.shape[0]
    masks = np.zeros(m, dtype=np.int64)
    bmask = 0
    for k in range(m):
        if b[k]:
            bmask |= 1 << (m - 1 - k)
        for l in range(k + 1, m):
            if P[k, l]:
                masks[k] |= 1 << (m - 1 - l)
    for j in range(1 << m):
        e = 2 * popcount(bmask & j)
        for k in range(m):
            if (j >> (m - 1 - k)) & 1:
                e += P[k, k] + 2 * popcount(masks[k] & j)
        out[j] = e & 3


@njit(cache=True)
def rm_samples(P, b, out):
    ex = np.empty(out.shape[0], dtype=np.int64)
    rm_exponents(P, b, ex)
    for j in range(out.shape[0]):
        out[j] = UNITS[ex[j]]


@njit(cache=True)
def fold(y, out):
    # out[j] = y_{2j} * conj(y_{2j-1}) in 1-based terms
    for j in range(out.shape[0]):
        out[j] = y[2 * j + 1] * np.conj(y[2 * j])


@njit(cache=True)
def polarity(peak):
    """Quadrant decision on a WHT peak; returns (b, beta)."""
    re = peak.real
    im = peak.imag
    if re >= abs(im):
        return 0, 0
    if -re >= abs(im):
        return 1, 0
    if im > abs(re):
        return 0, 1
    return 1, 1


@njit(cache=True)
def unit_of(b_s, beta_s):
    return UNITS[(2 * b_s + beta_s) & 3]


@njit(cache=True)
def reduce_layer(y, alpha, unit, out):
    # out[j] = (y_{2j-1} + conj(v_j) y_{2j}) / 2 with v_j = unit * (-1)^{alpha.a_j}
    cu = np.conj(unit)
    for j in range(out.shape[0]):
        if popcount(alpha & j) & 1:
            out[j] = 0.5 * (y[2 * j] - cu * y[2 * j + 1])
        else:
            out[j] = 0.5 * (y[2 * j] + cu * y[2 * j + 1])


@njit(cache=True)
def argmax_abs2(t):
    best = 0
    bv = -1.0
    for l in range(t.shape[0]):
        v = t[l].real * t[l].real + t[l].imag * t[l].imag
        if v > bv:
            bv = v
            best = l
    return best


@njit(cache=True)
def set_layer(P, b, s, alpha, b_s, beta_s):
    """Write (alpha^s, b_s, beta_s) into row/column s-1 of P and b."""
    for k in range(s - 1):
        bit = (alpha >> (s - 2 - k)) & 1
        P[s - 1, k] = bit
        P[k, s - 1] = bit
    P[s - 1, s - 1] = beta_s
    b[s - 1] = b_s


@njit(cache=True)
def greedy_complete(y, P, b):
    """Run the greedy layer chain from len(y) = 2^s down to the last layer.

    Fills rows 0..s-1 of (P, b) and returns the scaled channel estimate
    sqrt(gamma) * h_hat for the assembled pair.
    """
    cur = y.copy()
    n = cur.shape[0]
    s = 0
    while (1 << s) < n:
        s += 1
    while s >= 2:
        half = n // 2
        t = np.empty(half, dtype=np.complex128)
        fold(cur, t)
        fwht_inplace(t)
        alpha = argmax_abs2(t)
        peak = t[alpha]
        if peak.real == 0.0 and peak.imag == 0.0:
            b_s, beta_s = 0, 0
        else:
            b_s, beta_s = polarity(peak)
        set_layer(P, b, s, alpha, b_s, beta_s)
        nxt = np.empty(half, dtype=np.complex128)
        reduce_layer(cur, alpha, unit_of(b_s, beta_s), nxt)
        cur = nxt
        n = half
        s -= 1
    # last layer: polarity of conj(y_1) y_2, then the channel estimate
    peak = np.conj(cur[0]) * cur[1]
    if peak.real == 0.0 and peak.imag == 0.0:
        b1, beta1 = 0, 0
    else:
        b1, beta1 = polarity(peak)
    P[0, 0] = beta1
    b[0] = b1
    return 0.5 * (cur[0] + np.conj(unit_of(b1, beta1)) * cur[1])


@njit(cache=True)
def chirp_by_layers(P, b, out):
    """Samples of the pair's chirp built by interleaving layer by layer.

    Uses c^s[2j] = c^{s-1}[j] and c^s[2j+1] = v_j c^{s-1}[j]; O(2^m) total.
    """
    m = b.shape[0]
    out[0] = 1.0
    out[1] = unit_of(b[0], P[0, 0])
    n = 2
    for s in range(2, m + 1):
        alpha = 0
        for k in range(s - 1):
            alpha = (alpha << 1) | P[k, s - 1]
        u = unit_of(b[s - 1], P[s - 1, s - 1])
        for j in range(n - 1, -1, -1):
            c = out[j]
            out[2 * j] = c
            if popcount(alpha & j) & 1:
                out[2 * j + 1] = -u * c
            else:
                out[2 * j + 1] = u * c
        n *= 2


@njit(cache=True)
def list_detect(y, widths, P_out, b_out):
    """Best leaf over the branch tree given by ``widths`` (top layer first).

    Paths below the branching depth are completed greedily.  The winner
    maximises |gain|, which is the same as minimising ||y - gain c||^2 since
    gain = <c, y> / 2^m for every leaf.  Ties keep the earliest leaf.
    """
    n = y.shape[0]
    m = 0
    while (1 << m) < n:
        m += 1
    depth = min(widths.shape[0], m - 1)
    maxw = 1
    for d in range(depth):
        if widths[d] > maxw:
            maxw = widths[d]
    bufs = np.zeros((depth + 1, n), dtype=np.complex128)
    bufs[0, :] = y
    cand = np.zeros((depth, maxw), dtype=np.int64)
    cb = np.zeros((depth, maxw), dtype=np.int64)
    cbeta = np.zeros((depth, maxw), dtype=np.int64)
    ncand = np.zeros(depth, dtype=np.int64)
    pos = np.zeros(depth, dtype=np.int64)
    Ps = np.zeros((depth + 1, m, m), dtype=np.uint8)
    bs = np.zeros((depth + 1, m), dtype=np.uint8)
    best = -1.0
    best_gain = 0j

    # expand level d: fold + fwht of bufs[d] and pick candidates
    d = 0
    expand = True
    while True:
        if expand:
            if d == depth:
                Pc = Ps[d].copy()
                bc = bs[d].copy()
                size = n >> d
                gain = greedy_complete(bufs[d, :size], Pc, bc)
                g2 = gain.real * gain.real + gain.imag * gain.imag
                if g2 > best:
                    best = g2
                    best_gain = gain
                    P_out[:, :] = Pc
                    b_out[:] = bc
                expand = False
                d -= 1
                if d < 0:
                    break
                continue
            size = n >> d
            half = size // 2
            t = np.empty(half, dtype=np.complex128)
            fold(bufs[d, :size], t)
            fwht_inplace(t)
            w = min(widths[d], half)
            a2 = np.empty(half)
            for l in range(half):
                a2[l] = t[l].real * t[l].real + t[l].imag * t[l].imag
            order = np.argsort(-a2, kind="mergesort")
            for c in range(w):
                al = order[c]
                cand[d, c] = al
                pk = t[al]
                if pk.real == 0.0 and pk.imag == 0.0:
                    cb[d, c], cbeta[d, c] = 0, 0
                else:
                    cb[d, c], cbeta[d, c] = polarity(pk)
            ncand[d] = w
            pos[d] = 0
        # take the next candidate at level d
        if pos[d] < ncand[d]:
            c = pos[d]
            pos[d] += 1
            s = m - d
            size = n >> d
            Ps[d + 1] = Ps[d]
            bs[d + 1] = bs[d]
            set_layer(Ps[d + 1], bs[d + 1], s, cand[d, c], cb[d, c], cbeta[d, c])
            reduce_layer(bufs[d, :size], cand[d, c], unit_of(cb[d, c], cbeta[d, c]),
                         bufs[d + 1, :size // 2])
            d += 1
            expand = True
        else:
            d -= 1
            expand = False
            if d < 0:
                break
    return best_gain
