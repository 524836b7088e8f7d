"""Second-order Reed-Muller chirp sequences over GF(2).

Bit order: ``binary_expansion(j, s)`` puts the least significant bit of ``j``
in the LAST entry.  Every module in the package uses this convention, and it
is the one under which the odd/even split of a sequence peels off the last
row and column of the generating matrix.

A pair (P, b) serializes to m(m+3)/2 bits as the row-major upper triangle of
P (diagonal included) followed by b.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import _kernels

UNITS = _kernels.UNITS


def binary_expansion(j: int, s: int) -> np.ndarray:
    """Length-``s`` binary vector of ``j``, least significant bit last."""
    if s < 1:
        raise ValueError(f"s must be positive, got {s}")
    if not 0 <= j < (1 << s):
        raise ValueError(f"j={j} out of range for {s} bits")
    return np.array([(j >> (s - 1 - k)) & 1 for k in range(s)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    """Inverse of :func:`binary_expansion`."""
    v = 0
    for x in bits:
        v = (v << 1) | int(x)
    return v


@lru_cache(maxsize=None)
def index_bits(s: int) -> np.ndarray:
    """Read-only (2^s, s) matrix whose row j is ``binary_expansion(j, s)``."""
    j = np.arange(1 << s)
    a = ((j[:, None] >> (s - 1 - np.arange(s))[None, :]) & 1).astype(np.uint8)
    a.flags.writeable = False
    return a


def n_pair_bits(m: int) -> int:
    return m * (m + 3) // 2


class PairMB:
    """Symmetric binary matrix ``P`` and binary vector ``b`` naming one codeword.

    Instances are immutable; equality and hashing use the serialized bits.
    """

    __slots__ = ("m", "P", "b", "_key")

    def __init__(self, P, b):
        P = np.array(P, dtype=np.uint8, copy=True)
        b = np.array(b, dtype=np.uint8, copy=True).reshape(-1)
        m = b.shape[0]
        if m < 1:
            raise ValueError("empty pair")
        if P.shape != (m, m):
            raise ValueError(f"P has shape {P.shape}, expected {(m, m)}")
        if not np.array_equal(P, P.T):
            raise ValueError("P must be symmetric")
        if P.max(initial=0) > 1 or b.max(initial=0) > 1:
            raise ValueError("entries of P and b must be 0 or 1")
        P.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_key", (m, self.to_bits().tobytes()))

    def __setattr__(self, name, value):
        raise AttributeError("PairMB is immutable")

    def __eq__(self, other):
        if not isinstance(other, PairMB):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"PairMB(m={self.m}, bits={''.join(map(str, self.to_bits()))})"

    def to_bits(self) -> np.ndarray:
        iu = np.triu_indices(self.m)
        return np.concatenate([self.P[iu], self.b]).astype(np.uint8)

    @classmethod
    def from_bits(cls, bits, m: int) -> "PairMB":
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if bits.shape[0] != n_pair_bits(m):
            raise ValueError(
                f"expected {n_pair_bits(m)} bits for m={m}, got {bits.shape[0]}")
        if bits.max(initial=0) > 1:
            raise ValueError("bits must be 0 or 1")
        P = np.zeros((m, m), dtype=np.uint8)
        iu = np.triu_indices(m)
        ntri = len(iu[0])
        P[iu] = bits[:ntri]
        P = P | P.T
        return cls(P, bits[ntri:])

    @classmethod
    def zero(cls, m: int) -> "PairMB":
        return cls(np.zeros((m, m), np.uint8), np.zeros(m, np.uint8))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> "PairMB":
        return cls.from_bits(rng.integers(0, 2, n_pair_bits(m)), m)


def enumerate_pairs(m: int):
    """Yield every pair of size ``m`` in serialization order."""
    nb = n_pair_bits(m)
    for v in range(1 << nb):
        yield PairMB.from_bits(binary_expansion(v, nb), m)


def rm_exponents(pair: PairMB) -> np.ndarray:
    """Integer exponents (2 b.a + a.P.a) mod 4, one per sequence index."""
    a = index_bits(pair.m).astype(np.int64)
    P = pair.P.astype(np.int64)
    quad = np.einsum("jk,kl,jl->j", a, P, a)
    return (2 * (a @ pair.b.astype(np.int64)) + quad) % 4


def rm_sequence(pair: PairMB) -> np.ndarray:
    """The length-2^m chirp ``i ** ((2 b.a + a.P.a) mod 4)``."""
    return UNITS[rm_exponents(pair)]


def rm_sequence_fast(pair: PairMB) -> np.ndarray:
    """Same samples as :func:`rm_sequence`, via the compiled O(m 2^m) kernel."""
    out = np.empty(1 << pair.m, dtype=np.complex128)
    _kernels.rm_samples(pair.P, pair.b, out)
    return out


def sub_pair(pair: PairMB, s: int):
    """Split the leading s x s block of ``pair`` into its recursive parts.

    Returns ``(lead, alpha, b_s, beta_s)`` where ``lead`` is the pair formed by
    the leading (s-1) x (s-1) block of P and the first s-1 entries of b,
    ``alpha`` is column s above the diagonal, and ``b_s``/``beta_s`` are entry
    s of b and of the diagonal (1-based s).
    """
    if not 2 <= s <= pair.m:
        raise ValueError(f"s={s} outside 2..{pair.m}")
    lead = PairMB(pair.P[: s - 1, : s - 1], pair.b[: s - 1])
    alpha = pair.P[: s - 1, s - 1].copy()
    return lead, alpha, int(pair.b[s - 1]), int(pair.P[s - 1, s - 1])


def leading_pair(pair: PairMB, s: int) -> PairMB:
    """The pair built from the leading s x s block (s = m returns ``pair``)."""
    if not 1 <= s <= pair.m:
        raise ValueError(f"s={s} outside 1..{pair.m}")
    return PairMB(pair.P[:s, :s], pair.b[:s])


def compose_pair(lead: PairMB, alpha, b_s: int, beta_s: int) -> PairMB:
    """Inverse of :func:`sub_pair`: grow ``lead`` by one row and column."""
    s1 = lead.m
    alpha = np.asarray(alpha, dtype=np.uint8).reshape(-1)
    if alpha.shape[0] != s1:
        raise ValueError(f"alpha must have length {s1}")
    P = np.zeros((s1 + 1, s1 + 1), dtype=np.uint8)
    P[:s1, :s1] = lead.P
    P[:s1, s1] = alpha
    P[s1, :s1] = alpha
    P[s1, s1] = beta_s
    return PairMB(P, np.append(lead.b, np.uint8(b_s)))


def walsh_modulation(alpha, b_s: int, beta_s: int) -> np.ndarray:
    """Walsh sequence of frequency ``alpha`` times the unit i**(2 b_s + beta_s)."""
    alpha = np.asarray(alpha, dtype=np.int64).reshape(-1)
    if alpha.size and alpha.max() > 1 or b_s not in (0, 1) or beta_s not in (0, 1):
        raise ValueError("inputs must be binary")
    s1 = alpha.shape[0]
    if s1 == 0:
        return np.array([UNITS[(2 * b_s + beta_s) % 4]])
    signs = 1 - 2 * ((index_bits(s1).astype(np.int64) @ alpha) & 1)
    return UNITS[(2 * b_s + beta_s) % 4] * signs


def _check_pow2(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    return n.bit_length() - 1


def fwht(x, inplace: bool = False) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform in natural (Hadamard) order.

    With ``inplace=True`` the caller's complex128 buffer is overwritten and
    returned; no allocation happens in that case.
    """
    if inplace:
        if not (isinstance(x, np.ndarray) and x.dtype == np.complex128
                and x.flags.c_contiguous and x.ndim == 1):
            raise TypeError("in-place fwht needs a contiguous 1-D complex128 array")
        buf = x
    else:
        buf = np.array(x, dtype=np.complex128).reshape(-1)
    _check_pow2(buf.shape[0])
    _kernels.fwht_inplace(buf)
    return buf


def hadamard(s: int) -> np.ndarray:
    """Dense +-1 Hadamard matrix with entry (l, j) = (-1)^{a_l . a_j}."""
    a = index_bits(s).astype(np.int64)
    return 1 - 2 * ((a @ a.T) & 1)
