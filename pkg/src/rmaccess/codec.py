"""Payload bits to transmitted waveforms.

Three layers:

* plain: m(m+3)/2 bits name one full-length chirp;
* slotted: the frame is cut into 2^p slots of length 2^q and a message rides
  in a primary slot and a secondary slot offset by a "translate" read from its
  own bits, with a check bit telling the two copies apart;
* patched: the frame is further cut into 2^r sub-blocks, each carrying one
  slotted patch, and patches after the first carry random parity bits over
  everything sent before them so the decoder can stitch them back together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rm_core import (PairMB, binary_expansion, bits_to_int, n_pair_bits,
                      rm_sequence_fast)

# P[0, 1] of the per-slot matrix; index 1 in the serialized layout.
CHECK_BIT_INDEX = 1

DEFAULT_BEAM = 64


def as_bits(bits) -> np.ndarray:
    a = np.asarray(bits, dtype=np.int64).reshape(-1)
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    return a.astype(np.uint8)


def bits_from_hex(text: str, nbits: int) -> np.ndarray:
    """Low ``nbits`` bits of a hex string, most significant bit first."""
    v = int(text.removeprefix("0x").removeprefix("0X") or "0", 16)
    if v >> nbits:
        raise ValueError(f"hex payload {text!r} does not fit in {nbits} bits")
    return np.array([(v >> (nbits - 1 - k)) & 1 for k in range(nbits)], np.uint8)


def bits_to_hex(bits) -> str:
    return format(bits_to_int(as_bits(bits)), "x")


@dataclass(frozen=True)
class SlotConfig:
    """Frame layout: 2^r sub-blocks x 2^p slots x 2^q samples, q = m - p - r."""

    m: int
    p: int = 0
    r: int = 0
    parity_bits: tuple = (0,)
    message_passing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "parity_bits", tuple(int(x) for x in self.parity_bits))
        if self.p < 0 or self.r < 0:
            raise ValueError("p and r must be non-negative")
        if self.q < 2:
            raise ValueError(f"per-slot exponent q = m - p - r = {self.q} must be >= 2")
        if len(self.parity_bits) != 1 << self.r:
            raise ValueError(f"need {1 << self.r} parity lengths, got {len(self.parity_bits)}")
        if self.parity_bits[0] != 0:
            raise ValueError("the first patch carries no parity bits")
        if min(self.parity_bits) < 0 or max(self.parity_bits) >= self.patch_bits:
            raise ValueError("parity lengths must lie in [0, patch payload)")
        if self.message_passing and self.p > self.pair_bits - 1:
            raise ValueError("translate needs p <= q(q+3)/2 - 1")
        # capacity identity, asserted once at construction
        assert self.capacity == (1 << self.r) * self.patch_bits - sum(self.parity_bits[1:])

    @property
    def q(self) -> int:
        return self.m - self.p - self.r

    @property
    def n_slots(self) -> int:
        return 1 << self.p

    @property
    def slot_len(self) -> int:
        return 1 << self.q

    @property
    def n_subblocks(self) -> int:
        return 1 << self.r

    @property
    def pair_bits(self) -> int:
        return n_pair_bits(self.q)

    @property
    def patch_bits(self) -> int:
        """Bits carried by one slotted patch (check bit deducted when passing)."""
        return self.pair_bits + self.p - (1 if self.message_passing else 0)

    @property
    def capacity(self) -> int:
        return (1 << self.r) * (self.pair_bits + self.p - int(self.message_passing)) \
            - sum(self.parity_bits[1:])

    def info_bits(self, i: int) -> int:
        """Payload bits (excluding parity) carried by patch ``i``."""
        return self.patch_bits - self.parity_bits[i]


@dataclass(frozen=True)
class SparseCodeword:
    """Per-slot sequences of one message; all other slots are zero."""

    n_slots: int
    slot_len: int
    slots: tuple = field(default_factory=tuple)  # ((slot, samples), ...)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n_slots * self.slot_len, dtype=np.complex128)
        for i, seq in self.slots:
            out[i * self.slot_len:(i + 1) * self.slot_len] = seq
        return out

    @property
    def occupied(self) -> tuple:
        return tuple(i for i, _ in self.slots)


def encode_plain(bits, m: int):
    """Map exactly m(m+3)/2 bits to ``(pair, sequence)``."""
    bits = as_bits(bits)
    if bits.shape[0] != n_pair_bits(m):
        raise ValueError(f"plain encoding of m={m} takes {n_pair_bits(m)} bits, "
                         f"got {bits.shape[0]}")
    pair = PairMB.from_bits(bits, m)
    return pair, rm_sequence_fast(pair)


def decode_pair(pair: PairMB) -> np.ndarray:
    return pair.to_bits()


def _with_check(info: np.ndarray, check: int) -> np.ndarray:
    return np.insert(info, CHECK_BIT_INDEX, np.uint8(check))


def flip_check(pair: PairMB) -> PairMB:
    bits = pair.to_bits()
    bits[CHECK_BIT_INDEX] ^= 1
    return PairMB.from_bits(bits, pair.m)


def check_masked_key(pair: PairMB) -> bytes:
    return np.delete(pair.to_bits(), CHECK_BIT_INDEX).tobytes()


def slot_pairs(bits, cfg: SlotConfig):
    """Pairs and slot indices for one slotted patch payload.

    Returns a list of ``(slot, pair)``; one entry when the translate is zero
    or message passing is off, two otherwise (primary first).
    """
    bits = as_bits(bits)
    if bits.shape[0] != cfg.patch_bits:
        raise ValueError(f"slotted payload needs {cfg.patch_bits} bits, got {bits.shape[0]}")
    q, p = cfg.q, cfg.p
    primary = bits_to_int(bits[bits.shape[0] - p:]) if p else 0
    if not cfg.message_passing:
        return [(primary, PairMB.from_bits(bits[:cfg.pair_bits], q))]
    info = bits[:cfg.pair_bits - 1]
    translate = bits_to_int(info[:p]) if p else 0
    first = (primary, PairMB.from_bits(_with_check(info, 0), q))
    if translate == 0:
        return [first]
    second = ((primary + translate) % cfg.n_slots, PairMB.from_bits(_with_check(info, 1), q))
    return [first, second]


def encode_slotted(bits, cfg: SlotConfig) -> SparseCodeword:
    """Slot-encode one patch worth of bits (``cfg.patch_bits`` long)."""
    return SparseCodeword(cfg.n_slots, cfg.slot_len,
                          tuple((i, rm_sequence_fast(pr)) for i, pr in slot_pairs(bits, cfg)))


def interpret_slot_decode(pair: PairMB, slot: int, cfg: SlotConfig):
    """Read a pair decoded in ``slot`` back into patch payload bits.

    Returns ``(payload, partner)`` where ``partner`` is the other slot holding
    the same message, or None when there is no distinct partner.
    """
    if pair.m != cfg.q:
        raise ValueError(f"expected a q={cfg.q} pair, got m={pair.m}")
    p = cfg.p
    ser = pair.to_bits()
    if not cfg.message_passing:
        payload = np.concatenate([ser, binary_expansion(slot, p) if p else ser[:0]])
        return payload, None
    info = np.delete(ser, CHECK_BIT_INDEX)
    translate = bits_to_int(info[:p]) if p else 0
    if ser[CHECK_BIT_INDEX] == 0:
        primary = slot
        partner = (slot + translate) % cfg.n_slots if translate else None
    else:
        primary = (slot - translate) % cfg.n_slots
        # check bit set with a zero translate is never transmitted
        partner = primary if translate else None
    payload = np.concatenate([info, binary_expansion(primary, p) if p else info[:0]])
    return payload, partner


def parity_matrices(cfg: SlotConfig, seed: int) -> list:
    """One random binary matrix per patch, shape (l_i, bits sent before patch i)."""
    rng = np.random.default_rng(seed)
    mats = []
    before = 0
    for i in range(cfg.n_subblocks):
        mats.append(rng.integers(0, 2, size=(cfg.parity_bits[i], before), dtype=np.uint8))
        before += cfg.info_bits(i)
    return mats


def split_patches(bits, cfg: SlotConfig, seed: int) -> list:
    """Cut a full payload into per-patch payloads with parity appended."""
    bits = as_bits(bits)
    if bits.shape[0] != cfg.capacity:
        raise ValueError(f"payload needs {cfg.capacity} bits, got {bits.shape[0]}")
    mats = parity_matrices(cfg, seed)
    out = []
    pos = 0
    for i in range(cfg.n_subblocks):
        k = cfg.info_bits(i)
        info = bits[pos:pos + k]
        parity = (mats[i].astype(np.int64) @ bits[:pos]) % 2
        out.append(np.concatenate([info, parity.astype(np.uint8)]))
        pos += k
    return out


def encode_patched(bits, cfg: SlotConfig, seed: int = 0) -> list:
    """One :class:`SparseCodeword` per sub-block."""
    return [encode_slotted(pb, cfg) for pb in split_patches(bits, cfg, seed)]


def stitch_patches(per_subblock, cfg: SlotConfig, seed: int = 0,
                   beam: int = DEFAULT_BEAM) -> list:
    """Tree search over per-sub-block decodes, keeping parity-consistent paths.

    ``per_subblock[i]`` is a list of patch payloads decoded in sub-block ``i``
    (each ``cfg.patch_bits`` long).  Returns every full payload whose parity
    checks all pass, capped at ``beam`` live paths per level.
    """
    if len(per_subblock) != cfg.n_subblocks:
        raise ValueError(f"expected {cfg.n_subblocks} sub-blocks, got {len(per_subblock)}")
    mats = parity_matrices(cfg, seed)
    paths = [np.zeros(0, np.uint8)]
    for i, cands in enumerate(per_subblock):
        k = cfg.info_bits(i)
        H = mats[i].astype(np.int64)
        nxt = []
        for path in paths:
            want = (H @ path) % 2
            for c in cands:
                c = as_bits(c)
                if c.shape[0] != cfg.patch_bits:
                    raise ValueError("patch payload has the wrong length")
                if np.array_equal(c[k:], want):
                    nxt.append(np.concatenate([path, c[:k]]))
                    if len(nxt) >= beam:
                        break
            if len(nxt) >= beam:
                break
        paths = nxt
        if not paths:
            return []
    return paths
