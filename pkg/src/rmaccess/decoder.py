"""Layered Walsh-Hadamard detection with successive interference cancellation.

Each detection peels the generating pair one row/column at a time, from the
last (which the odd/even split of the signal exposes) down to the first:

    fold      conj-multiply odd and even halves -> Walsh sequence of alpha
    fwht      peak index = alpha, peak phase = (b_s, beta_s)
    reduce    average the halves after undoing the modulation

Channel estimates are kept as the product sqrt(gamma) * h_hat (``gain``);
``h_hat`` is that divided by sqrt(gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels as K
from .codec import SlotConfig, check_masked_key, flip_check, interpret_slot_decode
from .rm_core import PairMB, binary_expansion, fwht, rm_sequence_fast


@dataclass(frozen=True)
class DecodedMessage:
    pair: PairMB
    gain: complex                # sqrt(gamma) * h_hat
    h_hat: complex
    sequence: np.ndarray
    residual_energy: float
    slot: Optional[int] = None
    payload: Optional[np.ndarray] = None

    @property
    def payload_key(self) -> bytes:
        bits = self.payload if self.payload is not None else self.pair.to_bits()
        return np.asarray(bits, np.uint8).tobytes()


@dataclass(frozen=True)
class ListPlan:
    """Branch widths for the top layers, outermost layer first."""

    widths: tuple = (1,)

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not self.widths or min(self.widths) < 1:
            raise ValueError(f"list widths must be >= 1, got {self.widths}")

    @property
    def n_paths(self) -> int:
        return math.prod(self.widths)

    @classmethod
    def parse(cls, text) -> "ListPlan":
        if isinstance(text, ListPlan):
            return text
        if isinstance(text, int):
            return cls((text,))
        if isinstance(text, (list, tuple)):
            return cls(tuple(text))
        return cls(tuple(int(x) for x in str(text).replace("[", "").replace("]", "").split(",")))


GREEDY = ListPlan((1,))


def epsilon_incell(m: int) -> float:
    """Stopping energy when only in-cell devices transmit."""
    return (2 ** (m / 2) + 2) ** 2


def epsilon_outcell(m: int, sigma2: float) -> float:
    """Stopping energy with out-of-cell interference of per-sample power sigma2."""
    return 2 * sigma2 + 2 ** (m + 1)


def slot_kmax_default(k_star: int, p: int) -> int:
    """Per-slot detection budget ceil(3 K* / 2^(p-1))."""
    return math.ceil(3 * k_star / 2 ** (p - 1))


def _as_signal(y) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=np.complex128).reshape(-1)
    n = y.shape[0]
    if n < 2 or n & (n - 1):
        raise ValueError(f"signal length {n} is not a power of two >= 2")
    return y


def fold_step(y):
    """Fold a length-2^s signal and return (ranked frequencies, peak values).

    Frequencies are integers (binary expansion gives alpha) ranked by
    decreasing spectrum magnitude, ties to the lower index.
    """
    y = _as_signal(y)
    if y.shape[0] < 4:
        raise ValueError("fold_step needs length >= 4")
    t = np.empty(y.shape[0] // 2, dtype=np.complex128)
    K.fold(y, t)
    fwht(t, inplace=True)
    order = np.argsort(-(t.real ** 2 + t.imag ** 2), kind="stable")
    return order, t[order]


def polarity_decision(peak: complex):
    """(b_s, beta_s) from the quadrant of a complex WHT peak."""
    peak = complex(peak)
    if peak == 0:
        raise ZeroDivisionError("polarity of a zero peak is undefined")
    return K.polarity(peak)


def layer_reduce(y, v_hat) -> np.ndarray:
    """(y_odd + conj(v_hat) * y_even) / 2 in 1-based odd/even terms."""
    y = _as_signal(y)
    v_hat = np.asarray(v_hat, dtype=np.complex128).reshape(-1)
    if v_hat.shape[0] * 2 != y.shape[0]:
        raise ValueError(f"modulation length {v_hat.shape[0]} does not match {y.shape[0]}")
    return 0.5 * (y[0::2] + np.conj(v_hat) * y[1::2])


def _finish(y, P, b, gain, gamma) -> DecodedMessage:
    seq = np.empty(y.shape[0], dtype=np.complex128)
    K.chirp_by_layers(P, b, seq)
    resid = y - gain * seq
    return DecodedMessage(pair=PairMB(P, b), gain=complex(gain),
                          h_hat=complex(gain) / math.sqrt(gamma), sequence=seq,
                          residual_energy=float(np.vdot(resid, resid).real))


def detect_single_path(y, gamma: float = 1.0) -> DecodedMessage:
    """Greedy layer chain: strongest peak at every layer."""
    y = _as_signal(y)
    m = y.shape[0].bit_length() - 1
    P = np.zeros((m, m), np.uint8)
    b = np.zeros(m, np.uint8)
    gain = K.greedy_complete(y, P, b)
    return _finish(y, P, b, gain, gamma)


def detect_list(y, gamma: float = 1.0, plan: ListPlan = GREEDY) -> DecodedMessage:
    """Branch over the top layers and keep the path of least residual energy.

    Candidates at a layer are computed once and shared by every path below
    it.  The first path is always the greedy one and ties keep the earlier
    path, so the result never has more residual energy than the greedy path.
    """
    y = _as_signal(y)
    plan = ListPlan.parse(plan)
    m = y.shape[0].bit_length() - 1
    P = np.zeros((m, m), np.uint8)
    b = np.zeros(m, np.uint8)
    gain = K.list_detect(y, np.asarray(plan.widths, dtype=np.int64), P, b)
    return _finish(y, P, b, gain, gamma)


def algorithm1(y, gamma: float = 1.0, k_max: int = 1, epsilon: Optional[float] = None,
               plan: ListPlan = GREEDY) -> list:
    """Detect, subtract and repeat until ``k_max`` detections or energy <= epsilon.

    A pair detected again (left over from an imperfect earlier cancellation)
    still uses up one detection; its extra gain is added to the first
    record instead of producing a duplicate message.
    """
    y = _as_signal(y).copy()
    m = y.shape[0].bit_length() - 1
    if epsilon is None:
        epsilon = epsilon_incell(m)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    plan = ListPlan.parse(plan)
    out = []
    where = {}
    energy = float(np.vdot(y, y).real)
    k = 0
    while k < k_max and energy > epsilon:
        k += 1
        msg = detect_list(y, gamma, plan)
        y -= msg.gain * msg.sequence
        energy = float(np.vdot(y, y).real)
        if msg.pair in where:
            i = where[msg.pair]
            gain = out[i].gain + msg.gain
            out[i] = replace(out[i], gain=gain, h_hat=gain / math.sqrt(gamma))
        else:
            where[msg.pair] = len(out)
            out.append(msg)
    return out


def algorithm2(Y, gamma: float, k_bar_max: int, epsilon: Optional[float],
               plan: ListPlan, cfg: SlotConfig) -> list:
    """Slot-by-slot decoding with propagation of messages to their partner slot.

    ``Y`` holds one row per slot of a single sub-block.  Returned messages
    carry the slot they were decoded in and their patch payload bits.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.shape != (cfg.n_slots, cfg.slot_len):
        raise ValueError(f"expected {(cfg.n_slots, cfg.slot_len)} slot matrix, got {Y.shape}")
    if epsilon is None:
        epsilon = epsilon_incell(cfg.q)
    pending = []      # (slot, gain, sequence) to cancel before decoding that slot
    seen = set()
    out = []
    for i in range(cfg.n_slots):
        y = Y[i].copy()
        k = 0
        for slot, gain, seq in pending:
            if slot == i:
                y -= gain * seq
                k += 1
        budget = k_bar_max - k
        if budget <= 0:
            continue
        for msg in algorithm1(y, gamma, budget, epsilon, plan):
            payload, partner = interpret_slot_decode(msg.pair, i, cfg)
            key = check_masked_key(msg.pair) if cfg.message_passing else payload.tobytes()
            if key in seen:
                continue
            seen.add(key)
            out.append(replace(msg, slot=i, payload=payload))
            if partner is not None and partner != i:
                pending.append((partner, msg.gain, rm_sequence_fast(flip_check(msg.pair))))
    return out


def alpha_bits(index: int, s: int) -> np.ndarray:
    """Frequency vector alpha^s of a WHT index at layer s."""
    return binary_expansion(index, s - 1)
