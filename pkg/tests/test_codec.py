import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmaccess.codec import (CHECK_BIT_INDEX, SlotConfig, bits_from_hex, bits_to_hex,
                            check_masked_key, decode_pair, encode_patched, encode_plain,
                            encode_slotted, flip_check, interpret_slot_decode, slot_pairs,
                            split_patches, stitch_patches)
from rmaccess.rm_core import PairMB, n_pair_bits, rm_sequence


def rand_bits(rng, n):
    return rng.integers(0, 2, n).astype(np.uint8)


class TestCapacity:
    def test_check_bit_mode(self):
        assert SlotConfig(12, 2).capacity == 66

    def test_without_message_passing(self):
        assert SlotConfig(12, 2, message_passing=False).capacity == 67

    def test_patched_two(self):
        cfg = SlotConfig(13, 2, 1, (0, 15))
        assert cfg.q == 10 and cfg.capacity == 2 * (65 + 2 - 1) - 15 == 117

    def test_patched_four(self):
        cfg = SlotConfig(14, 2, 2, (0, 10, 10, 15))
        assert cfg.capacity == 4 * 66 - 35 == 229

    def test_plain_is_single_slot(self):
        assert SlotConfig(7, message_passing=False).capacity == n_pair_bits(7)

    @pytest.mark.parametrize("kw", [dict(m=3, p=2), dict(m=8, p=2, r=1, parity_bits=(0,)),
                                    dict(m=8, p=2, r=1, parity_bits=(3, 0)),
                                    dict(m=8, p=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SlotConfig(**kw)


class TestPlain:
    def test_zero(self):
        pr, seq = encode_plain(np.zeros(5, np.uint8), 2)
        assert pr == PairMB.zero(2) and np.allclose(seq, 1)

    def test_m2_bijection(self):
        seqs = {tuple(np.round(encode_plain([(v >> k) & 1 for k in range(5)], 2)[1], 9))
                for v in range(32)}
        assert len(seqs) == 32

    @given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
    def test_round_trip(self, m, seed):
        x = rand_bits(np.random.default_rng(seed), n_pair_bits(m))
        pr, seq = encode_plain(x, m)
        assert np.array_equal(decode_pair(pr), x)
        assert np.array_equal(seq, rm_sequence(pr))

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            encode_plain(np.zeros(6), 2)


class TestHex:
    def test_round_trip(self):
        assert bits_from_hex("0x1f3", 12).tolist() == [0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 1, 1]
        assert bits_to_hex(bits_from_hex("1f3", 67)) == "1f3"

    def test_too_wide(self):
        with pytest.raises(ValueError):
            bits_from_hex("ff", 7)


class TestSlotted:
    cfg = SlotConfig(12, 2)

    def test_zero_translate_single_slot(self):
        bits = np.zeros(66, np.uint8)
        bits[-2:] = [1, 0]
        cw = encode_slotted(bits, self.cfg)
        assert cw.occupied == (2,)
        assert slot_pairs(bits, self.cfg)[0][1].to_bits()[CHECK_BIT_INDEX] == 0

    def test_two_slots_modular(self):
        bits = np.zeros(66, np.uint8)
        bits[:2] = [1, 1]          # translate 3
        bits[-2:] = [1, 0]         # primary 2
        (s1, p1), (s2, p2) = slot_pairs(bits, self.cfg)
        assert (s1, s2) == (2, 1)
        b1, b2 = p1.to_bits(), p2.to_bits()
        assert b1[CHECK_BIT_INDEX] == 0 and b2[CHECK_BIT_INDEX] == 1
        assert np.count_nonzero(b1 != b2) == 1
        assert check_masked_key(p1) == check_masked_key(p2) and flip_check(p1) == p2

    def test_check_bit_off_diagonal(self):
        bits = np.zeros(n_pair_bits(4), np.uint8)
        bits[CHECK_BIT_INDEX] = 1
        pr = PairMB.from_bits(bits, 4)
        assert pr.P[0, 1] == pr.P[1, 0] == 1 and not pr.P.diagonal().any()

    def test_dense_zero_outside_slots(self):
        rng = np.random.default_rng(0)
        cw = encode_slotted(rand_bits(rng, 66), self.cfg)
        d = cw.dense().reshape(4, 1024)
        for i in range(4):
            assert (np.abs(d[i]) > 0).all() == (i in cw.occupied)
            assert (np.abs(d[i]) == 0).all() == (i not in cw.occupied)

    @pytest.mark.parametrize("mp", [True, False])
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_round_trip_every_copy(self, mp, seed):
        cfg = SlotConfig(9, 3, message_passing=mp)
        bits = rand_bits(np.random.default_rng(seed), cfg.patch_bits)
        sp = slot_pairs(bits, cfg)
        assert len(sp) <= 2
        for slot, pr in sp:
            payload, partner = interpret_slot_decode(pr, slot, cfg)
            assert np.array_equal(payload, bits)
            others = [s for s, _ in sp if s != slot]
            assert partner == (others[0] if others else None)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            encode_slotted(np.zeros(67, np.uint8), self.cfg)


class TestPatched:
    def test_r0_matches_slotted(self):
        cfg = SlotConfig(10, 2)
        bits = rand_bits(np.random.default_rng(1), cfg.capacity)
        (cw,) = encode_patched(bits, cfg)
        ref = encode_slotted(bits, cfg)
        assert cw.occupied == ref.occupied
        assert all(np.array_equal(a[1], b[1]) for a, b in zip(cw.slots, ref.slots))

    @pytest.mark.parametrize("r,parity", [(1, (0, 15)), (2, (0, 10, 10, 15))])
    def test_noiseless_stitch(self, r, parity):
        cfg = SlotConfig(10 + r, 2, r, parity)
        rng = np.random.default_rng(r)
        bits = rand_bits(rng, cfg.capacity)
        patches = split_patches(bits, cfg, seed=7)
        assert [len(x) for x in patches] == [cfg.patch_bits] * cfg.n_subblocks
        cws = encode_patched(bits, cfg, seed=7)
        decoded = []
        for cw in cws:
            slot, seq = cw.slots[0]
            pr = next(p for s, p in slot_pairs(split_patches(bits, cfg, 7)[len(decoded)], cfg)
                      if s == slot)
            assert np.array_equal(rm_sequence(pr), seq)
            decoded.append([interpret_slot_decode(pr, slot, cfg)[0]])
        out = stitch_patches(decoded, cfg, seed=7)
        assert len(out) == 1 and np.array_equal(out[0], bits)

    def test_corrupted_parity_rejected(self):
        cfg = SlotConfig(11, 2, 1, (0, 15))
        bits = rand_bits(np.random.default_rng(2), cfg.capacity)
        a, b = split_patches(bits, cfg, seed=0)
        b = b.copy()
        b[-1] ^= 1
        assert stitch_patches([[a], [b]], cfg, seed=0) == []

    def test_three_messages_cross_pairs(self):
        cfg = SlotConfig(11, 2, 1, (0, 15))
        rng = np.random.default_rng(5)
        msgs = [rand_bits(rng, cfg.capacity) for _ in range(3)]
        parts = [split_patches(x, cfg, seed=3) for x in msgs]
        out = stitch_patches([[p[0] for p in parts], [p[1] for p in parts[::-1]]], cfg, seed=3)
        assert sorted(o.tobytes() for o in out) == sorted(x.tobytes() for x in msgs)

    def test_beam_caps_paths(self):
        cfg = SlotConfig(11, 2, 1, (0, 0))
        rng = np.random.default_rng(0)
        cands = [[rand_bits(rng, cfg.patch_bits) for _ in range(10)] for _ in range(2)]
        assert len(stitch_patches(cands, cfg, beam=64)) == 64
        assert len(stitch_patches(cands, cfg, beam=1000)) == 100

    def test_capacity_mismatch(self):
        cfg = SlotConfig(11, 2, 1, (0, 15))
        with pytest.raises(ValueError):
            encode_patched(np.zeros(cfg.capacity + 1, np.uint8), cfg)
