"""Command line: encode, decode, simulate, plot."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .codec import SlotConfig, as_bits, bits_from_hex, bits_to_hex
from .decoder import epsilon_incell, epsilon_outcell, slot_kmax_default
from .harness import ExperimentConfig, decode_frame, read_csv, run_experiment, transmit
from .rm_core import n_pair_bits


def _int_list(text):
    return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)


def _frame_args(p):
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--parity", type=_int_list, default=None,
                   help="parity lengths per patch, comma separated (first is 0)")
    p.add_argument("--no-message-passing", action="store_true")
    p.add_argument("--algorithm", type=int, choices=(1, 2), default=2)
    p.add_argument("--code-seed", type=int, default=0)


def _slot_cfg(a) -> SlotConfig:
    if a.algorithm == 1:
        return SlotConfig(a.m, message_passing=False)
    parity = a.parity if a.parity is not None else (0,) * (1 << a.r)
    return SlotConfig(a.m, a.p, a.r, parity, not a.no_message_passing)


def _payload_bits(a, nbits):
    if a.bits is not None:
        bits = as_bits([int(c) for c in a.bits.strip()])
        if bits.shape[0] != nbits:
            raise ValueError(f"payload needs {nbits} bits, got {bits.shape[0]}")
        return bits
    return bits_from_hex(a.payload, nbits)


def cmd_encode(a):
    cfg = _slot_cfg(a)
    nbits = n_pair_bits(a.m) if a.algorithm == 1 else cfg.capacity
    bits = _payload_bits(a, nbits)
    cw = transmit([bits], cfg, a.code_seed, plain=a.algorithm == 1)[0]
    frame = cw if isinstance(cw, np.ndarray) else cw.dense()
    info = {"payload_bits": nbits, "payload_hex": bits_to_hex(bits),
            "frame_len": int(frame.shape[0])}
    if not isinstance(cw, np.ndarray):
        info["slots"] = list(cw.occupied)
    if a.out:
        np.save(a.out, frame)
        info["out"] = str(a.out)
    print(json.dumps(info))
    return 0


def cmd_decode(a):
    cfg = _slot_cfg(a)
    y = np.load(a.input)
    if y.shape != (1 << a.m,):
        raise ValueError(f"{a.input}: expected a length-{1 << a.m} frame, got shape {y.shape}")
    gamma = 10 ** (a.snr_db / 10)
    n = a.m if a.algorithm == 1 else cfg.q
    kind, _, arg = a.epsilon.partition(":")
    eps = {"incell": lambda: epsilon_incell(n),
           "outcell": lambda: epsilon_outcell(n, a.sigma2),
           "fixed": lambda: float(arg)}[kind]()
    if a.kmax is not None:
        budget = a.kmax
    elif a.algorithm == 2:
        budget = slot_kmax_default(a.k_star, a.p)
    else:
        budget = a.k_star
    nbits = n_pair_bits(a.m) if a.algorithm == 1 else cfg.capacity
    for d in decode_frame(y, cfg, a.algorithm, gamma, budget, eps, a.list_plan, a.code_seed):
        bits = np.frombuffer(d.key, np.uint8)
        print(json.dumps({"payload_hex": bits_to_hex(bits), "payload_bits": nbits,
                          "h_hat": [d.h_hat.real, d.h_hat.imag]}))
    return 0


_SIM_FLAGS = {
    "m": "m", "p": "p", "r": "r", "parity": "parity", "K": "k_sweep", "trials": "trials",
    "seed": "seed", "snr_db": "snr_db", "algorithm": "algorithm", "list_plan": "list_plan",
    "kmax_policy": "kmax_policy", "epsilon": "epsilon", "channel": "channel",
    "workers": "workers", "message_passing": "message_passing",
}


def simulate_config(a) -> ExperimentConfig:
    """File values first, then every flag given on the command line."""
    base = {}
    if a.config:
        try:
            base = json.loads(Path(a.config).read_text())
        except OSError as e:
            raise OSError(f"cannot read config {a.config}: {e}") from e
    for flag, key in _SIM_FLAGS.items():
        v = getattr(a, flag)
        if v is not None:
            base[key] = v
    if a.no_timing:
        base["timing"] = False
    return ExperimentConfig.from_dict(base)


def cmd_simulate(a):
    cfg = simulate_config(a)
    rows = run_experiment(cfg, a.out)
    for r in rows:
        if r["trial"] == -1:
            print(f"K={r['K']:4d}  sr={r['sr']:.4f}  far={r['far']:.4f}  mr={r['mr']:.4f}  "
                  f"cee={r['cee']:.4f}  wall={r['wall_s']:.4f}s", file=sys.stderr)
    return 0


def cmd_plot(a):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path in a.input:
        rows = [r for r in read_csv(path) if r["trial"] == -1]
        label = f"{Path(path).stem} (alg {rows[0]['algorithm']})" if rows else Path(path).stem
        ax.plot([r["K"] for r in rows], [r[a.metric] for r in rows], "o-", label=label)
    ax.set_xlabel("K")
    ax.set_ylabel(a.metric)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(a.out, dpi=120)
    print(a.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rmaccess")
    sub = ap.add_subparsers(dest="cmd", required=True)

    e = sub.add_parser("encode", help="payload -> transmitted frame")
    _frame_args(e)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--payload", help="hex payload")
    g.add_argument("--bits", help="payload as a 0/1 string")
    e.add_argument("--out", help="write the complex frame as .npy")
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="received frame (.npy) -> payloads")
    _frame_args(d)
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--snr-db", type=float, default=0.0)
    d.add_argument("--list-plan", default="1")
    d.add_argument("--kmax", type=int, default=None, help="detection budget (per slot for alg 2)")
    d.add_argument("--k-star", type=int, default=1, help="expected device count for the default budget")
    d.add_argument("--epsilon", default="incell")
    d.add_argument("--sigma2", type=float, default=0.0, help="interference power for --epsilon outcell")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", help="Monte Carlo sweep to CSV")
    s.add_argument("--config", help="JSON file with experiment settings")
    s.add_argument("--m", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--r", type=int)
    s.add_argument("--parity", type=_int_list)
    s.add_argument("--K", type=_int_list, help="comma list of device counts")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--snr-db", type=float)
    s.add_argument("--algorithm", type=int, choices=(1, 2))
    s.add_argument("--list-plan")
    s.add_argument("--kmax-policy")
    s.add_argument("--epsilon")
    s.add_argument("--channel")
    s.add_argument("--workers", type=int)
    s.add_argument("--message-passing", action=argparse.BooleanOptionalAction, default=None)
    s.add_argument("--no-timing", action="store_true", help="write nan wall times (byte-stable CSV)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    pl = sub.add_parser("plot", help="plot aggregate rows of result CSVs")
    pl.add_argument("--in", dest="input", nargs="+", required=True)
    pl.add_argument("--metric", default="sr", choices=("sr", "far", "mr", "cee", "wall_s"))
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
