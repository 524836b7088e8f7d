import json

import numpy as np

from rmaccess.cli import build_parser, main, simulate_config


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_encode_decode_round_trip(tmp_path, capsys):
    f = tmp_path / "frame.npy"
    code, out, _ = run(capsys, "encode", "--m", "10", "--p", "2", "--payload", "abc123",
                       "--out", str(f))
    assert code == 0
    info = json.loads(out)
    assert info["payload_bits"] == 45 and info["frame_len"] == 1024
    np.save(f, 1000 * np.load(f))
    code, out, _ = run(capsys, "decode", "--m", "10", "--p", "2", "--in", str(f),
                       "--snr-db", "60", "--kmax", "2", "--epsilon", "fixed:1e-6")
    msgs = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and [m["payload_hex"] for m in msgs] == ["abc123"]
    assert np.allclose(msgs[0]["h_hat"], [1, 0])


def test_encode_bits_plain(capsys):
    code, out, _ = run(capsys, "encode", "--m", "2", "--algorithm", "1", "--bits", "00000")
    assert code == 0 and json.loads(out)["frame_len"] == 4


def test_encode_bad_payload(capsys):
    code, _, err = run(capsys, "encode", "--m", "2", "--algorithm", "1", "--bits", "0101")
    assert code == 2 and "5 bits" in err


def test_decode_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "decode", "--m", "4", "--in", str(tmp_path / "nope.npy"))
    assert code == 2 and "nope.npy" in err


def test_simulate_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 10, "p": 2, "k_sweep": [3], "trials": 5, "seed": 4}))
    a = build_parser().parse_args(["simulate", "--config", str(cfg), "--trials", "2",
                                   "--out", "x.csv"])
    c = simulate_config(a)
    assert (c.m, c.trials, c.seed, c.k_sweep) == (10, 2, 4, (3,))


def test_simulate_and_plot(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "simulate", "--m", "10", "--p", "2", "--K", "3,6",
                       "--trials", "2", "--no-timing", "--out", str(out))
    assert code == 0 and "K=   6" in err
    lines = out.read_text().splitlines()
    assert lines[0].startswith("K,trial,seed") and len(lines) == 1 + 6
    png = tmp_path / "s.png"
    code, _, _ = run(capsys, "plot", "--in", str(out), "--out", str(png))
    assert code == 0 and png.stat().st_size > 0


def test_simulate_flags(capsys, tmp_path):
    a = build_parser().parse_args(
        ["simulate", "--m", "12", "--p", "2", "--r", "0", "--K", "40,60", "--snr-db", "50",
         "--algorithm", "1", "--list-plan", "2,2", "--kmax-policy", "fixed:9",
         "--epsilon", "outcell", "--channel", "square:400", "--out", str(tmp_path / "o.csv")])
    c = simulate_config(a)
    assert (c.algorithm, c.list_plan, c.kmax_policy, c.channel, c.snr_db) == \
        (1, "2,2", "fixed:9", "square:400", 50.0)


def test_simulate_rejects_zero_trials(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--trials", "0", "--out", str(tmp_path / "o.csv"))
    assert code == 2 and "trials" in err
