"""CLI subcommands: smoke runs, exit codes, config precedence."""

import subprocess
import sys

import pytest

from neuraldm.cli import main
from neuraldm.config import build_config, parse_kv_file
from neuraldm.exceptions import ConfigError
from neuraldm.sl import SLConfig


def run_cli(*args):
    return main(list(args))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """A small end-to-end pipeline shared by the CLI tests."""
    root = tmp_path_factory.mktemp("pipeline")
    db = root / "db.jsonl"
    corpus = root / "corpus.jsonl"
    model = root / "sl.ckpt"
    metrics = root / "metrics.csv"
    assert run_cli("gen-db", "--seed", "42", "--n", "80", "--out", str(db)) == 0
    assert run_cli(
        "gen-corpus", "--db", str(db), "--n", "36", "--ser", "0.1", "--seed", "3",
        "--out", str(corpus),
    ) == 0
    assert run_cli(
        "train-sl", "--corpus", str(corpus), "--learning-rate", "0.1",
        "--max-epochs", "25", "--seed", "1", "--init-seed", "1",
        "--out-model", str(model), "--metrics", str(metrics),
    ) == 0
    return {"db": db, "corpus": corpus, "model": model, "metrics": metrics, "root": root}


def test_eval_smoke_single_dialogue(pipeline, capsys):
    assert run_cli(
        "eval", "--model", str(pipeline["model"]), "--db", str(pipeline["db"]),
        "--ser-list", "0", "--n", "1", "--seed", "0",
    ) == 0
    out = capsys.readouterr().out
    assert "SER 0.00" in out


def test_eval_f1_smoke(pipeline, capsys):
    assert run_cli(
        "eval-f1", "--model", str(pipeline["model"]), "--corpus", str(pipeline["corpus"]),
        "--split", "test",
    ) == 0
    assert "weighted F1" in capsys.readouterr().out


def test_train_then_eval_f1_consistent(pipeline, capsys):
    # The returned model is the best-validation checkpoint: its valid-split
    # F1 must reproduce that epoch's row in the metrics file.
    assert run_cli(
        "eval-f1", "--model", str(pipeline["model"]), "--corpus", str(pipeline["corpus"]),
        "--split", "valid",
    ) == 0
    out = capsys.readouterr().out
    reported = [float(tok) for tok in out.replace(":", " ").split() if tok.replace(".", "").isdigit()]
    lines = pipeline["metrics"].read_text().splitlines()[1:]
    rows = [[float(v) for v in line.split(",")] for line in lines]
    best = min(rows, key=lambda r: r[2])
    # eval-f1 prints four decimals; the metrics file stores full precision.
    assert reported[-3:] == pytest.approx(best[3:6], abs=5e-5)


def test_train_rl_smoke(pipeline, tmp_path):
    out_model = tmp_path / "rl.ckpt"
    curve = tmp_path / "curve.csv"
    assert run_cli(
        "train-rl", "--model", str(pipeline["model"]), "--db", str(pipeline["db"]),
        "--ser", "0.3", "--dialogues", "48", "--eval-n", "16", "--seed", "5",
        "--out-model", str(out_model), "--curve", str(curve),
    ) == 0
    assert out_model.exists()
    header = curve.read_text().splitlines()[0]
    assert header == "dialogues,ser,success_rate,mean_return,mean_turns"


def test_missing_file_exit_code_3(tmp_path):
    assert run_cli(
        "eval-f1", "--model", str(tmp_path / "nope.ckpt"), "--corpus", str(tmp_path / "no.jsonl")
    ) == 3


def test_schema_mismatch_exit_code_3(pipeline, tmp_path):
    bogus = tmp_path / "bogus.ckpt"
    bogus.write_bytes(b'{"format": "other/v1"}\n' + b"\x00" * 64)
    assert run_cli(
        "eval-f1", "--model", str(bogus), "--corpus", str(pipeline["corpus"])
    ) == 3


def test_usage_error_exit_code_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["gen-db", "--unknown-flag"])
    assert excinfo.value.code == 2


def test_chat_pipe(pipeline):
    proc = subprocess.run(
        [
            sys.executable, "-m", "neuraldm.cli", "chat",
            "--model", str(pipeline["model"]), "--db", str(pipeline["db"]),
        ],
        input="cheap chinese in the north\nbye\n",
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert "Goodbye" in proc.stdout


def test_config_file_parsing(tmp_path):
    cfg_file = tmp_path / "sl.cfg"
    cfg_file.write_text("learning_rate = 0.2  # fast\nmax_epochs = 7\n\n")
    values = parse_kv_file(str(cfg_file))
    cfg = build_config(SLConfig, values, {"max_epochs": None})
    assert cfg.learning_rate == 0.2
    assert cfg.max_epochs == 7


def test_config_flag_overrides_file(tmp_path):
    cfg_file = tmp_path / "sl.cfg"
    cfg_file.write_text("learning_rate = 0.2\n")
    cfg = build_config(SLConfig, parse_kv_file(str(cfg_file)), {"learning_rate": 0.9})
    assert cfg.learning_rate == 0.9


def test_config_unknown_key_rejected(tmp_path):
    cfg_file = tmp_path / "sl.cfg"
    cfg_file.write_text("warp_speed = 9\n")
    with pytest.raises(ConfigError):
        build_config(SLConfig, parse_kv_file(str(cfg_file)), {})


def test_config_bad_line_rejected(tmp_path):
    cfg_file = tmp_path / "sl.cfg"
    cfg_file.write_text("just words\n")
    with pytest.raises(ConfigError):
        parse_kv_file(str(cfg_file))
