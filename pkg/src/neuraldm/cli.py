"""Command-line entry point for the full pipeline.

Exit codes: 0 ok, 2 usage error, 3 data/config error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import policy as policy_net
from .baseline import BaselineConfig
from .config import build_config, parse_kv_file
from .corpus import generate_corpus, load_corpus, save_corpus
from .database import generate_database, load_database, save_database
from .dialogue import SimulatedEnvironment
from .engine import ChatEngine
from .evaluate import emit_curve, eval_f1, eval_success, success_table_csv
from .exceptions import ConfigError, DataError, NeuralDMError, NumericError
from .ontology import Ontology, default_ontology, load_ontology, save_ontology
from .rl import RLConfig, rl_train, rl_train_offline
from .simulator import ErrorModel
from .service.store import consistent_dialogues
from .sl import SLConfig, save_metrics, train_sl

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _ontology_from(args) -> Ontology:
    if getattr(args, "ontology", None):
        return load_ontology(args.ontology)
    return default_ontology()


def _config_values(path: str | None) -> dict[str, str]:
    return parse_kv_file(path) if path else {}


def cmd_gen_db(args) -> int:
    ontology = _ontology_from(args)
    db = generate_database(ontology, seed=args.seed, n_venues=args.n)
    save_database(db, args.out)
    if args.out_ontology:
        save_ontology(ontology, args.out_ontology)
    print(f"wrote {len(db)} venues to {args.out}")
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    ontology = _ontology_from(args)
    db = load_database(args.db, ontology)
    baseline_cfg = build_config(BaselineConfig, _config_values(args.config), {})
    corpus = generate_corpus(
        db, n_dialogues=args.n, ser=args.ser, seed=args.seed,
        baseline_cfg=baseline_cfg, transcript_path=args.transcripts,
    )
    save_corpus(corpus, args.out)
    sizes = {s: len(corpus.partition(s)) for s in ("train", "valid", "test")}
    print(f"wrote {args.n} dialogues to {args.out} (split {sizes})")
    return EXIT_OK


def cmd_train_sl(args) -> int:
    corpus = load_corpus(args.corpus)
    cfg = build_config(
        SLConfig,
        _config_values(args.config),
        {"learning_rate": args.learning_rate, "max_epochs": args.max_epochs, "seed": args.seed},
    )
    params0 = policy_net.init_params(args.init_seed)
    params, history = train_sl(corpus, cfg, params0)
    policy_net.save_checkpoint(params, args.out_model, seed=args.init_seed)
    if args.metrics:
        save_metrics(history, args.metrics)
    best = min(history, key=lambda m: m.valid_loss)
    print(
        f"trained {len(history)} epochs; best valid loss {best.valid_loss:.4f} "
        f"(epoch {best.epoch}); model -> {args.out_model}"
    )
    return EXIT_OK


def cmd_train_rl(args) -> int:
    ontology = _ontology_from(args)
    db = load_database(args.db, ontology)
    params, _ = policy_net.load_checkpoint(args.model)
    cfg = build_config(
        RLConfig,
        _config_values(args.config),
        {
            "total_dialogues": args.dialogues,
            "step_size": args.step_size,
            "epsilon": args.epsilon,
            "algorithm": args.algorithm,
        },
    )
    if args.replay_sessions:
        if not args.replay_ratings:
            raise ConfigError("--replay-ratings is required with --replay-sessions")
        episodes = consistent_dialogues(args.replay_sessions, args.replay_ratings, db, ontology)
        if not episodes:
            raise DataError("no consistent rated dialogues found in the logs")
        trained = rl_train_offline(episodes, params, cfg, seed=args.seed)
        policy_net.save_checkpoint(trained, args.out_model, seed=args.seed)
        print(f"offline training on {len(episodes)} consistent dialogues -> {args.out_model}")
        return EXIT_OK

    env = SimulatedEnvironment(db, ErrorModel(ser=args.ser), seed=args.seed)
    result = rl_train(env, params, cfg, seed=args.seed, eval_every=500, eval_n=args.eval_n)
    policy_net.save_checkpoint(result.params, args.out_model, seed=args.seed)
    if args.curve:
        emit_curve(result.curve, args.curve)
    first, last = result.curve[0], max(result.curve, key=lambda r: r.success_rate)
    print(
        f"trained {cfg.total_dialogues} dialogues at SER {args.ser}: "
        f"success {first.success_rate:.3f} -> best checkpoint {last.success_rate:.3f}; "
        f"model -> {args.out_model}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    ontology = _ontology_from(args)
    db = load_database(args.db, ontology)
    params, _ = policy_net.load_checkpoint(args.model)
    ser_list = [float(s) for s in args.ser_list.split(",")]
    rows = eval_success(
        params, db, ser_list, n_dialogues=args.n, seed=args.seed, workers=args.workers
    )
    for r in rows:
        print(
            f"SER {r.ser:.2f}: success {r.success_rate:.3f} +- {r.std_err:.3f} "
            f"(return {r.mean_return:.2f}, turns {r.mean_turns:.2f})"
        )
    if args.out:
        success_table_csv(rows, args.out)
    return EXIT_OK


def cmd_eval_f1(args) -> int:
    corpus = load_corpus(args.corpus)
    params, _ = policy_net.load_checkpoint(args.model)
    f1_dia, f1_query, f1_offer = eval_f1(params, corpus.partition(args.split))
    print(f"weighted F1 on {args.split}: diaact {f1_dia:.4f} query {f1_query:.4f} offer {f1_offer:.4f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    ontology = _ontology_from(args)
    db = load_database(args.db, ontology)
    params, _ = policy_net.load_checkpoint(args.model)
    app = create_app(
        params, db, ontology,
        log_dir=args.log,
        rating_token=args.rating_token,
        ui_dir=args.ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_chat(args) -> int:
    ontology = _ontology_from(args)
    if args.url:
        return _chat_remote(args.url)
    db = load_database(args.db, ontology)
    params, _ = policy_net.load_checkpoint(args.model)
    engine = ChatEngine(params=params, db=db, ontology=ontology)
    print(engine.greeting())
    try:
        for line in sys.stdin if not sys.stdin.isatty() else _prompt_lines():
            text = line.strip()
            if not text:
                continue
            result = engine.step(text)
            print(result.system_text)
            if args.inspect:
                action = result.system.action
                print(f"  [action: {action.dia_act}({action.query_slot}) "
                      f"bits={''.join(str(int(b)) for b in action.offer_bits)}]")
            if result.closed:
                break
    except (KeyboardInterrupt, EOFError):
        pass
    return EXIT_OK


def _prompt_lines():
    while True:
        yield input("> ")


def _chat_remote(url: str) -> int:
    """Thin client mode against a running service."""
    import json
    import urllib.request

    def post(path: str, payload: dict | None = None) -> dict:
        data = json.dumps(payload or {}).encode("utf-8")
        req = urllib.request.Request(
            url.rstrip("/") + path, data=data, headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(req) as resp:
            return json.loads(resp.read().decode("utf-8"))

    created = post("/session")
    print(created["greeting"])
    session_id = created["session_id"]
    try:
        for line in sys.stdin if not sys.stdin.isatty() else _prompt_lines():
            text = line.strip()
            if not text:
                continue
            reply = post(f"/session/{session_id}/utterance", {"text": text})
            print(reply["system_text"])
            if reply["closed"]:
                break
    except (KeyboardInterrupt, EOFError):
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuraldm",
        description="Two-phase neural dialogue management: corpus generation, "
        "supervised and reinforcement training, evaluation, and a live service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-db", help="generate the synthetic venue database")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n", type=int, default=150, help="number of venues")
    p.add_argument("--out", required=True)
    p.add_argument("--ontology", help="ontology JSON (defaults to the built-in one)")
    p.add_argument("--out-ontology", help="also write the ontology used")
    p.set_defaults(func=cmd_gen_db)

    p = sub.add_parser("gen-corpus", help="generate a labeled dialogue corpus")
    p.add_argument("--db", required=True)
    p.add_argument("--n", type=int, default=720)
    p.add_argument("--ser", type=float, default=0.1, help="semantic error rate")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--ontology")
    p.add_argument("--config", help="baseline key=value config file")
    p.add_argument("--transcripts", help="also write per-dialogue transcript records")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train-sl", help="phase I: supervised training")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="SL key=value config file")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="shuffle seed")
    p.add_argument("--init-seed", type=int, default=42, help="weight init seed")
    p.add_argument("--out-model", required=True)
    p.add_argument("--metrics", help="per-epoch metrics CSV")
    p.set_defaults(func=cmd_train_sl)

    p = sub.add_parser("train-rl", help="phase II: reinforcement training")
    p.add_argument("--model", required=True, help="SL checkpoint to start from")
    p.add_argument("--db", required=True)
    p.add_argument("--ser", type=float, default=0.0)
    p.add_argument("--dialogues", type=int, default=None)
    p.add_argument("--config", help="RL key=value config file")
    p.add_argument("--step-size", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--algorithm", choices=("enac", "reinforce"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-n", type=int, default=500)
    p.add_argument("--out-model", required=True)
    p.add_argument("--curve", help="training curve CSV")
    p.add_argument("--ontology")
    p.add_argument("--replay-sessions", help="session log for offline replay training")
    p.add_argument("--replay-ratings", help="rating log for offline replay training")
    p.set_defaults(func=cmd_train_rl)

    p = sub.add_parser("eval", help="success rate over simulated dialogues per SER")
    p.add_argument("--model", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--ser-list", default="0,0.15,0.3,0.45")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the table as CSV")
    p.add_argument("--ontology")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-f1", help="weighted F-measures on a corpus split")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("train", "valid", "test"), default="test")
    p.set_defaults(func=cmd_eval_f1)

    p = sub.add_parser("serve", help="start the HTTP dialogue service")
    p.add_argument("--model", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log", default=".", help="directory for session/rating logs")
    p.add_argument("--rating-token", help="bearer token required on rating endpoints")
    p.add_argument("--ui-dir", help="static chat UI bundle to serve at /ui")
    p.add_argument("--ontology")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("chat", help="terminal chat loop for quick inspection")
    p.add_argument("--model")
    p.add_argument("--db")
    p.add_argument("--url", help="talk to a running service instead of in-process")
    p.add_argument("--inspect", action="store_true", help="print the chosen action per turn")
    p.add_argument("--ontology")
    p.set_defaults(func=cmd_chat)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "chat" and not args.url and not (args.model and args.db):
        parser.error("chat requires --model and --db (or --url)")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NeuralDMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
