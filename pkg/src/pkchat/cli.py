"""Command-line entry points: train, eval, chat, serve, kg, corpus, extract."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .util import configure_logging


def _load_configs(path: str | None):
    from .model.config import ModelConfig
    from .trainer.loop import TrainConfig

    raw = {}
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return (ModelConfig(**raw.get("model", {})),
            TrainConfig(**raw.get("train", {})))


def _cmd_train(args):
    from .kg import load_triples
    from .textpipe.corpus import load_corpus
    from .trainer import save_checkpoint, train, write_trace

    model_cfg, train_cfg = _load_configs(args.config)
    if args.seed is not None:
        train_cfg.seed = args.seed
    scenarios = load_corpus(args.corpus)
    kg = load_triples(args.kg, fmt=args.kg_format) if args.kg else None
    ckpt, trace = train(scenarios, model_cfg, train_cfg, kg=kg)
    save_checkpoint(ckpt, args.out)
    if args.trace:
        write_trace(trace, args.trace)
    final = trace[-1] if trace else {"total": float("nan")}
    print(f"trained {train_cfg.steps} steps; final total loss "
          f"{final['total']:.4f}; checkpoint -> {args.out}")


def _cmd_eval(args):
    from .metrics import run_eval, write_report
    from .textpipe.corpus import load_corpus
    from .trainer import load_checkpoint, to_model

    ckpt = load_checkpoint(args.checkpoint)
    model = to_model(ckpt)
    scenarios = load_corpus(args.corpus)
    report = run_eval(model, scenarios)
    write_report(report, args.report, provenance={
        "checkpoint": str(args.checkpoint),
        "corpus": str(args.corpus),
        "model_config": ckpt.model_config.to_dict(),
        "step": ckpt.step,
    })
    print(report.table())
    print(f"report -> {args.report}")


def _build_orchestrator(checkpoint_path: str, kg_path: str, kg_format: str,
                        tau: float):
    from .kg import load_triples
    from .service import Orchestrator
    from .trainer import load_checkpoint, to_model

    ckpt = load_checkpoint(checkpoint_path)
    kg = load_triples(kg_path, fmt=kg_format)
    return Orchestrator(to_model(ckpt), kg, crf=ckpt.crf,
                        corpus_stats=ckpt.corpus_stats, tau=tau,
                        checkpoint_path=str(checkpoint_path))


def _cmd_chat(args):
    from .service import SessionStore

    orch = _build_orchestrator(args.checkpoint, args.kg, args.kg_format, args.tau)
    store = SessionStore()
    session = store.create()
    print("chat ready; empty line or ctrl-d exits. copied tokens print [in brackets].")
    while True:
        try:
            text = input("you> ").strip()
        except EOFError:
            break
        if not text:
            break
        result = orch.handle_message(session, text)
        shown = " ".join(
            f"[{t['text']}]" if t["source"] == "copy" else t["text"]
            for t in result.tokens)
        if result.topic_switched:
            print(f"  (topic -> {result.entity}, score {result.ts_score:.3f})")
        elif result.fallback:
            print(f"  (no entity resolved; keeping current topic, "
                  f"score {result.ts_score:.3f})")
        print(f"bot> {shown}")


def _cmd_serve(args):
    import uvicorn

    from .service import SessionStore, create_app

    orch = _build_orchestrator(args.checkpoint, args.kg, args.kg_format, args.tau)
    store = SessionStore()
    app = create_app(orch, store)
    if args.ui:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    if args.transcripts:
        import atexit

        def dump():
            out_dir = Path(args.transcripts)
            out_dir.mkdir(parents=True, exist_ok=True)
            for session in store.all():
                with open(out_dir / f"{session.id}.jsonl", "w",
                          encoding="utf-8") as fh:
                    for turn in session.history:
                        fh.write(json.dumps(
                            {"role": turn.role, "text": turn.text},
                            ensure_ascii=False) + "\n")
        atexit.register(dump)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def _cmd_kg(args):
    from .kg import load_triples

    if args.kg_command == "demo":
        from .textpipe.synthetic import make_demo_kg
        store = make_demo_kg(seed=args.seed, n_entities=args.entities)
        store.dump(args.out)
        print(f"wrote {len(store)} triples -> {args.out}")
        return
    store = load_triples(args.path, fmt=args.format)
    if args.kg_command == "load":
        print(f"loaded {len(store)} triples from {args.path}")
        return
    edges = store.neighborhood(args.entity)
    if not edges:
        print(f"no triples touch {args.entity!r}")
        return
    for edge in edges:
        if edge.direction == "out":
            print(f"{store.display_name(args.entity)} {edge.relation} {edge.neighbor}")
        else:
            print(f"{edge.neighbor} {edge.relation} {store.display_name(args.entity)}")


def _cmd_corpus(args):
    from .textpipe.corpus import corpus_stats, load_corpus, save_corpus

    if args.corpus_command == "gen":
        from .kg import load_triples
        from .textpipe.synthetic import gen_synthetic_corpus
        kg = load_triples(args.kg, fmt=args.kg_format)
        scenarios = gen_synthetic_corpus(
            kg, seed=args.seed, n_scenarios=args.n,
            switch_fraction=args.switch_fraction)
        save_corpus(scenarios, args.out)
        print(f"wrote {len(scenarios)} scenarios -> {args.out}")
        return
    stats = corpus_stats(load_corpus(args.path))
    print(f"scenarios: {stats['scenarios']}")
    print(f"rounds: {stats['rounds']}")
    print(f"avg rounds per scenario: {stats['avg_rounds']:.2f}")


def _cmd_extract(args):
    from .keywords.extract import rule_extract, textrank, tfidf_rank
    from .textpipe.tokenizer import tokenize

    tokens = tokenize(args.text)
    if args.method == "rule":
        candidates = rule_extract(tokens)
    elif args.method == "textrank":
        candidates = textrank(tokens, top_k=args.top_k)
    elif args.method in ("tfidf", "crf"):
        if not args.checkpoint:
            raise SystemExit(f"--checkpoint is required for method {args.method}")
        from .trainer import load_checkpoint
        ckpt = load_checkpoint(args.checkpoint)
        if args.method == "tfidf":
            if ckpt.corpus_stats is None:
                raise SystemExit("checkpoint has no corpus statistics")
            candidates = tfidf_rank(tokens, ckpt.corpus_stats, top_k=args.top_k)
        else:
            from .keywords.crf import crf_tag, tags_to_candidates
            if ckpt.crf is None:
                raise SystemExit("checkpoint has no tagger section")
            candidates = tags_to_candidates(tokens, crf_tag(tokens, ckpt.crf))
    else:
        raise SystemExit(f"unknown method {args.method}")
    for cand in candidates:
        print(json.dumps({"text": cand.text, "score": cand.score,
                          "method": cand.method, "span": list(cand.span)}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pkchat",
        description="knowledge-grounded dialogue: training, evaluation, chat")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a JSON-lines corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kg", default=None)
    p.add_argument("--kg-format", choices=("tsv", "ntriples"), default="tsv")
    p.add_argument("--config", default=None, help="JSON {model: {}, train: {}}")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None, help="write the loss trace CSV here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="run the automatic metrics over a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("chat", help="interactive terminal chat")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--kg-format", choices=("tsv", "ntriples"), default="tsv")
    p.add_argument("--tau", type=float, default=0.5)
    p.set_defaults(func=_cmd_chat)

    p = sub.add_parser("serve", help="run the HTTP chat service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--kg-format", choices=("tsv", "ntriples"), default="tsv")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--ui", default=None, help="static directory to mount at /")
    p.add_argument("--transcripts", default=None,
                   help="write session transcripts here on shutdown")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("kg", help="triple-store utilities")
    kg_sub = p.add_subparsers(dest="kg_command", required=True)
    q = kg_sub.add_parser("load", help="load a file and report the triple count")
    q.add_argument("path")
    q.add_argument("--format", choices=("tsv", "ntriples"), default="tsv")
    q.set_defaults(func=_cmd_kg)
    q = kg_sub.add_parser("query", help="print an entity's neighborhood")
    q.add_argument("path")
    q.add_argument("--entity", required=True)
    q.add_argument("--format", choices=("tsv", "ntriples"), default="tsv")
    q.set_defaults(func=_cmd_kg)
    q = kg_sub.add_parser("demo", help="write a small deterministic demo graph")
    q.add_argument("--out", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--entities", type=int, default=24)
    q.set_defaults(func=_cmd_kg)

    p = sub.add_parser("corpus", help="synthetic corpus tools")
    c_sub = p.add_subparsers(dest="corpus_command", required=True)
    q = c_sub.add_parser("gen", help="generate a synthetic corpus from a graph")
    q.add_argument("--kg", required=True)
    q.add_argument("--kg-format", choices=("tsv", "ntriples"), default="tsv")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--switch-fraction", type=float, default=0.25)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_corpus)
    q = c_sub.add_parser("stats", help="scenario and round counts")
    q.add_argument("path")
    q.set_defaults(func=_cmd_corpus)

    p = sub.add_parser("extract", help="run one keyword extractor on a string")
    p.add_argument("--method", required=True,
                   choices=("rule", "tfidf", "textrank", "crf"))
    p.add_argument("--text", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--top-k", type=int, default=5)
    p.set_defaults(func=_cmd_extract)

    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
