"""Command-line entrypoint.

Machine-readable JSON goes to stdout; human-oriented progress and error
text goes to stderr.  Exit codes: 0 success, 1 usage error, 2 data error.
Every subcommand is deterministic given --seed and its inputs, except
build-data with an external paraphrase endpoint (network output is
whatever the endpoint returns).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .corpus import CorpusError, load_corpus, load_instances
from .matching import matches
from .encoder import HashedEncoder, similarity
from .evaluation import EvalSetup, run_evaluation, tune_threshold
from .paraphrase import FixtureParaphraser, HttpParaphraser
from .pipeline import PipelineConfig, load_dataset, run_pipeline, write_dataset
from .rulegen import NoPathError, generate_rule, generate_surface_rule, generate_syntactic_rule
from .rules import ParseError, RuleError, RuleRecord, load_rules_tsv, parse_rule, save_rules_tsv, serialize_rule
from .sieve import Mode, SieveConfig, SupportRule, load_episodes
from .training import TrainingConfig, train

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this tool reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_instance_file(path, corpus_path=None):
    sentences = None
    if corpus_path:
        sentences = {s.id: s for s in load_corpus(corpus_path)}
    return load_instances(path, sentences)


def _training_config(path, seed) -> TrainingConfig:
    if path is None:
        cfg = TrainingConfig()
    else:
        obj = _read_json(path)
        profile = obj.pop("profile", None)
        base = TrainingConfig.desk() if profile == "desk" else TrainingConfig()
        known = {f.name for f in dataclasses.fields(TrainingConfig)}
        unknown = set(obj) - known
        if unknown:
            raise CorpusError(f"unknown training config keys: {sorted(unknown)}")
        cfg = dataclasses.replace(base, **obj)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def cmd_validate(args) -> int:
    report = {}
    if not (args.corpus or args.instances or args.episodes):
        raise CorpusError("nothing to validate: pass --corpus, --instances, or --episodes")
    sentences = None
    if args.corpus:
        corpus = load_corpus(args.corpus)
        sentences = {s.id: s for s in corpus}
        report["sentences"] = len(corpus)
    if args.instances:
        instances = load_instances(args.instances, sentences)
        report["instances"] = len(instances)
    if args.episodes:
        episodes = load_episodes(args.episodes)
        report["episodes"] = len(episodes)
    _emit(report)
    return 0


def cmd_gen_rules(args) -> int:
    instances = _load_instance_file(args.instances, args.corpus)
    records = []
    skipped = 0
    for inst in instances:
        try:
            if args.kind == "surface":
                rule = generate_surface_rule(inst)
            elif args.fallback:
                rule = generate_rule(inst)
            else:
                rule = generate_syntactic_rule(inst, lexicalize=args.lexicalize_identical)
        except NoPathError:
            skipped += 1
            continue
        records.append(RuleRecord(
            relation=inst.relation or "unlabeled",
            rule=rule,
            provenance=inst.key(),
        ))
    save_rules_tsv(records, args.output)
    if skipped:
        _log(f"skipped {skipped} instances with no connecting dependency path")
    _emit({"rules": len(records), "skipped": skipped, "output": str(args.output)})
    return 0


def cmd_build_data(args) -> int:
    corpus = load_corpus(args.corpus)
    obj = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.no_paraphrase:
        obj["no_paraphrase"] = True
    if args.no_preprocess:
        obj["no_preprocess"] = True
    if args.no_augment:
        obj["no_augment"] = True
    cfg = PipelineConfig.from_dict(obj)
    if args.paraphrase_url:
        paraphraser = HttpParaphraser(args.paraphrase_url)
    else:
        paraphraser = FixtureParaphraser()
    pairs, stats = run_pipeline(corpus, cfg, paraphraser)
    write_dataset(pairs, args.output)
    _log(f"wrote {len(pairs)} pairs to {args.output}")
    _emit(stats)
    return 0


def cmd_train(args) -> int:
    pairs = load_dataset(args.data)
    cfg = _training_config(args.config, args.seed)
    encoder, logs = train(pairs, cfg)
    encoder.save(args.output)
    first, last = logs[0], logs[-1]
    _log(f"step {first.step}: loss {first.loss:.4f} -> step {last.step}: loss {last.loss:.4f}")
    _emit({
        "pairs": len(pairs),
        "steps": len(logs),
        "first_loss": first.loss,
        "final_loss": last.loss,
        "model": str(args.output),
    })
    return 0


def cmd_score(args) -> int:
    encoder = HashedEncoder.load(args.model)
    parse_rule(args.rule)  # surfaces rule syntax errors before scoring
    _emit({
        "rule": args.rule,
        "sentence": args.sentence,
        "similarity": similarity(encoder, args.rule, args.sentence),
    })
    return 0


def cmd_match(args) -> int:
    records = load_rules_tsv(args.rules)
    instances = _load_instance_file(args.corpus, args.sentences)
    for record in records:
        rule_text = serialize_rule(record.rule)
        for inst in instances:
            result = matches(record.rule, inst, case_sensitive=args.case_sensitive)
            binding = None
            if result.matched:
                binding = {
                    "subj": [inst.subj.start, inst.subj.end],
                    "obj": [inst.obj.start, inst.obj.end],
                    "path": list(result.path) if result.path else [],
                    "edges": [[h, d, lab] for h, d, lab in result.edges] if result.edges else [],
                    "interval": list(result.interval) if result.interval else None,
                }
            print(json.dumps({
                "rule": rule_text,
                "instance_id": inst.key(),
                "matched": result.matched,
                "binding": binding,
            }))
    return 0


def _parse_overrides(items) -> dict[str, float]:
    overrides = {}
    for item in items or []:
        rel, sep, value = item.partition("=")
        if not sep or not rel:
            raise CorpusError(f"override must look like relation=0.7, got: {item}")
        try:
            overrides[rel] = float(value)
        except ValueError:
            raise CorpusError(f"override threshold must be a number, got: {value}")
    return overrides


def cmd_eval(args) -> int:
    episodes = load_episodes(args.episodes)
    embedder = HashedEncoder.load(args.model) if args.model else None
    external = None
    if args.rules != "generated":
        external = []
        for record in load_rules_tsv(args.rules):
            external.append(SupportRule(
                rule=record.rule,
                relation=record.relation,
                source_instance_id=record.provenance or "manual",
            ))
    cfg = SieveConfig(
        mode=Mode(args.mode),
        threshold=args.t,
        overrides=_parse_overrides(args.override),
        case_sensitive=args.case_sensitive,
    )
    setup = EvalSetup(cfg=cfg, embedder=embedder, external_rules=external)
    report = run_evaluation(episodes, setup)
    out = {
        "mode": args.mode,
        "threshold": args.t,
        "overrides": cfg.overrides,
        "episodes": len(episodes),
        "overall": dataclasses.asdict(report.overall),
        "per_relation": {rel: dataclasses.asdict(m) for rel, m in sorted(report.per_relation.items())},
    }
    if args.predictions:
        out["predictions"] = [
            {"episode_id": eid, "relation": p.relation, "score": p.score,
             "channel": p.channel.value, "rule_id": p.matched_rule}
            for eid, p in report.predictions
        ]
    if args.report:
        Path(args.report).write_text(json.dumps(out, indent=2))
        _log(f"report written to {args.report}")
    _emit(out)
    return 0


def cmd_tune(args) -> int:
    episodes = load_episodes(args.dev)
    embedder = HashedEncoder.load(args.model)
    cfg = SieveConfig(mode=Mode(args.mode))
    threshold = tune_threshold(episodes, EvalSetup(cfg=cfg, embedder=embedder), step=args.step)
    _emit({"threshold": threshold, "mode": args.mode, "step": args.step, "episodes": len(episodes)})
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.bundle, host=args.host, port=args.port, persist_dir=args.persist)
    return 0


def cmd_make_demo(args) -> int:
    from .demo import DEMO_SEED, make_demo

    seed = args.seed if args.seed is not None else DEMO_SEED
    manifest = make_demo(args.output, seed=seed, n_sentences=args.sentences, n_episodes=args.episodes)
    _emit(manifest)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="relsieve", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed override")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    # Accept --seed after the subcommand as well.  SUPPRESS keeps the
    # subparser from clobbering a seed given before the subcommand.
    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="RNG seed override")

    p = sub.add_parser("validate", parents=[], help="validate corpus / instance / episode files")
    p.add_argument("--corpus", help="sentence JSONL")
    p.add_argument("--instances", help="instance JSONL (inline sentences or ids into --corpus)")
    p.add_argument("--episodes", help="episode JSONL")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-rules", help="generate rules from labeled instances")
    p.add_argument("--instances", required=True)
    p.add_argument("--corpus", help="sentence JSONL when instances reference sentence ids")
    p.add_argument("--kind", choices=("syntactic", "surface"), default="syntactic")
    p.add_argument("--lexicalize-identical", action="store_true",
                   help="use span words instead of types when subject and object types are equal")
    p.add_argument("--fallback", action="store_true",
                   help="fall back to a surface rule when no dependency path exists")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_rules)

    p = sub.add_parser("build-data", parents=[seeded], help="corpus -> (rule, sentence) training pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="JSON file of pipeline settings")
    p.add_argument("--no-paraphrase", action="store_true")
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--paraphrase-url", help="external paraphrase endpoint (non-deterministic)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_build_data)

    p = sub.add_parser("train", parents=[seeded], help="train the dual encoder on a pair dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help='JSON training settings; {"profile": "desk"} starts from the laptop profile')
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="similarity between one rule and one marked sentence")
    p.add_argument("--model", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--sentence", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("match", help="strict-match rules against instances (JSONL per pair)")
    p.add_argument("--rules", required=True, help="TSV: relation<TAB>rule<TAB>provenance")
    p.add_argument("--corpus", required=True, help="instance JSONL")
    p.add_argument("--sentences", help="sentence JSONL when instances reference sentence ids")
    p.add_argument("--case-sensitive", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="episodic evaluation")
    p.add_argument("--episodes", required=True)
    p.add_argument("--model", help="encoder file (required for soft/hybrid)")
    p.add_argument("--rules", default="generated",
                   help='"generated" (from supports) or a rules TSV file')
    p.add_argument("--mode", choices=("hard", "soft", "hybrid"), default="hybrid")
    p.add_argument("--t", type=float, default=0.5, help="abstention threshold")
    p.add_argument("--override", action="append", metavar="REL=T",
                   help="per-relation threshold override; repeatable")
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--predictions", action="store_true", help="include per-episode predictions")
    p.add_argument("--report", help="also write the JSON report to this path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", help="sweep thresholds on a dev episode file")
    p.add_argument("--dev", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=("soft", "hybrid"), default="hybrid")
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("serve", help="run the rule workbench HTTP service")
    p.add_argument("--bundle", required=True, help="demo bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000, help="0 binds an ephemeral port")
    p.add_argument("--persist", help="directory for session JSON files")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("make-demo", parents=[seeded], help="build the synthetic demo bundle")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sentences", type=int, default=1800)
    p.add_argument("--episodes", type=int, default=200)
    p.set_defaults(func=cmd_make_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        return args.func(args)
    except (CorpusError, RuleError, ParseError, NoPathError) as exc:
        _log(f"error: {exc}")
        return DATA_ERROR
    except FileNotFoundError as exc:
        _log(f"error: {exc}")
        return DATA_ERROR
    except json.JSONDecodeError as exc:
        _log(f"error: invalid JSON: {exc}")
        return DATA_ERROR
    except ValueError as exc:
        _log(f"error: {exc}")
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
