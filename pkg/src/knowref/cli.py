"""The knowref command line: every corpus stage behind one executable.

Stages compose through files: ingest emits sentence records (one
"id<TAB>text" line each), mine turns those into instance JSONL, label /
augment / pair transform instance files, resolve writes prediction
files ("id<TAB>choice[<TAB>score]"), and evaluate / stats / kappa print
JSON reports.  Artifact-producing commands write atomically (temp file
plus rename) and drop a JSON run manifest next to their output, so an
interrupted run never leaves a truncated file and a finished one is
auditable.  Identical inputs, flags and seed give byte-identical
outputs and manifests.

Exit codes: 0 success, 1 data errors, 2 usage errors.  Seeds come from
--seed, falling back to the KNOWREF_SEED environment variable, then 0.
A JSON config file (--config) can pre-set any flag; explicit flags win.
"""

import argparse
import hashlib
import json
import logging
import multiprocessing
import os
import sys
import tempfile
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .evaluation import consistency, corpus_stats, evaluate, fleiss_kappa
from .ingest import CleanupConfig, clean_text, split_sentences, tokenize
from .labeling import GenderLexicon, label_corpus
from .mining import load_person_nouns, mine_record
from .model import (
    ParseError,
    SentenceRecord,
    read_corpus,
    serialize_instance,
    validate_corpus,
)
from .resolvers import (
    AlwaysFirst,
    AlwaysSecond,
    ExternalPredictions,
    GenderRule,
    NGramModel,
    NGramSubstitution,
    RandomResolver,
    resolve_corpus,
    train_ngram_model,
)
from .service import AggregationPolicy, AnnotationStore, create_app, load_corpus_file
from .switching import augment_corpus, pair_corpus
from .tagging import LexiconTagger, PerceptronTagger

__all__ = ["PipelineRunManifest", "main"]

logger = logging.getLogger(__name__)

STYLES = ("plain", "wiki-extract", "subtitles")
RESOLVERS = ("random", "always-first", "always-second",
             "gender-rule", "ngram", "external")


class UsageError(ValueError):
    """A bad flag combination detected after argparse."""


@dataclass(frozen=True)
class PipelineRunManifest:
    """Audit record of one stage run; deliberately timestamp-free."""

    stage: str
    inputs: dict
    outputs: dict
    config: dict
    config_hash: str
    seed: Optional[int] = None
    rejections: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "rejections": self.rejections,
        }


def build_manifest(stage: str, *, inputs: dict, outputs: dict, config: dict,
                   seed: Optional[int] = None,
                   rejections: Optional[dict] = None) -> PipelineRunManifest:
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()
    return PipelineRunManifest(
        stage=stage, inputs=inputs, outputs=outputs, config=config,
        config_hash=digest, seed=seed, rejections=dict(rejections or {}))


# ---------------------------------------------------------------------------
# File plumbing

@contextmanager
def atomic_writer(path: str):
    """Write to a sibling temp file and rename into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".knowref-",
                               suffix=".part")
    handle = os.fdopen(fd, "w", encoding="utf-8")
    try:
        yield handle
        handle.flush()
        os.fsync(handle.fileno())
        handle.close()
        os.replace(tmp, path)
    except BaseException:
        handle.close()
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_lines(path: str, lines: Iterable[str]) -> int:
    count = 0
    with atomic_writer(path) as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")
            count += 1
    return count


def write_manifest(path: str, manifest: PipelineRunManifest) -> None:
    with atomic_writer(path) as handle:
        json.dump(manifest.to_json(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def manifest_path(args: argparse.Namespace, primary_output: str) -> str:
    return args.manifest or primary_output + ".manifest.json"


def parse_sentence_line(line: str, lineno: int, source: str) -> SentenceRecord:
    parts = line.split("\t", 1)
    if len(parts) != 2 or not parts[0]:
        raise ParseError("expected 'id<TAB>text'", line=lineno)
    sentence_id, text = parts
    if ":" in sentence_id:
        source = sentence_id.split(":", 1)[0]
    return SentenceRecord(id=sentence_id, text=text, source=source)


def read_sentence_file(path: str) -> Iterator[SentenceRecord]:
    default_source = os.path.splitext(os.path.basename(path))[0]
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            yield parse_sentence_line(line, lineno, default_source)


def emit_report(args: argparse.Namespace, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        with atomic_writer(args.out) as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def resolved_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("KNOWREF_SEED", "0"))


def resolved_jobs(args: argparse.Namespace) -> int:
    jobs = getattr(args, "jobs", None)
    if jobs is None:
        return 1
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")
    return jobs


# ---------------------------------------------------------------------------
# ingest

def collect_input_files(path: str) -> list[str]:
    if os.path.isdir(path):
        found = []
        for root, _, names in os.walk(path):
            found.extend(os.path.join(root, name) for name in names)
        if not found:
            raise ValueError(f"{path}: directory holds no input files")
        return sorted(found)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such input: {path}")
    return [path]


def cmd_ingest(args: argparse.Namespace) -> int:
    cleanup = CleanupConfig.for_style(args.style)
    inputs: dict[str, int] = {}
    lines: list[str] = []
    seen_sources: Counter = Counter()
    for file_path in collect_input_files(args.input):
        with open(file_path, "r", encoding="utf-8", errors="replace") as handle:
            raw = handle.read()
        stem = os.path.splitext(os.path.basename(file_path))[0]
        ordinal = seen_sources[stem]
        seen_sources[stem] += 1
        source = stem if ordinal == 0 else f"{stem}-{ordinal}"
        records = split_sentences(clean_text(raw, cleanup), source=source)
        # the record format is tab-delimited, so the text must stay tab-free
        lines.extend(f"{r.id}\t{r.text.replace(chr(9), ' ')}" for r in records)
        inputs[file_path] = len(records)
    total = write_lines(args.out, lines)
    manifest = build_manifest(
        "ingest",
        inputs=inputs,
        outputs={args.out: total},
        config={"style": args.style})
    write_manifest(manifest_path(args, args.out), manifest)
    print(f"ingest: {len(inputs)} file(s) -> {total} sentences")
    return 0


# ---------------------------------------------------------------------------
# mine

_WORKER: dict = {}


def _mine_setup(tagger_path: Optional[str], names_path: Optional[str]) -> None:
    _WORKER["tagger"] = (PerceptronTagger.load(tagger_path)
                         if tagger_path else LexiconTagger())
    _WORKER["lexicon"] = GenderLexicon.load(names_path)
    _WORKER["person_nouns"] = load_person_nouns()


def _mine_one(payload: tuple) -> tuple:
    lineno, line, default_source = payload
    record = parse_sentence_line(line, lineno, default_source)
    instance = mine_record(record, _WORKER["tagger"], _WORKER["lexicon"],
                           person_nouns=_WORKER["person_nouns"])
    rejections = [(record.id, v.stage, v.reason.value)
                  for v in record.verdicts if v.reason is not None]
    return (serialize_instance(instance) if instance else None, rejections)


def cmd_mine(args: argparse.Namespace) -> int:
    default_source = os.path.splitext(os.path.basename(args.input))[0]
    with open(args.input, "r", encoding="utf-8") as handle:
        payloads = [(lineno, line.rstrip("\n"), default_source)
                    for lineno, line in enumerate(handle, start=1)
                    if line.strip()]

    jobs = resolved_jobs(args)
    if jobs == 1:
        _mine_setup(args.tagger, args.names)
        results = map(_mine_one, payloads)
        results = list(results)
    else:
        with multiprocessing.Pool(jobs, initializer=_mine_setup,
                                  initargs=(args.tagger, args.names)) as pool:
            results = list(pool.imap(_mine_one, payloads, chunksize=64))

    instance_lines = [line for line, _ in results if line is not None]
    rejections = [item for _, items in results for item in items]
    write_lines(args.out, instance_lines)
    reject_log = args.reject_log or args.out + ".rejects.tsv"
    write_lines(reject_log, ("\t".join(item) for item in rejections))

    histogram = Counter(reason for _, _, reason in rejections)
    manifest = build_manifest(
        "mine",
        inputs={args.input: len(payloads)},
        outputs={args.out: len(instance_lines), reject_log: len(rejections)},
        config={"tagger": args.tagger, "names": args.names, "jobs": jobs},
        rejections=dict(sorted(histogram.items())))
    write_manifest(manifest_path(args, args.out), manifest)
    print(f"mine: {len(payloads)} sentences -> {len(instance_lines)} instances "
          f"({len(rejections)} rejections)")
    return 0


# ---------------------------------------------------------------------------
# label / augment / pair

def cmd_label(args: argparse.Namespace) -> int:
    seed = resolved_seed(args)
    instances = list(read_corpus(args.input))
    lexicon = GenderLexicon.load(args.lexicon)
    labeled, abstained = label_corpus(
        instances, lexicon, neutralize=args.neutralize, seed=seed)
    write_lines(args.out, (serialize_instance(i) for i in labeled))
    abstain_log = args.abstain_log or args.out + ".abstained.tsv"
    write_lines(abstain_log,
                (f"{instance_id}\t{reason.value}" for instance_id, reason in abstained))

    manifest = build_manifest(
        "label",
        inputs={args.input: len(instances)},
        outputs={args.out: len(labeled), abstain_log: len(abstained)},
        config={"lexicon": args.lexicon, "neutralize": args.neutralize},
        seed=seed,
        rejections=dict(sorted(Counter(r.value for _, r in abstained).items())))
    write_manifest(manifest_path(args, args.out), manifest)
    print(f"label: {len(instances)} instances -> {len(labeled)} labeled "
          f"({len(abstained)} abstained)")
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    instances = list(read_corpus(args.input))
    skipped: list[str] = []
    augmented = list(augment_corpus(
        instances, on_skip=lambda inst, exc: skipped.append(inst.id)))
    write_lines(args.out, (serialize_instance(i) for i in augmented))
    if args.skip_log:
        write_lines(args.skip_log, skipped)

    manifest = build_manifest(
        "augment",
        inputs={args.input: len(instances)},
        outputs={args.out: len(augmented)},
        config={},
        rejections={"OverlappingOccurrences": len(skipped)} if skipped else {})
    write_manifest(manifest_path(args, args.out), manifest)
    print(f"augment: {len(instances)} instances -> {len(augmented)} "
          f"({len(skipped)} unswitchable)")
    return 0


def cmd_pair(args: argparse.Namespace) -> int:
    instances = list(read_corpus(args.input))
    pairs = list(pair_corpus(instances))
    write_lines(args.out_original,
                (serialize_instance(p.original) for p in pairs))
    write_lines(args.out_switched,
                (serialize_instance(p.switched) for p in pairs))

    manifest = build_manifest(
        "pair",
        inputs={args.input: len(instances)},
        outputs={args.out_original: len(pairs), args.out_switched: len(pairs)},
        config={},
        rejections={"OverlappingOccurrences": len(instances) - len(pairs)}
        if len(pairs) < len(instances) else {})
    write_manifest(manifest_path(args, args.out_original), manifest)
    print(f"pair: {len(instances)} instances -> {len(pairs)} aligned pairs")
    return 0


# ---------------------------------------------------------------------------
# resolve / evaluate / stats / kappa

def build_resolver(args: argparse.Namespace, seed: int):
    kind = args.resolver
    if kind == "random":
        return RandomResolver(seed=seed)
    if kind == "always-first":
        return AlwaysFirst()
    if kind == "always-second":
        return AlwaysSecond()
    if kind == "gender-rule":
        return GenderRule(GenderLexicon.load(args.lexicon))
    if kind == "ngram":
        if args.model:
            model = NGramModel.load(args.model)
        elif args.train:
            sentences = (tokenize(record.text)
                         for record in read_sentence_file(args.train))
            model = train_ngram_model(sentences, order=args.order, k=args.k)
            if args.save_model:
                model.save(args.save_model)
        else:
            raise UsageError("ngram resolver needs --model or --train")
        return NGramSubstitution(model)
    if kind == "external":
        if not args.predictions:
            raise UsageError("external resolver needs --predictions")
        return ExternalPredictions.from_file(args.predictions)
    raise UsageError(f"unknown resolver {kind!r}")


def prediction_line(prediction) -> str:
    line = f"{prediction.instance_id}\t{prediction.choice.value}"
    if prediction.score_first is not None:
        line += f"\t{prediction.score_first!r}"
    return line


def cmd_resolve(args: argparse.Namespace) -> int:
    seed = resolved_seed(args)
    resolver = build_resolver(args, seed)
    instances = list(read_corpus(args.input))
    predictions = list(resolve_corpus(resolver, instances))
    write_lines(args.out, (prediction_line(p) for p in predictions))

    manifest = build_manifest(
        "resolve",
        inputs={args.input: len(instances)},
        outputs={args.out: len(predictions)},
        config={"resolver": args.resolver, "model": args.model,
                "train": args.train, "order": args.order, "k": args.k,
                "lexicon": args.lexicon},
        seed=seed)
    write_manifest(manifest_path(args, args.out), manifest)
    print(f"resolve[{resolver.name}]: {len(predictions)} predictions")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    instances = list(read_corpus(args.corpus))
    scored = instances
    switched = []
    if args.switched:
        switched = list(read_corpus(args.switched))
        if len(switched) != len(instances):
            raise ValueError(
                f"aligned corpora differ in length: {len(instances)} vs "
                f"{len(switched)}")
        # accuracy covers both halves, consistency their alignment
        scored = instances + switched
    predictions = ExternalPredictions.from_file(args.predictions)
    payload = {"accuracy": evaluate(scored, predictions,
                                    strict=args.strict).to_json()}
    if switched:
        pairs = list(zip(instances, switched))
        payload["consistency"] = consistency(
            pairs, predictions, strict=args.strict).to_json()
    emit_report(args, payload)

    if args.manifest:
        inputs = {args.corpus: len(instances),
                  args.predictions: len(predictions)}
        if args.switched:
            inputs[args.switched] = len(instances)
        write_manifest(args.manifest, build_manifest(
            "evaluate", inputs=inputs, outputs={},
            config={"strict": args.strict}))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    stats = corpus_stats(read_corpus(args.corpus))
    emit_report(args, stats.to_json())
    if args.manifest:
        write_manifest(args.manifest, build_manifest(
            "stats", inputs={args.corpus: stats.n}, outputs={}, config={}))
    return 0


def matrix_rows(payload) -> list:
    if isinstance(payload, list):
        return payload
    if isinstance(payload, dict):
        if "rows" in payload:
            return payload["rows"]
        if "matrix" in payload and isinstance(payload["matrix"], dict):
            return payload["matrix"].get("rows", [])
    raise ValueError("matrix file must hold rows, {rows}, or {matrix:{rows}}")


def cmd_kappa(args: argparse.Namespace) -> int:
    with open(args.matrix, "r", encoding="utf-8") as handle:
        rows = matrix_rows(json.load(handle))
    kappa = fleiss_kappa(rows)
    emit_report(args, {"kappa": kappa, "items": len(rows),
                       "raters": sum(rows[0])})
    if args.manifest:
        write_manifest(args.manifest, build_manifest(
            "kappa", inputs={args.matrix: len(rows)}, outputs={}, config={}))
    return 0


# ---------------------------------------------------------------------------
# validate / serve

def cmd_validate(args: argparse.Namespace) -> int:
    count = validate_corpus(args.corpus)
    print(f"{args.corpus}: {count} valid records")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    corpus = load_corpus_file(args.corpus)
    tokens = args.tokens.split(",") if args.tokens else None
    policy = AggregationPolicy(annotators_per_item=args.annotators,
                               agreement_threshold=args.threshold)
    with AnnotationStore(corpus, args.store, tokens=tokens) as store:
        app = create_app(store, policy)
        print(f"serving {len(corpus)} candidates on "
              f"http://{args.host}:{args.port} (store: {args.store})")
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> tuple[argparse.ArgumentParser, list]:
    parser = argparse.ArgumentParser(
        prog="knowref",
        description="Mine, label, augment and evaluate ambiguous-pronoun "
                    "coreference corpora.")
    parser.add_argument("--config", metavar="FILE",
                        help="JSON file of flag defaults; explicit flags win")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (default: $KNOWREF_SEED or 0)")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes for shardable stages")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")

    def make(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = make("ingest", cmd_ingest,
             "clean raw text and split it into sentence records")
    p.add_argument("--in", dest="input", required=True,
                   help="raw text file or directory of files")
    p.add_argument("--out", required=True, help="sentence record output")
    p.add_argument("--style", choices=STYLES, default="plain",
                   help="cleanup aggressiveness preset")
    p.add_argument("--manifest", help="manifest path (default OUT.manifest.json)")

    p = make("mine", cmd_mine,
             "filter sentence records into unlabeled problem instances")
    p.add_argument("--in", dest="input", required=True,
                   help="sentence record file")
    p.add_argument("--out", required=True, help="instance JSONL output")
    p.add_argument("--reject-log",
                   help="rejection log path (default OUT.rejects.tsv)")
    p.add_argument("--tagger", help="trained tagger model (default: lexicon tagger)")
    p.add_argument("--names", help="name gender lexicon TSV (default: bundled)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                   help="worker processes (order-preserving)")
    p.add_argument("--manifest")

    p = make("label", cmd_label,
             "apply the gender heuristic; optionally neutralize surfaces")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon", help="name gender lexicon TSV (default: bundled)")
    p.add_argument("--neutralize", action="store_true",
                   help="replace names so gender no longer gives the answer away")
    p.add_argument("--abstain-log",
                   help="abstention log path (default OUT.abstained.tsv)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--manifest")

    p = make("augment", cmd_augment,
             "double a labeled corpus by switching antecedents")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--skip-log", help="ids of unswitchable instances")
    p.add_argument("--manifest")

    p = make("pair", cmd_pair,
             "emit aligned original/switched files for consistency scoring")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-original", required=True)
    p.add_argument("--out-switched", required=True)
    p.add_argument("--manifest")

    p = make("resolve", cmd_resolve,
             "run a resolver over a corpus and write predictions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resolver", choices=RESOLVERS, required=True)
    p.add_argument("--model", help="n-gram model file")
    p.add_argument("--train", help="sentence records to train an n-gram model on")
    p.add_argument("--save-model", help="persist the freshly trained model here")
    p.add_argument("--order", type=int, default=3, help="n-gram order")
    p.add_argument("--k", type=float, default=0.1, help="additive smoothing")
    p.add_argument("--lexicon", help="gender lexicon for gender-rule")
    p.add_argument("--predictions", help="prediction file for external")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--manifest")

    p = make("evaluate", cmd_evaluate,
             "score a prediction file; JSON report to stdout or --out")
    p.add_argument("--corpus", required=True, help="labeled instance JSONL")
    p.add_argument("--predictions", required=True)
    p.add_argument("--switched",
                   help="aligned switched corpus: adds a consistency report")
    p.add_argument("--strict", action="store_true",
                   help="treat missing predictions as errors")
    p.add_argument("--out")
    p.add_argument("--manifest")

    p = make("stats", cmd_stats, "pronoun gender and label position counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--manifest")

    p = make("kappa", cmd_kappa,
             "Fleiss' kappa of an agreement matrix JSON file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out")
    p.add_argument("--manifest")

    p = make("validate", cmd_validate,
             "check every record of a corpus file against the model invariants")
    p.add_argument("--corpus", required=True)

    p = make("serve", cmd_serve, "run the annotation service")
    p.add_argument("--corpus", required=True, help="neutralized instance JSONL")
    p.add_argument("--store", required=True, help="append-only label store")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--threshold", type=int, default=5,
                   help="labels that must agree for acceptance")
    p.add_argument("--annotators", type=int, default=6,
                   help="annotators per item")
    p.add_argument("--tokens", help="comma-separated annotator allow-list")

    # subcommands parse into fresh namespaces, so config defaults must
    # be pushed into every parser that owns the flag
    parsers = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            parsers.extend(action.choices.values())
    return parser, parsers


def load_config(argv: list[str]) -> dict:
    """Pull --config out of argv by hand so it can seed parser defaults."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return {key.replace("-", "_"): value for key, value in payload.items()}


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, parsers = build_parser()
    try:
        config = load_config(argv)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    known_keys = {action.dest for p in parsers for action in p._actions
                  if action.dest != "help"}
    unknown = sorted(set(config) - known_keys)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")
    for p in parsers:
        owned = {action.dest for action in p._actions}
        relevant = {key: value for key, value in config.items() if key in owned}
        if relevant:
            p.set_defaults(**relevant)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"knowref {args.command}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"knowref {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
