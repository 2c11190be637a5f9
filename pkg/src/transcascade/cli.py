"""Command-line interface: ``transcascade <command> ...``.

Exit codes: 0 success, 1 failure (a JSON error record is written to stderr,
or convention violations were found by ``validate``), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from . import __version__
from .anonymize import PolicyError, parse_policy, pseudonymize, read_sidecar, restore, sidecar_lines
from .catalog import SAMPLE_DIR, VIEWS, CatalogError, format_records, import_catalog, query
from .compiler import CompileError
from .config import Config, ConfigError, load_config
from .engine import (
    AnnotatedDocument,
    Cascade,
    PassError,
    load_manifest,
    read_standoff,
    run_cascade,
    to_standoff,
)
from .evaluation import EvalError, score, sparsity_warning, split_corpus
from .grammar import GrammarError
from .lexicon import LexiconError
from .packs import PackError, pack_dir
from .transcript import (
    TranscriptError,
    parse_transcription,
    serialize,
    validate_conventions,
    violations_to_jsonl,
)
from .typology import TypologyError

__all__ = ["main", "build_parser"]


class CliError(Exception):
    def __init__(self, message: str, file: str | None = None):
        super().__init__(message)
        self.file = file


_ERRORS = (
    TranscriptError,
    GrammarError,
    CompileError,
    LexiconError,
    TypologyError,
    PassError,
    EvalError,
    PolicyError,
    CatalogError,
    ConfigError,
    PackError,
    CliError,
    OSError,
    ValueError,
)


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(exc.strerror or str(exc), path) from None


def _write(data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    sys.stdout.buffer.write(data)
    sys.stdout.buffer.flush()


def _load_doc(path: str, registry=None) -> AnnotatedDocument:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            doc = parse_transcription(_read_input(path), path)
        return AnnotatedDocument.from_document(doc, registry)
    except TranscriptError as exc:
        raise CliError(str(exc), path) from None


# ---------------------------------------------------------------------------
# cascades


def _manifest_for(spec: str) -> Path:
    p = Path(spec)
    if p.is_file():
        return p
    return pack_dir(spec) / "cascade.manifest"


@lru_cache(maxsize=None)
def _cascade(specs: tuple[str, ...], config_path: str | None) -> Cascade:
    cfg = load_config(config_path)
    registry = cfg.registry()
    passes = Cascade(())
    for spec in specs:
        manifest = _manifest_for(spec)
        try:
            c = load_manifest(manifest, registry, cfg.max_repeat)
        except (GrammarError, LexiconError) as exc:
            raise CliError(str(exc), str(manifest)) from None
        # prefix pass names with the pack so two packs may reuse a file name
        passes = passes + Cascade(tuple((f"{spec}:{n}", t) for n, t in c.passes))
    return Cascade(passes.passes, cfg.ne_element)


def _annotate_one(job: tuple) -> bytes:
    path, specs, config_path, fmt, speakers, backend = job
    cascade = _cascade(specs, config_path)
    adoc = _load_doc(path, load_config(config_path).registry())
    try:
        out = run_cascade(cascade, adoc, backend=backend, speakers=speakers)
    except PassError as exc:
        raise CliError(str(exc), path) from None
    if fmt == "standoff":
        return to_standoff(out).encode("utf-8")
    return out.serialize(cascade.ne_element)


def _map(fn, jobs: list, n_jobs: int) -> list:
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs))  # keeps input order


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args: argparse.Namespace, cfg: Config) -> int:
    found = False
    for path in args.files:
        doc = _load_doc(path).document
        vs = validate_conventions(doc)
        if vs:
            found = True
            for line in violations_to_jsonl(vs).splitlines():
                rec = json.loads(line)
                rec["file"] = path
                _write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    return 1 if found else 0


def cmd_compile(args: argparse.Namespace, cfg: Config) -> int:
    cascade = _cascade(tuple(args.packs), args.config)
    record = {
        "ne_element": cascade.ne_element,
        "passes": [{"name": n, "transducer": t.to_dict()} for n, t in cascade.passes],
    }
    text = json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        for n, t in cascade.passes:
            print(f"{n}: {t.n_states} states, {t.n_transitions} transitions", file=sys.stderr)
    else:
        _write(text)
    return 0


def cmd_annotate(args: argparse.Namespace, cfg: Config) -> int:
    specs = tuple(s.strip() for s in args.cascade.split(",") if s.strip())
    if not specs:
        raise CliError("--cascade needs at least one pack")
    _cascade(specs, args.config)  # fail early on bad packs
    speakers = frozenset(args.speakers.split(",")) if args.speakers else None
    files = args.files or ["-"]
    if args.output_dir and "-" in files:
        raise CliError("--output-dir cannot be used with standard input")
    jobs = [(f, specs, args.config, args.format, speakers, args.backend) for f in files]
    results = _map(_annotate_one, jobs, args.jobs)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        suffix = ".jsonl" if args.format == "standoff" else ".trs"
        for f, data in zip(files, results):
            (out / (Path(f).stem + suffix)).write_bytes(data)
    else:
        for data in results:
            _write(data)
    return 0


def _collect(path: str) -> dict[str, Path]:
    p = Path(path)
    if p.is_dir():
        return {f.stem: f for f in sorted(p.iterdir()) if f.suffix in (".trs", ".xml", ".jsonl")}
    if p.is_file():
        return {p.stem: p}
    raise CliError("no such file or directory", path)


def cmd_evaluate(args: argparse.Namespace, cfg: Config) -> int:
    gold_files, sys_files = _collect(args.gold), _collect(args.system)
    missing = sorted(set(gold_files) ^ set(sys_files))
    if missing and not (len(gold_files) == len(sys_files) == 1):
        raise CliError(f"gold and system file sets differ: {missing}")
    pairs = (
        list(zip(gold_files.values(), sys_files.values()))
        if missing
        else [(gold_files[k], sys_files[k]) for k in sorted(gold_files)]
    )
    gold, system = [], []
    for gf, sf in pairs:
        s = _load_doc(str(sf))
        if gf.suffix == ".jsonl":
            try:
                anns = read_standoff(gf.read_text(encoding="utf-8"))
            except ValueError as exc:
                raise CliError(str(exc), str(gf)) from None
            g = AnnotatedDocument(s.document).with_annotations(anns)
        else:
            g = _load_doc(str(gf))
        gold.append(g)
        system.append(s)
    try:
        report = score(gold, system, bracket_type=not args.bracket_span_only and cfg.bracket_requires_type)
    except EvalError as exc:
        raise CliError(str(exc)) from None
    _write(report.to_json() + "\n" if args.format == "json" else report.to_text())
    warn = sparsity_warning(report, args.threshold if args.threshold is not None else cfg.sparsity_threshold)
    if warn:
        print(f"warning: {warn}", file=sys.stderr)
    return 0


def cmd_split(args: argparse.Namespace, cfg: Config) -> int:
    files: list[str] = []
    for f in args.files:
        p = Path(f)
        files.extend(str(x) for x in sorted(p.iterdir()) if x.is_file()) if p.is_dir() else files.append(f)
    result = split_corpus(files, args.fraction, args.seed, args.basis)
    _write(json.dumps(result.to_dict(), ensure_ascii=False, indent=2) + "\n")
    return 0


def cmd_anonymize(args: argparse.Namespace, cfg: Config) -> int:
    if args.restore:
        try:
            doc = parse_transcription(_read_input(args.file), args.file)
        except TranscriptError as exc:
            raise CliError(str(exc), args.file) from None
        mappings = read_sidecar(Path(args.restore).read_text(encoding="utf-8"))
        _write(serialize(restore(doc, mappings)))
        return 0
    entries: list[str] = []
    if args.policy:
        entries += [line.split("#", 1)[0] for line in Path(args.policy).read_text(encoding="utf-8").splitlines()]
    if args.types:
        entries += args.types.split(",")
    policy = parse_policy(entries, cfg.registry())
    adoc = _load_doc(args.file)
    out, mappings = pseudonymize(adoc, policy, cfg.ne_element)
    if args.sidecar:
        Path(args.sidecar).write_text(sidecar_lines(mappings), encoding="utf-8")
    _write(serialize(out))
    return 0


def cmd_catalog(args: argparse.Namespace, cfg: Config) -> int:
    cat = import_catalog(args.dir or SAMPLE_DIR)
    _write(format_records(query(cat, args.view, args.where or ()), args.format))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="transcascade", description="Cascaded annotation of speech transcriptions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="key=value configuration file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check transcription conventions")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("compile", help="compile grammar packs to a transducer cache")
    s.add_argument("packs", nargs="+", help="pack names, pack directories or manifest files")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("annotate", help="run cascades over transcriptions")
    s.add_argument("files", nargs="*", help="input files ('-' or none for stdin)")
    s.add_argument("--cascade", default="ne,de", help="comma-separated packs, run in order")
    s.add_argument("--format", choices=("inline", "standoff"), default="inline")
    s.add_argument("--speakers", help="only annotate turns of these speaker ids (comma-separated)")
    s.add_argument("--output-dir")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--backend", choices=("python", "cython"))
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("evaluate", help="score system output against gold")
    s.add_argument("gold")
    s.add_argument("system")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("--bracket-span-only", action="store_true", help="bracket level ignores the type")
    s.add_argument("--threshold", type=int, help="sparsity warning threshold")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("split", help="split files into work and evaluation sets by size")
    s.add_argument("files", nargs="+")
    s.add_argument("--fraction", type=float, default=0.051)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--basis", choices=("work", "total"), default="work")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("anonymize", help="replace annotated spans by placeholders")
    s.add_argument("file")
    s.add_argument("--policy", help="file of target types, one per line")
    s.add_argument("--types", help="comma-separated target types")
    s.add_argument("--sidecar", help="write the reversible mapping here")
    s.add_argument("--restore", metavar="SIDECAR", help="undo a previous anonymization")
    s.set_defaults(func=cmd_anonymize)

    s = sub.add_parser("catalog", help="query the metadata catalog")
    s.add_argument("view", choices=VIEWS)
    s.add_argument("--dir", help="catalog directory (default: bundled sample)")
    s.add_argument("--where", action="append", help="field=value or field~value; repeatable")
    s.add_argument("--format", choices=("json", "text"), default="json")
    s.set_defaults(func=cmd_catalog)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except _ERRORS as exc:
        rec = {"error": type(exc).__name__, "message": str(exc)}
        file = getattr(exc, "file", None) or getattr(exc, "filename", None)
        if file:
            rec["file"] = str(file)
        print(json.dumps(rec, ensure_ascii=False), file=sys.stderr)
        return 1
