"""Command-line surface.

Structured results go to stdout as a single JSON document; logs and the
human-readable highlighted text go to stderr.  Exit codes: 0 success,
1 usage error, 2 infeasible (bias / exclude), 3 resource exhausted,
4 I/O or format error, 5 solver cost mismatch under --solver both.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .errors import (
    Infeasible,
    InvalidInput,
    ModelFormatError,
    OrexError,
    ResourceExhausted,
    TooLong,
    UnknownWord,
)
from .model import load_model
from .runner import (
    cost_from_map,
    encode_text,
    make_spec,
    op_attack,
    op_bias,
    op_enumerate,
    op_explain,
    op_knn,
    op_repair,
    op_verify,
)
from .text import load_embedding

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_RESOURCE = 3
EXIT_IO = 4
EXIT_MISMATCH = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser, need_model: bool = True):
    if need_model:
        p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--emb", required=True, help="embedding JSON file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eps", type=float, help="inf-norm ball radius")
    group.add_argument("--knn", type=int, help="neighbour count for box closure")
    p.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true",
                   help="single-worker mode; byte-identical output per seed")
    p.add_argument("--stats", action="store_true", help="include query counts")
    p.add_argument("--split-budget", type=int, default=100_000)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--server", help="delegate to a running service at this base URL")


def _add_text(p: argparse.ArgumentParser):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text", help="input text (whitespace tokenized)")
    group.add_argument("--text-file", help="file containing the input text")
    p.add_argument("--cost", help="JSON file mapping words to positive costs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="optimal robust explanation")
    _add_common(p)
    _add_text(p)
    p.add_argument("--solver", choices=["hs", "msa", "both"], default="both")
    p.add_argument("--include", nargs="*", default=[], help="words forced into the explanation")
    p.add_argument("--exclude", nargs="*", default=[], help="words forbidden in the explanation")
    p.add_argument("--no-attacks", action="store_true", help="disable the sparse-attack booster")
    p.add_argument("--no-shrink", action="store_true", help="disable the per-word MUS filter")

    p = sub.add_parser("enumerate", help="all optimal robust explanations")
    _add_common(p)
    _add_text(p)

    p = sub.add_parser("verify", help="one entailment query")
    _add_common(p)
    _add_text(p)
    p.add_argument("--fix", default="", help="comma list of fixed word positions or words")

    p = sub.add_parser("bias", help="decision-bias check for protected words")
    _add_common(p)
    _add_text(p)
    p.add_argument("--protected", nargs="+", required=True)
    p.add_argument("--solver", choices=["hs", "msa"], default="hs")

    p = sub.add_parser("repair", help="minimally extend an explanation to robustness")
    _add_common(p)
    _add_text(p)
    p.add_argument("--seed-explanation", required=True,
                   help="JSON list of words or indices, inline or @file")
    p.add_argument("--solver", choices=["hs", "msa"], default="hs")

    p = sub.add_parser("attack", help="search a sparse label-flipping perturbation")
    _add_common(p)
    _add_text(p)
    p.add_argument("--fix", default="", help="comma list of word positions to keep fixed")

    p = sub.add_parser("knn", help="neighbour lists and perturbation boxes")
    _add_common(p, need_model=False)
    p.add_argument("--word", nargs="+", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _read_text(args) -> str:
    if args.text is not None:
        return args.text
    with open(args.text_file, encoding="utf-8") as fh:
        return fh.read()


def _read_cost_map(args) -> Optional[dict]:
    if not getattr(args, "cost", None):
        return None
    with open(args.cost, encoding="utf-8") as fh:
        return json.load(fh)


def _parse_fix(raw: str) -> list:
    items = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        items.append(int(chunk) if chunk.lstrip("-").isdigit() else chunk)
    return items


def _parse_seed_explanation(raw: str) -> list:
    if raw.startswith("@"):
        with open(raw[1:], encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.loads(raw)
    if not isinstance(data, list):
        raise InvalidInput("seed explanation must be a JSON list of words or indices")
    return data


def _options(args) -> dict:
    return {
        "seed": args.seed,
        "deterministic": args.deterministic,
        "stats": args.stats,
        "split_budget": args.split_budget,
        "max_iterations": args.max_iterations,
        "use_attacks": not getattr(args, "no_attacks", False),
        "use_shrink": not getattr(args, "no_shrink", False),
    }


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _load_json_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _delegate(args) -> int:
    """Thin-client mode: inline the local files into a service request."""
    import httpx

    payload = {
        "embeddings": _load_json_file(args.emb),
        "eps": args.eps,
        "knn": args.knn,
        "metric": args.metric,
    }
    if args.command == "knn":
        payload["words"] = args.word
    else:
        payload.update(
            model=_load_json_file(args.model),
            text=_read_text(args),
            cost=_read_cost_map(args),
            seed=args.seed,
            deterministic=args.deterministic,
            stats=args.stats,
            split_budget=args.split_budget,
            max_iterations=args.max_iterations,
        )
    if args.command == "explain":
        payload.update(
            solver=args.solver,
            include=args.include,
            exclude=args.exclude,
            use_attacks=not args.no_attacks,
            use_shrink=not args.no_shrink,
        )
    elif args.command == "verify":
        payload["fixed"] = _parse_fix(args.fix)
    elif args.command == "bias":
        payload.update(protected=args.protected, solver=args.solver)
    elif args.command == "repair":
        payload.update(
            seed_explanation=_parse_seed_explanation(args.seed_explanation),
            solver=args.solver,
        )
    elif args.command == "attack":
        payload["fixed"] = _parse_fix(args.fix)

    url = args.server.rstrip("/") + "/" + args.command
    response = httpx.post(url, json=payload, timeout=600.0)
    if response.status_code != 200:
        print(f"error: service returned {response.status_code}: {response.text}",
              file=sys.stderr)
        return EXIT_IO
    doc = response.json()
    _emit(doc)
    status = doc.get("status", "ok")
    if status == "infeasible":
        return EXIT_INFEASIBLE
    if status == "resource_exhausted":
        return EXIT_RESOURCE
    if args.command == "bias" and doc.get("biased"):
        return EXIT_INFEASIBLE
    if args.command == "explain" and doc.get("agreement") is False:
        return EXIT_MISMATCH
    return EXIT_OK


def _run_command(args) -> int:
    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    if getattr(args, "server", None):
        return _delegate(args)

    if args.command == "knn":
        vocab, table = load_embedding(args.emb)
        spec = make_spec(args.eps, args.knn, args.metric)
        _emit(op_knn(vocab, table, args.word, spec))
        return EXIT_OK

    net = load_model(args.model)
    vocab, table = load_embedding(args.emb)
    spec = make_spec(args.eps, args.knn, args.metric)
    t = encode_text(_read_text(args), net, vocab, table)
    cost = cost_from_map(t.tokens, _read_cost_map(args))
    options = _options(args)

    if args.command == "explain":
        doc = op_explain(net, vocab, table, t, spec, cost, args.solver,
                         include=args.include, exclude=args.exclude, options=options)
        _emit(doc)
        print(doc["rendered"], file=sys.stderr)
        if args.solver == "both" and not doc["agreement"]:
            print("error: hs/msa cost mismatch", file=sys.stderr)
            return EXIT_MISMATCH
        return EXIT_OK
    if args.command == "enumerate":
        _emit(op_enumerate(net, vocab, table, t, spec, cost, options=options))
        return EXIT_OK
    if args.command == "verify":
        doc = op_verify(net, vocab, table, t, spec, _parse_fix(args.fix), options=options)
        _emit(doc)
        return EXIT_RESOURCE if doc["status"] == "resource_exhausted" else EXIT_OK
    if args.command == "bias":
        doc = op_bias(net, vocab, table, t, spec, cost, args.protected,
                      solver=args.solver, options=options)
        _emit(doc)
        return EXIT_INFEASIBLE if doc["biased"] else EXIT_OK
    if args.command == "repair":
        doc = op_repair(net, vocab, table, t, spec, cost,
                        _parse_seed_explanation(args.seed_explanation),
                        solver=args.solver, options=options)
        _emit(doc)
        print(doc["rendered"], file=sys.stderr)
        return EXIT_OK
    if args.command == "attack":
        _emit(op_attack(net, vocab, table, t, spec, _parse_fix(args.fix), options=options))
        return EXIT_OK
    raise InvalidInput(f"unknown command {args.command!r}")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run_command(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceExhausted as exc:
        print(f"resource exhausted: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ModelFormatError, UnknownWord, TooLong) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidInput, OrexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
