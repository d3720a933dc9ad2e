"""Command-line interface: ``qmono <command> [options]``.

Exit codes: 0 success, 1 reproduction mismatch, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounds import (
    MIN_SAMPLES,
    cardinality_bound,
    chi_locc,
    chi_locc_cut,
    holevo_chi,
    jrw_lower,
    lambda_locc,
)
from .ensembles import (
    CASE_GROUPS,
    EnsembleCaseId,
    EnsembleError,
    MultipartyEnsemble,
    build_case,
    load_ensemble,
    reduce_to_pair,
    serialize_ensemble,
)
from .monogamy import AuditConfig, audit, registered_protocol
from .optimize import (
    DEFAULT_RESTARTS,
    OptimizationError,
    certify,
    optimize_global_projective,
    optimize_one_way_locc,
)
from .protocols import (
    ProtocolError,
    load_protocol,
    mutual_information,
    serialize_protocol,
    simulate,
)
from .reproduce import Options, reproduce

SEED_ENV = "QMONO_SEED"
EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


def _fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6f}"
    return str(x)


def _table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[_fmt(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(r) for r in cells)
    return "\n".join(out)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def payload_json(payload: dict) -> str:
    """Canonical payload encoding; identical inputs give identical bytes."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)


def _emit(args, payload: dict, table: str) -> None:
    if args.format == "json":
        sidecar = {
            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        }
        text = json.dumps({"payload": payload, "sidecar": sidecar}, sort_keys=True, indent=2, default=_jsonable) + "\n"
    else:
        text = table.rstrip("\n") + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- inputs


def _resolve_seed(args, needed: bool, default: int | None = None) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    if needed and default is None:
        raise UsageError(f"this run is randomized; pass --seed or set {SEED_ENV}")
    return default


def _case_id(text: str, n: int | None, theta: float | None) -> EnsembleCaseId:
    cid = EnsembleCaseId.parse(text)
    if n is not None:
        if cid.name != "III-cat":
            raise UsageError("--n is only valid with III-cat")
        if "(" in text:
            raise UsageError("give N either in the case id or via --n, not both")
        cid = EnsembleCaseId(cid.name, n=n)
    if theta is not None:
        if cid.name != "IV-nonorth":
            raise UsageError("--theta is only valid with IV-nonorth")
        if "(" in text:
            raise UsageError("give theta either in the case id or via --theta, not both")
        cid = EnsembleCaseId(cid.name, theta=theta)
    return cid


def _ensemble(args) -> MultipartyEnsemble:
    if bool(args.case) == bool(args.ensemble):
        raise UsageError("give exactly one of --case ID or --ensemble FILE")
    if args.ensemble:
        if args.n is not None or args.theta is not None:
            raise UsageError("--n and --theta apply to --case only")
        return load_ensemble(args.ensemble)
    return build_case(_case_id(args.case, args.n, args.theta))


def _apply_pair(args, ens: MultipartyEnsemble) -> MultipartyEnsemble:
    if not getattr(args, "pair", None):
        return ens
    head, sep, partner = args.pair.partition(":")
    if not sep:
        head, partner = ens.parties[0], head
    if head != ens.parties[0]:
        raise UsageError(f"--pair must start with {ens.parties[0]!r}, got {args.pair!r}")
    if partner not in ens.parties[1:]:
        raise UsageError(f"unknown partner {partner!r}; choose from {', '.join(ens.parties[1:])}")
    return reduce_to_pair(ens, partner)


def _positive(name: str, value: int | None, floor: int = 1) -> None:
    if value is not None and value < floor:
        raise UsageError(f"--{name} must be at least {floor}")


# ---------------------------------------------------------------- commands


def cmd_reproduce(args) -> int:
    sel = args.case
    if sel is None:
        raise UsageError("reproduce needs --case")
    if sel not in CASE_GROUPS:
        cid = EnsembleCaseId.parse(sel)  # raises on an unknown id
        if (args.n is not None or args.theta is not None) and "(" in sel:
            raise UsageError("give the parameter either in the case id or via --n/--theta")
    else:
        cid = None
    group_or_name = cid.name if cid else sel
    if args.n is not None and group_or_name not in ("III", "III-cat"):
        raise UsageError("--n is only valid with case III / III-cat")
    if args.theta is not None and group_or_name not in ("IV", "IV-nonorth"):
        raise UsageError("--theta is only valid with case IV / IV-nonorth")
    _positive("restarts", args.restarts)
    _positive("samples", args.samples, 0)
    seed = _resolve_seed(args, needed=True, default=0)
    opts = Options(restarts=args.restarts, samples=args.samples or 0, seed=seed, threads=args.threads)
    if args.n is not None:
        opts.n = args.n
        EnsembleCaseId("III-cat", n=args.n)  # validates the range
    if args.theta is not None:
        opts.theta = args.theta
        EnsembleCaseId("IV-nonorth", theta=args.theta)
    report = reproduce(sel, opts)
    payload = report.to_dict()
    payload["seed"] = seed
    rows = [
        (r.case, r.quantity, r.computed, r.relation, r.claim, r.tol, "PASS" if r.ok else "FAIL")
        for r in report.rows
    ]
    table = _table(("case", "quantity", "computed", "rel", "claim", "tol", "status"), rows)
    for r in report.rows:
        if r.note:
            table += f"\nnote [{r.quantity}]: {r.note}"
    table += f"\n{'all comparisons pass' if report.passed else 'MISMATCH'} (seed {seed})"
    _emit(args, payload, table)
    return EXIT_OK if report.passed else EXIT_MISMATCH


def _bound_reports(ens: MultipartyEnsemble, samples: int, seed: int | None, threads: int):
    reports = [cardinality_bound(ens), holevo_chi(ens), jrw_lower(ens)]
    if len(ens.dims) == 2:
        reports.append(chi_locc(ens))
        if samples:
            reports.append(lambda_locc(ens, samples, seed, threads))
    else:
        reports.append(chi_locc_cut(ens, [0], list(range(1, len(ens.dims)))))
    return reports


def cmd_bounds(args) -> int:
    ens = _apply_pair(args, _ensemble(args))
    samples = args.samples or 0
    if samples and samples < MIN_SAMPLES:
        raise UsageError(f"--samples must be 0 or at least {MIN_SAMPLES}")
    seed = _resolve_seed(args, needed=samples > 0)
    reports = _bound_reports(ens, samples, seed, args.threads)
    payload = {
        "ensemble": ens.name,
        "parties": list(ens.parties),
        "dims": list(ens.dims),
        "bounds": [r.to_dict() for r in reports],
    }
    rows = [(r.name, r.value, r.standard_error) for r in reports]
    _emit(args, payload, _table(("bound", "value", "stderr"), rows))
    return EXIT_OK


def cmd_protocol_run(args) -> int:
    if not args.protocol:
        raise UsageError("protocol run needs --protocol FILE")
    ens = _apply_pair(args, _ensemble(args))
    prot = load_protocol(args.protocol)
    joint = simulate(ens, prot)
    mi = mutual_information(joint)
    payload = {
        "ensemble": ens.name,
        "protocol": prot.name,
        "mutual_information": mi,
        "outcomes": list(joint.outcomes),
        "joint": joint.matrix.tolist(),
    }
    headers = ["element"] + list(joint.outcomes)
    labels = [e.label or str(i) for i, e in enumerate(ens.elements)]
    rows = [[lab] + list(row) for lab, row in zip(labels, joint.matrix)]
    table = _table(headers, rows) + f"\nI(i:m) = {mi:.6f} bits"
    _emit(args, payload, table)
    return EXIT_OK


def cmd_protocol_export(args) -> int:
    ens = _ensemble(args)
    if not args.pair:
        raise UsageError("protocol export needs --pair A:Bi")
    pair = _apply_pair(args, ens)
    partner = ens.parties.index(args.pair.split(":")[-1])
    text = serialize_protocol(registered_protocol(ens, partner, pair))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_optimize(args) -> int:
    ens = _apply_pair(args, _ensemble(args))
    _positive("restarts", args.restarts)
    seed = _resolve_seed(args, needed=True)
    if args.template == "global":
        res = optimize_global_projective(ens, args.restarts, seed, args.threads)
    else:
        if len(ens.dims) != 2:
            raise UsageError("one-way search needs a bipartite ensemble; use --pair A:Bi")
        res = optimize_one_way_locc(ens, args.restarts, seed, args.direction, args.threads)
    certified = certify(res, ens)
    payload = {"ensemble": ens.name, "template": args.template, "certified": certified, **res.to_dict()}
    rows = [
        ("template", args.template),
        ("value", res.value),
        ("certified", certified),
        ("restarts used", res.restarts_used),
        ("converged", res.converged),
        ("seed", seed),
    ]
    _emit(args, payload, _table(("field", "value"), rows))
    return EXIT_OK


def cmd_monogamy(args) -> int:
    ens = _ensemble(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    _positive("restarts", args.restarts)
    randomized = "optimizer" in methods or "lambda" in methods
    seed = _resolve_seed(args, needed=randomized, default=None if randomized else 0)
    samples = args.samples if args.samples is not None else AuditConfig.samples
    if "lambda" in methods and samples < MIN_SAMPLES:
        raise UsageError(f"--samples must be at least {MIN_SAMPLES} for the lambda method")
    try:
        config = AuditConfig(methods, args.restarts, samples, seed, args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cert = audit(ens, config)
    rows = [
        (f"A:{e.partner}", e.lower, e.method, e.standard_error, e.chi_locc) for e in cert.entries
    ]
    table = _table(("pair", "lower", "method", "stderr", "chi_locc"), rows)
    summary = [
        ("sum of pair lower bounds", cert.sum_lower),
        (f"global upper [{cert.global_method}]", cert.global_upper),
        ("margin", cert.margin),
        ("relative violation", cert.relative_violation),
        ("verdict", cert.verdict),
        ("maximal", cert.maximal),
    ]
    table += "\n\n" + _table(("quantity", "value"), summary)
    payload = cert.to_dict()
    payload["relative_violation"] = cert.relative_violation
    _emit(args, payload, table)
    return EXIT_OK


def cmd_ensemble_validate(args) -> int:
    ens = _ensemble(args)
    payload = {
        "ensemble": ens.name,
        "valid": True,
        "parties": list(ens.parties),
        "dims": list(ens.dims),
        "cardinality": ens.cardinality,
        "pure": ens.is_pure,
    }
    rows = [(k, ", ".join(map(str, v)) if isinstance(v, list) else v) for k, v in payload.items()]
    _emit(args, payload, _table(("field", "value"), rows))
    return EXIT_OK


def cmd_ensemble_export(args) -> int:
    ens = _ensemble(args)
    text = serialize_ensemble(ens)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, source: bool = True, randomized: bool = True) -> None:
    if source:
        p.add_argument("--case", help="registry id, e.g. V-shifts or III-cat(5)")
        p.add_argument("--ensemble", metavar="FILE", help="ensemble JSON file")
    p.add_argument("--n", type=int, help="number of partners (III-cat only)")
    p.add_argument("--theta", type=float, help="angle of |n> (IV-nonorth only)")
    if randomized:
        p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help=f"falls back to ${SEED_ENV}")
        p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmono", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qmono {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", help="check computed values against the published ones")
    p.add_argument("--case", required=True, help="I..V or a registry id")
    _common(p, source=False)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bounds", help="universal bounds for an ensemble")
    _common(p)
    p.add_argument("--pair", help="reduce to A:Bi first")
    p.set_defaults(func=cmd_bounds)

    proto = sub.add_parser("protocol", help="LOCC protocol tools").add_subparsers(dest="action", required=True)
    p = proto.add_parser("run", help="simulate a protocol file on an ensemble")
    _common(p, randomized=False)
    p.add_argument("--protocol", metavar="FILE", required=True)
    p.add_argument("--pair")
    p.set_defaults(func=cmd_protocol_run)
    p = proto.add_parser("export", help="write the registered protocol for a pair")
    _common(p, randomized=False)
    p.add_argument("--pair", required=True)
    p.set_defaults(func=cmd_protocol_export)

    p = sub.add_parser("optimize", help="search measurement strategies")
    _common(p)
    p.add_argument("--pair")
    p.add_argument("--template", choices=("one_way", "global"), default="one_way")
    p.add_argument("--direction", type=int, choices=(0, 1), help="sender party index (default: both)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("monogamy", help="audit the pairwise monogamy relation")
    _common(p)
    p.add_argument("--methods", default="explicit,optimizer", help="comma list of explicit, optimizer, lambda")
    p.set_defaults(func=cmd_monogamy)

    ens = sub.add_parser("ensemble", help="ensemble file tools").add_subparsers(dest="action", required=True)
    p = ens.add_parser("validate", help="parse and check an ensemble")
    _common(p, randomized=False)
    p.set_defaults(func=cmd_ensemble_validate)
    p = ens.add_parser("export", help="write a registry case as an ensemble file")
    _common(p, randomized=False)
    p.set_defaults(func=cmd_ensemble_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("qmono: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, EnsembleError, ProtocolError, OptimizationError, OSError, ValueError) as exc:
        print(f"qmono: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
