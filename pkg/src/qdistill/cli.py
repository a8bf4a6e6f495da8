"""``qdistill`` command line.

Exit status: 0 on success, 1 when a computed value disagrees with the expected
one, 2 on usage errors (bad flags, parameters above the dense cap).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .distill import AGREEMENT_TOL, FIDELITY_TOL, ed_summary
from .entropy import SUPPORT_REL_TOL, format_bits
from .linalg_core import DenseCapExceeded, dense_cap, from_qsm_json, random_ket, to_qsm_json
from .locc import discriminate_single_copy, discriminate_two_copy, teleport
from .mixtures import four_party_state, multi_copy_state, uniform_full_mixture
from .qudit_states import BellLabel, MesFamily, bell_state, fidelity
from .separability import PPT_TOL, Cut, enumerate_cuts, ppt_check
from .verify import verify_all

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_label(text: str, d: int) -> BellLabel:
    try:
        n, m = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"label must look like 'n,m', got {text!r}")
    try:
        return BellLabel(n, m, d)
    except ValueError as exc:
        raise UsageError(str(exc))


def tolerances() -> dict:
    return {
        "fidelity": FIDELITY_TOL,
        "agreement": AGREEMENT_TOL,
        "support_rel": SUPPORT_REL_TOL,
        "ppt": PPT_TOL,
        "dense_cap": dense_cap(),
    }


def envelope(args: argparse.Namespace, report) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return {
        "artifact": "qdistill",
        "version": __version__,
        "config": config,
        "seed": args.seed,
        "tolerances": tolerances(),
        "report": report,
    }


def emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _family(args) -> Optional[MesFamily]:
    if args.family is None:
        return None
    return MesFamily(args.family, args.fixed_index, args.d)


CSV_HEADER = ["d", "n", "lower", "upper", "formal", "paper", "agreement"]


def cmd_ed(args) -> int:
    if args.table:
        d_max = args.d_max or args.d
        n_max = args.n_max or (args.n if args.n else 5)
        reports = []
        for d in range(2, d_max + 1):
            reports.append(ed_summary(d, fourparty=True, rng_seed=args.seed))
            reports += [ed_summary(d, n, rng_seed=args.seed) for n in range(1, n_max + 1)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow(r.csv_row())
        emit(args, buf.getvalue())
        return EXIT_OK if all(r.agreement for r in reports) else EXIT_MISMATCH
    if not args.fourparty and args.n is None:
        raise UsageError("ed needs --fourparty or --n")
    rep = ed_summary(args.d, args.n, fourparty=args.fourparty, rng_seed=args.seed, family=_family(args))
    if args.format == "json":
        emit(args, dump_json(envelope(args, rep.to_json())))
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerow(rep.csv_row())
        emit(args, buf.getvalue())
    else:
        lines = [
            f"qdistill {__version__}  seed={args.seed}",
            f"state: {rep.case}, d={rep.d}" + ("" if rep.case == "four-party" else f", n={rep.n}"),
            f"protocol yield (lower bound): {rep.lower_bound_bits:.12g} bits",
            f"candidate upper bound:        {format_bits(rep.upper_bound_bits)}",
            f"formal count:                 {rep.formal_count_bits:.12g} bits",
            f"paper value:                  {rep.paper_value_bits:.12g} bits",
            f"agreement: {rep.agreement}",
        ]
        if rep.upper_note:
            lines.append(f"note: {rep.upper_note}")
        if rep.candidate_ppt:
            lines.append(f"candidate check: {rep.candidate_ppt}")
        emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if rep.agreement else EXIT_MISMATCH


def cmd_bell(args) -> int:
    ket = bell_state(parse_label(args.label, args.d))
    emit(args, dump_json(to_qsm_json(ket.vector, ket.layout.dims)))
    return EXIT_OK


def _build_state(args):
    if args.kind == "fourparty":
        return four_party_state(args.d, _family(args), dense=args.dense)
    if args.kind == "full":
        return uniform_full_mixture(args.d, dense=args.dense)
    if args.n is None:
        raise UsageError("--kind multicopy needs --n")
    return multi_copy_state(args.d, args.n, dense=args.dense)


def cmd_state(args) -> int:
    if args.dense:
        dim = args.d ** 4 if args.kind != "multicopy" else args.d ** (2 * (args.n or 1))
        if dim > dense_cap():
            raise UsageError(f"dense dimension {dim} exceeds cap {dense_cap()}; drop --dense for the label form")
    mix = _build_state(args)
    if args.dense:
        emit(args, dump_json(to_qsm_json(mix.dense.matrix, mix.dense.layout.dims)))
    else:
        emit(args, dump_json(mix.labels.to_json()))
    return EXIT_OK


def cmd_ppt(args) -> int:
    args.dense = True
    dim = args.d ** 4 if args.kind != "multicopy" else args.d ** (2 * (args.n or 1))
    if dim > dense_cap():
        raise UsageError(f"dense dimension {dim} exceeds cap {dense_cap()}")
    rho = _build_state(args).dense
    if args.cut == "all":
        cuts = enumerate_cuts(rho.layout)
    else:
        try:
            cuts = [Cut.parse(args.cut)]
            cuts[0].validate(rho.layout)
        except ValueError as exc:
            raise UsageError(str(exc))
    rows = []
    for c in cuts:
        row = ppt_check(rho, c).to_json()
        if args.kind == "full" and row["verdict"] == "PPT":
            row["note"] = "PPT (consistent with the cited separability)"
        if getattr(c, "auxiliary", False):
            row["auxiliary"] = True
        rows.append(row)
    if args.format == "json":
        emit(args, dump_json(envelope(args, rows)))
    else:
        emit(args, "".join(f"{r['cut']}: {r['verdict']} min_pt_eig={r['min_pt_eig']:.3e} "
                           f"negativity={r['negativity']:.6g}\n" for r in rows))
    return EXIT_OK


def cmd_discriminate(args) -> int:
    hidden = parse_label(args.label, args.d)
    if args.family == "two-copy":
        res = discriminate_two_copy(args.d, hidden, rng_seed=args.seed)
    else:
        fam = MesFamily(args.family, hidden.n if args.family == "shift" else hidden.m, args.d)
        res = discriminate_single_copy(fam, hidden, rng_seed=args.seed)
    if args.transcript:
        with open(args.transcript, "w") as fh:
            fh.write(res.transcript.to_jsonl())
    ok = res.inferred == hidden and res.transcript.is_locc()
    rep = {"hidden": list(hidden.pair), "inferred": list(res.inferred.pair),
           "branch_probability": res.probability, "locc_audit": res.transcript.audit()}
    if args.format == "json":
        emit(args, dump_json(envelope(args, rep)))
    else:
        emit(args, f"hidden {hidden} inferred {res.inferred} (LOCC audit {'ok' if not rep['locc_audit'] else 'FAILED'})\n")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_teleport(args) -> int:
    channel = parse_label(args.channel, args.d)
    corr = parse_label(args.corrections_for, args.d) if args.corrections_for else channel
    if args.input:
        with open(args.input) as fh:
            vec, dims = from_qsm_json(json.load(fh))
        if vec.ndim != 1 or vec.size != args.d:
            raise UsageError(f"input must be a ket of dimension {args.d}")
    else:
        vec = random_ket(args.d, np.random.default_rng(args.seed))
    res = teleport(vec, channel, corr, rng_seed=args.seed)
    f = fidelity(res.output, vec)
    rep = {"outcome": list(res.outcome.pair), "fidelity_with_input": f,
           "output": to_qsm_json(res.output.vector, [args.d]), "locc_audit": res.transcript.audit()}
    if args.format == "json":
        emit(args, dump_json(envelope(args, rep)))
    else:
        emit(args, f"outcome {res.outcome}, fidelity with input {f:.12f}\n")
    if corr == channel:
        return EXIT_OK if f >= 1 - FIDELITY_TOL else EXIT_MISMATCH
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify_all(args.d_max, args.n_max, args.seed, args.perturb)
    if args.format == "json":
        emit(args, dump_json(envelope(args, [r.to_json() for r in results])))
    else:
        lines = [r.line() for r in results]
        passed = sum(r.passed for r in results)
        lines.append(f"{passed}/{len(results)} criteria passed")
        emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdistill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdistill {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
        p.add_argument("--seed", type=int, default=0)
        if fmt:
            p.add_argument("--format", choices=["json", "csv", "text"], default="text")
        p.add_argument("--out", default=None, help="write output to this path")

    def family_flags(p):
        p.add_argument("--family", choices=["phase", "shift"], default=None)
        p.add_argument("--fixed-index", type=int, default=0)

    p = sub.add_parser("ed", help="distillable-entanglement bounds for one state")
    common(p)
    family_flags(p)
    p.add_argument("--fourparty", action="store_true")
    p.add_argument("--n", type=int, default=None, help="number of copies of the multi-copy state")
    p.add_argument("--table", action="store_true", help="CSV sweep over d <= --d-max, n <= --n-max")
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("bell", help="write |psi_nm> as QSM-JSON")
    common(p, fmt=False)
    p.add_argument("--label", required=True, help="n,m")
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("state", help="dump a mixture (label JSON, or QSM-JSON with --dense)")
    common(p, fmt=False)
    family_flags(p)
    p.add_argument("--kind", choices=["fourparty", "full", "multicopy"], required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dense", action="store_true")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("ppt", help="PPT check across one cut or all cuts")
    common(p)
    family_flags(p)
    p.add_argument("--kind", choices=["fourparty", "full", "multicopy"], required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--cut", default="all", help="e.g. AC|BD, or 'all'")
    p.set_defaults(func=cmd_ppt)

    p = sub.add_parser("discriminate", help="run a discrimination protocol once")
    common(p)
    p.add_argument("--label", required=True, help="hidden label n,m")
    p.add_argument("--family", choices=["phase", "shift", "two-copy"], default="two-copy")
    p.add_argument("--transcript", default=None, help="write the JSON-lines transcript here")
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("teleport", help="teleport a qudit through a Bell channel")
    common(p)
    p.add_argument("--channel", default="0,0")
    p.add_argument("--corrections-for", default=None)
    p.add_argument("--input", default=None, help="QSM-JSON ket file (default: random from --seed)")
    p.set_defaults(func=cmd_teleport)

    p = sub.add_parser("verify", help="run the full verification grid")
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "d", 2) < 2:
        parser.error("--d must be >= 2")
    if getattr(args, "n", None) is not None and args.n < 1:
        parser.error("--n must be >= 1")
    try:
        return args.func(args)
    except (UsageError, DenseCapExceeded) as exc:
        print(f"qdistill: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
