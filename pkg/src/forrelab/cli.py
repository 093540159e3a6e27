"""Command line front end: ``forrelab <subcommand> [flags]``.

Exit codes: 0 on success/pass, 2 when a check or experiment fails its
acceptance threshold, 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .bench import EXPERIMENTS, ExperimentConfig, derive_seed, run_experiment
from .blockpoly import load_poly
from .compiler import compile_gatewise, compile_layers, load_result, parse_circuit, save_result, verify_compilation
from .errors import ForrelabError
from .estimators import estimate_blockpoly
from .fourier_sampling import quantum_sample, relation_solve
from .gaussian import STRATEGIES, make_forrelation_vectors, run_distinguisher
from .instances import (
    load_tuple,
    sample_boolean_tuple,
    sample_kfold_hybrid,
    sample_real_pair,
    sign_round,
    tuple_to_json,
    InstanceTuple,
)
from .phi import phi, phi_bruteforce
from .qquery import decide, halfk_accept_probability


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(args, columns, rows) -> None:
    if args.format == "json":
        _emit(args, json.dumps([dict(zip(columns, r)) for r in rows], indent=1) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    _emit(args, buf.getvalue())


def _json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2) + "\n")


def cmd_gen(args):
    rng = derive_seed(args.seed, 0)
    if args.measure == "boolean":
        t = sample_boolean_tuple(args.n, args.k, rng)
    elif args.k == 2:
        t = sample_real_pair(args.n, args.measure, rng)
    else:
        t = sample_kfold_hybrid(args.n, args.k, args.measure, rng)
    if args.round:
        t = InstanceTuple([sign_round(f) for f in t.functions], label=t.label)
    _json(args, tuple_to_json(t))
    return 0


def cmd_phi(args):
    t = load_tuple(args.input)
    val = phi_bruteforce(t) if args.brute_force else phi(t).phi
    _json(args, {"phi": val, "n": t.n, "k": t.k})
    return 0


def cmd_qsim(args):
    t = load_tuple(args.input)
    ph = phi(t).phi
    acc = halfk_accept_probability(t)
    rows = []
    for i in range(args.trials):
        out = decide(t, derive_seed(args.seed, i))
        rows.append((i, ph, acc, out.decision))
    _table(args, ["trial", "phi", "accept_prob", "decision"], rows)
    return 0


def _load_input(path, p):
    obj = json.loads(Path(path).read_text())
    if "blocks" in obj:
        return [np.asarray(b, dtype=float) for b in obj["blocks"]]
    vals = np.asarray(obj["values"], dtype=float)
    return [vals] * p.k


def cmd_estimate(args):
    p = load_poly(args.poly)
    x = _load_input(args.input, p)
    rep = estimate_blockpoly(p, x, args.eps, derive_seed(args.seed, 0), args.mode, repetitions=args.repetitions, delta=args.delta)
    _json(
        args,
        {
            "estimate": rep.estimate,
            "queries_used": rep.queries_used,
            "repetitions": rep.repetitions,
            "per_repetition_values": rep.per_repetition_values.tolist(),
            "queries_per_repetition": rep.queries_per_repetition.tolist(),
            "info": rep.info,
        },
    )
    return 0


def cmd_compile(args):
    c = parse_circuit(Path(args.circuit).read_text())
    r = compile_layers(c) if args.layers else compile_gatewise(c)
    if args.out:
        save_result(r, args.out)
    else:
        from .compiler import result_to_json

        _json(args, result_to_json(r))
    return 0


def cmd_verify(args):
    c = parse_circuit(Path(args.circuit).read_text())
    r = load_result(args.funcs)
    resid = verify_compilation(c, r)
    ok = resid <= args.tol
    _json(args, {"residual": resid, "k": r.k, "depth": c.depth, "passed": ok})
    return 0 if ok else 2


def cmd_gaussian(args):
    V = make_forrelation_vectors(args.n)
    t = min(args.t, V.size) if args.t else V.size
    rep = run_distinguisher(args.strategy, V, t, args.trials, derive_seed(args.seed, 0), case_mix=args.case_mix)
    _table(args, ["trial", "case", "t", "delta_u", "delta_f", "lr", "guess"], rep.rows)
    print(f"bias {rep.bias:.4f} ci95 [{rep.ci95[0]:.4f}, {rep.ci95[1]:.4f}]", file=sys.stderr)
    return 0


def cmd_fsample(args):
    t = load_tuple(args.input)
    f = t.functions[0]
    if args.relation is None:
        rows = [(i, int(quantum_sample(f, derive_seed(args.seed, i))[0])) for i in range(args.draws)]
        _table(args, ["draw", "y"], rows)
        return 0
    rows = []
    for s in ("quantum", "zero_query"):
        hits = [relation_solve(f, args.relation, s, derive_seed(args.seed, i)).success for i in range(args.draws)]
        rows.append((s, args.relation, args.draws, float(np.mean(hits))))
    _table(args, ["strategy", "c", "draws", "success_rate"], rows)
    return 0


def cmd_run(args):
    cfg = ExperimentConfig(
        args.experiment,
        seed=args.seed,
        n=args.n,
        k=args.k,
        eps=args.eps,
        trials=args.trials,
        strategy=args.strategy,
        out=args.out or "results",
        format=args.format,
    )
    res = run_experiment(cfg)
    status = "PASS" if res.passed else "FAIL"
    print(f"{status} {res.name} ({res.summary['wall_clock_s']:.1f}s) -> {', '.join(res.paths)}")
    return 0 if res.passed else 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--out", default=None, help="output file (directory for 'run')")
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    ap = argparse.ArgumentParser(prog="forrelab", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="sample an instance tuple")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--measure", choices=["uniform", "forrelated", "boolean"], default="forrelated")
    g.add_argument("--round", action="store_true", help="sign-round the real functions")
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("phi", parents=[common], help="exact Phi of a tuple")
    g.add_argument("--in", dest="input", required=True)
    g.add_argument("--brute-force", action="store_true")
    g.set_defaults(func=cmd_phi)

    g = sub.add_parser("qsim", parents=[common], help="run the ceil(k/2)-query decision rule")
    g.add_argument("--in", dest="input", required=True)
    g.add_argument("--trials", type=int, default=100)
    g.set_defaults(func=cmd_qsim)

    g = sub.add_parser("estimate", parents=[common], help="sampled estimate of a block-multilinear polynomial")
    g.add_argument("--poly", required=True)
    g.add_argument("--input", required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--mode", choices=["main", "warmup"], default="main")
    g.add_argument("--repetitions", type=int, default=16)
    g.add_argument("--delta", type=float, default=None)
    g.set_defaults(func=cmd_estimate)

    g = sub.add_parser("compile", parents=[common], help="compile a circuit to phase functions")
    g.add_argument("--circuit", required=True)
    g.add_argument("--layers", action="store_true", help="layer-wise compilation (k <= 2d+1)")
    g.set_defaults(func=cmd_compile)

    g = sub.add_parser("verify", parents=[common], help="check Phi against the circuit amplitude")
    g.add_argument("--circuit", required=True)
    g.add_argument("--funcs", required=True)
    g.add_argument("--tol", type=float, default=1e-9)
    g.set_defaults(func=cmd_verify)

    g = sub.add_parser("gaussian", parents=[common], help="Gaussian distinguishing trials")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=int, default=None, help="query budget (default 2N)")
    g.add_argument("--trials", type=int, default=1000)
    g.add_argument("--strategy", choices=STRATEGIES, default="random-order")
    g.add_argument("--case-mix", type=float, default=0.5)
    g.set_defaults(func=cmd_gaussian)

    g = sub.add_parser("fsample", parents=[common], help="Fourier sampling draws or relation success")
    g.add_argument("--in", dest="input", required=True)
    g.add_argument("--draws", type=int, default=1000)
    g.add_argument("--relation", type=float, default=None, metavar="C")
    g.set_defaults(func=cmd_fsample)

    g = sub.add_parser("run", parents=[common], help="run a named experiment")
    g.add_argument("--experiment", choices=sorted(EXPERIMENTS), required=True)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--eps", type=float, default=None)
    g.add_argument("--trials", type=int, default=None)
    g.add_argument("--strategy", default=None)
    g.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ForrelabError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
