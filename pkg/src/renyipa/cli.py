"""Command-line front end.

Exit codes: 0 success (all bounds hold or are vacuous), 2 input error,
3 a checked inequality was found violated.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .decouple import haar_family, randomizing_ratio_q
from .eat import rate_row, rate_sweep, rows_to_csv
from .entropy import OptimizerSettings, renyi_cond_entropy_fixed, renyi_cond_entropy_opt
from .hashfam import (
    CQState,
    affine_family,
    dump_family,
    load_family,
    random_cq_state,
    verify_strong_2universal,
)
from .qops import (
    DensityOperator,
    make_rng,
    maximally_entangled,
    maximally_mixed,
    partial_trace,
    random_density,
    schatten_norm,
)
from .verify import DEFAULT_ALPHAS, VIOLATED, fmt, lemma_a1_suite, verify_sweep

EXIT_OK, EXIT_INPUT, EXIT_VIOLATED = 0, 2, 3


class InputError(Exception):
    pass


# --- file formats ------------------------------------------------------------

def read_state_file(path) -> DensityOperator:
    """Read ``dims: d1 d2 ...`` followed by row-major ``re im`` pairs."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].strip().startswith("dims:"):
        raise InputError(f"{path}: first line must be 'dims: d1 d2 ...'")
    try:
        dims = tuple(int(t) for t in lines[0].split(":", 1)[1].split())
        vals = np.array([float(t) for ln in lines[1:] for t in ln.split()])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not dims or any(d < 1 for d in dims):
        raise InputError(f"{path}: bad dims {dims}")
    side = int(np.prod(dims))
    if vals.size != 2 * side * side:
        raise InputError(f"{path}: expected {2 * side * side} numbers, got {vals.size}")
    m = (vals[0::2] + 1j * vals[1::2]).reshape(side, side)
    try:
        return DensityOperator(m, dims)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def format_state(rho: DensityOperator) -> str:
    lines = ["dims: " + " ".join(str(d) for d in rho.dims)]
    for row in rho.matrix:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, name: str, text: str) -> None:
    if args.out:
        write_atomic(Path(args.out) / name, text)
    else:
        sys.stdout.write(text)


def effective_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def parse_alphas(s: str) -> list[float]:
    try:
        alphas = [float(t) for t in s.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha grid {s!r}") from exc
    if not alphas:
        raise argparse.ArgumentTypeError("empty alpha grid")
    return alphas


# --- subcommands -------------------------------------------------------------

def _entropy_state(args, rng) -> DensityOperator:
    if args.state == "file":
        if not args.state_file:
            raise InputError("--state file needs --state-file")
        rho = read_state_file(args.state_file)
    elif args.state == "product":
        omega = random_density(args.dim_b, None, rng).matrix
        rho = DensityOperator(np.kron(maximally_mixed(args.dim_a), omega), (args.dim_a, args.dim_b))
    elif args.state == "maxent":
        if args.dim_a != args.dim_b:
            raise InputError("maxent state needs --dim-a == --dim-b")
        rho = maximally_entangled(args.dim_a)
    else:
        d = args.dim_a * args.dim_b
        rho = random_density(d, args.rank or d, rng, (args.dim_a, args.dim_b))
    if len(rho.dims) != 2:
        raise InputError(f"entropy needs a bipartite state, got dims {rho.dims}")
    return rho


def cmd_entropy(args) -> int:
    rng = make_rng(args.seed, 0)
    rho = _entropy_state(args, rng)
    rho_b = partial_trace(rho.matrix, 1, rho.dims)
    opts = OptimizerSettings(seed=args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("alpha", "h_fixed", "h_opt", "converged", "witness_dist"))
    for a in args.alpha_grid:
        h_fix = renyi_cond_entropy_fixed(rho, rho_b, a)
        opt = renyi_cond_entropy_opt(rho, a, opts)
        dist = 0.5 * schatten_norm(opt.sigma.matrix - rho_b, 1)
        w.writerow((fmt(a), fmt(h_fix), fmt(opt.value), str(opt.converged).lower(), fmt(dist)))
    emit(args, "entropy.csv", buf.getvalue())
    return EXIT_OK


def cmd_verify(args) -> int:
    state_rng, mc_rng = make_rng(args.seed, 0), make_rng(args.seed, 1)
    if args.family == "affine":
        fam = affine_family(args.n_bits, args.m_bits)
        dim_a = fam.n_inputs
    else:
        fam = haar_family(args.dim_c, args.dim_d)
        dim_a = fam.dim_a
    if args.state_file:
        rho = read_state_file(args.state_file)
        if len(rho.dims) != 2 or rho.dims[0] != dim_a:
            raise InputError(f"state dims {rho.dims} do not match |A|={dim_a}")
        if args.family == "affine":
            try:
                state = CQState.from_matrix(rho.matrix, dim_a, tol=1e-10)
            except ValueError as exc:
                raise InputError(f"state is not CQ: {exc}") from exc
        else:
            state = rho
    elif args.family == "affine":
        state = random_cq_state(dim_a, args.dim_e, state_rng)
    else:
        d = dim_a * args.dim_e
        state = random_density(d, None, state_rng, (dim_a, args.dim_e))
    report = verify_sweep(state, fam, args.alpha_grid, sigma_mode=args.sigma, rng=mc_rng,
                          samples=args.samples, opts=OptimizerSettings(seed=args.seed), seed=args.seed)
    report.metadata["config"] = effective_config(args)
    emit(args, "verify.csv", report.to_csv())
    if args.out:
        write_atomic(Path(args.out) / "verify.json", report.to_json())
    return EXIT_VIOLATED if report.any_violated else EXIT_OK


def cmd_hash_check(args) -> int:
    if args.family_file:
        try:
            fam = load_family(Path(args.family_file).read_text())
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.family_file}: {exc}") from exc
    else:
        fam = affine_family(args.n_bits, args.m_bits)
    rep = verify_strong_2universal(fam)
    lines = [
        f"family: {fam.name} size={fam.size} |A|={fam.n_inputs} |C|={fam.n_outputs}",
        f"strongly_2_universal: {str(rep.ok).lower()}",
        f"worst_deviation: {rep.worst_deviation}",
    ]
    if not rep.ok:
        lines.append(f"worst_pair: {rep.worst_pair} outputs: {rep.worst_outputs}")
    print("\n".join(lines))
    if args.out and fam.params is not None:
        write_atomic(Path(args.out) / "family.txt", dump_family(fam))
    return EXIT_OK if rep.ok else EXIT_VIOLATED


def cmd_lemma_a1(args) -> int:
    suite = lemma_a1_suite(args.trials, make_rng(args.seed, 0), args.min_dim, args.max_dim)
    text = (f"trials: {suite.trials}\nfailures: {suite.failures}\n"
            f"worst_slack: {fmt(suite.worst_slack)}\nok: {str(suite.ok).lower()}\n")
    emit(args, "lemma_a1.txt", text)
    return EXIT_OK if suite.ok else EXIT_VIOLATED


def cmd_eat(args) -> int:
    if args.rate is not None:
        rows = [rate_row(args.f_w, args.v, args.rate, args.n, args.p_w)]
    else:
        rows = rate_sweep(args.f_w, args.v, args.r_min, args.r_max, args.steps, args.n, args.p_w)
    emit(args, "eat.csv", rows_to_csv(rows))
    return EXIT_OK


def cmd_decouple_demo(args) -> int:
    ens = haar_family(args.dim_c, args.dim_d)
    d = ens.dim_a * args.dim_e
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("state", "ratio", "ratio_stderr", "worst_verdict", "min_slack"))
    violated = False
    order = {"holds": 0, "vacuous": 0, "inconclusive": 1, "violated": 2}
    for i in range(args.states):
        rng = make_rng(args.seed, i)
        rho = random_density(d, None, rng, (ens.dim_a, args.dim_e))
        ratio = randomizing_ratio_q(ens, rho.matrix, args.samples, rng)
        rep = verify_sweep(rho, ens, args.alpha_grid, rng=rng, samples=args.samples, seed=args.seed)
        worst = max((r.verdict for r in rep.rows), key=order.__getitem__)
        violated |= worst == VIOLATED
        w.writerow((i, fmt(ratio.mean), fmt(ratio.stderr), worst, fmt(min(r.slack for r in rep.rows))))
    emit(args, "decouple.csv", buf.getvalue())
    return EXIT_VIOLATED if violated else EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags take precedence")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory (default: print to stdout)")
    common.add_argument("--alpha-grid", type=parse_alphas,
                        default=",".join(str(a) for a in DEFAULT_ALPHAS))
    common.add_argument("--samples", type=int, default=2000)
    common.add_argument("--sigma", choices=("marginal", "optimized"), default="marginal")

    parser = argparse.ArgumentParser(prog="renyipa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("entropy", parents=[common], help="sandwiched Renyi conditional entropies")
    p.add_argument("--state", choices=("product", "maxent", "random", "file"), default="random")
    p.add_argument("--state-file")
    p.add_argument("--dim-a", type=int, default=2)
    p.add_argument("--dim-b", type=int, default=2)
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_entropy)
    subs["entropy"] = p

    p = sub.add_parser("verify", parents=[common], help="evaluate both sides of the bound")
    p.add_argument("--family", choices=("affine", "haar"), default="affine")
    p.add_argument("--n-bits", type=int, default=3)
    p.add_argument("--m-bits", type=int, default=1)
    p.add_argument("--dim-e", type=int, default=2)
    p.add_argument("--dim-c", type=int, default=2)
    p.add_argument("--dim-d", type=int, default=2)
    p.add_argument("--state-file")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p

    p = sub.add_parser("hash-check", parents=[common], help="exhaustive strong 2-universality check")
    p.add_argument("--n-bits", type=int, default=3)
    p.add_argument("--m-bits", type=int, default=1)
    p.add_argument("--family-file")
    p.set_defaults(func=cmd_hash_check)
    subs["hash-check"] = p

    p = sub.add_parser("lemma-a1", parents=[common], help="1-norm contraction property suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--min-dim", type=int, default=2)
    p.add_argument("--max-dim", type=int, default=6)
    p.set_defaults(func=cmd_lemma_a1)
    subs["lemma-a1"] = p

    p = sub.add_parser("eat", parents=[common], help="error exponent table")
    p.add_argument("--f-w", type=float, required=True)
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--rate", type=float)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p-w", type=float, default=1.0)
    p.set_defaults(func=cmd_eat)
    subs["eat"] = p

    p = sub.add_parser("decouple-demo", parents=[common], help="Haar decoupling statistics")
    p.add_argument("--dim-c", type=int, default=2)
    p.add_argument("--dim-d", type=int, default=2)
    p.add_argument("--dim-e", type=int, default=2)
    p.add_argument("--states", type=int, default=10)
    p.set_defaults(func=cmd_decouple_demo)
    subs["decouple-demo"] = p
    return parser, subs


def _parse(argv):
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    early, _ = pre.parse_known_args(argv)
    if early.config and early.command in subs:
        cfg = read_config(early.config)
        sp = subs[early.command]
        known = {a.dest for a in sp._actions}
        unknown = set(cfg) - known
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for a in sp._actions:
            if a.dest in cfg:
                a.required = False
        sp.set_defaults(**cfg)
    args = parser.parse_args(argv)
    if args.command == "eat" and args.rate is None and (args.r_min is None or args.r_max is None):
        raise InputError("eat needs --rate or both --r-min and --r-max")
    return args


def main(argv=None) -> int:
    try:
        args = _parse(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
