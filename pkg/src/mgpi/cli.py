"""Command-line front end.

Exit codes:
  0   converged / completed
  1   input error (missing or malformed file, invalid game, bad parameters)
  2   naive policy iteration detected cycling
  3   iteration cap reached without convergence
  64  usage error
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__
from .errors import MaxItersExceeded, MGPIError
from .game import INFINITE, load_game, random_game, save_game
from .linear_fa import StateFeatureScheme, fa_pi
from .linear_game import cost_model, linear_generalized_pi, load_linear_game
from .model_rl import rl_experiment
from .planners import (
    NaiveOutcome,
    PlannerConfig,
    cycling_archive,
    generalized_pi,
    hoffman_karp,
    min_lookahead,
    naive_pi,
    search_cycling,
    solve_equilibrium,
    value_iteration,
    write_cycling_archive,
)
from .stochastic_pi import StepSchedule, stochastic_pi

EXIT_OK, EXIT_INPUT, EXIT_CYCLING, EXIT_MAXITERS, EXIT_USAGE = 0, 1, 2, 3, 64

EXIT_HELP = """exit codes:
  0   converged / completed
  1   input error (missing or malformed file, invalid game, bad parameters)
  2   naive policy iteration detected cycling
  3   iteration cap reached without convergence
  64  usage error (including an empty compare list)
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _depth(text: str):
    if text.lower() in ("inf", "infinite", "infinity"):
        return INFINITE
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("rollout depth must be >= 0 or 'inf'")
    return value


def _depth_json(m):
    return "inf" if m == INFINITE else int(m)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _seed(args) -> int:
    env = os.environ.get("MGPI_SEED")
    if env is not None:
        return int(env)
    return int(getattr(args, "seed", 0) or 0)


def _write_manifest(args, seed, inputs, outputs, config) -> str | None:
    """Record what produced ``outputs``; written next to the first output."""
    outputs = [o for o in outputs if o]
    if not outputs:
        return None
    path = args.manifest or outputs[0] + ".manifest.json"
    manifest = {
        "command": args.command,
        "config": config,
        "seed": seed,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {p: _sha256(p) for p in outputs},
        "versions": {"mgpi": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _dump_json(obj, path) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _policy_json(pol):
    return {"mu": [m.tolist() for m in pol.mu], "nu": [n.tolist() for n in pol.nu]}


def _run_planner(game, algo, m, H, tol, max_iters, strict=False):
    """Returns ``(trace, exit_code)``."""
    if algo == "gpi" and H is None:
        H = min_lookahead(game.discount, m)
    config = PlannerConfig(m=m, H=H or 1, max_iters=max_iters, stop_tol=tol, strict=strict)
    try:
        if algo == "vi":
            _, trace = value_iteration(game, config)
        elif algo == "gpi":
            _, _, trace = generalized_pi(game, config)
        elif algo == "hk":
            _, trace = hoffman_karp(game, config)
        else:
            trace, outcome = naive_pi(game, config)
            return trace, {NaiveOutcome.CONVERGED: EXIT_OK, NaiveOutcome.CYCLING: EXIT_CYCLING,
                           NaiveOutcome.MAX_ITERS: EXIT_MAXITERS}[outcome]
    except MaxItersExceeded as exc:
        return exc.trace, EXIT_MAXITERS
    return trace, EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    game = random_game(seed, args.states, tuple(args.actions), args.sparsity, args.discount, args.fixed_actions)
    save_game(game, args.out)
    _write_manifest(args, seed, [], [args.out], {"states": args.states, "actions": args.actions,
                                                 "sparsity": args.sparsity, "discount": args.discount,
                                                 "fixed_actions": args.fixed_actions})
    return EXIT_OK


def cmd_solve(args) -> int:
    game = load_game(args.game)
    trace, code = _run_planner(game, args.algo, args.m, args.H, args.tol, args.max_iters, args.strict)
    if args.trace:
        trace.write_csv(args.trace)
    result = {
        "algo": args.algo,
        "termination": trace.termination,
        "iterations": trace.iterations,
        "final_residual": float(trace.residuals[-1]),
        "value": np.asarray(trace.final_value).tolist(),
        "policy": _policy_json(trace.final_policy),
        "counts": {"bellman_applications": trace.counter.bellman_applications,
                   "policy_applications": trace.counter.policy_applications,
                   "matrix_games": trace.counter.matrix_games},
    }
    outputs = [args.out if args.out not in (None, "-") else None, args.trace]
    config = {"algo": args.algo, "m": _depth_json(args.m), "H": args.H, "tol": args.tol, "max_iters": args.max_iters}
    _dump_json(result, args.out)
    _write_manifest(args, None, [args.game], outputs, config)
    return code


COMPARE_COLUMNS = ["algo", "iters", "operator_applications", "matrix_games_solved", "wall_ms", "final_residual"]


def _parse_config(text: str):
    """``algo[:key=value,...]`` with keys m, H, tol, max_iters."""
    algo, _, rest = text.partition(":")
    if algo not in ("vi", "gpi", "naive", "hk"):
        raise UsageError(f"unknown algorithm {algo!r} in {text!r}")
    opts = {"m": 1, "H": None, "tol": 1e-10, "max_iters": 1000}
    for item in filter(None, rest.split(",")):
        key, _, value = item.partition("=")
        if key == "m":
            opts["m"] = _depth(value)
        elif key == "H":
            opts["H"] = int(value)
        elif key == "tol":
            opts["tol"] = float(value)
        elif key == "max_iters":
            opts["max_iters"] = int(value)
        else:
            raise UsageError(f"unknown option {key!r} in {text!r}")
    return algo, opts


def cmd_compare(args) -> int:
    if not args.configs:
        raise UsageError("compare needs at least one planner configuration")
    configs = [_parse_config(c) for c in args.configs]
    game = load_game(args.game)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    for text, (algo, opts) in zip(args.configs, configs):
        t0 = time.perf_counter()
        trace, _ = _run_planner(game, algo, opts["m"], opts["H"], opts["tol"], opts["max_iters"])
        wall = (time.perf_counter() - t0) * 1e3
        writer.writerow([text, trace.iterations, trace.counter.operator_applications, trace.counter.matrix_games,
                         "" if args.omit_timing else f"{wall:.3f}", f"{trace.residuals[-1]:.17g}"])
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
        _write_manifest(args, None, [args.game], [args.out], {"configs": args.configs,
                                                              "omit_timing": args.omit_timing})
    return EXIT_OK


def cmd_rl(args) -> int:
    game = load_game(args.game)
    seed = _seed(args)
    report = rl_experiment(game, args.N, m=args.m, H=args.H, eps_opt=args.eps_opt, seed=seed, c=args.c,
                           delta=args.delta, timing=not args.omit_timing)
    report["inputs"]["m"] = _depth_json(report["inputs"]["m"])
    _dump_json(report, args.report)
    _write_manifest(args, seed, [args.game], [args.report if args.report not in (None, "-") else None],
                    {"N": args.N, "m": _depth_json(args.m), "H": args.H, "eps_opt": args.eps_opt,
                     "c": args.c, "delta": args.delta})
    return EXIT_OK


def cmd_fa(args) -> int:
    game = load_game(args.game)
    with open(args.features) as fh:
        scheme = StateFeatureScheme.from_dict(json.load(fh))
    run = fa_pi(game, scheme, np.zeros(scheme.d), args.m, args.H, args.K, strict=args.strict)
    if args.trace:
        run.trace.write_csv(args.trace)
    rep = run.report
    out = {"theta": run.thetas[-1].tolist(), "kappa_fa": rep.kappa_fa, "delta_fv": rep.delta_fv,
           "delta_app_estimate": rep.delta_app_estimate, "asymptotic_bound": rep.asymptotic_bound,
           "final_sup_error": float(run.trace.sup_errors[-1])}
    _dump_json(out, args.out)
    _write_manifest(args, None, [args.game, args.features],
                    [args.out if args.out not in (None, "-") else None, args.trace],
                    {"m": _depth_json(args.m), "H": args.H, "K": args.K})
    return EXIT_OK


def cmd_spi(args) -> int:
    game = load_game(args.game)
    if args.features:
        with open(args.features) as fh:
            scheme = StateFeatureScheme.from_dict(json.load(fh))
    else:
        scheme = StateFeatureScheme.tabular(game.num_states)
    seed = _seed(args)
    schedule = StepSchedule.harmonic(args.step_c, args.step_p)
    run = stochastic_pi(game, scheme, np.zeros(scheme.d), args.m, args.H, schedule, args.K, seed,
                        starts_per_iter="all" if args.all_starts else None)
    if args.trace:
        run.trace.write_csv(args.trace)
    out = {"theta": run.thetas[-1].tolist(), "final_sup_error": float(run.trace.sup_errors[-1])}
    _dump_json(out, args.out)
    inputs = [args.game] + ([args.features] if args.features else [])
    _write_manifest(args, seed, inputs, [args.out if args.out not in (None, "-") else None, args.trace],
                    {"m": args.m, "H": args.H, "K": args.K, "step_c": args.step_c, "step_p": args.step_p,
                     "all_starts": args.all_starts})
    return EXIT_OK


def cmd_linear(args) -> int:
    lg = load_linear_game(args.model, args.discount)
    J_star = solve_equilibrium(lg.base)
    betas, trace = linear_generalized_pi(lg, lg.theta, args.m, args.H, args.K, reference=J_star)
    if args.trace:
        trace.write_csv(args.trace)
    base = lg.base
    cost = cost_model(lg.d, int(base.reach_sizes().max()), int(max(base.n_max.max(), base.n_min.max())),
                      len(lg.anchors), lg.reach_sum(), args.m, args.H)
    out = {"beta": betas[-1].tolist(), "final_sup_error": float(trace.sup_errors[-1]),
           "matrix_games": trace.counter.matrix_games, "cost_per_iteration": dict(cost.__dict__)}
    _dump_json(out, args.out)
    _write_manifest(args, None, [args.model], [args.out if args.out not in (None, "-") else None, args.trace],
                    {"m": args.m, "H": args.H, "K": args.K, "discount": args.discount})
    return EXIT_OK


def cmd_search(args) -> int:
    seed = _seed(args)
    instances, tally = search_cycling(args.games, seed, args.m, args.max_iters)
    archive = cycling_archive(instances, tally, args.m, args.max_iters)
    write_cycling_archive(args.archive, archive)
    _write_manifest(args, seed, [], [args.archive], {"games": args.games, "m": _depth_json(args.m),
                                                     "max_iters": args.max_iters})
    print(f"{len(instances)} non-converging games out of {args.games}: {tally}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mgpi", description="Planning and learning in zero-sum discounted Markov games.",
                epilog=EXIT_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="accepted for compatibility; runs are single-threaded")
    p.add_argument("--manifest", default=None, help="manifest path (default: <first output>.manifest.json)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a seeded random game")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--actions", type=int, nargs=2, default=(2, 2), metavar=("U", "V"))
    g.add_argument("--sparsity", type=float, default=0.5, help="0 gives one successor, 1 reaches every state")
    g.add_argument("--discount", type=float, default=0.9)
    g.add_argument("--fixed-actions", action="store_true", help="every state gets the full action counts")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run one planner", epilog=EXIT_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("game")
    s.add_argument("--algo", choices=["vi", "gpi", "naive", "hk"], default="gpi")
    s.add_argument("--m", type=_depth, default=1, help="rollout depth, integer or 'inf'")
    s.add_argument("--H", type=int, default=None, help="lookahead depth (gpi default: smallest valid)")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--strict", action="store_true", help="refuse (m, H) that fail the lookahead condition")
    s.add_argument("--trace", default=None, help="trace CSV path")
    s.add_argument("--out", default=None, help="final value/policy JSON (default stdout)")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="tabulate planner costs on one game")
    c.add_argument("game")
    c.add_argument("configs", nargs="*", help="algo[:m=..,H=..,tol=..,max_iters=..]")
    c.add_argument("--out", default=None)
    c.add_argument("--omit-timing", action="store_true", help="leave wall_ms empty for byte-identical reruns")
    c.set_defaults(func=cmd_compare)

    r = sub.add_parser("rl", help="learn from a generative model and score the learned policy")
    r.add_argument("game")
    r.add_argument("--N", type=int, nargs="+", required=True, help="samples per triple; several values sweep")
    r.add_argument("--m", type=_depth, default=3)
    r.add_argument("--H", type=int, default=None)
    r.add_argument("--eps-opt", type=float, default=1e-6)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--c", type=float, default=1.0, help="constant in the sample bound")
    r.add_argument("--delta", type=float, default=0.1)
    r.add_argument("--omit-timing", action="store_true")
    r.add_argument("--report", default=None, help="report JSON (default stdout)")
    r.set_defaults(func=cmd_rl)

    f = sub.add_parser("fa", help="least-squares approximate policy iteration")
    f.add_argument("game")
    f.add_argument("--features", required=True)
    f.add_argument("--m", type=_depth, default=3)
    f.add_argument("--H", type=int, required=True)
    f.add_argument("--K", type=int, default=50)
    f.add_argument("--strict", action="store_true")
    f.add_argument("--trace", default=None)
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_fa)

    q = sub.add_parser("spi", help="policy iteration with sampled returns")
    q.add_argument("game")
    q.add_argument("--features", default=None, help="default: one feature per state")
    q.add_argument("--m", type=int, default=3)
    q.add_argument("--H", type=int, required=True)
    q.add_argument("--K", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--step-c", type=float, default=1.0)
    q.add_argument("--step-p", type=float, default=1.0)
    q.add_argument("--all-starts", action="store_true", help="start once from every state each iteration")
    q.add_argument("--trace", default=None)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_spi)

    lin = sub.add_parser("linear", help="weight-space planning on a linear game file")
    lin.add_argument("model")
    lin.add_argument("--discount", type=float, default=None, help="needed if the file has no discount")
    lin.add_argument("--m", type=int, default=3)
    lin.add_argument("--H", type=int, required=True)
    lin.add_argument("--K", type=int, default=20)
    lin.add_argument("--trace", default=None)
    lin.add_argument("--out", default=None)
    lin.set_defaults(func=cmd_linear)

    n = sub.add_parser("search", help="look for games on which naive policy iteration cycles")
    n.add_argument("--games", type=int, default=10_000)
    n.add_argument("--seed", type=int, default=0, help="first seed")
    n.add_argument("--m", type=_depth, default=INFINITE)
    n.add_argument("--max-iters", type=int, default=200)
    n.add_argument("--archive", required=True)
    n.set_defaults(func=cmd_search)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mgpi: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"mgpi: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"mgpi: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MGPIError, ValueError, KeyError, TypeError) as exc:
        print(f"mgpi: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
