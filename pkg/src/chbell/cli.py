"""Command-line interface.

Every invocation prints one JSON document (or a short text summary with
``--format text``).  Exit codes: 0 success, 1 usage error, 2 bad input data,
3 incompatible method or invalid parameters.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .analysis import analyze, analyze_statistic, fraction_text, utc_timestamp
from .dp import exact_pvalue_dp
from .errors import ChBellError, EmptySupportError, InvalidParameterError, TrialDataError
from .io import (
    dumps_report,
    load_distribution,
    load_policy,
    load_raw_weights,
    load_weights,
    parse_trials,
    save_policy,
    setting_marginals,
    suggest_epsilon,
)
from .polytope import STRATEGIES, check_constraints, fine_construct, spec_inequality_value, step_candidates, strategy_distribution
from .pvalues import log_mcdiarmid_bound
from .simulate import SimulationConfig, make_rng, sample_outcomes, simulate_adversary
from .trials import BUILTIN_SPECS, builtin_spec, reduce_outcome_codes, reduce_trials

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARAM = 0, 1, 2, 3
METHOD_CHOICES = ("binomial", "normal", "mcdiarmid", "exact-dp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _epsilon(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number or 'auto': {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    # global options are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for simulations (default: all cores); results do not depend on it")
    p = _Parser(prog="chbell", description="p-values for Clauser-Horne Bell tests under the memory loophole",
                parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.set_defaults(format="json", threads=os.cpu_count() or 1)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    a = sub.add_parser("analyze", help="p-value for a CSV trial file")
    a.add_argument("trials")
    a.add_argument("--spec", choices=BUILTIN_SPECS, default="J")
    a.add_argument("--method", choices=METHOD_CHOICES, default="binomial")
    a.add_argument("--epsilon", type=_epsilon, default=0.0,
                   help="setting-bias allowance, or 'auto' to derive it from the data")
    a.add_argument("--lenient-parity", action="store_true")

    v = sub.add_parser("pvalue", help="p-value for a given final value and step count")
    v.add_argument("--spec", choices=BUILTIN_SPECS, default="Ch")
    v.add_argument("--method", choices=METHOD_CHOICES, default="exact-dp")
    v.add_argument("--L", type=int, required=True, dest="L")
    v.add_argument("--m", type=int, required=True)
    v.add_argument("--epsilon", type=float, default=0.0)
    v.add_argument("--lenient-parity", action="store_true")

    b = sub.add_parser("bound", help="McDiarmid bound for the Ch statistic")
    b.add_argument("--L", type=int, required=True, dest="L")
    b.add_argument("--m", type=int, required=True)

    s = sub.add_parser("simulate", help="i.i.d. or adversarial simulated experiments")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--dist", help="outcome distribution JSON")
    src.add_argument("--policy", help="policy archive written by the policy command")
    s.add_argument("--n", type=int, help="trials per run (i.i.d. source)")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--normalize", action="store_true", help="rescale the distribution to sum to 1")
    s.add_argument("--spec", choices=BUILTIN_SPECS, action="append",
                   help="statistics to report for i.i.d. runs (default: all)")

    g = sub.add_parser("polytope", help="local polytope utilities")
    mode = g.add_mutually_exclusive_group(required=True)
    mode.add_argument("--check", metavar="DIST_JSON")
    mode.add_argument("--strategies", action="store_true")
    mode.add_argument("--fine", metavar="WEIGHTS_JSON")
    g.add_argument("--normalize", action="store_true", help="rescale the --check table to sum to 1")

    o = sub.add_parser("policy", help="compute and store the optimal adversary policy")
    o.add_argument("--L", type=int, required=True, dest="L")
    o.add_argument("--m", type=int, required=True)
    o.add_argument("--spec", choices=BUILTIN_SPECS, default="Ch")
    o.add_argument("--out", required=True)
    return p


def _envelope(report_type: str, **fields) -> dict:
    return {"report_type": report_type, "engine_version": __version__, "timestamp": utc_timestamp(), **fields}


def cmd_analyze(args) -> dict:
    trials = parse_trials(args.trials)
    walk = reduce_trials(trials, builtin_spec(args.spec))
    marginals = None
    eps = args.epsilon
    if trials:
        summary = _marginals(trials)
        marginals = setting_marginals(summary[0], summary[1], len(trials))
        if eps == "auto":
            eps = suggest_epsilon(summary[0], summary[1], len(trials))
    elif eps == "auto":
        eps = 0.0
    report = analyze(walk, args.method, epsilon=eps, lenient_parity=args.lenient_parity,
                     dataset=os.path.basename(args.trials), marginals=marginals)
    return report.to_dict()


def _marginals(trials):
    n = len(trials)
    return (Fraction(sum(t.setting1 == "a" for t in trials), n), Fraction(sum(t.setting2 == "b" for t in trials), n))


def cmd_pvalue(args) -> dict:
    report = analyze_statistic(args.L, args.m, builtin_spec(args.spec), args.method, epsilon=args.epsilon,
                               lenient_parity=args.lenient_parity)
    return report.to_dict()


def cmd_bound(args) -> dict:
    log_mcdiarmid_bound(args.L, args.m)  # rejects L/m outside (0, 1)
    report = analyze_statistic(args.L, args.m, builtin_spec("Ch"), "mcdiarmid").to_dict()
    report["report_type"] = "bound"
    return report


def cmd_simulate(args) -> dict:
    if args.runs < 1:
        raise InvalidParameterError("--runs must be positive")
    if args.policy:
        result = load_policy(args.policy)
        rep = simulate_adversary(result, runs=args.runs, seed=args.seed, threads=max(1, args.threads))
        return _envelope("adversary_simulation", L=result.L, m=result.m, runs=rep.runs, successes=rep.successes,
                         frequency=rep.frequency, interval=list(rep.interval), confidence=0.99,
                         target=rep.target, seeds=[args.seed])
    if args.n is None:
        raise UsageError("simulate --dist needs --n")
    dist = load_distribution(args.dist, normalize=args.normalize)
    config = SimulationConfig(dist, args.n, args.runs, args.seed)
    specs = [builtin_spec(name) for name in (args.spec or BUILTIN_SPECS)]
    detail = []
    for run in range(config.runs):
        codes = sample_outcomes(dist, config.n, make_rng(config.seed, run))
        walks = {}
        for spec in specs:
            steps = reduce_outcome_codes(codes, spec)
            walks[spec.name] = {"m": int(steps.size), "statistic": str(int(round(steps.sum())))}
        detail.append({"run": run, "walks": walks})
    return _envelope("simulation", n=config.n, runs=config.runs, seeds=[config.seed],
                     support_mode=dist.support_mode, runs_detail=detail)


def cmd_polytope(args) -> dict:
    if args.strategies:
        rows = []
        for v in STRATEGIES:
            dist = strategy_distribution(v)
            rows.append({"index": v.index, "assignment": dict(v.assignment), "label": str(v),
                         "distribution": dist.as_mapping()})
        return _envelope("strategies", strategies=rows)
    if args.check:
        try:
            dist = load_distribution(args.check, normalize=args.normalize)
        except TrialDataError:
            if args.normalize:
                raise
            # inspect an unnormalised table as printed; the report flags it
            dist = load_raw_weights(args.check)
            exact = all(isinstance(w, Fraction) for w in dist.values())
        else:
            if dist.support_mode == "full16":
                dist = dist.conditioned_non00()
            exact = dist.is_exact
        rep = check_constraints(dist).as_dict()
        ineq = {}
        for name in BUILTIN_SPECS:
            value = spec_inequality_value(builtin_spec(name), dist)
            ineq[name] = fraction_text(value) if exact else float(value)
        return _envelope("polytope_check", **rep, spec_inequalities=ineq)
    fc = fine_construct(load_weights(args.fine))
    return _envelope("fine_construction", x=str(fc.x), y=str(fc.y), z=str(fc.z), s=str(fc.s), t=str(fc.t),
                     u=str(fc.u), distribution=fc.distribution.as_mapping(), null_mass=str(fc.null_mass))


def cmd_policy(args) -> dict:
    spec = builtin_spec(args.spec)
    result = exact_pvalue_dp(args.L * spec.lattice_scale, args.m, step_candidates(spec), want_policy=True,
                             lattice_scale=spec.lattice_scale)
    save_policy(result, args.out)
    return _envelope("policy", spec=spec.name, L=args.L, m=args.m, p_value=result.p_value,
                     log_p_value=result.log_p_value if result.p_value > 0 else None,
                     policy_cells=result.policy.n_cells, out=args.out)


COMMANDS = {
    "analyze": cmd_analyze, "pvalue": cmd_pvalue, "bound": cmd_bound,
    "simulate": cmd_simulate, "polytope": cmd_polytope, "policy": cmd_policy,
}


def render_text(doc: dict) -> str:
    lines = []
    for key, value in doc.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, default=str)
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        doc = COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (TrialDataError, EmptySupportError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"chbell: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ChBellError as exc:
        print(f"chbell: {exc}", file=sys.stderr)
        return EXIT_PARAM
    out = dumps_report(doc) if args.format == "json" else render_text(doc)
    sys.stdout.write(out + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
