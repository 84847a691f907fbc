"""Command-line front end: check, strengthen, model-check, learn, simulate."""

from __future__ import annotations

import argparse
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .engine import (
    DEEMED_SATISFIED,
    FALSIFIED,
    TIMEOUT,
    BbcConfig,
    BbcReport,
    format_trace,
    format_word,
    run_bbc,
)
from .formula import FormulaSyntaxError, atom_kind, parse_formula, to_str
from .learn import MealyLearner
from .machine import load_machine, model_check, save_machine
from .search import SearchParams, random_eqtest, wmethod_eqtest
from .strengthen import CandidateSet, choose_fml, gen_int, gen_no_int
from .sut import (
    MappedSut,
    SutError,
    build_output_mapper,
    mealy_sut,
    process_sut,
    propositional_formula,
    transmission_sim,
)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _read_formula(args) -> str:
    if getattr(args, "formula", None):
        return args.formula
    if getattr(args, "formula_file", None):
        return Path(args.formula_file).read_text().strip()
    raise CliError("provide --formula or --formula-file")


def make_session(spec: str, alphabet=None):
    """SUT backend factory: 'sim', 'mealy:PATH', or 'process:COMMAND'."""
    if spec == "sim":
        return transmission_sim()
    if spec.startswith("mealy:"):
        path = Path(spec[len("mealy:"):])
        try:
            return mealy_sut(load_machine(path.read_text()))
        except OSError as e:
            raise CliError(f"cannot read machine file: {e}") from e
    if spec.startswith("process:"):
        if not alphabet:
            raise CliError("the process backend needs --alphabet")
        return process_sut(spec[len("process:"):], alphabet)
    raise CliError(f"unknown SUT backend {spec!r} (use sim, mealy:PATH, or process:CMD)")


def _load_config_defaults(argv, parser):
    """Pre-scan for --config and fold its key-value pairs into the defaults."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    converters = {}
    for action in parser._actions:
        converters[action.dest] = action.type
    defaults = {}
    try:
        text = Path(known.config).read_text()
    except OSError as e:
        raise CliError(f"cannot read config file: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise CliError(f"config line {lineno}: expected 'key: value'")
        dest = key.strip().replace("-", "_")
        if dest not in converters:
            raise CliError(f"config line {lineno}: unknown key {key.strip()!r}")
        value = value.strip()
        conv = converters[dest]
        defaults[dest] = conv(value) if conv else value
    parser.set_defaults(**defaults)


def _add_sut_arguments(p):
    p.add_argument("--sut", required=True, help="sim | mealy:PATH | process:COMMAND")
    p.add_argument("--alphabet", help="input letters for the process backend (space separated)")


def _add_check_arguments(p):
    p.add_argument("--formula", "-f")
    p.add_argument("--formula-file")
    _add_sut_arguments(p)
    p.add_argument("--mode", choices=("baseline", "enhanced"), default="enhanced")
    p.add_argument("--horizon", type=int, default=30, help="time-horizon bound N")
    p.add_argument("--mc-horizon", type=int, default=None, help="model-checking depth (default: horizon)")
    p.add_argument("--mc-cap", type=int, default=100_000)
    p.add_argument("--timeout-s", type=float, default=None)
    p.add_argument("--budget", type=int, default=100_000, help="max SUT executions per run")
    p.add_argument("--eq-strategy", choices=("random", "ga", "wmethod"), default="ga")
    p.add_argument("--wmethod-depth", type=int, default=2)
    p.add_argument("--population", type=int, default=50)
    p.add_argument("--generations", type=int, default=20)
    p.add_argument("--mutation-rate", type=float, default=0.05)
    p.add_argument("--crossover-rate", type=float, default=0.5)
    p.add_argument("--max-words", type=int, default=500)
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--max-len", type=int, default=None, help="max word length (default: horizon)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", help="comma-separated explicit seed list (overrides --runs)")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", help="directory for per-run and aggregate report files")
    p.add_argument("--config", help="flat key: value config file; flags override")


def _bbc_config(args, seed: int) -> BbcConfig:
    max_len = args.max_len if args.max_len is not None else args.horizon
    return BbcConfig(
        mode=args.mode,
        horizon=args.horizon,
        mc_horizon=args.mc_horizon,
        mc_cap=args.mc_cap,
        timeout_s=args.timeout_s,
        max_executions=args.budget,
        eq_strategy=args.eq_strategy,
        wmethod_depth=args.wmethod_depth,
        search=SearchParams(
            seed=seed,
            max_words=args.max_words,
            word_len=(args.min_len, max_len),
            population=args.population,
            generations=args.generations,
            mutation_rate=args.mutation_rate,
            crossover_rate=args.crossover_rate,
        ),
        seed=seed,
    )


def _alphabet(args):
    return tuple(args.alphabet.split()) if getattr(args, "alphabet", None) else None


def _one_check_run(args, formula_text: str, seed: int) -> BbcReport:
    session = make_session(args.sut, _alphabet(args))
    try:
        return run_bbc(session, formula_text, _bbc_config(args, seed))
    finally:
        session.close()


def campaign_aggregate(reports: list[BbcReport], seeds: list[int]) -> str:
    def stats(values):
        mean = statistics.fmean(values)
        stdev = statistics.stdev(values) if len(values) > 1 else 0.0
        return mean, stdev

    executions = stats([r.sut_executions for r in reports])
    eq_rounds = stats([r.eq_rounds for r in reports])
    elapsed = stats([r.elapsed_s for r in reports])
    first = reports[0]
    lines = [
        "# bbcheck campaign",
        f"formula: {first.formula}",
        f"mode: {first.mode}",
        f"runs: {len(reports)}",
        "seeds: " + " ".join(str(s) for s in seeds),
        f"falsified: {sum(r.verdict == FALSIFIED for r in reports)}",
        f"deemed_satisfied: {sum(r.verdict == DEEMED_SATISFIED for r in reports)}",
        f"timeouts: {sum(r.verdict == TIMEOUT for r in reports)}",
        f"mean_sut_executions: {executions[0]:.3f}",
        f"stddev_sut_executions: {executions[1]:.3f}",
        f"mean_eq_rounds: {eq_rounds[0]:.3f}",
        f"stddev_eq_rounds: {eq_rounds[1]:.3f}",
        f"# mean_elapsed_s: {elapsed[0]:.3f}",
        f"# stddev_elapsed_s: {elapsed[1]:.3f}",
    ]
    for seed, r in zip(seeds, reports):
        lines.append(
            f"run: seed={seed} verdict={r.verdict} sut_executions={r.sut_executions}"
            f" eq_rounds={r.eq_rounds} mc_original={r.mc_calls_original}"
            f" mc_strengthened={r.mc_calls_strengthened} hypotheses={r.hypotheses_built}"
            f" witness={format_word(r.witness)}"
        )
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    formula_text = _read_formula(args)
    parse_formula(formula_text)  # fail fast on syntax errors
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",")]
    else:
        seeds = [args.seed + i for i in range(args.runs)]
    if args.runs < 1 or not seeds:
        raise CliError("need at least one run")

    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            reports = list(pool.map(lambda s: _one_check_run(args, formula_text, s), seeds))
    else:
        reports = [_one_check_run(args, formula_text, s) for s in seeds]

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for seed, report in zip(seeds, reports):
        text = report.to_text()
        if out_dir:
            (out_dir / f"run_{seed}.txt").write_text(text)
        else:
            sys.stdout.write(text)
    aggregate = campaign_aggregate(reports, seeds)
    if out_dir:
        (out_dir / "campaign.txt").write_text(aggregate)
        print(f"wrote {len(reports)} report(s) and campaign.txt to {out_dir}")
    else:
        sys.stdout.write(aggregate)
    return 0


def cmd_strengthen(args) -> int:
    f = parse_formula(_read_formula(args))
    no_int = gen_no_int(f)
    interval = gen_int(f, args.bound)
    for psi in no_int:
        print(f"{to_str(psi)}  #rule")
    for psi in interval:
        print(f"{to_str(psi)}  #interval")
    if args.chosen:
        cand = CandidateSet(no_int=no_int, interval=interval)
        for psi in choose_fml(cand):
            print(f"{to_str(psi)}  #chosen")
    return 0


def cmd_model_check(args) -> int:
    f = parse_formula(_read_formula(args))
    try:
        machine = load_machine(Path(args.machine).read_text())
    except OSError as e:
        raise CliError(f"cannot read machine file: {e}") from e
    if atom_kind(f) == "signal":
        f = propositional_formula(f)
    verdict = model_check(machine, f, args.horizon, args.cap)
    print(f"verdict: {verdict.kind.value}")
    if verdict.witness is not None:
        print(f"witness: {format_word(verdict.witness)}")
        print(f"outputs: {format_trace(verdict.outputs)}")
    if verdict.reason:
        print(f"reason: {verdict.reason}")
    return 0


def cmd_learn(args) -> int:
    session = make_session(args.sut, _alphabet(args))
    try:
        sut = session
        extra = frozenset()
        if args.formula or args.formula_file:
            f = parse_formula(_read_formula(args))
            if atom_kind(f) == "signal":
                sut = MappedSut(session, build_output_mapper(f))
                extra = sut.mapper.propositions
        learner = MealyLearner(sut, extra_propositions=extra)
        params = SearchParams(seed=args.seed, max_words=args.max_words, word_len=(1, args.max_len))
        hyp = learner.learn_hypothesis()
        while True:
            if args.eq_strategy == "wmethod":
                word = wmethod_eqtest(sut, hyp, args.wmethod_depth)
            else:
                word = random_eqtest(sut, hyp, params)
            if word is None or sut.executions >= args.budget:
                break
            learner.refine_with_counterexample(word)
            hyp = learner.learn_hypothesis()
        text = save_machine(hyp)
        if args.out:
            Path(args.out).write_text(text)
            print(f"learned {len(hyp.locations)} location(s) with {sut.executions} executions -> {args.out}")
        else:
            sys.stdout.write(text)
        return 0
    finally:
        session.close()


def cmd_simulate(args) -> int:
    session = make_session(args.sut, _alphabet(args))
    try:
        word = tuple(args.input.split())
        if not word:
            raise CliError("provide a non-empty --input word")
        trace = session.execute(word)
        for step, (letter, out) in enumerate(zip(word, trace)):
            print(f"{step} {letter} -> {format_trace((out,))}")
        return 0
    finally:
        session.close()


def build_parser() -> _Parser:
    parser = _Parser(prog="bbcheck", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run the full black-box checking loop")
    _add_check_arguments(p_check)
    p_check.set_defaults(func=cmd_check)

    p_str = sub.add_parser("strengthen", help="print strengthened candidate formulas")
    p_str.add_argument("--formula", "-f")
    p_str.add_argument("--formula-file")
    p_str.add_argument("--bound", "-N", type=int, default=30, help="time-horizon bound N")
    p_str.add_argument("--chosen", action="store_true", help="also print the per-round selection")
    p_str.set_defaults(func=cmd_strengthen)

    p_mc = sub.add_parser("model-check", help="model check a Mealy machine file")
    p_mc.add_argument("--formula", "-f")
    p_mc.add_argument("--formula-file")
    p_mc.add_argument("--machine", required=True)
    p_mc.add_argument("--horizon", type=int, default=30)
    p_mc.add_argument("--cap", type=int, default=100_000)
    p_mc.set_defaults(func=cmd_model_check)

    p_learn = sub.add_parser("learn", help="learn a Mealy machine from a SUT")
    _add_sut_arguments(p_learn)
    p_learn.add_argument("--formula", "-f", help="formula whose comparisons define the output mapper")
    p_learn.add_argument("--formula-file")
    p_learn.add_argument("--eq-strategy", choices=("random", "wmethod"), default="random")
    p_learn.add_argument("--wmethod-depth", type=int, default=2)
    p_learn.add_argument("--seed", type=int, default=0)
    p_learn.add_argument("--max-words", type=int, default=500)
    p_learn.add_argument("--max-len", type=int, default=30)
    p_learn.add_argument("--budget", type=int, default=100_000)
    p_learn.add_argument("--out", help="destination machine file (default: stdout)")
    p_learn.set_defaults(func=cmd_learn)

    p_sim = sub.add_parser("simulate", help="execute one input word and print the trace")
    _add_sut_arguments(p_sim)
    p_sim.add_argument("--input", required=True, help="space-separated input letters")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        if argv and argv[0] == "check":
            check_parser = parser._subparsers._group_actions[0].choices["check"]
            _load_config_defaults(argv[1:], check_parser)
        args = parser.parse_args(argv)
        return args.func(args)
    except SutError as e:
        print(f"SUT failure: {e}", file=sys.stderr)
        return 2
    except (CliError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
