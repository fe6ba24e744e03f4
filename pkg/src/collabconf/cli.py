#!/usr/bin/env python
# coding: utf-8
"""Command-line interface.

Each subcommand is a `cmd_*` function that takes the parsed arguments and
returns the process exit code. Errors from the library carry their own exit
code; `main` reports them on standard error.
"""

# native
from inspect import cleandoc
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import logging
import sys

# lib
from docopt import DocoptExit, docopt

# pkg
from . import LOG_LEVEL, MAX_SPLITS, SEED, THRESHOLD, __version__, num_cpus
from .configurator import (
    ConfigRequest,
    build_plan,
    choose_machine_type,
    load_catalog,
    parse_scale_outs,
    plan_table,
    plan_tsv,
)
from .dataset import (
    NUMERIC,
    JobSchema,
    RuntimeRecord,
    TrainingSet,
    append_record,
    filter_machine_type,
    format_number,
    load_schema,
    load_tsv,
    parse_number,
    serialize_schema,
    serialize_tsv,
)
from .errors import EXIT_INPUT, EXIT_OK, EXIT_REJECTED, CollabconfError, ConfigError
from .experiments import (
    AVAILABILITY,
    ORIGIN,
    emit_plot_data,
    experiment_availability,
    experiment_origin,
    report_tsv,
)
from .models import load_plugins
from .selection import RuntimePredictor, SplitCap, fit_predictor
from .selection import report_tsv as cv_report_tsv
from .synth import derive_seed, get_profile, synth_generate
from .validation import validate_contribution

log = logging.getLogger(__name__)

PREDICTION_COLUMNS = ("machine_type", "model_id", "s", "t_s_ms", "mu", "sigma")


def parse_args(doc: str, argv: Optional[List[str]] = None) -> Dict:
    """Parse common args."""
    return docopt(cleandoc(doc or ""), argv=argv, version=__version__)


def resolve(args: Dict) -> Dict:
    """Add the seed, worker count, split cap, and candidates to `args`."""
    try:
        seed = int(args["--seed"]) if args["--seed"] is not None else SEED
        cap = SplitCap(
            max_splits=int(args["--max-splits"] or MAX_SPLITS),
            time_budget_ms=float(args["--time-budget-ms"]) if args["--time-budget-ms"] else None,
            seed=seed,
        )
        cpus = num_cpus(args["--cpus"])
    except ValueError as e:
        raise ConfigError(str(e)) from None

    if args["--plugins"]:
        load_plugins(args["--plugins"])
    candidates = None
    if args["--models"]:
        candidates = [m.strip() for m in args["--models"].split(",") if m.strip()]
    args.update(seed=seed, cap=cap, cpus=cpus, candidates=candidates)
    return args


def parse_context(schema: JobSchema, pairs: List[str]) -> Tuple:
    """Return context values from `NAME=VALUE` pairs in schema order."""
    given = {}
    for pair in pairs or []:
        name, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--context expects NAME=VALUE, got {pair!r}")
        given[name.strip()] = value.strip()

    unknown = sorted(set(given) - set(schema.names))
    if unknown:
        raise ConfigError(f"{schema.job_name} has no context features {unknown}")

    values = []
    for feature in schema.context_features:
        if feature.name not in given:
            raise ConfigError(f"missing --context {feature.name}=VALUE")
        text = given[feature.name]
        if feature.kind != NUMERIC:
            values.append(text)
            continue
        try:
            values.append(parse_number(text))
        except ValueError:
            raise ConfigError(f"{feature.name} must be a number, got {text!r}") from None
    return tuple(values)


def load_data(args: Dict) -> TrainingSet:
    """Return the training set named by `--data` and `--schema`."""
    return load_tsv(args["--data"], load_schema(args["--schema"]))


def config_request(args: Dict) -> ConfigRequest:
    """Return the configuration request described by the flags."""
    try:
        return ConfigRequest(
            scale_outs=parse_scale_outs(args["--scaleouts"]),
            t_max=float(args["--tmax-ms"]) if args["--tmax-ms"] else None,
            confidence=float(args["--confidence"]),
            dataset_size_gb=float(args["--dataset-gb"]),
            maintainer_machine_type=args["--machine"],
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


def write_out(args: Dict, text: str):
    """Write `text` to `--out` when given."""
    if args["--out"]:
        Path(args["--out"]).write_text(text, encoding="utf-8")


def write_reports(args: Dict, predictor: RuntimePredictor):
    """Write every candidate's cross-validation report to `--reports` when given."""
    if args["--reports"]:
        Path(args["--reports"]).write_text(cv_report_tsv(predictor.reports), encoding="utf-8")


def predict_scale_outs(
    args: Dict, ts: TrainingSet, req: ConfigRequest
) -> Tuple[str, RuntimePredictor, Dict[int, float]]:
    """Return the machine type, predictor, and runtime of every scale-out."""
    catalog = load_catalog(args["--prices"])
    machine = choose_machine_type(req, catalog, ts.machine_counts())
    context = parse_context(ts.schema, args["--context"])

    train = filter_machine_type(ts, machine)
    predictor = fit_predictor(train, args["candidates"], args["cap"], args["cpus"])
    records = [RuntimeRecord(machine, s, context, 1.0) for s in req.scale_outs]
    predictions = {s: float(t) for s, t in zip(req.scale_outs, predictor.predict(records))}
    return machine, predictor, predictions


def cmd_predict(args: Dict) -> int:
    """Print the predicted runtime of every candidate scale-out."""
    ts = load_data(args)
    machine, predictor, predictions = predict_scale_outs(args, ts, config_request(args))
    mu, sigma = predictor.error_stats

    lines = ["\t".join(PREDICTION_COLUMNS)]
    for s, runtime in predictions.items():
        cells = [machine, predictor.model_id, str(s)]
        cells += [format_number(v) for v in (runtime, mu, sigma)]
        lines.append("\t".join(cells))
    text = "\n".join(lines) + "\n"

    print(f"machine type: {machine}")
    print(f"model: {predictor.model_id} (mu {mu:,.0f} ms, sigma {sigma:,.0f} ms)")
    for report in predictor.reports:
        print(f"  {report.model_id:<8} mape {report.mape:7.2%} over {report.n_splits} splits")
    for s, runtime in predictions.items():
        print(f"{s:>5} nodes  {runtime:>14,.0f} ms")
    write_out(args, text)
    write_reports(args, predictor)
    return EXIT_OK


def cmd_configure(args: Dict) -> int:
    """Print the cluster plan."""
    ts = load_data(args)
    req = config_request(args)
    machine, predictor, predictions = predict_scale_outs(args, ts, req)
    mu, sigma = predictor.error_stats

    plan = build_plan(req, load_catalog(args["--prices"]), machine, predictions, mu, sigma)
    for note in plan.warnings:
        log.warning(note)
    print(f"model: {predictor.model_id}")
    print(plan_table(plan), end="")
    write_out(args, plan_tsv(plan))
    write_reports(args, predictor)
    return EXIT_OK


def cmd_record(args: Dict) -> int:
    """Append one observed execution to the shared data."""
    schema = load_schema(args["--schema"])
    try:
        instances = int(args["--instances"])
        runtime = parse_number(args["--runtime-ms"])
    except ValueError as e:
        raise ConfigError(str(e)) from None

    record = RuntimeRecord(
        args["--machine"], instances, parse_context(schema, args["--context"]), runtime
    )
    print(append_record(args["--data"], schema, record))
    return EXIT_OK


def cmd_validate(args: Dict) -> int:
    """Print the verdict on a contribution; exit 1 if it is rejected."""
    existing = load_data(args)
    contribution = load_tsv(args["--contribution"], existing.schema)
    threshold = float(args["--threshold"]) if args["--threshold"] else THRESHOLD

    verdict = validate_contribution(
        existing, contribution, args["candidates"], threshold, args["cap"], args["cpus"]
    )
    print(verdict.tsv(), end="")
    write_out(args, verdict.tsv())
    return EXIT_OK if verdict.accepted else EXIT_REJECTED


def cmd_evaluate(args: Dict) -> int:
    """Run an accuracy experiment and print its report."""
    seed = args["seed"]
    if args["--job"]:
        ts = synth_generate(
            get_profile(args["--job"]),
            int(args["--records"]),
            derive_seed(seed, 1),
            float(args["--noise"]),
            int(args["--median-of"]),
        )
    else:
        ts = load_data(args)
        req = config_request(args)
        ts = filter_machine_type(
            ts, choose_machine_type(req, load_catalog(args["--prices"]), ts.machine_counts())
        )

    kind = args["--experiment"]
    options = dict(
        n_splits=int(args["--splits"]),
        seed=derive_seed(seed, 2),
        models=args["candidates"],
        cap=args["cap"],
        cpus=args["cpus"],
    )
    if kind == ORIGIN:
        report = experiment_origin(ts, **options)
    elif kind == AVAILABILITY:
        report = experiment_availability(ts, parse_scale_outs(args["--sizes"]), **options)
    else:
        raise ConfigError(f"unknown experiment {kind!r}; use {ORIGIN} or {AVAILABILITY}")

    text = report_tsv([report])
    print(text, end="")
    write_out(args, text)
    if args["--plots"]:
        emit_plot_data(report, args["--plots"])
    return EXIT_OK


def cmd_generate(args: Dict) -> int:
    """Write synthetic runtime data."""
    profile = get_profile(args["--job"])
    machines = [m.strip() for m in args["--machines"].split(",")] if args["--machines"] else None
    try:
        count, noise, median_of = (
            int(args["--records"]),
            float(args["--noise"]),
            int(args["--median-of"]),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None

    ts = synth_generate(profile, count, args["seed"], noise, median_of, machines)
    if args["--schema-out"]:
        Path(args["--schema-out"]).write_text(serialize_schema(ts.schema), encoding="utf-8")
    if args["--out"]:
        write_out(args, serialize_tsv(ts))
    else:
        sys.stdout.write(serialize_tsv(ts))
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "configure": cmd_configure,
    "record": cmd_record,
    "validate": cmd_validate,
    "evaluate": cmd_evaluate,
    "generate": cmd_generate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Predict job runtimes and configure clusters from shared runtime data.

    Usage:
      collabconf predict --data PATH --schema PATH [--context NV]... [--machine TYPE] [options]
      collabconf configure --data PATH --schema PATH [--context NV]... [--machine TYPE] [options]
      collabconf record --data PATH --schema PATH --machine TYPE --instances N --runtime-ms MS [--context NV]...
      collabconf validate --data PATH --schema PATH --contribution PATH [options]
      collabconf evaluate (--job NAME | --data PATH --schema PATH [--machine TYPE]) [options]
      collabconf generate --job NAME [options]
      collabconf (-h | --help | --version)

    Options:
      --data PATH             shared runtime data (TSV)
      --schema PATH           job schema file
      --context NV            context feature as NAME=VALUE; repeat for each feature
      --scaleouts EXPR        scale-outs as `a..b[,step]` or a list [default: 2..12,2]
      --machine TYPE          machine type (default: the general type with most data)
      --prices PATH           price catalog TSV (default: bundled EMR prices)
      --tmax-ms MS            runtime target in milliseconds
      --confidence C          probability of meeting the target [default: 0.95]
      --dataset-gb GB         dataset size for the memory check [default: 0]
      --instances N           scale-out of the recorded execution
      --runtime-ms MS         observed gross runtime in milliseconds
      --contribution PATH     contributed runtime data (TSV)
      --threshold T           tolerated relative MAPE growth (default: $COLLABCONF_THRESHOLD)
      --models LIST           comma-separated candidate model ids
      --plugins PATH          manifest of custom models
      --seed N                master seed (default: $COLLABCONF_SEED)
      --max-splits N          cap on cross-validation splits (default: $COLLABCONF_MAX_SPLITS)
      --time-budget-ms MS     time budget for cross-validation
      --cpus N                worker processes or `all` (default: $COLLABCONF_CPUS)
      --job NAME              synthetic job: sort, grep, sgd, kmeans, pagerank
      --experiment KIND       `origin` or `availability` [default: origin]
      --records N             synthetic records to generate [default: 200]
      --splits N              experiment repetitions [default: 50]
      --sizes EXPR            training sizes for availability [default: 3..30,3]
      --noise SIGMA           relative runtime noise [default: 0.02]
      --median-of K           noisy draws per record; keep the median [default: 1]
      --machines LIST         comma-separated machine types to generate
      --schema-out PATH       also write the job schema to PATH
      --plots DIR             write plot data CSVs to DIR
      --out PATH              also write TSV output to PATH
      --reports PATH          write the candidates' cross-validation reports (TSV) to PATH
      -v, --verbose           log decisions and progress
      -h, --help              show this help
      --version               show the version
    """
    try:
        args = parse_args(main.__doc__ or "", argv)
    except DocoptExit as e:
        print(e, file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(
        level=logging.DEBUG if args["--verbose"] else LOG_LEVEL,
        format="%(levelname)s %(name)s: %(message)s",
    )
    command = next(name for name in COMMANDS if args[name])
    try:
        return COMMANDS[command](resolve(args))
    except CollabconfError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
