import functools
import os
from typing import Any, Callable, Optional

import click

from errors import EXIT_NUMERICAL, EXIT_USAGE, LabError, UsageError
from experiments import EXPERIMENTS, SUITES, load_config, merge_overrides, parse_config_text, render, run, suite
from logging_config import configure_logging, get_logger

logger = get_logger(__name__)

# ===== CONFIGURATION =====
OUTPUT_DIR_ENV = "LAB_OUTPUT_DIR"


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


def resolve_output(path: str) -> str:
    """Relative report paths land under $LAB_OUTPUT_DIR when it is set."""
    if os.path.isabs(path):
        return path
    return os.path.join(os.getenv(OUTPUT_DIR_ENV, "."), path)


def emit(text: str, output: Optional[str]) -> None:
    if output is None:
        click.echo(text, nl=False)
        return
    target = resolve_output(output)
    parent = os.path.dirname(target)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info("report_written", path=target, size=len(text))


# ===== ERROR HANDLING =====
def guarded(command: Callable) -> Callable:
    """Lab errors exit with their own code; anything unexpected exits 3."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except click.ClickException:
            raise
        except LabError as exc:
            if exc.exit_code == EXIT_USAGE:
                raise click.UsageError(exc.detail) from exc
            logger.error("lab_error", error_type=type(exc).__name__, detail=exc.detail)
            click.echo(f"Error: {exc.detail}", err=True)
            raise click.exceptions.Exit(exc.exit_code) from exc
        except Exception as exc:
            logger.error("unhandled_exception", exc_type=type(exc).__name__, exc_message=str(exc))
            click.echo(f"Error: {exc}", err=True)
            raise click.exceptions.Exit(EXIT_NUMERICAL) from exc

    return wrapper


def parse_assignments(pairs: tuple[str, ...]) -> dict[str, str]:
    parameters = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        key, value = (part.strip() for part in pair.split("=", 1))
        parameters[key] = value
    return parameters


def execute(experiment: str, parameters: dict[str, Any], seed: Optional[int], fmt: str, output: Optional[str]) -> None:
    overrides = {
        "experiment": experiment,
        "seed": seed,
        "format": fmt,
        "output": output,
        "parameters": {k: v for k, v in parameters.items() if v is not None},
    }
    config = load_config(merge_overrides({}, overrides))
    emit(render(run(config), config.output.format), config.output.path)


def output_options(command: Callable) -> Callable:
    command = click.option("--output", "-o", default=None, help="Report path; relative paths use $LAB_OUTPUT_DIR.")(command)
    command = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")(command)
    return command


def seed_option(command: Callable) -> Callable:
    return click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None,
                        help="64-bit seed; required whenever sampling is used.")(command)


def resource_options(command: Callable) -> Callable:
    command = click.option("--angles", default=None, help="'tsirelson', 'textbook' or 'a0,a1;b0,b1' (radians).")(command)
    command = click.option("--state", default=None, help="Named state for quantum resources.")(command)
    command = click.option("--e1", type=float, default=None, help="Correlator for the second input.")(command)
    command = click.option("--e", "e", type=float, default=None, help="Correlator.")(command)
    return command


# ===== CLI =====
@click.group()
def cli():
    """Non-local boxes, information causality and counterfactual ensembles."""
    configure_logging(json_logs=_env_flag("JSON_LOGS", "true"), level=os.getenv("LOG_LEVEL", "INFO"))


@cli.group("bell")
def bell_group():
    """CHSH values and monogamy."""


@bell_group.command("chsh")
@click.option("--box", type=click.Choice(["pr", "isotropic", "correlated", "quantum", "local", "classical-max"]),
              default="pr")
@resource_options
@output_options
@guarded
def bell_chsh(box, e, e1, state, angles, fmt, output):
    execute("bell.chsh", {"box": box, "e": e, "e1": e1, "state": state, "angles": angles}, None, fmt, output)


@bell_group.command("monogamy")
@click.option("--source", type=click.Choice(["singlet13", "pr13", "random", "ns-max"]), default="singlet13")
@click.option("--trials", type=int, default=None)
@seed_option
@output_options
@guarded
def bell_monogamy(source, trials, seed, fmt, output):
    execute("bell.monogamy", {"source": source, "trials": trials}, seed, fmt, output)


@cli.group("ic")
def ic_group():
    """Information-causality game, protocol and definitions."""


@ic_group.command("game")
@click.option("--resource", type=click.Choice(["pr", "isotropic", "correlated", "quantum", "local", "trivial",
                                               "random-quantum"]), default="pr")
@resource_options
@click.option("--exact/--sampled", default=True)
@click.option("--samples", type=int, default=None)
@click.option("--trials", type=int, default=None, help="Random resources for random-quantum.")
@seed_option
@output_options
@guarded
def ic_game(resource, e, e1, state, angles, exact, samples, trials, seed, fmt, output):
    params = {"resource": resource, "e": e, "e1": e1, "state": state, "angles": angles,
              "exact": exact, "samples": samples, "trials": trials}
    execute("ic.game", params, seed, fmt, output)


@ic_group.command("protocol")
@click.option("--e0", type=float, default=1.0)
@click.option("--e1", type=float, default=None)
@click.option("--levels", type=int, default=1)
@click.option("--samples", type=int, default=None, help="Simulated games; 0 skips simulation.")
@click.option("--exact/--no-exact", default=True)
@seed_option
@output_options
@guarded
def ic_protocol(e0, e1, levels, samples, exact, seed, fmt, output):
    params = {"e0": e0, "e1": e1, "levels": levels, "samples": samples, "exact": exact}
    execute("ic.protocol", params, seed, fmt, output)


@ic_group.command("e12")
@click.option("--e1", type=float, default=0.5)
@click.option("--e2", type=float, default=0.5)
@output_options
@guarded
def ic_e12(e1, e2, fmt, output):
    execute("ic.e12", {"e1": e1, "e2": e2}, None, fmt, output)


@ic_group.command("multi")
@click.option("--system", type=click.Choice(["ghz", "shared_bit", "independent", "double_pr"]), default="ghz")
@output_options
@guarded
def ic_multi(system, fmt, output):
    execute("ic.multi", {"system": system}, None, fmt, output)


@ic_group.command("eq1")
@click.option("--resource", type=click.Choice(["pr", "isotropic", "correlated", "quantum", "local", "trivial"]),
              default="pr")
@resource_options
@output_options
@guarded
def ic_eq1(resource, e, e1, state, angles, fmt, output):
    params = {"resource": resource, "e": e, "e1": e1, "state": state, "angles": angles}
    execute("ic.eq1", params, None, fmt, output)


@cli.group("cf")
def cf_group():
    """Counterfactual ensembles."""


def sampler_options(command: Callable) -> Callable:
    command = click.option("--samples", type=int, default=None)(command)
    command = click.option("--exact/--sampled", default=True)(command)
    command = click.option("--angles", default=None)(command)
    command = click.option("--state", default=None)(command)
    return command


@cf_group.command("sample")
@sampler_options
@seed_option
@output_options
@guarded
def cf_sample(state, angles, exact, samples, seed, fmt, output):
    params = {"state": state, "angles": angles, "exact": exact, "samples": samples}
    execute("cf.sample", params, seed, fmt, output)


@cf_group.command("cpi")
@click.option("--source", type=click.Choice(["theorem2", "witness"]), default="theorem2")
@click.option("--e", "e", type=float, default=None, help="Isotropic correlator for --source witness.")
@sampler_options
@seed_option
@output_options
@guarded
def cf_cpi(source, e, state, angles, exact, samples, seed, fmt, output):
    params = {"source": source, "e": e, "state": state, "angles": angles, "exact": exact, "samples": samples}
    execute("cf.cpi", params, seed, fmt, output)


@cf_group.command("loop")
@click.option("--pair", type=click.Choice(["identity-negation", "constant", "theorem2"]),
              default="identity-negation")
@output_options
@guarded
def cf_loop(pair, fmt, output):
    execute("cf.loop", {"pair": pair}, None, fmt, output)


@cf_group.command("pr-infeasible")
@click.option("--e", "e", type=float, default=1.0)
@output_options
@guarded
def cf_pr_infeasible(e, fmt, output):
    execute("cf.pr-infeasible", {"e": e}, None, fmt, output)


@cf_group.command("contextuality")
@output_options
@guarded
def cf_contextuality(fmt, output):
    execute("cf.contextuality", {}, None, fmt, output)


@cli.group("prob")
def prob_group():
    """Entropy identities."""


@prob_group.command("lemma1")
@click.option("--instances", type=int, default=None)
@seed_option
@output_options
@guarded
def prob_lemma1(instances, seed, fmt, output):
    execute("prob.lemma1", {"instances": instances}, seed, fmt, output)


@prob_group.command("series")
@click.option("--terms", type=int, default=None)
@click.option("--step", type=float, default=None)
@output_options
@guarded
def prob_series(terms, step, fmt, output):
    execute("prob.series", {"terms": terms, "step": step}, None, fmt, output)


@cli.command("suite")
@click.argument("name", type=click.Choice(sorted(SUITES)))
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True)
@click.option("--set", "assignments", multiple=True, help="Suite parameter as key=value.")
@output_options
@guarded
def suite_command(name, seed, assignments, fmt, output):
    """Run every check of a suite and print one summary table."""
    report = suite(name, seed, parse_assignments(assignments))
    emit(render(report, fmt), output)


@cli.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--set", "assignments", multiple=True, help="Parameter override as key=value.")
@seed_option
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--output", "-o", default=None)
@guarded
def run_command(config_path, assignments, seed, fmt, output):
    """Run the experiment described by a key = value config file; flags win."""
    with open(config_path, encoding="utf-8") as handle:
        data = parse_config_text(handle.read())
    overrides = {"seed": seed, "format": fmt, "output": output, "parameters": parse_assignments(assignments)}
    config = load_config(merge_overrides(data, overrides))
    emit(render(run(config), config.output.format), config.output.path)


@cli.command("list")
def list_command():
    """Registered experiments."""
    for name in sorted(EXPERIMENTS):
        click.echo(f"{name}\t{EXPERIMENTS[name].summary}")


if __name__ == "__main__":
    cli()
