"""Command-line front end: ``run``, ``analyze`` and ``selftest``."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__, analysis
from .config import SCHEMA_VERSION, ConfigError, encoder_echo, load_config
from .encoding import default_config
from .report import build_report, dumps

EXIT_CONFIG = 2
EXIT_SELFTEST = 3


def _fail_config(exc: Exception):
    click.echo(f"config error: {exc}", err=True)
    sys.exit(EXIT_CONFIG)


def _emit(report: dict, out, as_json: bool, summary: str) -> None:
    text = dumps(report)
    if out:
        Path(out).write_text(text)
    if as_json:
        click.echo(text, nl=False)
    elif not out or summary:
        click.echo(summary)


def _floats(text: str, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}", param_hint=name)


@click.group()
@click.version_option(__version__, prog_name="abba-ids")
def main():
    """Time-code intrusion detection: simulation and analysis."""


@main.command()
@click.argument("config_file", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override rng_seed.")
@click.option("--trials", type=int, default=None, help="Override trials.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report path.")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
def run(config_file, seed, trials, out, as_json):
    """Run the scenario described by CONFIG_FILE."""
    try:
        cfg, defaults = load_config(config_file)
        if seed is not None:
            cfg = replace(cfg, rng_seed=seed)
        if trials is not None:
            if trials < 1:
                raise ConfigError("trials", f"must be >= 1 (got {trials})")
            cfg = replace(cfg, trials=trials)
    except ConfigError as exc:
        _fail_config(exc)
    report = build_report(cfg, defaults)
    agg = report["aggregate"]
    summary = (f"{agg['trials']} trial(s): detected={agg['detected']} escaped={agg['escaped']} "
               f"indeterminate={agg['indeterminate']} clean={agg['clean']}")
    _emit(report, out or cfg.output_path, as_json, summary)


@main.group()
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report path.")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
@click.pass_context
def analyze(ctx, out, as_json):
    """Analytic checks and probability computations."""
    ctx.obj = {"out": out, "json": as_json}


def _analysis_report(kind: str, params: dict, result: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "abba-ids", "version": __version__},
        "analysis": kind,
        "params": params,
        "result": result,
    }


def _encoder_from(config_file):
    if config_file is None:
        return default_config()
    try:
        return load_config(config_file)[0].encoder
    except ConfigError as exc:
        _fail_config(exc)


@analyze.command("gap-prob")
@click.option("--gap", "G", type=int, required=True, help="Gap length in ticks.")
@click.option("--levels", "K", type=int, required=True, help="Number of interval levels.")
@click.option("--tick", type=int, default=1, show_default=True)
@click.pass_obj
def gap_prob(obj, G, K, tick):
    """Probability two independent pulse trains agree across a gap."""
    try:
        p = analysis.gap_agreement_prob(G, K, tick)
    except ValueError as exc:
        _fail_config(exc)
    report = _analysis_report("gap-prob", {"gap": G, "levels": K, "tick": tick},
                              {"probability": p})
    _emit(report, obj["out"], obj["json"], f"A({G}; K={K}) = {p!r}")


@analyze.command()
@click.option("--p", "p_text", required=True, help="Comma-separated P_0..P_{D-1}.")
@click.option("--q", "q_text", required=True, help="Comma-separated Q_1..Q_D.")
@click.pass_obj
def tree(obj, p_text, q_text):
    """Evaluate the detection probability tree."""
    try:
        spec = analysis.TreeSpec(_floats(p_text, "--p"), _floats(q_text, "--q"))
    except ValueError as exc:
        _fail_config(exc)
    res = analysis.tree_undetected_prob(spec)
    report = _analysis_report("tree", {"P": list(spec.P), "Q": list(spec.Q)},
                              {"undetected_by_level": list(res.undetected_by_level),
                               "permanent_escape": res.permanent_escape})
    _emit(report, obj["out"], obj["json"],
          f"undetected_by_level={list(res.undetected_by_level)} escape={res.permanent_escape!r}")


@analyze.command()
@click.option("--config", "config_file", type=click.Path(dir_okay=False), default=None)
@click.option("--pairs", type=int, default=100, show_default=True)
@click.option("--n-max", type=int, default=64, show_default=True)
@click.option("--p-max", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--family", type=click.Choice(["prf", "modular"]), default=None,
              help="Override the interval family.")
@click.pass_obj
def correlation(obj, config_file, pairs, n_max, p_max, seed, family):
    """Search for shift-matches between interval streams of distinct seeds."""
    enc = _encoder_from(config_file)
    if family is not None:
        enc = enc.replace(g_family=family)
    rng = np.random.default_rng(seed)
    hi = min(enc.seed_space, 1 << 62)
    seed_pairs = []
    while len(seed_pairs) < pairs:
        a, b = (int(v) for v in rng.integers(0, hi, size=2))
        if a != b:
            seed_pairs.append((a, b))
    try:
        rep = analysis.check_non_maximal_correlation(enc, seed_pairs, n_max, p_max)
    except ValueError as exc:
        _fail_config(exc)
    report = _analysis_report(
        "correlation",
        {"encoder": encoder_echo(enc), "pairs": pairs, "n_max": n_max, "p_max": p_max, "seed": seed},
        {"family_id": rep.family_id, "pairs_tested": rep.pairs_tested,
         "violations": [list(v) for v in rep.violations]})
    _emit(report, obj["out"], obj["json"],
          f"{rep.family_id}: {len(rep.violations)} violating pair(s) of {rep.pairs_tested}")


@analyze.command("fixed-point")
@click.option("--config", "config_file", type=click.Path(dir_okay=False), default=None)
@click.option("--samples", type=int, default=None, help="Sample instead of exhausting.")
@click.pass_obj
def fixed_point(obj, config_file, samples):
    """Check that no seed update has a fixed point."""
    enc = _encoder_from(config_file)
    res = analysis.check_fixed_point_free(enc, samples)
    report = _analysis_report(
        "fixed-point", {"encoder": encoder_echo(enc), "samples": samples},
        {"fixed_point_free": res.free, "witness": list(res.witness) if res.witness else None,
         "exhaustive": res.exhaustive, "checked": res.checked})
    _emit(report, obj["out"], obj["json"],
          f"fixed_point_free={res.free}" + (f" witness={res.witness}" if res.witness else ""))


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Print results as JSON.")
def selftest(as_json):
    """Run the embedded property suites."""
    from .selftest import run_selftest

    results = run_selftest()
    if as_json:
        click.echo(json.dumps([{"suite": r.name, "passed": r.passed, "total": r.total, "ok": r.ok}
                               for r in results], indent=2))
    else:
        for r in results:
            click.echo(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.passed}/{r.total}")
    if not all(r.ok for r in results):
        sys.exit(EXIT_SELFTEST)


if __name__ == "__main__":
    main()
