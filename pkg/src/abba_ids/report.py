"""Machine-readable run reports."""

from __future__ import annotations

import json
import time

from . import __version__
from .analysis import TreeSpec, gap_agreement_prob, tally, trial_traces, tree_undetected_prob
from .config import SCHEMA_VERSION, ScenarioConfig, config_echo
from .encoding import AffineInvertible
from .simulation import TamperAt, Trace


def _trace_record(index: int, trace: Trace, full: bool) -> dict:
    v = trace.verdict
    rec = {
        "trial": index,
        "outcome": trace.outcome,
        "detected": v.detected,
        "detection_tick": v.detection_tick,
        "kind": v.kind.value if v.kind is not None else None,
        "attack_tick": trace.attack_tick,
        "divergence_tick": trace.divergence_tick,
        "escape_tick": trace.escape_tick,
        "attacker_cost": trace.attacker_cost,
    }
    if full:
        rec.update(
            source_events=[[e.t, e.x] for e in trace.source_events],
            delivered_events=[[e.t, e.x] for e in trace.delivered_events],
            honest_pulses=list(trace.honest_pulses),
            delivered_pulses=list(trace.delivered_pulses),
        )
    return rec


def analytic_block(cfg: ScenarioConfig) -> dict:
    """Closed-form comparison values, when the scenario admits them.

    Only fixed-gap tampering has an exact per-boundary agreement probability;
    with invertible seed updates the escape branches vanish.
    """
    enc = cfg.encoder
    if not (isinstance(cfg.attack, TamperAt) and cfg.source.fixed_gap is not None
            and enc.g_family == "prf"):
        return {"applicable": False}
    p = gap_agreement_prob(cfg.source.fixed_gap, enc.levels, enc.tick)
    block = {"applicable": True, "gap": cfg.source.fixed_gap, "gap_agreement_prob": p}
    if isinstance(enc.o_family, AffineInvertible):
        depth = cfg.boundary_levels
        tree = tree_undetected_prob(TreeSpec((p,) * depth, (0.0,) * depth))
        block["tree"] = {
            "P": [p] * depth,
            "Q": [0.0] * depth,
            "undetected_by_level": list(tree.undetected_by_level),
            "permanent_escape": tree.permanent_escape,
        }
    return block


def build_report(cfg: ScenarioConfig, defaults_applied: list[str]) -> dict:
    start = time.perf_counter()
    records = []
    traces = []
    for i, _, trace in trial_traces(cfg.encoder, cfg.source, cfg.attack, cfg.trials, cfg.horizon,
                                    cfg.rng_seed, cfg.rekey_per_trial):
        traces.append(trace)
        records.append(_trace_record(i, trace, full=cfg.trials == 1))
    est = tally(traces, cfg.boundary_levels)
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "abba-ids", "version": __version__},
        "config": config_echo(cfg),
        "defaults_applied": sorted(defaults_applied),
        "mode": "single" if cfg.trials == 1 else "monte_carlo",
        "aggregate": est.as_dict(),
        "trials": records,
        "analytic": analytic_block(cfg),
        "wall_time_s": round(time.perf_counter() - start, 6),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
