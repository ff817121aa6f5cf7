"""Embedded property suites run by ``abba-ids selftest``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, encoding
from .encoding import AffineInvertible, EncoderConfig, Event, PrfDerived
from .simulation import DeleteAt, NoAttack, SourceSpec, run_scenario


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def random_config(rng: np.random.Generator, levels=(2, 4, 8), seed_spaces=(16, 1 << 64),
                  prf_share: float = 0.5) -> EncoderConfig:
    S = int(rng.choice(np.array(seed_spaces, dtype=object)))
    N = int(rng.integers(2, 6))
    if rng.random() < prf_share:
        fam = PrfDerived(int.from_bytes(rng.bytes(16), "little"))
    else:
        offsets = rng.choice(min(S - 1, 1 << 20), size=N, replace=False) + 1
        fam = AffineInvertible(tuple(int(a) for a in offsets))
    return EncoderConfig(
        alphabet_size=N,
        tick=int(rng.integers(1, 4)),
        levels=int(rng.choice(levels)),
        seed_space=S,
        o_family=fam,
        g_key=int.from_bytes(rng.bytes(16), "little"),
        s0=int(rng.integers(0, min(S, 1 << 62))),
        t0=int(rng.integers(0, 100)),
    )


def random_events(rng: np.random.Generator, cfg: EncoderConfig, max_events: int, horizon: int
                  ) -> list[Event]:
    span = horizon - cfg.t0 - 1
    k = int(rng.integers(0, min(max_events, span) + 1))
    ticks = sorted(int(t) + cfg.t0 + 1 for t in rng.choice(span, size=k, replace=False))
    return [Event(t, int(rng.integers(cfg.alphabet_size))) for t in ticks]


def suite_equivalence(n: int = 200, seed: int = 1) -> SuiteResult:
    rng = np.random.default_rng(seed)
    passed = 0
    for _ in range(n):
        cfg = random_config(rng)
        horizon = cfg.t0 + int(rng.integers(2, 2000))
        events = random_events(rng, cfg, 50, horizon)
        passed += (encoding.build_codeword(cfg, events, horizon)
                   == encoding.encode_incremental(cfg, events, horizon))
    return SuiteResult("batch/incremental equivalence", passed, n)


def suite_honest(n: int = 300, seed: int = 2) -> SuiteResult:
    rng = np.random.default_rng(seed)
    passed = 0
    for i in range(n):
        cfg = random_config(rng)
        src = SourceSpec.uniform(cfg.alphabet_size, mean_gap=float(rng.integers(1, 40)))
        trace = run_scenario(cfg, src, NoAttack(), cfg.t0 + 400, rng)
        passed += not trace.verdict.detected
    return SuiteResult("honest completeness", passed, n)


def suite_fixed_point(seed: int = 3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    cfgs = [encoding.default_config(),
            encoding.default_config(seed_space=16, o_family=PrfDerived(0xABBA))]
    cfgs += [random_config(rng, seed_spaces=(16, 256)) for _ in range(8)]
    passed = sum(bool(analysis.check_fixed_point_free(c)) for c in cfgs)
    return SuiteResult("fixed-point freeness", passed, len(cfgs))


def suite_deletion(n: int = 200, seed: int = 4) -> SuiteResult:
    """Deleting the last message is caught whenever the streams diverge before the horizon."""
    rng = np.random.default_rng(seed)
    passed = 0
    for _ in range(n):
        cfg = random_config(rng)
        src = SourceSpec.uniform(cfg.alphabet_size, mean_gap=20.0, count=int(rng.integers(1, 10)))
        trace = run_scenario(cfg, src, DeleteAt(-1), cfg.t0 + 1000, rng)
        if trace.divergence_tick is None:
            passed += trace.outcome == "indeterminate"
        else:
            passed += trace.verdict.detected and trace.detection_tick == trace.divergence_tick
    return SuiteResult("deletion soundness", passed, n)


def suite_gap_dp() -> SuiteResult:
    cases = [(G, K) for G in range(9) for K in range(2, 5)]
    passed = sum(analysis.gap_agreement_prob(G, K, exact=True) == analysis.enumerate_gap_agreement(G, K)
                 for G, K in cases)
    return SuiteResult("gap DP vs enumeration", passed, len(cases))


SUITES: list[Callable[[], SuiteResult]] = [
    suite_equivalence,
    suite_honest,
    suite_deletion,
    suite_fixed_point,
    suite_gap_dp,
]


def run_selftest() -> list[SuiteResult]:
    return [suite() for suite in SUITES]
