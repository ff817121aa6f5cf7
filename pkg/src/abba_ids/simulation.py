"""Discrete-event harness: stochastic source, two channels, and attacker strategies.

The adversary may rewrite the payload channel freely but can only *add*
pulses to the intrusion detection channel; honest pulses always arrive, on
time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .encoding import EncoderConfig, Event, build_codeword, seed_update
from .verifier import Verdict, verdict, verify_streams


@dataclass(frozen=True)
class SourceSpec:
    """Message source: i.i.d. symbols, geometric (or fixed) gaps between messages.

    ``count`` and ``horizon`` bound the generated sequence; a scenario run
    always clips the source to its own horizon.
    """

    symbol_dist: tuple[float, ...]
    mean_gap: float = 10.0
    count: Optional[int] = None
    horizon: Optional[int] = None
    fixed_gap: Optional[int] = None

    def __post_init__(self):
        dist = tuple(float(p) for p in self.symbol_dist)
        object.__setattr__(self, "symbol_dist", dist)
        if not dist or any(p < 0 or not math.isfinite(p) for p in dist):
            raise ValueError("symbol_dist must be a non-empty vector of non-negative probabilities")
        if abs(math.fsum(dist) - 1.0) > 1e-12:
            raise ValueError(f"symbol_dist must sum to 1 (sums to {math.fsum(dist)!r})")
        if self.fixed_gap is None and not self.mean_gap >= 1:
            raise ValueError(f"mean_gap must be >= 1 (got {self.mean_gap})")
        if self.fixed_gap is not None and self.fixed_gap < 1:
            raise ValueError(f"fixed_gap must be >= 1 (got {self.fixed_gap})")
        if self.count is not None and self.count < 0:
            raise ValueError(f"count must be >= 0 (got {self.count})")

    @classmethod
    def uniform(cls, n_symbols: int, **kw) -> "SourceSpec":
        return cls(tuple([1.0 / n_symbols] * n_symbols), **kw)


@dataclass(frozen=True)
class NoAttack:
    kind = "none"


@dataclass(frozen=True)
class TamperAt:
    """Replace the symbol of the ``index``-th message; ``symbol=None`` picks a different one at random."""

    index: int
    symbol: Optional[int] = None
    kind = "tamper"


@dataclass(frozen=True)
class DeleteAt:
    index: int
    kind = "delete"


@dataclass(frozen=True)
class InjectAt:
    """Inject message ``symbol`` at ``tick``.

    ``pulse_strategy`` is ``"none"`` (payload only) or ``"self_consistent"``:
    the attacker forks the public encoder and adds the fork's pulses from
    ``tick`` onward.
    """

    tick: int
    symbol: int
    pulse_strategy: str = "none"
    kind = "inject"

    def __post_init__(self):
        if self.pulse_strategy not in ("none", "self_consistent"):
            raise ValueError(f"unknown pulse_strategy {self.pulse_strategy!r}")


@dataclass(frozen=True)
class AdaptiveInject:
    """Self-consistent injection whose forged pulses stop after ``persist_ticks``."""

    tick: int
    symbol: Optional[int] = None
    persist_ticks: int = 0
    kind = "adaptive_inject"

    def __post_init__(self):
        if self.persist_ticks < 0:
            raise ValueError(f"persist_ticks must be >= 0 (got {self.persist_ticks})")


AttackSpec = Union[NoAttack, TamperAt, DeleteAt, InjectAt, AdaptiveInject]

OUTCOMES = ("clean", "detected", "escaped", "indeterminate")


@dataclass(frozen=True)
class Trace:
    """Full record of one scenario run.

    ``outcome`` is ``clean`` when the attacker changed nothing, ``escaped`` when
    the tampered and honest encoder states reconverged before any observable
    difference (undetectable forever), and ``indeterminate`` when the run hit
    the horizon before the streams diverged.
    """

    source_events: tuple[Event, ...]
    delivered_events: tuple[Event, ...]
    honest_pulses: tuple[int, ...]
    delivered_pulses: tuple[int, ...]
    verdict: Verdict
    attack_tick: Optional[int]
    horizon: int
    divergence_tick: Optional[int] = None
    escape_tick: Optional[int] = None
    outcome: str = "clean"
    attacker_cost: int = 0

    def __post_init__(self):
        check_pulse_assumptions(self.honest_pulses, self.delivered_pulses)
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def detection_tick(self) -> Optional[int]:
        return self.verdict.detection_tick


def check_pulse_assumptions(honest: Sequence[int], delivered: Sequence[int]) -> None:
    """Every honest pulse must reach the receiver, at its original tick."""
    missing = set(honest).difference(delivered)
    if missing:
        raise ValueError(f"honest pulses cannot be removed or shifted (lost {sorted(missing)[:5]})")
    if list(delivered) != sorted(set(delivered)):
        raise ValueError("delivered pulses must be strictly increasing")


def _rng(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def generate_source(spec: SourceSpec, rng_seed, t0: int = 0) -> list[Event]:
    """Draw a message sequence; ticks strictly increase from ``t0``."""
    if spec.count is None and spec.horizon is None:
        raise ValueError("unbounded source: give a message count or a horizon")
    rng = _rng(rng_seed)
    limit = spec.count if spec.count is not None else math.inf
    cdf = np.cumsum(spec.symbol_dist)
    cdf[-1] = 1.0
    events = []
    t = t0
    p = 1.0 / spec.mean_gap
    while len(events) < limit:
        t += spec.fixed_gap if spec.fixed_gap is not None else int(rng.geometric(p))
        if spec.horizon is not None and t >= spec.horizon:
            break
        x = int(np.searchsorted(cdf, rng.random(), side="right"))
        events.append(Event(t, min(x, len(cdf) - 1)))
    return events


def _index(events: Sequence[Event], index: int) -> int:
    if not -len(events) <= index < len(events):
        raise IndexError(f"attack index {index} outside sequence of {len(events)} messages")
    return index % len(events)


def _merge_pulses(honest: Sequence[int], extra) -> tuple[int, ...]:
    return tuple(sorted(set(honest).union(extra)))


def _inject(events: Sequence[Event], tick: int, symbol: int) -> list[Event]:
    # one message per tick on the payload channel: injecting onto an occupied tick overwrites it
    out = [ev for ev in events if ev.t != tick]
    out.append(Event(tick, symbol))
    out.sort()
    return out


def apply_attack(events: Sequence[Event], honest_pulses: Sequence[int], attack: AttackSpec,
                 cfg: EncoderConfig, rng_seed=None, horizon: Optional[int] = None
                 ) -> tuple[list[Event], tuple[int, ...], Optional[int]]:
    """Return ``(delivered_events, delivered_pulses, attack_tick)``.

    ``horizon`` bounds the pulses a self-consistent attacker forges; it
    defaults to one tick past the last honest pulse or message.
    """
    events = list(events)
    honest = tuple(honest_pulses)
    if horizon is None:
        horizon = max([cfg.t0] + [e.t for e in events] + list(honest)) + 1

    if isinstance(attack, NoAttack):
        return events, honest, None

    if isinstance(attack, TamperAt):
        d = _index(events, attack.index)
        old = events[d]
        x = attack.symbol
        if x is None:
            if cfg.alphabet_size < 2:
                raise ValueError("random tampering needs at least two symbols")
            x = int(_rng(rng_seed).integers(cfg.alphabet_size - 1))
            x = x + 1 if x >= old.x else x
        if not 0 <= x < cfg.alphabet_size:
            raise ValueError(f"tamper symbol {x} outside alphabet")
        events[d] = Event(old.t, x)
        return events, honest, old.t

    if isinstance(attack, DeleteAt):
        d = _index(events, attack.index)
        old = events.pop(d)
        return events, honest, old.t

    if isinstance(attack, (InjectAt, AdaptiveInject)):
        if not cfg.t0 < attack.tick < horizon:
            raise ValueError(f"injection tick {attack.tick} outside (t0, horizon)")
        x = attack.symbol
        if x is None:
            x = int(_rng(rng_seed).integers(cfg.alphabet_size))
        if not 0 <= x < cfg.alphabet_size:
            raise ValueError(f"injected symbol {x} outside alphabet")
        delivered = _inject(events, attack.tick, x)
        if isinstance(attack, InjectAt) and attack.pulse_strategy == "none":
            return delivered, honest, attack.tick
        stop = horizon
        if isinstance(attack, AdaptiveInject):
            stop = min(horizon, attack.tick + attack.persist_ticks)
        fork = [p for p in build_codeword(cfg, delivered, horizon) if attack.tick <= p < stop]
        return delivered, _merge_pulses(honest, fork), attack.tick

    raise TypeError(f"unknown attack {attack!r}")


def _state_at(cfg: EncoderConfig, events: Sequence[Event]) -> dict[int, tuple[int, int]]:
    """Map each message tick to the encoder ``(seed, epoch_start)`` right after it."""
    out = {}
    s = cfg.s0
    for ev in events:
        s = seed_update(cfg, s, ev.x)
        out[ev.t] = (s, ev.t)
    return out


def reconvergence_tick(cfg: EncoderConfig, honest: Sequence[Event], delivered: Sequence[Event],
                       after: int) -> Optional[int]:
    """First message tick >= ``after`` where both encoders are in the same state and
    all later messages coincide, so the two pulse streams agree from then on."""
    ticks = sorted({e.t for e in honest} | {e.t for e in delivered})
    hs, ds = _state_at(cfg, honest), _state_at(cfg, delivered)
    hset, dset = set(honest), set(delivered)
    h_cur = d_cur = (cfg.s0, cfg.t0)
    candidates = []
    for t in ticks:
        h_cur = hs.get(t, h_cur)
        d_cur = ds.get(t, d_cur)
        if t >= after and h_cur == d_cur:
            candidates.append(t)
    for t in candidates:
        if {e for e in hset if e.t > t} == {e for e in dset if e.t > t}:
            return t
    return None


def first_difference(a: Sequence[int], b: Sequence[int]) -> Optional[int]:
    diff = set(a).symmetric_difference(b)
    return min(diff) if diff else None


def run_scenario(cfg: EncoderConfig, source_spec: SourceSpec, attack: AttackSpec, horizon: int,
                 rng_seed=None, events: Optional[Sequence[Event]] = None) -> Trace:
    """Generate, encode, attack, deliver and verify one run.

    ``events`` overrides the generated source (used for replays).
    """
    rng = _rng(rng_seed)
    src_rng, atk_rng = rng.spawn(2)
    if events is None:
        spec = source_spec
        if spec.horizon is None or spec.horizon > horizon:
            spec = _with_horizon(spec, horizon)
        events = generate_source(spec, src_rng, cfg.t0)
    events = tuple(events)
    honest = build_codeword(cfg, events, horizon).pulses
    delivered_events, delivered_pulses, attack_tick = apply_attack(
        events, honest, attack, cfg, atk_rng, horizon)
    delivered_events = tuple(delivered_events)
    state = verify_streams(cfg, delivered_events, delivered_pulses, horizon)
    v = verdict(state)
    cost = len(set(delivered_pulses).difference(honest))

    if delivered_events == events and delivered_pulses == honest:
        return Trace(events, delivered_events, honest, delivered_pulses, v, attack_tick, horizon,
                     outcome="clean", attacker_cost=cost)

    expected = build_codeword(cfg, delivered_events, horizon).pulses
    divergence = first_difference(expected, delivered_pulses)
    escape = reconvergence_tick(cfg, events, delivered_events, attack_tick)
    if v.detected:
        outcome = "detected"
    elif escape is not None:
        outcome = "escaped"
    else:
        outcome = "indeterminate"
    return Trace(events, delivered_events, honest, delivered_pulses, v, attack_tick, horizon,
                 divergence_tick=divergence, escape_tick=escape, outcome=outcome,
                 attacker_cost=cost)


def _with_horizon(spec: SourceSpec, horizon: int) -> SourceSpec:
    return SourceSpec(spec.symbol_dist, spec.mean_gap, spec.count, horizon, spec.fixed_gap)


def trap_experiment(cfg: EncoderConfig, t_inject: int, persist_ticks: int,
                    source_spec: SourceSpec, rng_seed=None, horizon: Optional[int] = None,
                    symbol: Optional[int] = None) -> Trace:
    """Inject one message, forge consistent pulses for ``persist_ticks``, then stop.

    ``Trace.attacker_cost`` counts the pulses the attacker had to forge.
    """
    if persist_ticks < 0:
        raise ValueError(f"persist_ticks must be >= 0 (got {persist_ticks})")
    if horizon is None:
        horizon = source_spec.horizon
    if horizon is None:
        raise ValueError("trap_experiment needs a horizon")
    attack = AdaptiveInject(t_inject, symbol, persist_ticks)
    return run_scenario(cfg, source_spec, attack, horizon, rng_seed)


def observable_divergence(cfg: EncoderConfig, trace: Trace, compensated_until: int) -> Optional[int]:
    """First tick where the honest stream and the attacker's fork differ in a way the
    attacker does not cover: an honest pulse absent from the fork, or a fork
    pulse absent from the honest stream at or after ``compensated_until``."""
    fork = set(build_codeword(cfg, trace.delivered_events, trace.horizon).pulses)
    honest = set(trace.honest_pulses)
    lo = trace.attack_tick if trace.attack_tick is not None else cfg.t0
    exposed = [p for p in honest - fork if p >= lo]
    exposed += [p for p in fork - honest if p >= compensated_until]
    return min(exposed) if exposed else None
