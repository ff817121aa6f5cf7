"""Receiver side of the protocol: mirror the encoder and compare pulse streams."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

from .encoding import (
    EncoderConfig,
    EncoderState,
    Event,
    encoder_on_message,
    encoder_on_tick,
    encoder_open,
)


class Status(str, Enum):
    CONSISTENT = "consistent"
    ANOMALY = "anomaly"


class MismatchKind(str, Enum):
    MISSING_PULSE = "missing_pulse"
    UNEXPECTED_PULSE = "unexpected_pulse"


@dataclass(frozen=True)
class Verdict:
    detected: bool
    detection_tick: Optional[int] = None
    kind: Optional[MismatchKind] = None


@dataclass(frozen=True)
class VerifierState:
    mirror: EncoderState
    status: Status = Status.CONSISTENT
    anomaly_tick: Optional[int] = None
    anomaly_kind: Optional[MismatchKind] = None
    clock: int = 0
    last_pulse: Optional[int] = None


def _flag(state: VerifierState, tick: int, kind: MismatchKind) -> VerifierState:
    if state.status is Status.ANOMALY:
        return state
    return replace(state, status=Status.ANOMALY, anomaly_tick=tick, anomaly_kind=kind)


def _catch_up(state: VerifierState, cfg: EncoderConfig, now: int) -> VerifierState:
    """Retire every expected pulse strictly before ``now``; the first one is missing."""
    mirror = state.mirror
    if mirror.next_pulse >= now:
        return state
    missed = mirror.next_pulse
    while mirror.next_pulse < now:
        mirror, _ = encoder_on_tick(mirror, cfg, mirror.next_pulse)
    state = replace(state, mirror=mirror)
    return _flag(state, missed, MismatchKind.MISSING_PULSE)


def _check_order(state: VerifierState, tick: int) -> None:
    if tick < state.clock:
        raise ValueError(f"input at tick {tick} delivered after tick {state.clock}")


def verifier_open(cfg: EncoderConfig) -> VerifierState:
    mirror = encoder_open(cfg)
    return VerifierState(mirror=mirror, clock=cfg.t0)


def verifier_on_message(state: VerifierState, cfg: EncoderConfig, ev: Event) -> VerifierState:
    _check_order(state, ev.t)
    if ev.t <= state.mirror.epoch_start:
        raise ValueError(f"message at tick {ev.t} not after previous message at "
                         f"{state.mirror.epoch_start}")
    state = _catch_up(state, cfg, ev.t)
    # honest pulses never share a tick with a message
    if state.last_pulse == ev.t:
        state = _flag(state, ev.t, MismatchKind.UNEXPECTED_PULSE)
    mirror = encoder_on_message(state.mirror, cfg, ev)
    return VerifierState(mirror, state.status, state.anomaly_tick, state.anomaly_kind,
                         ev.t, state.last_pulse)


def verifier_on_pulse(state: VerifierState, cfg: EncoderConfig, tick: int) -> VerifierState:
    _check_order(state, tick)
    state = _catch_up(state, cfg, tick)
    mirror = state.mirror
    if tick == mirror.next_pulse:
        mirror, _ = encoder_on_tick(mirror, cfg, tick)
    else:
        state = _flag(state, tick, MismatchKind.UNEXPECTED_PULSE)
    return VerifierState(mirror, state.status, state.anomaly_tick, state.anomaly_kind,
                         tick, tick)


def verifier_advance(state: VerifierState, cfg: EncoderConfig, now: int) -> VerifierState:
    """Let time pass to ``now``: pulses expected strictly before it are overdue."""
    _check_order(state, now)
    state = _catch_up(state, cfg, now)
    return replace(state, clock=now)


def verdict(state: VerifierState) -> Verdict:
    if state.status is Status.ANOMALY:
        return Verdict(True, state.anomaly_tick, state.anomaly_kind)
    return Verdict(False)


def verify_streams(cfg: EncoderConfig, events: Sequence[Event], pulses: Sequence[int],
                   horizon: int) -> VerifierState:
    """Feed messages and pulses in tick order (pulse first on ties), then flush at ``horizon``."""
    state = verifier_open(cfg)
    i = j = 0
    ne, npl = len(events), len(pulses)
    while i < ne or j < npl:
        if j < npl and (i >= ne or pulses[j] <= events[i].t):
            state = verifier_on_pulse(state, cfg, pulses[j])
            j += 1
        else:
            state = verifier_on_message(state, cfg, events[i])
            i += 1
    return verifier_advance(state, cfg, horizon)
