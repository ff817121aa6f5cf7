"""Causal time-code: interval family, seed updates, batch and incremental encoders.

All times are integer ticks. A codeword is the strictly increasing list of
pulse ticks emitted on the intrusion detection channel for a given sequence
of source events.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence, Union

MAX_KEY = 1 << 128
MAX_SEED_SPACE = 1 << 128

_TAG_G = b"\x01"
_TAG_O = b"\x02"


@lru_cache(maxsize=64)
def _keyed_hasher(key: int):
    return hashlib.blake2b(key=key.to_bytes(16, "little"), digest_size=8)


def prf64(key: int, a: int, b: int, tag: bytes = _TAG_G) -> int:
    """Keyed pseudo-random function to 64-bit integers (BLAKE2b in MAC mode).

    ``a`` and ``b`` must be non-negative and below 2**128.
    """
    h = _keyed_hasher(key).copy()
    h.update(tag + a.to_bytes(16, "little") + b.to_bytes(16, "little"))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class AffineInvertible:
    """Seed update ``s -> (s + offsets[x]) mod S``."""

    offsets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(int(a) for a in self.offsets))

    kind = "affine"


@dataclass(frozen=True)
class PrfDerived:
    """Seed update drawn from a keyed PRF, never returning its input seed."""

    key: int

    kind = "prf"


OFamily = Union[AffineInvertible, PrfDerived]

G_FAMILIES = ("prf", "modular")


@dataclass(frozen=True)
class EncoderConfig:
    """Public protocol parameters shared by Alice and Bob.

    ``g_family="modular"`` selects the maximally correlated fixture
    ``g(s, n) = tick * (((s + n) mod levels) + 1)``; it exists for testing
    the correlation checker and is not a secure choice.
    """

    alphabet_size: int
    tick: int
    levels: int
    seed_space: int
    o_family: OFamily
    g_key: int
    s0: int = 0
    t0: int = 0
    g_family: str = "prf"

    def __post_init__(self):
        _validate_config(self)

    @classmethod
    def unchecked(cls, **fields) -> "EncoderConfig":
        """Build a config without validation (negative controls only)."""
        defaults = {f.name: f.default for f in dataclasses.fields(cls)
                    if f.default is not dataclasses.MISSING}
        defaults.update(fields)
        obj = object.__new__(cls)
        for f in dataclasses.fields(cls):
            object.__setattr__(obj, f.name, defaults[f.name])
        return obj

    def replace(self, **changes) -> "EncoderConfig":
        return dataclasses.replace(self, **changes)


def _validate_config(cfg: EncoderConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise ValueError(msg)

    for name in ("alphabet_size", "tick", "levels", "seed_space", "g_key", "s0", "t0"):
        need(isinstance(getattr(cfg, name), int) and not isinstance(getattr(cfg, name), bool),
             f"{name} must be an integer (got {getattr(cfg, name)!r})")
    need(cfg.alphabet_size >= 1, f"alphabet_size must be >= 1 (got {cfg.alphabet_size})")
    need(cfg.tick >= 1, f"tick must be >= 1 (got {cfg.tick})")
    need(cfg.levels >= 2,
         f"levels must be >= 2 (got {cfg.levels}); a single level makes every "
         "interval stream identical")
    need(2 <= cfg.seed_space <= MAX_SEED_SPACE,
         f"seed_space must be in [2, 2**128] (got {cfg.seed_space})")
    need(0 <= cfg.s0 < cfg.seed_space, f"s0 must be in [0, seed_space) (got {cfg.s0})")
    need(0 <= cfg.g_key < MAX_KEY, "g_key must be a 128-bit non-negative integer")
    need(cfg.g_family in G_FAMILIES, f"g_family must be one of {G_FAMILIES} (got {cfg.g_family!r})")

    fam = cfg.o_family
    if isinstance(fam, AffineInvertible):
        need(cfg.alphabet_size <= cfg.seed_space - 1,
             "alphabet_size must be <= seed_space - 1 for affine offsets")
        need(len(fam.offsets) == cfg.alphabet_size,
             f"affine offsets must have one entry per symbol "
             f"(got {len(fam.offsets)}, alphabet_size={cfg.alphabet_size})")
        for x, a in enumerate(fam.offsets):
            need(1 <= a <= cfg.seed_space - 1,
                 f"affine offset for symbol {x} must be in [1, seed_space - 1] (got {a})")
        need(len(set(fam.offsets)) == len(fam.offsets), "affine offsets must be pairwise distinct")
    elif isinstance(fam, PrfDerived):
        need(isinstance(fam.key, int) and 0 <= fam.key < MAX_KEY,
             "prf o_family key must be a 128-bit non-negative integer")
    else:
        raise ValueError(f"unknown o_family {fam!r}")


@dataclass(frozen=True, order=True)
class Event:
    """A source message ``x`` emitted at tick ``t``."""

    t: int
    x: int


@dataclass(frozen=True)
class Codeword:
    pulses: tuple[int, ...]

    def __iter__(self):
        return iter(self.pulses)

    def __len__(self):
        return len(self.pulses)

    def __getitem__(self, i):
        return self.pulses[i]


@dataclass(frozen=True)
class EncoderState:
    s: int
    count: int
    epoch_start: int
    next_pulse: int


def g_interval(cfg: EncoderConfig, s: int, n: int) -> int:
    """Duration in ticks of the ``n``-th interval of the stream seeded by ``s``.

    Always one of ``tick, 2*tick, ..., levels*tick``.
    """
    if cfg.g_family == "modular":
        return cfg.tick * ((s + n) % cfg.levels + 1)
    return cfg.tick * (1 + prf64(cfg.g_key, s, n) % cfg.levels)


def seed_update(cfg: EncoderConfig, s: int, x: int) -> int:
    fam = cfg.o_family
    S = cfg.seed_space
    if isinstance(fam, AffineInvertible):
        return (s + fam.offsets[x]) % S
    # uniform over the S - 1 seeds other than s: fixed-point free without bias
    r = prf64(fam.key, x, s, _TAG_O) % (S - 1)
    return r + 1 if r >= s else r


def _check_events(cfg: EncoderConfig, events: Sequence[Event]) -> None:
    prev = cfg.t0
    for ev in events:
        if ev.t <= prev:
            if prev == cfg.t0 and ev is events[0]:
                raise ValueError(f"event at tick {ev.t} is not after t0={cfg.t0}")
            raise ValueError(f"event ticks must strictly increase ({ev.t} after {prev})")
        if not 0 <= ev.x < cfg.alphabet_size:
            raise ValueError(f"symbol {ev.x} outside alphabet of size {cfg.alphabet_size}")
        prev = ev.t


def iter_pulses(cfg: EncoderConfig, events: Sequence[Event]) -> Iterator[int]:
    """Yield the (infinite) pulse stream for ``events``.

    Epoch ``k`` starts at the ``k``-th event (epoch 0 at ``t0`` with ``s0``);
    its ``n``-th pulse sits at ``start + g(s,0) + ... + g(s,n)`` and is kept
    only while strictly before the next event.
    """
    _check_events(cfg, events)
    s = cfg.s0
    start = cfg.t0
    for ev in events:
        n = 0
        tau = start + g_interval(cfg, s, 0)
        while tau < ev.t:
            yield tau
            n += 1
            tau += g_interval(cfg, s, n)
        s = seed_update(cfg, s, ev.x)
        start = ev.t
    n = 0
    tau = start + g_interval(cfg, s, 0)
    while True:
        yield tau
        n += 1
        tau += g_interval(cfg, s, n)


def build_codeword(cfg: EncoderConfig, events: Sequence[Event], horizon: int) -> Codeword:
    """All pulses strictly before ``horizon``."""
    if horizon <= cfg.t0:
        raise ValueError(f"horizon {horizon} must be after t0={cfg.t0}")
    if events and events[-1].t >= horizon:
        raise ValueError(f"event at tick {events[-1].t} is not before horizon {horizon}")
    out = []
    for tau in iter_pulses(cfg, events):
        if tau >= horizon:
            break
        out.append(tau)
    return Codeword(tuple(out))


def seed_sequence(cfg: EncoderConfig, events: Iterable[Event]) -> list[int]:
    """Seeds ``s0, s1, ..., sp`` visited while encoding ``events``."""
    seeds = [cfg.s0]
    for ev in events:
        seeds.append(seed_update(cfg, seeds[-1], ev.x))
    return seeds


def encoder_open(cfg: EncoderConfig) -> EncoderState:
    _validate_config(cfg)
    return EncoderState(cfg.s0, 0, cfg.t0, cfg.t0 + g_interval(cfg, cfg.s0, 0))


def encoder_on_message(state: EncoderState, cfg: EncoderConfig, ev: Event) -> EncoderState:
    """Reseed on a new message; any pending pulse of the old epoch is dropped."""
    if ev.t <= state.epoch_start:
        raise ValueError(f"message at tick {ev.t} not after epoch start {state.epoch_start}")
    if ev.t > state.next_pulse:
        raise ValueError(f"pulse due at {state.next_pulse} was not emitted before message at {ev.t}")
    s = seed_update(cfg, state.s, ev.x)
    return EncoderState(s, 0, ev.t, ev.t + g_interval(cfg, s, 0))


def encoder_on_tick(state: EncoderState, cfg: EncoderConfig, now: int
                    ) -> tuple[EncoderState, Optional[int]]:
    if now != state.next_pulse:
        return state, None
    count = state.count + 1
    nxt = state.next_pulse + g_interval(cfg, state.s, count)
    return EncoderState(state.s, count, state.epoch_start, nxt), now


def encode_incremental(cfg: EncoderConfig, events: Sequence[Event], horizon: int) -> Codeword:
    """Drive the interrupt-style encoder over ``events`` until ``horizon``.

    A message arriving on the tick a pulse is due pre-empts that pulse.
    """
    state = encoder_open(cfg)
    out = []
    i = 0
    n = len(events)
    while True:
        boundary = events[i].t if i < n else horizon
        if state.next_pulse < boundary:
            state, p = encoder_on_tick(state, cfg, state.next_pulse)
            out.append(p)
        elif i < n:
            state = encoder_on_message(state, cfg, events[i])
            i += 1
        else:
            return Codeword(tuple(out))


def default_config(**overrides) -> EncoderConfig:
    params = dict(
        alphabet_size=4,
        tick=1,
        levels=4,
        seed_space=1 << 16,
        o_family=AffineInvertible((1, 3, 5, 7)),
        g_key=0x0F1E2D3C4B5A69788796A5B4C3D2E1F0,
        s0=0,
        t0=0,
        g_family="prf",
    )
    params.update(overrides)
    return EncoderConfig(**params)
