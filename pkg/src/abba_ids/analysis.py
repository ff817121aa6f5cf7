"""Property checkers, detection-probability computations and Monte Carlo estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Union

import numpy as np

from . import encoding
from .encoding import EncoderConfig, PrfDerived, g_interval
from .simulation import AttackSpec, SourceSpec, run_scenario

# ---------------------------------------------------------------------------
# structural properties of the code families


@dataclass(frozen=True)
class FixedPointResult:
    free: bool
    witness: Optional[tuple[int, int]] = None
    exhaustive: bool = True
    checked: int = 0

    def __bool__(self):
        return self.free


def check_fixed_point_free(cfg: EncoderConfig, samples: Optional[int] = None,
                           rng_seed=0) -> FixedPointResult:
    """Look for ``(s, x)`` with ``seed_update(s, x) == s``.

    Exhaustive when ``seed_space <= 2**20`` and ``samples`` is not given,
    otherwise ``samples`` random seeds per symbol (default 10_000).
    """
    S = cfg.seed_space
    exhaustive = samples is None and S <= 1 << 20
    if exhaustive:
        seeds: Iterable[int] = range(S)
    else:
        n = samples or 10_000
        rng = np.random.default_rng(rng_seed)
        seeds = [int(rng.integers(0, S)) if S < 1 << 63 else
                 int.from_bytes(rng.bytes(16), "little") % S for _ in range(n)]
    checked = 0
    for s in seeds:
        for x in range(cfg.alphabet_size):
            checked += 1
            if encoding.seed_update(cfg, s, x) == s:
                return FixedPointResult(False, (s, x), exhaustive, checked)
    return FixedPointResult(True, None, exhaustive, checked)


def check_symbol_injective(cfg: EncoderConfig, seeds: Iterable[int]) -> Optional[tuple[int, int, int]]:
    """Return ``(s, x, x')`` with ``x != x'`` mapping ``s`` to the same seed, or None."""
    for s in seeds:
        seen = {}
        for x in range(cfg.alphabet_size):
            nxt = encoding.seed_update(cfg, s, x)
            if nxt in seen:
                return (s, seen[nxt], x)
            seen[nxt] = x
    return None


@dataclass(frozen=True)
class CorrelationReport:
    """Shift-matches found between interval streams of distinct seeds.

    A clean report only says no match was found up to ``n_max`` terms and
    ``max_shift_checked`` shifts.
    """

    family_id: str
    pairs_tested: int
    max_shift_checked: int
    n_max: int
    violations: tuple[tuple[int, int, int], ...] = ()
    skipped_equal: int = 0


def check_non_maximal_correlation(cfg: EncoderConfig, seed_pairs: Iterable[tuple[int, int]],
                                  n_max: int, P_max: int) -> CorrelationReport:
    """For each pair, find the smallest shift ``P <= P_max`` with
    ``g(s_a, n) == g(s_b, n + P)`` for ``n = 1..n_max``."""
    if n_max < 1 or P_max < 0:
        raise ValueError("need n_max >= 1 and P_max >= 0")
    violations = []
    tested = skipped = 0
    for s_a, s_b in seed_pairs:
        if s_a == s_b:
            skipped += 1
            continue
        tested += 1
        a = [g_interval(cfg, s_a, n) for n in range(1, n_max + 1)]
        b = [g_interval(cfg, s_b, n) for n in range(1, n_max + P_max + 1)]
        for P in range(P_max + 1):
            if b[P:P + n_max] == a:
                violations.append((s_a, s_b, P))
                break
    family_id = f"{cfg.g_family}(levels={cfg.levels}, tick={cfg.tick})"
    return CorrelationReport(family_id, tested, P_max, n_max, tuple(violations), skipped)


def aligned_restart_tick(cfg: EncoderConfig, s: int, s_prime: int, t_prime: int, M: int) -> int:
    """Restart tick at which a stream seeded ``s`` reproduces, from its first pulse, the
    stream seeded ``s_prime`` started at ``t_prime`` from that stream's ``M``-th pulse on.

    Only meaningful when ``g(s, n) == g(s_prime, n + M)`` for all ``n >= 1``.
    """
    return t_prime + sum(g_interval(cfg, s_prime, k) for k in range(M + 1)) - g_interval(cfg, s, 0)


# ---------------------------------------------------------------------------
# detection probabilities


def gap_agreement_prob(G: int, K: int, tick: int = 1, exact: bool = False
                       ) -> Union[float, Fraction]:
    """Probability that two independent uniform-level pulse trains started at the same
    tick agree on every pulse strictly inside a gap of ``G`` ticks.

    Recursion: either both first intervals reach the gap end, or both equal
    some ``j < G`` and the remaining gap ``G - j`` must agree.
    """
    if G < 0 or K < 2 or tick < 1:
        raise ValueError("need G >= 0, K >= 2, tick >= 1")
    L = -(-G // tick)  # gap length in interval units
    one = Fraction(1) if exact else 1.0
    pk = one / K
    A = [one] * (L + 1)
    for g in range(1, L + 1):
        beyond = max(0, K - (g - 1)) * pk  # Pr[interval >= g]
        acc = beyond * beyond
        for j in range(1, min(K, g - 1) + 1):
            acc += pk * pk * A[g - j]
        A[g] = acc
    return A[L]


def _sequences_reaching(G: int, K: int, prefix=()):
    """All interval sequences whose partial sums first reach or pass ``G``."""
    total = sum(prefix)
    if total >= G or (G == 0):
        yield prefix
        return
    for v in range(1, K + 1):
        yield from _sequences_reaching(G, K, prefix + (v,))


def enumerate_gap_agreement(G: int, K: int) -> Fraction:
    """Brute-force counterpart of :func:`gap_agreement_prob` over all interval-pair
    sequences (exact, exponential; small ``G`` only)."""
    seqs = []
    for seq in _sequences_reaching(G, K):
        pulses, acc = [], 0
        for v in seq:
            acc += v
            if acc < G:
                pulses.append(acc)
        seqs.append((tuple(pulses), Fraction(1, K ** len(seq))))
    total = Fraction(0)
    for (pa, wa), (pb, wb) in product(seqs, seqs):
        if pa == pb:
            total += wa * wb
    return total


@dataclass(frozen=True)
class TreeSpec:
    """Branch probabilities of the detection tree.

    ``P[i]`` continues undetected past the ``i``-th boundary; ``Q[i]`` (the
    ``i+1``-th escape branch) makes the change permanently invisible.
    """

    P: tuple[float, ...]
    Q: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "P", tuple(self.P))
        object.__setattr__(self, "Q", tuple(self.Q))
        if len(self.P) != len(self.Q):
            raise ValueError(f"need one Q per P (got {len(self.P)} P, {len(self.Q)} Q)")
        for name, vals in (("P", self.P), ("Q", self.Q)):
            for i, v in enumerate(vals):
                if not 0 <= v <= 1:
                    raise ValueError(f"{name}[{i}] = {v} outside [0, 1]")
        for i in range(1, len(self.P)):
            if self.P[i] + self.Q[i - 1] > 1:
                raise ValueError(f"P[{i}] + Q[{i - 1}] exceeds 1")

    @property
    def depth(self) -> int:
        return len(self.P)


@dataclass(frozen=True)
class TreeResult:
    undetected_by_level: tuple[float, ...]
    permanent_escape: float


def tree_undetected_prob(spec: TreeSpec) -> TreeResult:
    """Undetected-by-level ``i`` is ``P0 * ... * Pi``; escape sums ``Qi`` weighted by
    the probability of reaching the node it hangs from (``P0 * ... * P(i-1)``)."""
    chain = []
    reach = 1
    escape = 0
    for p, q in zip(spec.P, spec.Q):
        reach *= p
        chain.append(reach)
        escape += reach * q
    return TreeResult(tuple(chain), escape)


def enumerate_tree(spec: TreeSpec) -> tuple[TreeResult, float]:
    """Sum over every root-to-leaf path (oracle for :func:`tree_undetected_prob`).

    Also returns the total probability of all leaves, which must be 1.
    """
    D = spec.depth

    def branches(node):
        # node k is reached after k continuation branches
        out = []
        p = spec.P[node] if node < D else 0
        q = spec.Q[node - 1] if node >= 1 else 0
        if node < D:
            out.append(("P", p))
        if node >= 1:
            out.append(("Q", q))
        out.append(("end" if node == D else "detected", 1 - p - q))
        return out

    leaves = []

    def walk(node, path, prob):
        for label, w in branches(node):
            if label == "P":
                walk(node + 1, path + (label,), prob * w)
            else:
                leaves.append((path + (label,), prob * w))

    walk(0, (), 1)
    by_level = [0] * D
    escape = 0
    for path, prob in leaves:
        n_cont = path.count("P")
        for i in range(n_cont):
            by_level[i] += prob
        if path[-1] == "Q":
            escape += prob
    return TreeResult(tuple(by_level), escape), sum(p for _, p in leaves)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class DetectionEstimate:
    """Aggregated outcome of repeated attacked runs.

    ``undetected_by_level[i]`` counts runs with no detection strictly before the
    ``i+1``-th message boundary after the attack (the horizon stands in when
    the run has fewer messages).
    """

    trials: int
    undetected_by_level: list[int]
    detected: int = 0
    escaped: int = 0
    indeterminate: int = 0
    clean: int = 0
    attacker_cost: int = 0

    @property
    def point_estimate(self) -> float:
        return self.detected / self.trials

    @property
    def standard_error(self) -> float:
        p = self.point_estimate
        return math.sqrt(p * (1 - p) / self.trials)

    def undetected_frequency(self, level: int = 0) -> float:
        return self.undetected_by_level[level] / self.trials

    def undetected_stderr(self, level: int = 0) -> float:
        p = self.undetected_frequency(level)
        return math.sqrt(p * (1 - p) / self.trials)

    def merge(self, other: "DetectionEstimate") -> "DetectionEstimate":
        if len(other.undetected_by_level) != len(self.undetected_by_level):
            raise ValueError("level counts differ")
        return DetectionEstimate(
            self.trials + other.trials,
            [a + b for a, b in zip(self.undetected_by_level, other.undetected_by_level)],
            self.detected + other.detected,
            self.escaped + other.escaped,
            self.indeterminate + other.indeterminate,
            self.clean + other.clean,
            self.attacker_cost + other.attacker_cost,
        )

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "detected": self.detected,
            "escaped": self.escaped,
            "indeterminate": self.indeterminate,
            "clean": self.clean,
            "undetected_by_level": list(self.undetected_by_level),
            "point_estimate": self.point_estimate,
            "standard_error": self.standard_error,
            "attacker_cost": self.attacker_cost,
        }


def rekeyed(cfg: EncoderConfig, rng: np.random.Generator) -> EncoderConfig:
    """Fresh interval-family key (and PRF seed-update key) drawn from ``rng``."""
    changes = {"g_key": int.from_bytes(rng.bytes(16), "little")}
    if isinstance(cfg.o_family, PrfDerived):
        changes["o_family"] = PrfDerived(int.from_bytes(rng.bytes(16), "little"))
    return cfg.replace(**changes)


def boundaries(trace, levels: int) -> list[int]:
    after = trace.attack_tick if trace.attack_tick is not None else trace.horizon
    ticks = [e.t for e in trace.delivered_events if e.t > after][:levels]
    return ticks + [trace.horizon] * (levels - len(ticks))


def trial_traces(cfg: EncoderConfig, source_spec: SourceSpec, attack: AttackSpec, trials: int,
                 horizon: int, rng_seed=0, rekey: bool = True):
    """Yield ``(trial_index, trace)`` for independent runs.

    With ``rekey`` each trial uses fresh PRF keys, sampling the family at
    random rather than reusing one fixed instance.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1 (got {trials})")
    root = np.random.SeedSequence(rng_seed)
    for i, child in enumerate(root.spawn(trials)):
        rng = np.random.default_rng(child)
        trial_cfg = rekeyed(cfg, rng) if rekey else cfg
        yield i, trial_cfg, run_scenario(trial_cfg, source_spec, attack, horizon, rng)


def tally(traces, levels: int = 3) -> DetectionEstimate:
    est = DetectionEstimate(0, [0] * levels)
    for trace in traces:
        est.trials += 1
        setattr(est, trace.outcome, getattr(est, trace.outcome) + 1)
        est.attacker_cost += trace.attacker_cost
        tick = trace.verdict.detection_tick
        for i, b in enumerate(boundaries(trace, levels)):
            if tick is None or tick >= b:
                est.undetected_by_level[i] += 1
    return est


def monte_carlo_detection(cfg: EncoderConfig, source_spec: SourceSpec, attack: AttackSpec,
                          trials: int, horizon: int, rng_seed=0, levels: int = 3,
                          rekey: bool = True) -> DetectionEstimate:
    return tally((t for _, _, t in trial_traces(cfg, source_spec, attack, trials, horizon,
                                                rng_seed, rekey)), levels)


# ---------------------------------------------------------------------------
# real-valued pairing map

_MAP_PREC = 80


def map_f(t, n: int) -> Decimal:
    """Pair ``(t, n)`` into one positive real ``n + 1 / (1 + e**t)``.

    Computed in decimal arithmetic: at ``t = 20`` the fractional part is about
    2e-9, far below what a float carrying the integer part can resolve.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a natural number (got {n})")
    with localcontext() as ctx:
        ctx.prec = _MAP_PREC
        t = Decimal(t)
        if t < 0:
            raise ValueError(f"t must be >= 0 (got {t})")
        return Decimal(int(n)) + 1 / (1 + t.exp())


def map_f_inv(y) -> tuple[Decimal, int]:
    with localcontext() as ctx:
        ctx.prec = _MAP_PREC
        y = Decimal(y)
        n = int(y.to_integral_value(rounding="ROUND_FLOOR"))
        frac = y - n
        if not 0 < frac <= Decimal("0.5"):
            raise ValueError(f"fractional part {frac} of {y} outside (0, 1/2]")
        return (1 / frac - 1).ln(), n
