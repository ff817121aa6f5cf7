"""Keyless tamper detection for sensor links using a causal pulse time-code."""

__version__ = "0.1.0"

from .encoding import (
    AffineInvertible,
    Codeword,
    EncoderConfig,
    EncoderState,
    Event,
    PrfDerived,
    build_codeword,
    default_config,
    encode_incremental,
    encoder_on_message,
    encoder_on_tick,
    encoder_open,
    g_interval,
    seed_update,
)
from .verifier import (
    MismatchKind,
    Status,
    Verdict,
    VerifierState,
    verdict,
    verifier_advance,
    verifier_on_message,
    verifier_on_pulse,
    verifier_open,
    verify_streams,
)
from .simulation import (
    AdaptiveInject,
    DeleteAt,
    InjectAt,
    NoAttack,
    SourceSpec,
    TamperAt,
    Trace,
    apply_attack,
    generate_source,
    run_scenario,
    trap_experiment,
)
