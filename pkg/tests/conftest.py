import pytest

from abba_ids.encoding import AffineInvertible, EncoderConfig, Event, PrfDerived


@pytest.fixture
def modular_cfg():
    """Small maximally-correlated family with hand-checkable intervals."""
    return EncoderConfig(alphabet_size=3, tick=1, levels=4, seed_space=16,
                         o_family=AffineInvertible((1, 2, 3)), g_key=0, s0=5, t0=0,
                         g_family="modular")


@pytest.fixture
def prf_cfg():
    return EncoderConfig(alphabet_size=4, tick=1, levels=8, seed_space=16,
                         o_family=PrfDerived(0x1234), g_key=0xBEEF, s0=3, t0=0)


@pytest.fixture
def core_events():
    return [Event(3, 0)]
