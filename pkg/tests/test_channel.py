import io
import math

import numpy as np
import pytest

from latentstego.channel import (
    PRESETS,
    ChannelModel,
    SeverityPreset,
    read_latents,
    sigma_for_preset,
    transmit,
    write_latents,
)
from latentstego.errors import FormatError

SEED = b"\x11" * 32


def test_zero_sigma_is_identity(rng):
    x = rng.standard_normal(100)
    assert np.array_equal(transmit(x, ChannelModel(0.0)), x)
    a, b = transmit(x, ChannelModel(0.0, dual=True))
    assert np.array_equal(a, x) and np.array_equal(b, x)


def test_mean_abs_noise():
    x = np.zeros(10**6)
    y = transmit(x, ChannelModel(0.5, rng_seed=SEED))
    assert abs(0.5 * math.sqrt(2 / math.pi) - 0.3989) < 1e-4
    assert 0.397 <= np.mean(np.abs(y - x)) <= 0.401


def test_full_correlation_gives_identical_copies(rng):
    x = rng.standard_normal(1000)
    a, b = transmit(x, ChannelModel(0.7, dual=True, corr=1.0, rng_seed=SEED))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, x)


def test_deterministic_given_seed(rng):
    x = rng.standard_normal(500)
    assert np.array_equal(transmit(x, ChannelModel(0.3, rng_seed=SEED)), transmit(x, ChannelModel(0.3, rng_seed=SEED)))
    m = ChannelModel(0.3, rng_seed=SEED)
    assert not np.array_equal(transmit(x, m), transmit(x, m))  # stream advances


def test_fork_independent():
    m = ChannelModel(1.0, rng_seed=SEED)
    x = np.zeros(100)
    assert not np.array_equal(transmit(x, m.fork(0)), transmit(x, m.fork(1)))
    assert np.array_equal(transmit(x, m.fork(3)), transmit(x, m.fork(3)))


def test_noise_is_zero_mean_and_content_independent():
    n, sigma = 4000, 0.8
    x = np.linspace(-3, 3, 64)
    m = ChannelModel(sigma, rng_seed=SEED)
    diffs = np.stack([transmit(x, m) - x for _ in range(n)])
    assert np.all(np.abs(diffs.mean(axis=0)) <= 4 * sigma / math.sqrt(n))


@pytest.mark.parametrize("corr", [0.0, 0.5, 0.9])
def test_dual_marginals(corr):
    x = np.zeros(200_000)
    a, b = transmit(x, ChannelModel(0.6, dual=True, corr=corr, rng_seed=SEED))
    for y in (a, b):
        assert abs(y.std() - 0.6) < 0.005
    assert abs(np.corrcoef(a, b)[0, 1] - corr) < 0.01


def test_sigma_for_preset():
    assert math.isclose(sigma_for_preset(PRESETS["png"]), 0.386 * math.sqrt(math.pi / 2), rel_tol=1e-12)
    assert abs(sigma_for_preset("png") - 0.4838) < 5e-5
    assert abs(sigma_for_preset("jpg") - 1.387419) < 1e-6
    assert abs(sigma_for_preset("jpg") - 1.3875) < 1e-4
    assert sigma_for_preset(SeverityPreset("none", 0.0)) == 0.0


def test_invalid_models():
    with pytest.raises(ValueError):
        ChannelModel(-1.0)
    with pytest.raises(ValueError):
        ChannelModel(1.0, corr=1.5)
    with pytest.raises(ValueError):
        SeverityPreset("bad", -0.1)


def test_file_round_trip(rng):
    x = rng.standard_normal(4 * 64 * 64).astype(np.float32)
    buf = io.BytesIO()
    write_latents(x, buf, (4, 64, 64))
    raw = buf.getvalue()
    header = 4 + 2 + 1 + 1 + 3 * 4
    assert raw[:4] == b"LSTG"
    assert len(raw) - header == 65536
    got = read_latents(io.BytesIO(raw))
    assert got.shape == (4, 64, 64)
    assert np.array_equal(got.reshape(-1), x)


def test_file_pair_round_trip(rng):
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    buf = io.BytesIO()
    write_latents((a, b), buf)
    ra, rb = read_latents(io.BytesIO(buf.getvalue()))
    assert np.array_equal(ra, a.astype(np.float32))
    assert np.array_equal(rb, b.astype(np.float32))


def test_header_layout():
    buf = io.BytesIO()
    write_latents(np.array([1.0, -2.0], dtype=np.float32), buf)
    assert buf.getvalue() == (
        b"LSTG" + b"\x01\x00" + b"\x00" + b"\x01" + b"\x02\x00\x00\x00"
        + np.array([1.0, -2.0], dtype="<f4").tobytes()
    )


@pytest.mark.parametrize(
    "mutate",
    [
        lambda r: r[:-1],  # truncated payload
        lambda r: r[:6],  # truncated header
        lambda r: b"XSTG" + r[4:],
        lambda r: r[:4] + b"\x02\x00" + r[6:],
        lambda r: r[:6] + b"\x01" + r[7:],
        lambda r: b"",
        lambda r: r + r + r,
    ],
)
def test_bad_files(mutate):
    buf = io.BytesIO()
    write_latents(np.arange(8, dtype=np.float32), buf, (2, 4))
    with pytest.raises(FormatError):
        read_latents(io.BytesIO(mutate(buf.getvalue())))
