"""Simulated generate-then-invert channel and the LSTG latent file format.

Inversion error is modelled as additive i.i.d. Gaussian noise on every
latent component. For dual (EDICT-style) observations the two noise draws
can be correlated through ``corr``.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

import numpy as np

from .errors import FormatError
from .keyschedule import Drbg

DEFAULT_CHANNEL_SEED = bytes(32)

MAGIC = b"LSTG"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sHBB")


@dataclass(frozen=True)
class SeverityPreset:
    name: str
    avg_latent_diff: float

    def __post_init__(self) -> None:
        if not self.avg_latent_diff >= 0:
            raise ValueError("avg_latent_diff must be >= 0")


# Mean absolute latent error after re-encoding / transforming the image.
PRESETS: dict[str, SeverityPreset] = {
    p.name: p
    for p in (
        SeverityPreset("png", 0.386),
        SeverityPreset("tiff", 0.313),
        SeverityPreset("bmp", 0.449),
        SeverityPreset("jpg", 1.107),
        SeverityPreset("blur", 0.432),
        SeverityPreset("downscale-462", 0.34),
        SeverityPreset("downscale-256", 0.45),
        SeverityPreset("downscale-51", 0.845),
        SeverityPreset("upscale-563", 0.302),
        SeverityPreset("upscale-768", 0.330),
        SeverityPreset("upscale-972", 0.366),
        SeverityPreset("jpeg-100", 0.311),
        SeverityPreset("jpeg-75", 0.466),
        SeverityPreset("jpeg-50", 0.566),
        SeverityPreset("crop-511", 0.368),
        SeverityPreset("crop-510", 0.444),
        SeverityPreset("crop-509", 0.540),
    )
}


def sigma_for_preset(preset: SeverityPreset | str) -> float:
    """Noise std whose mean absolute value equals the preset's latent diff."""
    if isinstance(preset, str):
        preset = PRESETS[preset]
    return preset.avg_latent_diff / math.sqrt(2.0 / math.pi)


@dataclass
class ChannelModel:
    sigma: float = 0.0
    dual: bool = False
    corr: float = 0.0
    rng_seed: bytes = DEFAULT_CHANNEL_SEED
    _drbg: Drbg | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not 0.0 <= self.corr <= 1.0:
            raise ValueError(f"corr must lie in [0, 1], got {self.corr}")
        if len(self.rng_seed) != 32:
            raise ValueError("rng_seed must be 32 bytes")

    def noise(self, n: int) -> np.ndarray:
        if self._drbg is None:
            self._drbg = Drbg(self.rng_seed)
        return self._drbg.gaussians(n)

    def fork(self, index: int) -> ChannelModel:
        """Independent channel for trial ``index``, same settings."""
        seed = hashlib.sha256(self.rng_seed + b"trial" + index.to_bytes(8, "big")).digest()
        return ChannelModel(self.sigma, self.dual, self.corr, seed)


def transmit(x, model: ChannelModel):
    """Add inversion noise. Dual models return a pair of noisy copies.

    A pair input (as produced by a dual sender) is accepted; its first
    element is used as the clean latents for both outputs.
    """
    if isinstance(x, (tuple, list)):
        x = x[0]
    x = np.asarray(x, dtype=np.float64)
    if model.sigma == 0.0:
        return (x.copy(), x.copy()) if model.dual else x.copy()
    z1 = model.noise(x.size).reshape(x.shape)
    if not model.dual:
        return x + model.sigma * z1
    z2 = model.noise(x.size).reshape(x.shape)
    z2 = model.corr * z1 + math.sqrt(1.0 - model.corr**2) * z2
    return x + model.sigma * z1, x + model.sigma * z2


def _write_one(x: np.ndarray, sink: BinaryIO, shape: Sequence[int] | None) -> None:
    arr = np.asarray(x)
    dims = tuple(int(d) for d in (shape if shape is not None else arr.shape))
    if math.prod(dims) != arr.size:
        raise ValueError(f"shape {dims} does not hold {arr.size} values")
    if len(dims) > 255:
        raise ValueError("too many dimensions")
    sink.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, len(dims)))
    sink.write(struct.pack(f"<{len(dims)}I", *dims))
    sink.write(arr.astype("<f4").reshape(-1).tobytes())


def write_latents(x, sink: BinaryIO, shape: Sequence[int] | None = None) -> None:
    """Write one tensor, or a pair as two back-to-back records."""
    if isinstance(x, (tuple, list)):
        for part in x:
            _write_one(part, sink, shape)
    else:
        _write_one(x, sink, shape)


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    data = source.read(n)
    if len(data) != n:
        raise FormatError(f"truncated {what}: wanted {n} bytes, got {len(data)}")
    return data


def _read_one(source: BinaryIO, head: bytes) -> np.ndarray:
    head += _read_exact(source, _HEADER.size - len(head), "header")
    magic, version, dtype, ndim = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if ndim == 0:
        raise FormatError("zero-dimensional tensor")
    dims = struct.unpack(f"<{ndim}I", _read_exact(source, 4 * ndim, "dims"))
    count = math.prod(dims)
    payload = _read_exact(source, 4 * count, "payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float32)


def read_latents(source: BinaryIO):
    """Read a single tensor or a pair; returns an array or a 2-tuple."""
    parts = []
    while True:
        head = source.read(1)
        if not head:
            break
        parts.append(_read_one(source, head))
    if not parts:
        raise FormatError("empty latent file")
    if len(parts) > 2:
        raise FormatError(f"expected 1 or 2 tensors, found {len(parts)}")
    return parts[0] if len(parts) == 1 else (parts[0], parts[1])
