"""Per-message key material and deterministic randomness.

Everything the sender and receiver must agree on (cipher keys, initial
latents, the permutation, the table row) is a pure function of the shared
secret key and the message counter.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .params import ParamTable, ParamTableRow

KEY_BYTES = 32
_TWO64 = 1 << 64
_CHUNK_BLOCKS = 4096  # 64 KiB of keystream per refill
_U64 = struct.Struct("<Q")


def _check_key(key: bytes, what: str = "key") -> bytes:
    key = bytes(key)
    if len(key) != KEY_BYTES:
        raise ValueError(f"{what} must be {KEY_BYTES} bytes, got {len(key)}")
    return key


def kdf(secret: bytes, label: bytes, ctr: int) -> bytes:
    """HMAC-SHA512(secret, label || ctr_be64)."""
    return hmac.new(secret, label + ctr.to_bytes(8, "big"), hashlib.sha512).digest()


@dataclass(frozen=True)
class KeyBundle:
    k_enc: bytes
    k_mac: bytes
    seed_latent: bytes
    seed_perm: bytes
    row_selector: int


def derive(s_key: bytes, ctr: int) -> KeyBundle:
    s_key = _check_key(s_key, "secret key")
    if not 0 <= ctr < _TWO64:
        raise ValueError(f"counter must fit in 64 bits, got {ctr}")
    return KeyBundle(
        k_enc=kdf(s_key, b"enc", ctr)[:KEY_BYTES],
        k_mac=kdf(s_key, b"mac", ctr)[:KEY_BYTES],
        seed_latent=kdf(s_key, b"lat", ctr)[:KEY_BYTES],
        seed_perm=kdf(s_key, b"perm", ctr)[:KEY_BYTES],
        row_selector=int.from_bytes(kdf(s_key, b"row", ctr)[:8], "big"),
    )


class Drbg:
    """AES-256-CTR keystream over a zero plaintext, keyed by a 32-byte seed.

    The counter block starts at 0 and is incremented as a big-endian 128-bit
    integer; 64-bit words are read little-endian from the stream. Instances
    are stateful and must not be shared between threads.
    """

    def __init__(self, seed: bytes):
        seed = _check_key(seed, "DRBG seed")
        self._enc = Cipher(algorithms.AES(seed), modes.CTR(bytes(16))).encryptor()
        self._buf = b""
        self._pos = 0

    def read(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("negative read")
        avail = len(self._buf) - self._pos
        if avail < n:
            fresh = self._enc.update(bytes(max(n - avail, 16 * _CHUNK_BLOCKS)))
            self._buf = self._buf[self._pos :] + fresh
            self._pos = 0
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out

    def words(self, n: int) -> np.ndarray:
        """n little-endian 64-bit words as a uint64 array."""
        return np.frombuffer(self.read(8 * n), dtype="<u8").astype(np.uint64)

    def next_word(self) -> int:
        if len(self._buf) - self._pos < 8:
            fresh = self._enc.update(bytes(16 * _CHUNK_BLOCKS))
            self._buf = self._buf[self._pos :] + fresh
            self._pos = 0
        (w,) = _U64.unpack_from(self._buf, self._pos)
        self._pos += 8
        return w

    def uniform_below(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection on 64-bit words."""
        if n < 1:
            raise ValueError("bound must be >= 1")
        limit = _TWO64 - (_TWO64 % n)
        while True:
            w = self.next_word()
            if w < limit:
                return w % n

    def uniforms(self, n: int) -> np.ndarray:
        """n floats in the open interval (0, 1), u = (w + 1) / (2^64 + 1)."""
        return (self.words(n).astype(np.float64) + 1.0) / (float(_TWO64) + 1.0)

    def gaussians(self, n: int) -> np.ndarray:
        """n standard normals by Box-Muller; pair (2m, 2m+1) uses words (2m, 2m+1)."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = r * np.cos(theta)
        out[:, 1] = r * np.sin(theta)
        return out.reshape(-1)[:n]


def sample_latents(seed_latent: bytes, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be >= 1")
    return Drbg(seed_latent).gaussians(k)


def sample_permutation(seed_perm: bytes, length: int) -> np.ndarray:
    """Fisher-Yates shuffle of range(length) driven by the DRBG."""
    if length < 1:
        raise ValueError("permutation length must be >= 1")
    drbg = Drbg(seed_perm)
    perm = list(range(length))
    for i in range(length - 1, 0, -1):
        j = drbg.uniform_below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64)


def select_row(bundle: KeyBundle, table: ParamTable) -> ParamTableRow:
    return table.rows[bundle.row_selector % len(table.rows)]
