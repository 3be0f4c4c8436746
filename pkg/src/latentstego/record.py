"""Encrypt-then-MAC record: AES-256-CTR body plus a truncated HMAC-SHA512 tag.

The plaintext frame is ``len_be16 || message || zero padding`` up to the
row's fixed message length, so every record for a given row has the same
bit length and the true message length stays hidden.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import AuthError, FrameError, MessageTooLong
from .params import FRAME_PREFIX_BYTES, EmbedParams


@dataclass(frozen=True)
class CipherRecord:
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes, params: EmbedParams) -> CipherRecord:
        n = params.frame_len_bytes
        if len(data) != n + params.tag_len_bytes:
            raise ValueError(f"record must be {n + params.tag_len_bytes} bytes, got {len(data)}")
        return cls(bytes(data[:n]), bytes(data[n:]))

    def to_bits(self) -> np.ndarray:
        return bytes_to_bits(self.to_bytes())


def bytes_to_bits(data: bytes) -> np.ndarray:
    """MSB of byte 0 is bit 0."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise ValueError("bit count must be a multiple of 8")
    return np.packbits(bits).tobytes()


def _keystream_xor(k_enc: bytes, ctr: int, data: bytes) -> bytes:
    # Counter block: message counter in the high 64 bits, block index in the low 64.
    nonce = ctr.to_bytes(8, "big") + bytes(8)
    enc = Cipher(algorithms.AES(k_enc), modes.CTR(nonce)).encryptor()
    return enc.update(data) + enc.finalize()


def compute_tag(k_mac: bytes, body: bytes, tag_len: int) -> bytes:
    return hmac.new(k_mac, body, hashlib.sha512).digest()[:tag_len]


def verify_tag(k_mac: bytes, body: bytes, tag: bytes) -> bool:
    expected = compute_tag(k_mac, body, len(tag))
    return hmac.compare_digest(expected, tag)


def seal(k_enc: bytes, k_mac: bytes, ctr: int, message: bytes, params: EmbedParams) -> CipherRecord:
    if len(message) > params.msg_len_bytes:
        raise MessageTooLong(
            f"message is {len(message)} bytes, row allows at most {params.msg_len_bytes}"
        )
    frame = (
        len(message).to_bytes(FRAME_PREFIX_BYTES, "big")
        + bytes(message)
        + bytes(params.msg_len_bytes - len(message))
    )
    body = _keystream_xor(k_enc, ctr, frame)
    return CipherRecord(body, compute_tag(k_mac, body, params.tag_len_bytes))


def open_record(k_enc: bytes, k_mac: bytes, ctr: int, record: CipherRecord, params: EmbedParams) -> bytes:
    """Verify then decrypt. Raises AuthError on a bad tag, FrameError on a bad frame."""
    if len(record.body) != params.frame_len_bytes or len(record.tag) != params.tag_len_bytes:
        raise ValueError("record lengths do not match parameters")
    if not verify_tag(k_mac, record.body, record.tag):
        raise AuthError("tag mismatch")
    frame = _keystream_xor(k_enc, ctr, record.body)
    length = int.from_bytes(frame[:FRAME_PREFIX_BYTES], "big")
    if length > params.msg_len_bytes:
        raise FrameError(f"length field {length} exceeds msg_len_bytes {params.msg_len_bytes}")
    padding = frame[FRAME_PREFIX_BYTES + length :]
    if any(padding):
        raise FrameError("non-zero padding")
    return frame[FRAME_PREFIX_BYTES : FRAME_PREFIX_BYTES + length]
