"""Sign-flip embedding into initial latents and likelihood-ratio recovery.

A ciphertext bit is spread over ``rho`` latent components whose magnitude is
at least ``tau``. Bit 1 leaves a component alone, bit 0 flips its sign, so
every component keeps its magnitude and a symmetric latent distribution is
left unchanged. The receiver regenerates the original latents from the
shared key, so decoding compares each noisy observation against the known
original rather than guessing from signs alone.
"""

from __future__ import annotations

from typing import Callable, Sequence, Union

import numpy as np

from . import keyschedule, record
from .errors import AuthError, CapacityExceeded, MaskTooSmall
from .params import EmbedParams, ParamTable, ciphertext_bit_len

Latents = np.ndarray
Observation = Union[Latents, Sequence[Latents]]


def add_redundancy(c, rho: int) -> np.ndarray:
    """Map bits to -1/+1 and repeat each symbol rho times."""
    if rho < 1:
        raise ValueError("rho must be >= 1")
    bits = np.asarray(c, dtype=np.int8)
    return np.repeat(2 * bits - 1, rho).astype(np.int8)


def permute(symbols: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """out[pi[j]] = symbols[j]."""
    out = np.empty_like(symbols)
    out[pi] = symbols
    return out


def compute_mask(x_T: Latents, tau: float) -> np.ndarray:
    return np.flatnonzero(np.abs(np.asarray(x_T)) >= tau)


def embed(c, pi: np.ndarray, x_T: Latents, params: EmbedParams) -> Latents:
    symbols = add_redundancy(c, params.rho)
    if len(pi) != len(symbols):
        raise ValueError(f"permutation length {len(pi)} != expanded length {len(symbols)}")
    mask = compute_mask(x_T, params.tau)
    if len(mask) < len(symbols):
        raise CapacityExceeded(
            f"{len(symbols)} symbols need slots but only {len(mask)} components have |x| >= {params.tau}"
        )
    out = np.array(x_T, dtype=np.float64, copy=True)
    # Slots past the last symbol are left untouched.
    out[mask[: len(symbols)]] *= permute(symbols, pi)
    return out


def extract_groups(x: Latents, mask: np.ndarray, pi: np.ndarray, rho: int, n_bits: int) -> np.ndarray:
    """Values carrying each bit, shape (n_bits, rho), in pre-permutation order."""
    n = n_bits * rho
    if len(mask) < n:
        raise MaskTooSmall(f"mask has {len(mask)} slots, need {n}")
    taken = np.asarray(x, dtype=np.float64)[mask[:n]]
    return taken[pi].reshape(n_bits, rho)


def decode_bit(orig, recov) -> int:
    # log of the Gaussian likelihood ratio is 2 * sum(orig * recov), so the
    # ratio is >= 1 exactly when the correlation is >= 0. Ties decode as 1.
    orig = np.asarray(orig, dtype=np.float64)
    recov = np.asarray(recov, dtype=np.float64)
    if orig.shape != recov.shape or orig.size == 0:
        raise ValueError("orig and recov must be equal-length and non-empty")
    return int(np.dot(orig, recov) >= 0.0)


def decode_groups(orig_groups: np.ndarray, recov_groups: np.ndarray) -> np.ndarray:
    """Vectorised decode_bit over rows."""
    return (np.einsum("ij,ij->i", orig_groups, recov_groups) >= 0.0).astype(np.uint8)


def recover(x_T: Latents, x_tilde: Latents, pi: np.ndarray, params: EmbedParams, n_bits: int) -> np.ndarray:
    # Mask comes from the original latents: noise can push values across tau.
    mask = compute_mask(x_T, params.tau)
    orig = extract_groups(x_T, mask, pi, params.rho, n_bits)
    recov = extract_groups(x_tilde, mask, pi, params.rho, n_bits)
    return decode_groups(orig, recov)


def correct_errors(
    c1, c2, verify: Callable[[np.ndarray], bool], max_errs: int
) -> np.ndarray | None:
    """Dual-observation error correction; returns valid bits or None on failure.

    If neither observation verifies, every assignment of the positions where
    they disagree is tried on top of ``c1``. Assignments are visited in
    lexicographic order of the flip string (first differing position most
    significant), and the first one that verifies wins.
    """
    c1 = np.asarray(c1, dtype=np.uint8)
    c2 = np.asarray(c2, dtype=np.uint8)
    if c1.shape != c2.shape:
        raise ValueError("c1 and c2 differ in length")
    if verify(c1):
        return c1
    if verify(c2):
        return c2
    diff = np.flatnonzero(c1 != c2)
    if len(diff) > max_errs:
        return None
    n = len(diff)
    weights = 1 << np.arange(n - 1, -1, -1)
    for m in range(1, 1 << n):
        flips = diff[(m & weights) != 0]
        cand = c1.copy()
        cand[flips] ^= 1
        if verify(cand):
            return cand
    return None


def _prepare(s_key: bytes, ctr: int, table: ParamTable):
    bundle = keyschedule.derive(s_key, ctr)
    params = keyschedule.select_row(bundle, table).params
    n_bits = ciphertext_bit_len(params)
    x_T = keyschedule.sample_latents(bundle.seed_latent, params.latent_count)
    pi = keyschedule.sample_permutation(bundle.seed_perm, n_bits * params.rho)
    return bundle, params, n_bits, x_T, pi


def send(message: bytes, s_key: bytes, ctr: int, table: ParamTable) -> Observation:
    """Encrypt and embed; dual rows return two identical copies."""
    bundle, params, _, x_T, pi = _prepare(s_key, ctr, table)
    rec = record.seal(bundle.k_enc, bundle.k_mac, ctr, message, params)
    x_emb = embed(rec.to_bits(), pi, x_T, params)
    if params.dual:
        return x_emb, x_emb.copy()
    return x_emb


def _as_pair(observed: Observation, dual: bool, k: int) -> list[np.ndarray]:
    if dual:
        if isinstance(observed, np.ndarray) and observed.ndim == 1:
            raise ValueError("dual row expects a pair of latent tensors")
        parts = [np.asarray(o, dtype=np.float64).reshape(-1) for o in observed]
        if len(parts) != 2:
            raise ValueError(f"dual row expects 2 latent tensors, got {len(parts)}")
    else:
        if isinstance(observed, (tuple, list)) and len(observed) == 1:
            observed = observed[0]
        if isinstance(observed, (tuple, list)):
            raise ValueError("single row expects one latent tensor")
        parts = [np.asarray(observed, dtype=np.float64).reshape(-1)]
    for p in parts:
        if p.size != k:
            raise ValueError(f"latent tensor has {p.size} values, row expects {k}")
    return parts


def decode_observation(observed: Observation, s_key: bytes, ctr: int, table: ParamTable) -> list[np.ndarray] | None:
    """Hard-decided ciphertext bits for each observed copy, or None if the mask is too small."""
    _, params, n_bits, x_T, pi = _prepare(s_key, ctr, table)
    parts = _as_pair(observed, params.dual, params.latent_count)
    mask = compute_mask(x_T, params.tau)
    if len(mask) < n_bits * params.rho:
        return None
    orig = extract_groups(x_T, mask, pi, params.rho, n_bits)
    return [decode_groups(orig, extract_groups(p, mask, pi, params.rho, n_bits)) for p in parts]


def receive(observed: Observation, s_key: bytes, ctr: int, table: ParamTable) -> bytes | None:
    """Recover the message, or None if no candidate ciphertext authenticates."""
    decoded = decode_observation(observed, s_key, ctr, table)
    if decoded is None:
        return None
    bundle = keyschedule.derive(s_key, ctr)
    params = keyschedule.select_row(bundle, table).params
    body_len = params.frame_len_bytes

    def verify(bits: np.ndarray) -> bool:
        raw = np.packbits(bits).tobytes()
        return record.verify_tag(bundle.k_mac, raw[:body_len], raw[body_len:])

    if params.dual:
        bits = correct_errors(decoded[0], decoded[1], verify, params.max_errs)
        if bits is None:
            return None
    else:
        bits = decoded[0]
    rec = record.CipherRecord.from_bytes(np.packbits(bits).tobytes(), params)
    try:
        return record.open_record(bundle.k_enc, bundle.k_mac, ctr, rec, params)
    except AuthError:
        return None
