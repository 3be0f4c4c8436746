"""Covert messages in diffusion initial latents via distribution-preserving sign flips."""

from .codec import correct_errors, decode_bit, embed, receive, recover, send
from .errors import (
    AuthError,
    CapacityExceeded,
    FormatError,
    FrameError,
    MaskTooSmall,
    MessageTooLong,
    ParseError,
    StegoError,
)
from .params import EmbedParams, ParamTable, ParamTableRow, Scheduler, ciphertext_bit_len, load_table

__version__ = "0.1.0"
