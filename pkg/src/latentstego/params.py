"""Embedding parameters and the shared parameter table.

The table is a small CSV file both parties hold. Each row fixes the model,
prompt and embedding parameters for a message; the row used for a given
message is picked by the key schedule.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field

from .errors import ParseError

FRAME_PREFIX_BYTES = 2
DEFAULT_TAG_LEN = 5
DEFAULT_MAX_ERRS = 10
DEFAULT_LATENT_COUNT = 4 * 64 * 64

TABLE_HEADER = (
    "row_id",
    "model_id",
    "prompt",
    "tau",
    "rho",
    "scheduler",
    "msg_len_bytes",
    "tag_len_bytes",
    "max_errs",
    "latent_count",
)


class Scheduler(str, enum.Enum):
    SINGLE = "single"  # DDIM: one inverted latent
    DUAL = "dual"  # EDICT: two coupled latents, enables error correction


def default_shape(latent_count: int) -> tuple[int, ...]:
    """[4, s, s] when latent_count / 4 is a perfect square, else flat."""
    if latent_count % 4 == 0:
        s = math.isqrt(latent_count // 4)
        if s * s * 4 == latent_count:
            return (4, s, s)
    return (latent_count,)


@dataclass(frozen=True)
class EmbedParams:
    tau: float
    rho: int
    scheduler: Scheduler = Scheduler.DUAL
    msg_len_bytes: int = 250  # fits tau=0.3, rho=6, 16384 latents with margin
    tag_len_bytes: int = DEFAULT_TAG_LEN
    max_errs: int = DEFAULT_MAX_ERRS
    latent_count: int = DEFAULT_LATENT_COUNT
    latent_shape: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        # Coerce before validating so that e.g. "dual" and numpy ints work.
        try:
            object.__setattr__(self, "scheduler", Scheduler(self.scheduler))
        except ValueError as exc:
            raise ValueError(f"unknown scheduler {self.scheduler!r}") from exc
        for name in ("rho", "msg_len_bytes", "tag_len_bytes", "max_errs", "latent_count"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        tau = float(self.tau)
        if not math.isfinite(tau) or tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau!r}")
        object.__setattr__(self, "tau", tau)
        if self.rho < 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if self.msg_len_bytes < 1 or self.msg_len_bytes > 0xFFFF:
            raise ValueError(f"msg_len_bytes must be in [1, 65535], got {self.msg_len_bytes}")
        if self.tag_len_bytes < 0 or self.tag_len_bytes > 64:
            raise ValueError(f"tag_len_bytes must be in [0, 64], got {self.tag_len_bytes}")
        if self.max_errs < 0:
            raise ValueError(f"max_errs must be >= 0, got {self.max_errs}")
        if self.latent_count < 1:
            raise ValueError(f"latent_count must be >= 1, got {self.latent_count}")
        shape = tuple(int(d) for d in self.latent_shape) or default_shape(self.latent_count)
        if math.prod(shape) != self.latent_count:
            raise ValueError(f"latent_shape {shape} does not hold {self.latent_count} values")
        object.__setattr__(self, "latent_shape", shape)

    @property
    def dual(self) -> bool:
        return self.scheduler is Scheduler.DUAL

    @property
    def frame_len_bytes(self) -> int:
        return self.msg_len_bytes + FRAME_PREFIX_BYTES


def ciphertext_bit_len(params: EmbedParams) -> int:
    """Bits actually embedded: encrypted frame plus truncated tag."""
    return 8 * (params.frame_len_bytes + params.tag_len_bytes)


def slot_probability(tau: float) -> float:
    """P(|z| >= tau) for a standard normal component."""
    return math.erfc(tau / math.sqrt(2.0))


def max_msg_len(
    tau: float,
    rho: int,
    latent_count: int = DEFAULT_LATENT_COUNT,
    tag_len_bytes: int = DEFAULT_TAG_LEN,
    margin_sd: float = 3.0,
) -> int:
    """Largest msg_len_bytes whose record fits the mask with high probability.

    The mask size is Binomial(latent_count, p); the record must fit in the
    expected slot count less ``margin_sd`` standard deviations. Returns 0 when
    not even a one-byte message fits.
    """
    p = slot_probability(tau)
    mean = latent_count * p
    sd = math.sqrt(latent_count * p * (1.0 - p))
    slots = max(0, math.floor(mean - margin_sd * sd))
    record_bytes = slots // rho // 8
    return max(0, min(0xFFFF, record_bytes - FRAME_PREFIX_BYTES - tag_len_bytes))


@dataclass(frozen=True)
class ParamTableRow:
    row_id: int
    model_id: str
    prompt: str
    params: EmbedParams


@dataclass(frozen=True)
class ParamTable:
    rows: tuple[ParamTableRow, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ParseError("parameter table has no rows")
        seen = set()
        for row in self.rows:
            if row.row_id in seen:
                raise ParseError(f"duplicate row_id {row.row_id}")
            seen.add(row.row_id)

    def __len__(self) -> int:
        return len(self.rows)

    @classmethod
    def single(cls, params: EmbedParams, model_id: str = "sd-v1-4", prompt: str = "") -> ParamTable:
        """One-row table, handy for experiments that sweep parameters."""
        return cls((ParamTableRow(0, model_id, prompt, params),))


def _parse_row(fields: list[str], lineno: int) -> ParamTableRow:
    if len(fields) != len(TABLE_HEADER):
        raise ParseError(f"line {lineno}: expected {len(TABLE_HEADER)} fields, got {len(fields)}")
    rec = dict(zip(TABLE_HEADER, fields))
    try:
        params = EmbedParams(
            tau=float(rec["tau"]),
            rho=int(rec["rho"]),
            scheduler=Scheduler(rec["scheduler"].strip().lower()),
            msg_len_bytes=int(rec["msg_len_bytes"]),
            tag_len_bytes=int(rec["tag_len_bytes"]),
            max_errs=int(rec["max_errs"]),
            latent_count=int(rec["latent_count"]),
        )
        row_id = int(rec["row_id"])
    except ValueError as exc:
        raise ParseError(f"line {lineno}: {exc}") from exc
    return ParamTableRow(row_id, rec["model_id"], rec["prompt"], params)


def load_table(text: bytes | str) -> ParamTable:
    """Parse a parameter table from CSV text.

    The header line is optional on input (a bare data row is accepted) but
    always written by :func:`dump_table`.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"table is not UTF-8: {exc}") from exc
    try:
        lines = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise ParseError(str(exc)) from exc
    rows = []
    for lineno, fields in enumerate(lines, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if lineno == 1 and tuple(f.strip() for f in fields) == TABLE_HEADER:
            continue
        rows.append(_parse_row(fields, lineno))
    return ParamTable(tuple(rows))


def dump_table(table: ParamTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in table.rows:
        p = row.params
        writer.writerow(
            [
                row.row_id,
                row.model_id,
                row.prompt,
                repr(p.tau),
                p.rho,
                p.scheduler.value,
                p.msg_len_bytes,
                p.tag_len_bytes,
                p.max_errs,
                p.latent_count,
            ]
        )
    return buf.getvalue()
