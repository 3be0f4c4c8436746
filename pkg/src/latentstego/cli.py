"""Command-line front end.

Exit codes: 0 success, 1 recovery failure, 2 input or format error.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from . import codec
from .analysis import experiments, reports
from .analysis.stats import ks2
from .channel import PRESETS, ChannelModel, read_latents, sigma_for_preset, write_latents
from .errors import CapacityExceeded, FormatError, MessageTooLong, ParseError
from .keyschedule import derive, select_row
from .params import EmbedParams, ParamTable, Scheduler, load_table, max_msg_len

EXIT_FAIL = 1
EXIT_INPUT = 2

DEFAULT_SEED_HEX = "00" * 32


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


def _hex32(value: str, what: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise InputError(f"{what} is not valid hex") from None
    if len(raw) != 32:
        raise InputError(f"{what} must be 64 hex characters (32 bytes), got {len(raw)} bytes")
    return raw


def _table(path: str) -> ParamTable:
    try:
        return load_table(Path(path).read_bytes())
    except OSError as exc:
        raise InputError(f"cannot read table: {exc}") from None
    except ParseError as exc:
        raise InputError(f"ParseError: {exc}") from None


def _message(msg: str | None, msg_file: str | None) -> bytes:
    if (msg is None) == (msg_file is None):
        raise InputError("give exactly one of --msg or --msg-file")
    if msg_file is not None:
        try:
            return Path(msg_file).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read message file: {exc}") from None
    return msg.encode("utf-8")


def _floats(spec: str) -> list[float]:
    """'0,0.1,0.5' or 'start:stop:step' (stop inclusive)."""
    try:
        if ":" in spec:
            start, stop, step = (float(s) for s in spec.split(":"))
            n = int(round((stop - start) / step))
            return [round(start + i * step, 10) for i in range(n + 1)]
        return [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"cannot parse number list {spec!r}") from None


def _ints(spec: str) -> list[int]:
    vals = _floats(spec)
    if any(v != int(v) for v in vals):
        raise InputError(f"expected integers in {spec!r}")
    return [int(v) for v in vals]


def _experiment_table(table_path: str | None, latent_count: int) -> ParamTable:
    if table_path:
        return _table(table_path)
    return ParamTable.single(
        EmbedParams(0.3, 6, Scheduler.SINGLE, max_msg_len(0.3, 6, latent_count), latent_count=latent_count)
    )


def _sigma(sigma: float | None, preset: str) -> float:
    return sigma if sigma is not None else sigma_for_preset(PRESETS[preset])


@click.group()
def main() -> None:
    """Hide authenticated messages in diffusion initial latents."""


@main.command()
def keygen() -> None:
    """Print a fresh 32-byte secret key as hex."""
    click.echo(os.urandom(32).hex())


@main.command("embed")
@click.option("--key", "key_hex", required=True, help="64 hex chars")
@click.option("--ctr", type=click.IntRange(0, 2**64 - 1), required=True)
@click.option("--table", "table_path", required=True, type=click.Path())
@click.option("--msg", default=None, help="message text (UTF-8)")
@click.option("--msg-file", default=None, type=click.Path(), help="raw message bytes")
@click.option("--out", "out_path", required=True, type=click.Path())
def embed_cmd(key_hex, ctr, table_path, msg, msg_file, out_path) -> None:
    """Encrypt MSG and write the latents carrying it as an LSTG file."""
    key = _hex32(key_hex, "--key")
    table = _table(table_path)
    message = _message(msg, msg_file)
    try:
        latents = codec.send(message, key, ctr, table)
    except MessageTooLong as exc:
        raise InputError(f"MessageTooLong: {exc}") from None
    except CapacityExceeded as exc:
        raise InputError(f"CapacityExceeded: {exc}") from None
    shape = select_row(derive(key, ctr), table).params.latent_shape
    with open(out_path, "wb") as fh:
        write_latents(latents, fh, shape)


@main.command("recover")
@click.option("--key", "key_hex", required=True)
@click.option("--ctr", type=click.IntRange(0, 2**64 - 1), required=True)
@click.option("--table", "table_path", required=True, type=click.Path())
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path(), help="also write raw message bytes here")
def recover_cmd(key_hex, ctr, table_path, in_path, out_path) -> None:
    """Recover the message from an LSTG file; prints FAIL and exits 1 if lost."""
    key = _hex32(key_hex, "--key")
    table = _table(table_path)
    try:
        with open(in_path, "rb") as fh:
            observed = read_latents(fh)
    except OSError as exc:
        raise InputError(f"IoError: {exc}") from None
    except FormatError as exc:
        raise InputError(f"FormatError: {exc}") from None
    try:
        message = codec.receive(observed, key, ctr, table)
    except ValueError as exc:
        # Wrong tensor count or size for the selected row.
        raise InputError(f"FormatError: {exc}") from None
    if message is None:
        click.echo("FAIL")
        sys.exit(EXIT_FAIL)
    if out_path:
        Path(out_path).write_bytes(message)
    try:
        click.echo(message.decode("utf-8"))
    except UnicodeDecodeError:
        click.echo(message.hex())


@main.command()
@click.option("--key", "key_hex", required=True)
@click.option("--ctr", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--table", "table_path", required=True, type=click.Path())
@click.option("--msg", default=None)
@click.option("--msg-file", default=None, type=click.Path())
@click.option("--sigma", type=click.FloatRange(min=0), default=0.0, show_default=True)
@click.option("--corr", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", "seed_hex", default=DEFAULT_SEED_HEX, show_default=True, help="channel seed, 64 hex chars")
def simulate(key_hex, ctr, table_path, msg, msg_file, sigma, corr, trials, seed_hex) -> None:
    """Reliability of send -> noisy channel -> receive, as CSV."""
    key = _hex32(key_hex, "--key")
    seed = _hex32(seed_hex, "--seed")
    table = _table(table_path)
    message = _message(msg, msg_file)
    # Dual noise is drawn per observation; single rows only use the first draw.
    channel = ChannelModel(sigma, dual=True, corr=corr, rng_seed=seed)
    try:
        rep = experiments.simulate(message, key, ctr, table, channel, trials)
    except MessageTooLong as exc:
        raise InputError(f"MessageTooLong: {exc}") from None
    click.echo("sigma,corr,trials,reliability,bit_accuracy,false_accepts")
    click.echo(f"{sigma:g},{corr:g},{trials},{rep.reliability:.6g},{rep.bit_accuracy:.6g},{rep.false_accepts}")


@main.command()
@click.option("--taus", default="0:1.5:0.1", show_default=True, help="list 'a,b,c' or range 'start:stop:step'")
@click.option("--rhos", default="1:16:1", show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--sigma", type=click.FloatRange(min=0), default=None, help="noise std; default: PNG preset")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="png", show_default=True)
@click.option("--corr", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--scheduler", type=click.Choice(["single", "dual"]), default="dual", show_default=True)
@click.option("--latent-count", type=click.IntRange(min=1), default=16384, show_default=True)
@click.option("--seed", "seed_hex", default=DEFAULT_SEED_HEX, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(), help="CSV path (default stdout)")
def gridsearch(taus, rhos, trials, sigma, preset, corr, scheduler, latent_count, seed_hex, workers, out_path) -> None:
    """Expected bits received over a (tau, rho) grid."""
    seed = _hex32(seed_hex, "--seed")
    channel = ChannelModel(_sigma(sigma, preset), dual=scheduler == "dual", corr=corr, rng_seed=seed)
    base = EmbedParams(0.3, 6, Scheduler(scheduler), latent_count=latent_count)
    results = experiments.grid_search(_floats(taus), _ints(rhos), trials, channel, base, seed, workers)
    if out_path:
        with open(out_path, "w", newline="") as fh:
            reports.write_grid_csv(results, fh)
    else:
        reports.write_grid_csv(results, sys.stdout)


def _check_n(n: int) -> None:
    if n < 2:
        raise click.UsageError("--n must be at least 2")


@main.command("attack")
@click.option("--scheme", type=click.Choice(experiments.SCHEMES), default="ours", show_default=True)
@click.option("--n", "n", type=int, default=500, show_default=True, help="latent sets per class")
@click.option("--sigma", type=click.FloatRange(min=0), default=None, help="noise std; default: PNG preset")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="png", show_default=True)
@click.option("--latent-count", type=click.IntRange(min=1), default=16384, show_default=True)
@click.option("--table", "table_path", default=None, type=click.Path())
@click.option("--seed", "seed_hex", default=DEFAULT_SEED_HEX, show_default=True)
@click.option("--roc-out", default=None, type=click.Path(), help="ROC CSV path (default stdout)")
def attack_cmd(scheme, n, sigma, preset, latent_count, table_path, seed_hex, roc_out) -> None:
    """Histogram distinguisher, 80/20 split; prints AUC then ROC CSV."""
    _check_n(n)
    seed = _hex32(seed_hex, "--seed")
    table = _experiment_table(table_path, latent_count)
    channel = ChannelModel(_sigma(sigma, preset), rng_seed=seed)
    res = experiments.attack(scheme, n, channel, table, seed)
    click.echo(f"auc,{res.auc:.6f}")
    if roc_out:
        with open(roc_out, "w", newline="") as fh:
            reports.write_roc_csv(res.roc, fh)
    else:
        reports.write_roc_csv(res.roc, sys.stdout)


@main.command()
@click.option("--scheme", type=click.Choice(experiments.SCHEMES), default="ours", show_default=True)
@click.option("--n", "n", type=int, default=500, show_default=True)
@click.option("--sigma", type=click.FloatRange(min=0), default=None)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="png", show_default=True)
@click.option("--latent-count", type=click.IntRange(min=1), default=16384, show_default=True)
@click.option("--table", "table_path", default=None, type=click.Path())
@click.option("--seed", "seed_hex", default=DEFAULT_SEED_HEX, show_default=True)
@click.option("--self-test", is_flag=True, help="compare the natural set with itself (D must be 0)")
def kstest(scheme, n, sigma, preset, latent_count, table_path, seed_hex, self_test) -> None:
    """Two-sample KS test of embedded vs natural latents, as CSV."""
    _check_n(n)
    seed = _hex32(seed_hex, "--seed")
    table = _experiment_table(table_path, latent_count)
    channel = ChannelModel(_sigma(sigma, preset), rng_seed=seed)
    if self_test:
        nat = experiments.observation_sets(scheme, n, channel, table, seed, embedded=False)
        res = ks2(nat.ravel(), np.array(nat.ravel()))
    else:
        res = experiments.ks_experiment(scheme, n, channel, table, seed)
    reports.write_ks_csv(res, sys.stdout)


if __name__ == "__main__":
    main()
