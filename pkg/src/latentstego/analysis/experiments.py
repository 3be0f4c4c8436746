"""Monte Carlo experiments: reliability, grid search, distinguishers, the game.

Every experiment is deterministic given its ``seed``. Per-trial keys,
messages and channel noise are derived from the seed and the trial index,
so sweeps over sigma or (tau, rho) reuse the same random draws and their
results are directly comparable.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import codec, keyschedule, record
from ..channel import ChannelModel, transmit
from ..errors import CapacityExceeded
from ..params import EmbedParams, ParamTable, ciphertext_bit_len, max_msg_len
from .distinguisher import LinearClassifier, histogram_features, projection_embed, train_distinguisher
from .stats import KsResult, auc, ks2, roc_curve

DEFAULT_SEED = b"latentstego/experiments/v1"

SCHEMES = ("ours", "projection")


def _sub(seed: bytes, label: str, index: int = 0) -> bytes:
    return hashlib.sha256(seed + b"/" + label.encode() + index.to_bytes(8, "big")).digest()


def trial_key(seed: bytes, index: int) -> bytes:
    return _sub(seed, "key", index)


def trial_message(seed: bytes, index: int, length: int) -> bytes:
    return keyschedule.Drbg(_sub(seed, "msg", index)).read(length)


# -- covers and alternative embedders --------------------------------------


def cover(s_key: bytes, ctr: int, table: ParamTable):
    """Latents the sampler would use for (key, ctr) with no message embedded."""
    bundle = keyschedule.derive(s_key, ctr)
    params = keyschedule.select_row(bundle, table).params
    x_T = keyschedule.sample_latents(bundle.seed_latent, params.latent_count)
    return (x_T, x_T.copy()) if params.dual else x_T


def projection_send(message: bytes, s_key: bytes, ctr: int, table: ParamTable):
    """Insecure baseline: project the same redundant ciphertext onto {0, +-sqrt(2)}.

    It touches as many latent components as our embedding would for the same
    row, which keeps the two schemes' footprints comparable.
    """
    bundle = keyschedule.derive(s_key, ctr)
    params = keyschedule.select_row(bundle, table).params
    rec = record.seal(bundle.k_enc, bundle.k_mac, ctr, message, params)
    bits = np.repeat(rec.to_bits(), params.rho)
    x = projection_embed(bits, params.latent_count, keyschedule.Drbg(bundle.seed_latent))
    return (x, x.copy()) if params.dual else x


def embedder(scheme: str) -> Callable:
    if scheme == "ours":
        return codec.send
    if scheme == "projection":
        return projection_send
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# -- reliability -------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    ok: bool
    false_accept: bool
    bit_errors: int
    n_bits: int


def run_trial(
    message: bytes,
    s_key: bytes,
    ctr: int,
    table: ParamTable,
    channel: ChannelModel,
    count_bits: bool = False,
) -> TrialOutcome:
    """send -> transmit -> receive once. Capacity overflow counts as a loss."""
    bundle = keyschedule.derive(s_key, ctr)
    params = keyschedule.select_row(bundle, table).params
    n_bits = ciphertext_bit_len(params)
    try:
        sent = codec.send(message, s_key, ctr, table)
    except CapacityExceeded:
        return TrialOutcome(False, False, n_bits, n_bits)
    observed = transmit(sent, channel)
    if not params.dual and isinstance(observed, tuple):
        # Single rows see one inversion; a dual channel's second draw is unused.
        observed = observed[0]
    got = codec.receive(observed, s_key, ctr, table)
    bit_errors = 0
    if count_bits:
        truth = record.seal(bundle.k_enc, bundle.k_mac, ctr, message, params).to_bits()
        decoded = codec.decode_observation(observed, s_key, ctr, table)
        bit_errors = int(np.count_nonzero(decoded[0] != truth))
    return TrialOutcome(got == message, got is not None and got != message, bit_errors, n_bits)


@dataclass(frozen=True)
class ReliabilityReport:
    trials: int
    successes: int
    false_accepts: int
    bit_errors: int
    total_bits: int

    @property
    def reliability(self) -> float:
        return self.successes / self.trials

    @property
    def bit_accuracy(self) -> float:
        return 1.0 - self.bit_errors / self.total_bits if self.total_bits else 1.0


def simulate(
    message: bytes,
    s_key: bytes,
    ctr: int,
    table: ParamTable,
    channel: ChannelModel,
    trials: int,
    count_bits: bool = True,
) -> ReliabilityReport:
    """Send the same message under counters ctr, ctr+1, ... through forked channels."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    outcomes = [
        run_trial(message, s_key, ctr + i, table, channel.fork(i), count_bits) for i in range(trials)
    ]
    return ReliabilityReport(
        trials,
        sum(o.ok for o in outcomes),
        sum(o.false_accept for o in outcomes),
        sum(o.bit_errors for o in outcomes),
        sum(o.n_bits for o in outcomes),
    )


def reliability(params: EmbedParams, channel: ChannelModel, trials: int, seed: bytes = DEFAULT_SEED) -> float:
    """Fraction of full-length random messages recovered exactly."""
    table = ParamTable.single(params)
    wins = 0
    for i in range(trials):
        msg = trial_message(seed, i, params.msg_len_bytes)
        wins += run_trial(msg, trial_key(seed, i), i, table, channel.fork(i)).ok
    return wins / trials


# -- grid search -------------------------------------------------------------


@dataclass(frozen=True)
class GridResult:
    tau: float
    rho: int
    capacity_bits: int
    reliability: float

    @property
    def expected_bits(self) -> float:
        return self.capacity_bits * self.reliability


def params_for(tau: float, rho: int, base: EmbedParams, margin_sd: float = 3.0) -> EmbedParams | None:
    """Row for (tau, rho) carrying the largest message that fits, or None."""
    n = max_msg_len(tau, rho, base.latent_count, base.tag_len_bytes, margin_sd)
    if n < 1:
        return None
    return replace(base, tau=tau, rho=rho, msg_len_bytes=n)


def _grid_cell(job) -> GridResult:
    tau, rho, trials, channel, base, seed = job
    params = params_for(tau, rho, base)
    if params is None:
        return GridResult(tau, rho, 0, 0.0)
    return GridResult(tau, rho, ciphertext_bit_len(params), reliability(params, channel, trials, seed))


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def grid_search(
    taus: Iterable[float],
    rhos: Iterable[int],
    trials: int,
    channel: ChannelModel,
    base: EmbedParams | None = None,
    seed: bytes = DEFAULT_SEED,
    workers: int = 1,
) -> list[GridResult]:
    """Expected bits received over a (tau, rho) grid, sorted by (tau, rho)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    base = base or EmbedParams(0.3, 6)
    jobs = [(float(t), int(r), trials, channel, base, seed) for t in sorted(taus) for r in sorted(rhos)]
    return _map(_grid_cell, jobs, workers)


def best_cell(results: Sequence[GridResult]) -> GridResult:
    return max(results, key=lambda r: (r.expected_bits, -r.rho, r.tau))


def _rel_job(job) -> bool:
    params, channel, seed, i = job
    msg = trial_message(seed, i, params.msg_len_bytes)
    return run_trial(msg, trial_key(seed, i), i, ParamTable.single(params), channel.fork(i)).ok


def calibrate_sigma(
    target: float,
    params: EmbedParams,
    trials: int,
    channel: ChannelModel | None = None,
    seed: bytes = DEFAULT_SEED,
    lo: float = 0.0,
    hi: float = 3.0,
    iters: int = 14,
    workers: int = 1,
) -> float:
    """Bisect the channel sigma so that reliability at ``params`` hits ``target``.

    Trials reuse the same keys, messages and unit noise at every sigma, so
    the estimated reliability is monotone in sigma and bisection is exact
    with respect to the sample.
    """
    channel = channel or ChannelModel(dual=params.dual)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        model = replace(channel, sigma=mid)
        jobs = [(params, model, seed, i) for i in range(trials)]
        rel = sum(_map(_rel_job, jobs, workers)) / trials
        if rel > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- distinguishers ----------------------------------------------------------


def observation_sets(
    scheme: str,
    n: int,
    channel: ChannelModel,
    table: ParamTable,
    seed: bytes = DEFAULT_SEED,
    embedded: bool = True,
    message_len: int | None = None,
) -> np.ndarray:
    """n post-channel latent sets (first copy), embedded or natural covers."""
    label = f"{scheme}/{'emb' if embedded else 'nat'}"
    send = embedder(scheme)
    rows = []
    for i in range(n):
        key = _sub(seed, label + "/key", i)
        if embedded:
            params = keyschedule.select_row(keyschedule.derive(key, 0), table).params
            length = params.msg_len_bytes if message_len is None else message_len
            x = send(trial_message(_sub(seed, label), i, length), key, 0, table)
        else:
            x = cover(key, 0, table)
        y = transmit(x, replace(channel, rng_seed=_sub(seed, label + "/noise", i)))
        rows.append(np.asarray(y[0] if isinstance(y, tuple) else y))
    return np.stack(rows)


@dataclass
class AttackResult:
    auc: float
    roc: np.ndarray
    classifier: LinearClassifier
    test_scores: np.ndarray
    test_labels: np.ndarray


def attack(
    scheme: str,
    n: int,
    channel: ChannelModel,
    table: ParamTable,
    seed: bytes = DEFAULT_SEED,
    train_frac: float = 0.8,
    epochs: int = 2000,
    lr: float = 0.5,
) -> AttackResult:
    """Train the histogram distinguisher on natural vs embedded sets, report held-out AUC."""
    if n < 2:
        raise ValueError("need at least 2 latent sets per class")
    nat = histogram_features(observation_sets(scheme, n, channel, table, seed, embedded=False))
    emb = histogram_features(observation_sets(scheme, n, channel, table, seed, embedded=True))
    n_train = min(n - 1, max(1, int(round(train_frac * n))))
    clf = train_distinguisher(emb[:n_train], nat[:n_train], epochs=epochs, lr=lr)
    test = np.vstack([emb[n_train:], nat[n_train:]])
    labels = np.concatenate([np.ones(n - n_train), np.zeros(n - n_train)]).astype(np.uint8)
    scores = clf.predict_proba(test)
    return AttackResult(auc(scores, labels), roc_curve(scores, labels), clf, scores, labels)


def ks_experiment(
    scheme: str,
    n: int,
    channel: ChannelModel,
    table: ParamTable,
    seed: bytes = DEFAULT_SEED,
) -> KsResult:
    """KS2 between pooled components of n natural and n embedded latent sets."""
    nat = observation_sets(scheme, n, channel, table, seed, embedded=False)
    emb = observation_sets(scheme, n, channel, table, seed, embedded=True)
    return ks2(emb.ravel(), nat.ravel())


# -- indistinguishability game ----------------------------------------------


@dataclass(frozen=True)
class GameView:
    """What an adversary sees in one round.

    ``s_key`` and ``ctr`` are the challenger's secrets. Keyless adversaries
    must ignore them; they exist so a key-holding oracle can be run through
    the same harness as a sanity bound.
    """

    params: EmbedParams
    observation: object
    table: ParamTable
    s_key: bytes
    ctr: int


Adversary = Callable[[GameView], int]


def coin_flip_adversary(seed: bytes = DEFAULT_SEED) -> Adversary:
    drbg = keyschedule.Drbg(_sub(seed, "coin-adversary"))
    return lambda view: int(drbg.next_word() & 1)


def key_oracle_adversary(view: GameView) -> int:
    return int(codec.receive(view.observation, view.s_key, view.ctr, view.table) is not None)


class HistogramAdversary:
    """Guess 'embedded' when the trained classifier says so."""

    def __init__(self, classifier: LinearClassifier, bins: int = 10, lo: float = -3.0, hi: float = 3.0):
        self.classifier = classifier
        self.bins, self.lo, self.hi = bins, lo, hi

    @classmethod
    def train(
        cls,
        scheme: str,
        n: int,
        channel: ChannelModel,
        table: ParamTable,
        seed: bytes = DEFAULT_SEED,
    ) -> HistogramAdversary:
        seed = _sub(seed, "adversary-training")
        nat = histogram_features(observation_sets(scheme, n, channel, table, seed, embedded=False))
        emb = histogram_features(observation_sets(scheme, n, channel, table, seed, embedded=True))
        return cls(train_distinguisher(emb, nat))

    def __call__(self, view: GameView) -> int:
        obs = view.observation
        first = obs[0] if isinstance(obs, tuple) else obs
        feats = histogram_features([first], self.bins, self.lo, self.hi)
        return int(self.classifier.predict(feats)[0])


def run_game(
    adversary: Adversary,
    trials: int,
    channel: ChannelModel,
    table: ParamTable,
    message_source: Callable[[int, EmbedParams], bytes] | None = None,
    seed: bytes = DEFAULT_SEED,
    scheme: str = "ours",
) -> float:
    """Estimated distinguishing advantage 2 * P(win) - 1.

    Each round draws a fresh key and a fair coin b; the adversary sees the
    channel output of either the embedded latents (b = 1) or the untouched
    cover latents for the same key (b = 0).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    send = embedder(scheme)
    if message_source is None:
        message_source = lambda i, p: trial_message(_sub(seed, "game-msg"), i, p.msg_len_bytes)  # noqa: E731
    coins = keyschedule.Drbg(_sub(seed, "game-coins"))
    wins = 0
    for i in range(trials):
        key = _sub(seed, "game-key", i)
        ctr = 0
        params = keyschedule.select_row(keyschedule.derive(key, ctr), table).params
        b = int(coins.next_word() & 1)
        x = send(message_source(i, params), key, ctr, table) if b else cover(key, ctr, table)
        obs = transmit(x, replace(channel, rng_seed=_sub(seed, "game-noise", i)))
        wins += int(adversary(GameView(params, obs, table, key, ctr)) == b)
    return 2.0 * wins / trials - 1.0
