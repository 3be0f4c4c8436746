import io
import math

import numpy as np
import pytest

from conftest import small_table
from latentstego.analysis import experiments as ex
from latentstego.analysis import reports
from latentstego.analysis.distinguisher import (
    SQRT2,
    histogram_features,
    projection_embed,
    train_distinguisher,
)
from latentstego.analysis.stats import auc, ks2, qq_data
from latentstego.channel import ChannelModel
from latentstego.keyschedule import Drbg
from latentstego.params import EmbedParams, ParamTable, Scheduler, max_msg_len

SEED = b"test-experiments"


def _table(k=1024, scheduler=Scheduler.SINGLE):
    return ParamTable.single(EmbedParams(0.3, 6, scheduler, max_msg_len(0.3, 6, k), latent_count=k))


def test_projection_support_and_prefix():
    rng = Drbg(b"\x01" * 32)
    bits = np.array([0, 1, 1, 0, 1] * 20, dtype=np.uint8)
    x = projection_embed(bits, 200, rng)
    assert np.all(x[:100][bits == 0] == 0.0)
    assert np.allclose(np.abs(x[:100][bits == 1]), 1.41421356)
    assert projection_embed(np.zeros(10, np.uint8), 10, rng).tolist() == [0.0] * 10
    with pytest.raises(ValueError):
        projection_embed(np.zeros(11, np.uint8), 10, rng)


def test_projection_moments_match_standard_normal():
    rng = Drbg(b"\x02" * 32)
    bits = np.tile([0, 1], 50_000).astype(np.uint8)
    x = projection_embed(bits, bits.size, rng)
    assert abs(x.mean()) < 0.01
    assert abs(x.var() - 1.0) < 0.01
    assert set(np.unique(np.round(x, 8)).tolist()) == {0.0, round(SQRT2, 8), -round(SQRT2, 8)}


def test_qq_shows_projection_spikes():
    nat = np.random.default_rng(0).standard_normal(200_000)
    bits = np.tile([0, 1], 100_000).astype(np.uint8)
    proj = projection_embed(bits, bits.size, Drbg(b"\x03" * 32))
    q = qq_data(proj, nat)
    excess = q[:, 1] - q[:, 0]
    width = 6 / 100
    for centre in (0.0, SQRT2, -SQRT2):
        assert excess[int((centre + 3) // width)] > 0.1


def test_classifier_separable_toy():
    pos = np.array([[10, 0, 0], [9, 1, 0], [8, 2, 0]])
    neg = np.array([[0, 0, 10], [0, 1, 9], [1, 0, 9]])
    clf = train_distinguisher(pos, neg, epochs=500)
    assert clf.predict(pos).tolist() == [1, 1, 1]
    assert clf.predict(neg).tolist() == [0, 0, 0]
    assert np.all((clf.predict_proba(pos) > 0) & (clf.predict_proba(pos) < 1))


def test_classifier_deterministic():
    rng = np.random.default_rng(4)
    pos, neg = rng.integers(0, 50, (20, 10)), rng.integers(0, 50, (20, 10))
    a, b = train_distinguisher(pos, neg), train_distinguisher(pos, neg)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_classifier_null_auc():
    rng = np.random.default_rng(5)
    feats = lambda n: histogram_features(rng.standard_normal((n, 4096)))  # noqa: E731
    clf = train_distinguisher(feats(200), feats(200))
    scores = clf.predict_proba(np.vstack([feats(100), feats(100)]))
    labels = np.r_[np.ones(100), np.zeros(100)]
    assert 0.4 <= auc(scores, labels) <= 0.6


def test_simulate_noiseless_reliability_one():
    table = small_table(latent_count=1024, msg_len=16)
    rep = ex.simulate(b"abc", b"\x01" * 32, 0, table, ChannelModel(0.0, dual=True), 20)
    assert rep.reliability == 1.0 and rep.bit_accuracy == 1.0 and rep.false_accepts == 0


def test_simulate_reliability_non_increasing_in_sigma():
    table = small_table(latent_count=2048, msg_len=16, rho=3)
    key = b"\x02" * 32
    trials = 60
    rels = [ex.simulate(b"m", key, 0, table, ChannelModel(s, dual=True), trials).reliability for s in (0, 0.3, 0.6, 1.2)]
    slack = 3 * math.sqrt(0.25 / trials)
    for a, b in zip(rels, rels[1:]):
        assert b <= a + slack
    assert rels[0] == 1.0 and rels[-1] < rels[0]


def test_grid_search_noiseless():
    ch = ChannelModel(0.0, dual=True)
    base = EmbedParams(0.3, 6, Scheduler.DUAL, latent_count=1024)
    res = ex.grid_search([0.0, 0.5], [4, 8], 3, ch, base, seed=SEED)
    assert [(r.tau, r.rho) for r in res] == [(0.0, 4), (0.0, 8), (0.5, 4), (0.5, 8)]
    for r in res:
        assert r.reliability == 1.0 and r.expected_bits == r.capacity_bits
    assert res[0].expected_bits >= res[1].expected_bits


def test_grid_search_unfit_cell_is_zero():
    base = EmbedParams(0.3, 6, latent_count=64)
    (r,) = ex.grid_search([1.5], [16], 2, ChannelModel(0.0), base)
    assert r.capacity_bits == 0 and r.expected_bits == 0


def test_grid_csv():
    res = [ex.GridResult(0.3, 6, 2056, 0.5)]
    buf = io.StringIO()
    reports.write_grid_csv(res, buf)
    assert buf.getvalue() == "tau,rho,capacity_bits,reliability,expected_bits\n0.3,6,2056,0.5,1028\n"


def test_calibrate_sigma_hits_target():
    p = EmbedParams(0.3, 2, Scheduler.SINGLE, 8, latent_count=512)
    sigma = ex.calibrate_sigma(0.5, p, 40, seed=SEED, iters=10)
    assert 0 < sigma < 3
    lo = ex.reliability(p, ChannelModel(sigma * 0.8), 40, SEED)
    hi = ex.reliability(p, ChannelModel(sigma * 1.2), 40, SEED)
    assert lo >= 0.5 >= hi


def test_cover_is_unembedded_latents():
    table = _table()
    x = ex.cover(b"\x09" * 32, 0, table)
    y = __import__("latentstego").send(b"", b"\x09" * 32, 0, table)
    assert np.array_equal(np.abs(x), np.abs(y))
    assert not np.array_equal(x, y)


def test_game_coin_flip_near_zero():
    adv = ex.run_game(ex.coin_flip_adversary(SEED), 1000, ChannelModel(0.0), _table(1024), seed=SEED)
    assert -0.07 <= adv <= 0.07


def test_game_key_oracle_wins_noiseless():
    adv = ex.run_game(ex.key_oracle_adversary, 200, ChannelModel(0.0), _table(), seed=SEED)
    assert adv >= 0.99


def test_game_dual_table_runs():
    table = _table(scheduler=Scheduler.DUAL)
    adv = ex.run_game(ex.key_oracle_adversary, 50, ChannelModel(0.0, dual=True), table, seed=SEED)
    assert adv == 1.0


def test_game_custom_message_source():
    seen = []

    def source(i, params):
        seen.append(params.msg_len_bytes)
        return b"fixed"

    ex.run_game(ex.key_oracle_adversary, 20, ChannelModel(0.0), _table(), message_source=source, seed=SEED)
    assert seen and set(seen) == {_table().rows[0].params.msg_len_bytes}


def test_attack_small_scale():
    ch = ChannelModel(0.48)
    table = _table(4096)
    proj = ex.attack("projection", 60, ch, table, SEED)
    assert proj.auc >= 0.99
    ours = ex.attack("ours", 60, ch, table, SEED)
    assert 0.2 <= ours.auc <= 0.8


def test_observation_sets_deterministic():
    ch = ChannelModel(0.3)
    a = ex.observation_sets("ours", 3, ch, _table(), SEED)
    b = ex.observation_sets("ours", 3, ch, _table(), SEED)
    assert np.array_equal(a, b)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        ex.embedder("lsb")


def test_ks_experiment_projection_vs_ours():
    ch = ChannelModel(0.48)
    table = _table(4096)
    assert ex.ks_experiment("projection", 20, ch, table, SEED).p < 1e-20
    assert ks2([0.0, 1.0], [0.0, 1.0]).d == 0
