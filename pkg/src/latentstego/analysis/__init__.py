"""Capacity math, statistical tests, distinguishers and Monte Carlo experiments."""

from .distinguisher import LinearClassifier, histogram_features, projection_embed, train_distinguisher
from .experiments import (
    GameView,
    GridResult,
    HistogramAdversary,
    attack,
    best_cell,
    calibrate_sigma,
    coin_flip_adversary,
    grid_search,
    key_oracle_adversary,
    ks_experiment,
    run_game,
    simulate,
)
from .stats import (
    KsResult,
    auc,
    expected_capacity_bpp,
    histogram,
    ks2,
    normal_cdf,
    qq_data,
    roc_curve,
    slot_fraction,
)

__all__ = [
    "GameView",
    "GridResult",
    "HistogramAdversary",
    "KsResult",
    "LinearClassifier",
    "attack",
    "auc",
    "best_cell",
    "calibrate_sigma",
    "coin_flip_adversary",
    "expected_capacity_bpp",
    "grid_search",
    "histogram",
    "histogram_features",
    "key_oracle_adversary",
    "ks2",
    "ks_experiment",
    "normal_cdf",
    "projection_embed",
    "qq_data",
    "roc_curve",
    "run_game",
    "simulate",
    "slot_fraction",
    "train_distinguisher",
]
