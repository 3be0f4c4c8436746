"""CSV emitters for experiment results."""

from __future__ import annotations

import csv
from typing import Iterable, TextIO

import numpy as np

from .experiments import GridResult
from .stats import KsResult

GRID_HEADER = ("tau", "rho", "capacity_bits", "reliability", "expected_bits")
ROC_HEADER = ("fpr", "tpr")
QQ_HEADER = ("ref_prop", "sample_prop")
KS_HEADER = ("d", "p", "n1", "n2")


def _writer(out: TextIO):
    return csv.writer(out, lineterminator="\n")


def write_grid_csv(results: Iterable[GridResult], out: TextIO) -> None:
    w = _writer(out)
    w.writerow(GRID_HEADER)
    for r in sorted(results, key=lambda r: (r.tau, r.rho)):
        w.writerow([f"{r.tau:g}", r.rho, r.capacity_bits, f"{r.reliability:.6g}", f"{r.expected_bits:.6g}"])


def write_pairs_csv(rows: np.ndarray, header: tuple[str, str], out: TextIO) -> None:
    w = _writer(out)
    w.writerow(header)
    for a, b in np.asarray(rows):
        w.writerow([f"{a:.10g}", f"{b:.10g}"])


def write_roc_csv(roc: np.ndarray, out: TextIO) -> None:
    write_pairs_csv(roc, ROC_HEADER, out)


def write_qq_csv(qq: np.ndarray, out: TextIO) -> None:
    write_pairs_csv(qq, QQ_HEADER, out)


def write_ks_csv(result: KsResult, out: TextIO) -> None:
    w = _writer(out)
    w.writerow(KS_HEADER)
    w.writerow([f"{result.d:.10g}", f"{result.p:.10g}", result.n1, result.n2])
