"""Detection result container and the shared hard-decision back end."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..codec import ActivationPattern, bits_from_indices, group_supports, pattern_table, project_support
from ..core_types import ImConfig
from ..transform import DafVector


@dataclass
class DetectionResult:
    x_hat: DafVector
    pattern_idx: np.ndarray  # one per pattern-carrying unit
    symbol_idx: np.ndarray  # (groups, m) alphabet indices
    bits: np.ndarray
    iterations_used: int = 0
    flops: int = 0
    diagnostics: dict = field(default_factory=dict, repr=False)

    def patterns(self, im: ImConfig) -> list[ActivationPattern]:
        table = pattern_table(im.n, im.m)
        return [table[i] for i in np.repeat(self.pattern_idx, im.groups_per_unit)]

    def symbols(self, im: ImConfig) -> np.ndarray:
        return im.alphabet[self.symbol_idx]


def unit_scores(im: ImConfig, carrier_scores: np.ndarray) -> np.ndarray:
    """Per-carrier activation scores -> (units, n); Scheme II sums the
    groups of each subblock."""
    s = np.asarray(carrier_scores, dtype=float).reshape(im.n_units, im.groups_per_unit, im.n)
    return s.sum(axis=1)


def active_positions(im: ImConfig, pattern_idx: np.ndarray) -> np.ndarray:
    """Absolute carrier indices of the active carriers, shape (groups, m)."""
    support = group_supports(im, pattern_idx[None, :])[0]
    return support + (np.arange(im.n_groups) * im.n)[:, None]


def decide(im: ImConfig, activation: np.ndarray, symbol_scores: np.ndarray, **extra) -> DetectionResult:
    """Hard decision from activation scores (N,) and per-carrier symbol
    scores (N, M) where larger is better."""
    pidx = project_support(im, unit_scores(im, activation))
    pos = active_positions(im, pidx)
    sidx = np.argmax(symbol_scores[pos], axis=-1)
    x = np.zeros(im.N, dtype=complex)
    x[pos.ravel()] = im.alphabet[sidx.ravel()]
    bits = bits_from_indices(im, pidx[None, :], sidx[None])[0]
    return DetectionResult(DafVector(x), pidx, sidx, bits, **extra)


def format_diagnostics(result: DetectionResult, sep: str = ",") -> str:
    """Delimited text dump: iterations, xi trajectory, then one row of
    final marginals per carrier."""
    d = result.diagnostics
    lines = [f"iterations{sep}{result.iterations_used}"]
    xi = d.get("xi_history", [])
    lines.append(sep.join(["xi"] + [repr(float(v)) for v in xi]))
    marg = d.get("marginals")
    if marg is not None:
        for c, row in enumerate(np.asarray(marg)):
            lines.append(sep.join([f"c{c}"] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"
