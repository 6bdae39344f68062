"""Double-layer (DLMP) and single-layer message passing detectors.

The factor graph is stored edge-wise: edge ``e`` joins observation
``rows[e]`` and variable ``cols[e]`` wherever ``|h_eff[r, c]| > 1e-12``.
All per-edge messages are arrays of shape (E, K) over the augmented
alphabet ``[0, a_1, ..., a_M]`` (column 0 is the inactive state).  Products
of messages are accumulated in the log domain; every stored PMF is floored
at ``PMF_FLOOR`` and renormalised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..core_types import AfdmParams, DetectorOptions, ImConfig
from .common import DetectionResult, decide
from .flops import dlmp_flops_per_iter, mp_flops_per_iter

EDGE_THRESHOLD = 1e-12
PMF_FLOOR = 1e-300
_LOG_FLOOR = np.log(PMF_FLOOR)


def _normalize_log(logp: np.ndarray) -> np.ndarray:
    """Row-wise normalisation of log-weights, floored."""
    p = np.exp(logp - logp.max(axis=-1, keepdims=True))
    p /= p.sum(axis=-1, keepdims=True)
    # the floor perturbs the total by at most K * 1e-300
    return np.maximum(p, PMF_FLOOR, out=p)


def _normalize(p: np.ndarray) -> np.ndarray:
    p = np.maximum(p, PMF_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


@dataclass
class FactorGraph:
    rows: np.ndarray
    cols: np.ndarray
    h: np.ndarray
    N: int
    row_sum: sp.csr_matrix = field(repr=False)
    col_sum: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_matrix(cls, h_eff: np.ndarray, threshold: float = EDGE_THRESHOLD) -> "FactorGraph":
        N = h_eff.shape[0]
        rows, cols = np.nonzero(np.abs(h_eff) > threshold)
        E = rows.size
        ones = np.ones(E)
        R = sp.csr_matrix((ones, (rows, np.arange(E))), shape=(N, E))
        C = sp.csr_matrix((ones, (cols, np.arange(E))), shape=(N, E))
        return cls(rows, cols, h_eff[rows, cols], N, R, C)

    @property
    def E(self) -> int:
        return self.rows.size


@dataclass
class MessageState:
    """Working probabilities of one detection call.

    ``v`` and ``pr`` are the observation-to-variable and variable-to-
    observation PMFs per edge; ``f`` and ``u`` are (N, 2) indicator
    posteriors and constraint messages over the states (inactive, active).
    """

    graph: FactorGraph
    alphabet_b: np.ndarray
    v: np.ndarray
    pr: np.ndarray
    f: np.ndarray
    u: np.ndarray
    log_v: np.ndarray
    col_log: np.ndarray | None = None
    xi_history: list = field(default_factory=list)
    best_marginals: np.ndarray | None = None
    best_xi: float = 0.0
    iteration: int = 0

    @classmethod
    def initial(cls, graph: FactorGraph, alphabet_b: np.ndarray) -> "MessageState":
        K = alphabet_b.size
        E, N = graph.E, graph.N
        uniform = np.full((E, K), 1.0 / K)
        return cls(
            graph=graph,
            alphabet_b=alphabet_b,
            v=uniform.copy(),
            pr=uniform.copy(),
            f=np.full((N, 2), 0.5),
            u=np.full((N, 2), 0.5),
            log_v=np.log(uniform),
        )

    def marginals(self) -> np.ndarray:
        """Symbol posteriors ``Pr_c(x) ∝ u_c(state(x)) prod_r v_{r,c}(x)``."""
        return _normalize_log(self._log_u_expanded() + self.col_log)

    def _log_u_expanded(self) -> np.ndarray:
        lu = np.log(np.maximum(self.u, PMF_FLOOR))
        K = self.alphabet_b.size
        return np.concatenate([lu[:, :1], np.repeat(lu[:, 1:2], K - 1, axis=1)], axis=1)


def observation_update(state: MessageState, y: np.ndarray, N0: float) -> None:
    """Gaussian-approximated interference and observation messages."""
    g = state.graph
    xb = state.alphabet_b
    mean = state.pr @ xb
    var = np.maximum(state.pr @ (np.abs(xb) ** 2) - np.abs(mean) ** 2, 0.0)
    hm = g.h * mean
    hv = np.abs(g.h) ** 2 * var
    tot_m = g.row_sum @ hm
    tot_v = g.row_sum @ hv
    mu = tot_m[g.rows] - hm
    s2 = np.maximum(tot_v[g.rows] - hv + N0, 1e-12 * N0)
    d = (y[g.rows] - mu)[:, None] - g.h[:, None] * xb[None, :]
    log_v = -(d.real**2 + d.imag**2) / s2[:, None]
    state.v = _normalize_log(log_v)
    state.log_v = np.log(state.v)
    state.col_log = np.asarray(g.col_sum @ state.log_v)


def indicator_update(state: MessageState, opts: DetectorOptions) -> None:
    """Activation posteriors from the product of observation messages."""
    cl = state.col_log
    log_f = np.stack([cl[:, 0], np.logaddexp.reduce(cl[:, 1:], axis=1)], axis=1)
    f_new = _normalize_log(log_f)
    state.f = _normalize(opts.damping * f_new + (1 - opts.damping) * state.f)


def count_distribution(f: np.ndarray) -> np.ndarray:
    """Distribution of the number of active nodes, given (..., k, 2) PMFs.

    Returns (..., k + 1); a convolution of two-point PMFs.
    """
    k = f.shape[-2]
    pmf = np.zeros(f.shape[:-2] + (k + 1,))
    pmf[..., 0] = 1.0
    for j in range(k):
        q0 = f[..., j, 0:1]
        q1 = f[..., j, 1:2]
        nxt = pmf * q0
        nxt[..., 1:] += pmf[..., :-1] * q1
        pmf = nxt
    return pmf


def constraint_update(state: MessageState, im: ImConfig) -> None:
    """Messages from each group's "exactly m active" constraint node."""
    n, m = im.n, im.m
    fg = state.f.reshape(-1, n, 2)
    u = np.empty_like(fg)
    for j in range(n):
        others = np.delete(fg, j, axis=1)
        counts = count_distribution(others)  # (G, n)
        u[:, j, 1] = counts[:, m - 1]
        u[:, j, 0] = counts[:, m] if m <= n - 1 else 0.0
    state.u = _normalize(u.reshape(-1, 2))


def variable_update(state: MessageState, opts: DetectorOptions) -> None:
    """Extrinsic variable-to-observation PMFs, damped."""
    g = state.graph
    lu = state._log_u_expanded()
    log_t = lu[g.cols] + state.col_log[g.cols] - state.log_v
    pr_new = _normalize_log(log_t)
    state.pr = _normalize(opts.damping * pr_new + (1 - opts.damping) * state.pr)


def _convergence(state: MessageState, opts: DetectorOptions) -> tuple[float, np.ndarray]:
    marg = state.marginals()
    xi = float(np.mean(marg.max(axis=1) >= 1 - opts.conv_tol))
    return xi, marg


def _track(state: MessageState, xi: float, marg: np.ndarray) -> None:
    state.xi_history.append(xi)
    # first iteration always seeds the stored marginals
    if state.best_marginals is None or xi > state.best_xi:
        state.best_marginals = marg
        state.best_xi = xi


def run_dlmp(y, h_eff, im: ImConfig, N0: float, opts: DetectorOptions) -> MessageState:
    """Iterate the double-layer schedule and return the final state."""
    state = MessageState.initial(FactorGraph.from_matrix(h_eff), im.augmented_alphabet)
    y = np.asarray(y, dtype=complex)
    for it in range(1, opts.max_iter + 1):
        state.iteration = it
        observation_update(state, y, N0)
        indicator_update(state, opts)
        constraint_update(state, im)
        variable_update(state, opts)
        xi, marg = _convergence(state, opts)
        _track(state, xi, marg)
        if xi >= 1.0:
            break
    return state


def run_mp(y, h_eff, im: ImConfig, N0: float, opts: DetectorOptions) -> MessageState:
    """Single-layer message passing over the augmented alphabet (u uniform)."""
    state = MessageState.initial(FactorGraph.from_matrix(h_eff), im.augmented_alphabet)
    y = np.asarray(y, dtype=complex)
    for it in range(1, opts.max_iter + 1):
        state.iteration = it
        observation_update(state, y, N0)
        variable_update(state, opts)
        xi, marg = _convergence(state, opts)
        _track(state, xi, marg)
        if xi >= 1.0:
            break
    return state


def _paths_per_row(state: MessageState, nt: int) -> int:
    return max(1, int(round(state.graph.E / state.graph.N / nt)))


def dlmp_detect(y, eff, im: ImConfig, params: AfdmParams, opts: DetectorOptions | None = None) -> DetectionResult:
    opts = opts or DetectorOptions()
    h = eff.h_eff if hasattr(eff, "h_eff") else np.asarray(eff)
    state = run_dlmp(y, h, im, params.noise_var, opts)
    flops = dlmp_flops_per_iter(im.N, _paths_per_row(state, params.nt), params.nt, im.mod_order, im.n)
    return decide(
        im,
        state.f[:, 1],
        state.best_marginals[:, 1:],
        iterations_used=state.iteration,
        flops=flops * state.iteration,
        diagnostics={"xi_history": list(state.xi_history), "marginals": state.best_marginals, "state": state},
    )


def mp_detect(y, eff, im: ImConfig, params: AfdmParams, opts: DetectorOptions | None = None) -> DetectionResult:
    opts = opts or DetectorOptions()
    h = eff.h_eff if hasattr(eff, "h_eff") else np.asarray(eff)
    state = run_mp(y, h, im, params.noise_var, opts)
    best = state.best_marginals
    flops = mp_flops_per_iter(im.N, _paths_per_row(state, params.nt), params.nt, im.mod_order)
    return decide(
        im,
        best[:, 1:].sum(axis=1),
        best[:, 1:],
        iterations_used=state.iteration,
        flops=flops * state.iteration,
        diagnostics={"xi_history": list(state.xi_history), "marginals": best, "state": state},
    )
