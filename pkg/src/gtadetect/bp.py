"""Belief propagation on the discretized Gaussian tree.

Factor tables hold log-potentials.  Both sweeps run in the log domain and
every message is renormalized as it is produced (log-sum-exp zero for
sum-product, max zero for max-product), which keeps high-SNR instances
from underflowing.  Nodes at equal depth are processed together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericFailureError


@dataclass(frozen=True)
class FactorTables:
    """Log-potentials of ``f(x_root) * prod_i f(x_i | x_parent(i))`` on the alphabet.

    Attributes
    ----------
    points : ndarray, shape (K,)
        Alphabet the tables are sampled on.
    root_log_potential : ndarray, shape (K,)
    edge_log_potentials : ndarray, shape (N, K, K)
        ``[i, a, b] = log f(x_i = points[a] | x_parent(i) = points[b])``.
        The root's slice is zero and never read.
    """

    points: np.ndarray
    root_log_potential: np.ndarray
    edge_log_potentials: np.ndarray

    @property
    def root_potential(self):
        return np.exp(self.root_log_potential)

    @property
    def edge_potentials(self):
        return np.exp(self.edge_log_potentials)

    def log_density(self, tree, idx):
        """Log of the unnormalized tree product at the assignment `idx`."""
        idx = np.asarray(idx)
        nodes = tree.order[1:]
        return float(
            self.root_log_potential[idx[tree.root]]
            + self.edge_log_potentials[nodes, idx[nodes], idx[tree.parent[nodes]]].sum()
        )


@dataclass(frozen=True)
class BeliefTable:
    """Per-variable distributions over the alphabet, shape (N, K)."""

    beliefs: np.ndarray

    def argmax(self):
        return np.argmax(self.beliefs, axis=1)


def build_factor_tables(tree, cpds, post, constellation):
    pts = constellation.points
    n = tree.n
    r = tree.root
    d = pts - post.z[r]
    root_log = -0.5 * d * d / post.C[r, r]
    edge_log = np.zeros((n, pts.size, pts.size))
    if cpds:
        child = np.array([c.child for c in cpds])
        slope = np.array([c.slope for c in cpds])
        offset = np.array([c.mean_offset for c in cpds])
        var = np.array([c.variance for c in cpds])
        if not np.all(var > 0):
            raise InvalidArgumentError("conditional variances must be positive")
        # residual[k, a, b] = points[a] - (offset_k + slope_k * points[b])
        resid = pts[None, :, None] - (offset[:, None, None] + slope[:, None, None] * pts[None, None, :])
        edge_log[child] = -0.5 * resid * resid / var[:, None, None]
    return FactorTables(pts, root_log, edge_log)


def _lse(M, axis):
    mx = M.max(axis=axis, keepdims=True)
    return np.squeeze(mx, axis) + np.log(np.exp(M - mx).sum(axis=axis))


def _normalize_lse(msg):
    msg = msg - msg.max(axis=-1, keepdims=True)
    return msg - np.log(np.exp(msg).sum(axis=-1, keepdims=True))


def _normalize_max(msg):
    return msg - msg.max(axis=-1, keepdims=True)


def _to_probabilities(log_b):
    # a non-finite entry anywhere means some message could not be normalized
    p = np.exp(log_b - log_b.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    if not np.isfinite(p).all():
        raise NumericFailureError("belief propagation produced an unnormalizable message")
    return p


def _sweeps(ft, tree, reduce, normalize, keep_argmax=False):
    """Leaves-to-root then root-to-leaves passes; returns log beliefs."""
    n, K = tree.n, ft.points.size
    parent = tree.parent
    edge = ft.edge_log_potentials
    down = np.zeros((n, K))       # log m_{i -> parent(i)}(x_parent)
    inc = np.zeros((n, K))        # sum of children's down messages at each node
    choice = np.zeros((n, K), dtype=np.intp) if keep_argmax else None
    for lvl in reversed(tree.levels[1:]):
        M = edge[lvl] + inc[lvl][:, :, None]
        msg = normalize(reduce(M, 1))
        if keep_argmax:
            choice[lvl] = np.argmax(M, axis=1)
        down[lvl] = msg
        np.add.at(inc, parent[lvl], msg)

    top = np.empty((n, K))        # log m_{parent(i) -> i}, root gets its own potential
    top[tree.root] = ft.root_log_potential
    for lvl in tree.levels[1:]:
        p = parent[lvl]
        base = top[p] + inc[p] - down[lvl]
        M = edge[lvl] + base[:, None, :]
        top[lvl] = normalize(reduce(M, 2))
    return top + inc, choice


def run_sum_product(ft, tree):
    """Exact marginals of the tree distribution."""
    log_b, _ = _sweeps(ft, tree, _lse, _normalize_lse)
    return BeliefTable(_to_probabilities(log_b))


def _max(M, axis):
    return M.max(axis=axis)


def run_max_product(ft, tree):
    """Max-marginals and the joint maximizer of the tree distribution.

    Returns ``(BeliefTable, idx)`` where `idx` holds alphabet indices of the
    MAP assignment, recovered by backtracking from the root.  Ties resolve
    to the smaller alphabet index.
    """
    log_b, choice = _sweeps(ft, tree, _max, _normalize_max, keep_argmax=True)
    idx = np.empty(tree.n, dtype=np.intp)
    idx[tree.root] = int(np.argmax(log_b[tree.root]))
    parent = tree.parent
    for lvl in tree.levels[1:]:
        idx[lvl] = choice[lvl, idx[parent[lvl]]]
    return BeliefTable(_to_probabilities(log_b)), idx


def run_loopy_bp(system, constellation, max_iters=50, damping=0.0, tol=1e-6):
    """Flooding sum-product on the complete pairwise field of ``p(x|y)``.

    Pairwise potentials are ``exp(-G_ij x_i x_j / sigma2)`` and single-node
    potentials ``exp(-(G_ii x_i^2 - 2 b_i x_i) / (2 sigma2))`` with
    ``G = H'H`` and ``b = H'y``.  No exactness guarantee: on loopy graphs the
    returned beliefs may be far from the true marginals.

    Returns ``(BeliefTable, iterations)``.
    """
    if max_iters < 1:
        raise InvalidArgumentError(f"max_iters must be >= 1, got {max_iters}")
    if not 0 <= damping < 1:
        raise InvalidArgumentError(f"damping must lie in [0, 1), got {damping}")
    if system.y is None:
        raise InvalidArgumentError("system has no observation")
    s2 = system.noise_variance
    if not s2 > 0:
        raise InvalidArgumentError("loopy BP needs a positive noise variance")
    pts = constellation.points
    H, y = system.H, system.y
    G = H.T @ H
    b = H.T @ y
    n, K = G.shape[0], pts.size
    node_log = -(np.diag(G)[:, None] * pts**2 - 2.0 * b[:, None] * pts) / (2.0 * s2)
    # pair[j, i, a_i, a_j]: log psi_ij for the message j -> i
    pair = -(G[:, :, None, None] * pts[None, None, :, None] * pts[None, None, None, :]) / s2
    off = ~np.eye(n, dtype=bool)

    msg = np.full((n, n, K), -np.log(K))   # msg[j, i] = log m_{j -> i}(x_i)
    msg[~off] = 0.0
    iters = 0
    for iters in range(1, max_iters + 1):
        inc = msg.sum(axis=0)                                   # inc[j] over x_j
        pre = node_log[:, None, :] + inc[:, None, :] - msg.transpose(1, 0, 2)
        new = _normalize_lse(_lse(pair + pre[:, :, None, :], 3))
        if damping:
            new = np.logaddexp(np.log1p(-damping) + new, np.log(damping) + msg)
            new = _normalize_lse(new)
        new[~off] = 0.0
        delta = np.max(np.abs(np.exp(new) - np.exp(msg))[off], initial=0.0)
        msg = new
        if delta < tol:
            break
    log_b = node_log + msg.sum(axis=0)
    return BeliefTable(_to_probabilities(log_b)), iters
