"""MIMO detectors sharing one calling convention.

Every ``detect_*`` function takes a real :class:`LinearSystem` carrying an
observation and a :class:`Constellation`, and returns a
:class:`DetectionResult` whose `elapsed_us` covers only the detection work.
"""

from __future__ import annotations

import functools
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bp
from .errors import BudgetExceededError, InvalidArgumentError
from .posterior import mmse_posterior, squared_correlations, zf_posterior
from .tree import edge_cpds, line_tree, max_spanning_tree

DEFAULT_ML_BUDGET = 2**24


@dataclass(frozen=True)
class DetectionResult:
    hard: np.ndarray
    soft: Optional[bp.BeliefTable] = None
    elapsed_us: float = 0.0


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        hard, soft = fn(*args, **kwargs)
        return DetectionResult(hard, soft, (time.perf_counter() - t0) * 1e6)

    return wrapper


def _energy(c, e):
    return c.energy if e is None else e


@_timed
def detect_zf(system, c):
    """Zero-forcing: slice the least-squares solution componentwise."""
    return c.slice_array(zf_posterior(system).z), None


@_timed
def detect_mmse(system, c, e=None):
    """Slice the MMSE estimate componentwise."""
    return c.slice_array(mmse_posterior(system, _energy(c, e)).z), None


@_timed
def detect_mmse_sic(system, c, e=None):
    """MMSE successive interference cancellation with optimal ordering.

    At each step the undetected symbol with the smallest MMSE error variance
    is sliced and its contribution removed from the observation.
    """
    e = _energy(c, e)
    if not e > 0:
        raise InvalidArgumentError(f"symbol energy must be positive, got {e}")
    if system.y is None:
        raise InvalidArgumentError("system has no observation")
    H = system.H
    G = H.T @ H
    A = G.copy()
    A[np.diag_indices_from(A)] += system.noise_variance / e
    # P stays the error covariance of the undetected set: a rank-one
    # downdate after each decision zeroes the detected row and column
    P = np.linalg.inv(A)
    g = H.T @ system.y
    err = np.diag(P).copy()
    hard = np.empty(H.shape[1])
    for _ in range(H.shape[1]):
        k = int(np.argmin(err))
        pk = P[k].copy()
        xk = c.slice(pk @ g)
        hard[k] = xk
        g -= G[:, k] * xk
        P -= np.outer(pk, pk) / pk[k]
        err -= pk * pk / pk[k]
        err[k] = np.inf
    return hard, None


def gta_tree(post, tree_kind="chowliu"):
    if tree_kind == "chowliu":
        return max_spanning_tree(squared_correlations(post))
    if tree_kind == "line":
        return line_tree(post.n)
    raise InvalidArgumentError(f"unknown tree kind {tree_kind!r}")


@_timed
def detect_gta(system, c, e=None, variant="bayesian", tree_kind="chowliu", mode="sum"):
    """Gaussian tree approximation detector.

    Parameters
    ----------
    variant : {"bayesian", "zf"}
        Posterior the tree is fitted to: MMSE form with prior ``N(0, e I)``,
        or the plain least-squares form.
    tree_kind : {"chowliu", "line"}
        Maximum spanning tree on squared correlations, or the chain
        ``0 - 1 - ... - (N-1)``.
    mode : {"sum", "max"}
        Per-variable argmax of sum-product marginals, or the max-product
        joint maximizer.
    """
    if variant == "bayesian":
        post = mmse_posterior(system, _energy(c, e))
    elif variant == "zf":
        post = zf_posterior(system)
    else:
        raise InvalidArgumentError(f"unknown GTA variant {variant!r}")
    tree = gta_tree(post, tree_kind)
    ft = bp.build_factor_tables(tree, edge_cpds(tree, post), post, c)
    if mode == "sum":
        beliefs = bp.run_sum_product(ft, tree)
        idx = beliefs.argmax()
    elif mode == "max":
        beliefs, idx = bp.run_max_product(ft, tree)
    else:
        raise InvalidArgumentError(f"unknown BP mode {mode!r}")
    return c.points[idx], beliefs


@functools.lru_cache(maxsize=32)
def _candidate_block(K, k):
    """All K**k index tuples in lexicographic order, shape (K**k, k)."""
    grids = np.indices((K,) * k).reshape(k, K**k).T.copy()
    grids.setflags(write=False)
    return grids


_CHUNK_ENTRIES = 2**18


@_timed
def detect_ml(system, c, budget=DEFAULT_ML_BUDGET):
    """Exact minimizer of ``||H x - y||^2`` over the alphabet by enumeration.

    Candidates are scanned in lexicographic index order (first variable
    most significant) and the first minimizer wins.
    """
    if system.y is None:
        raise InvalidArgumentError("system has no observation")
    H, y = system.H, system.y
    N, K = H.shape[1], len(c)
    total = K**N
    if total > budget:
        raise BudgetExceededError(total, budget)
    pts = c.points
    G = H.T @ H
    b = H.T @ y
    # x = (u, v): ||Hx - y||^2 - ||y||^2 = q(u) + q(v) + 2 u'G_uv v, so every
    # candidate costs one entry of a (rows = u, cols = v) table
    lead = N // 2
    U = pts[_candidate_block(K, lead)]
    V = pts[_candidate_block(K, N - lead)]
    Guu, Gvv, Guv = G[:lead, :lead], G[lead:, lead:], G[:lead, lead:]
    qu = np.einsum("ij,ij->i", U @ Guu, U) - 2.0 * U @ b[:lead]
    qv = np.einsum("ij,ij->i", V @ Gvv, V) - 2.0 * V @ b[lead:]
    cross = 2.0 * (V @ Guv.T)
    rows = max(1, _CHUNK_ENTRIES // V.shape[0])
    best_val, best = np.inf, None
    for r0 in range(0, U.shape[0], rows):
        Ub = U[r0:r0 + rows]
        cost = qu[r0:r0 + rows, None] + (Ub @ cross.T + qv[None, :])
        j = int(np.argmin(cost))
        if cost.flat[j] < best_val:
            best_val = cost.flat[j]
            best = (r0 + j // V.shape[0], j % V.shape[0])
    return np.concatenate([U[best[0]], V[best[1]]]), None


@_timed
def detect_loopy_bp(system, c, max_iters=50, damping=0.0):
    """Diagnostic: sum-product on the complete pairwise field, then argmax."""
    beliefs, _ = bp.run_loopy_bp(system, c, max_iters=max_iters, damping=damping)
    return c.points[beliefs.argmax()], beliefs
