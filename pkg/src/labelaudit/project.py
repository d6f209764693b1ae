"""t-SNE projection of document vectors to 2D.

High-dimensional neighborhoods become per-point Gaussian conditionals whose
bandwidths are tuned so every row's entropy matches log2(perplexity); the 2D
layout minimizes KL(P || Q) against a Student-t Q by gradient descent with
the standard momentum and early-exaggeration schedule. The gradient is exact
for small inputs and switches to a Barnes-Hut quadtree approximation of the
repulsive term above ``exact_threshold`` points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

DISTANCE_FLOOR = 1e-12
ENTROPY_TOL = 1e-5
MAX_BISECTIONS = 50
EARLY_EXAGGERATION = 12.0
EARLY_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)  # clamp tiny negatives from cancellation
    np.fill_diagonal(d2, 0.0)
    return d2


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetrized input-space affinities: non-negative, zero diagonal,
    entries summing to 1."""

    P: np.ndarray
    perplexity: float
    sigmas: np.ndarray

    def __post_init__(self):
        P = self.P
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("P must be square")
        if np.any(P < 0) or not np.all(np.isfinite(P)):
            raise ValueError("P entries must be finite and non-negative")
        if np.any(np.diag(P) != 0):
            raise ValueError("P diagonal must be zero")
        if not np.array_equal(P, P.T):
            raise ValueError("P must be symmetric")
        if abs(float(P.sum()) - 1.0) > 1e-9:
            raise ValueError("P entries must sum to 1")


def _row_affinity(d2_row: np.ndarray, target_bits: float):
    """Tune one row's precision so the conditional entropy hits the target.

    Returns (normalized probabilities over the other points, beta).
    """
    floored = np.maximum(d2_row, DISTANCE_FLOOR)
    beta, lo, hi = 1.0, 0.0, np.inf
    ln2 = np.log(2.0)
    for _ in range(MAX_BISECTIONS):
        p = np.exp(-floored * beta)
        s = float(p.sum())
        if s > 0.0:
            bits = (np.log(s) + beta * float(floored @ p) / s) / ln2
        else:
            bits = 0.0
        if abs(bits - target_bits) <= ENTROPY_TOL:
            break
        if bits > target_bits:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
        else:
            hi = beta
            beta = 0.5 * (beta + lo)
    p = np.exp(-floored * beta)
    s = float(p.sum())
    if s <= 0.0:
        p = np.full_like(floored, 1.0 / floored.shape[0])
        s = 1.0
    return p / s, beta


def conditional_affinities(X, perplexity: float) -> AffinityMatrix:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input")
    n = X.shape[0]
    if not 2.0 <= perplexity < n:
        raise ValueError(f"perplexity must be in [2, {n}), got {perplexity}")
    d2 = _squared_distances(X)
    target_bits = np.log2(perplexity)
    cond = np.zeros((n, n))
    betas = np.empty(n)
    others = np.arange(n)
    for i in range(n):
        mask = others != i
        cond[i, mask], betas[i] = _row_affinity(d2[i, mask], target_bits)
    P = (cond + cond.T) / (2.0 * n)
    return AffinityMatrix(P=P, perplexity=float(perplexity),
                          sigmas=np.sqrt(0.5 / betas))


def _p_of(P) -> np.ndarray:
    return P.P if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)


def _student_numerators(Y: np.ndarray):
    d2 = _squared_distances(Y)
    np.maximum(d2, DISTANCE_FLOOR, out=d2)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    return num, float(num.sum())


def kl_divergence(P, Y) -> float:
    """KL(P || Q) with the Student-t Q induced by the 2D coordinates."""
    P = _p_of(P)
    num, Z = _student_numerators(np.asarray(Y, dtype=np.float64))
    Q = num / Z
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def kl_gradient(P, Y) -> np.ndarray:
    """Exact t-SNE gradient: 4 * sum_j (p_ij - q_ij) (y_i - y_j) / (1 + d2_ij)."""
    P = _p_of(P)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape[0] != Y.shape[0]:
        raise ValueError("P and Y disagree on point count")
    num, Z = _student_numerators(Y)
    W = (P - num / Z) * num
    s = W.sum(axis=1)
    return 4.0 * (s[:, None] * Y - W @ Y)


@njit(cache=True)
def _build_quadtree(Y):
    """Array-based quadtree over 2D points; coincident points share a leaf."""
    n = Y.shape[0]
    cap = 4 * n + 64
    cen = np.zeros((cap, 2))
    half = np.zeros(cap)
    child = np.full((cap, 4), -1, dtype=np.int64)
    cnt = np.zeros(cap, dtype=np.int64)
    comsum = np.zeros((cap, 2))

    lo0 = Y[:, 0].min()
    hi0 = Y[:, 0].max()
    lo1 = Y[:, 1].min()
    hi1 = Y[:, 1].max()
    span = max(hi0 - lo0, hi1 - lo1) * 0.5 + 1e-9
    cen[0, 0] = 0.5 * (lo0 + hi0)
    cen[0, 1] = 0.5 * (lo1 + hi1)
    half[0] = span
    n_nodes = 1

    for i in range(n):
        y0 = Y[i, 0]
        y1 = Y[i, 1]
        node = 0
        while True:
            if child[node, 0] == -1:  # leaf
                if cnt[node] == 0:
                    cnt[node] = 1
                    comsum[node, 0] = y0
                    comsum[node, 1] = y1
                    break
                e0 = comsum[node, 0] / cnt[node]
                e1 = comsum[node, 1] / cnt[node]
                if (e0 == y0 and e1 == y1) or half[node] < 1e-30:
                    # coincident (or cell too small to split): merge
                    cnt[node] += 1
                    comsum[node, 0] += y0
                    comsum[node, 1] += y1
                    break
                # split: push the occupant one level down
                if n_nodes + 4 > cap:
                    new_cap = cap * 2
                    cen2 = np.zeros((new_cap, 2))
                    cen2[:cap] = cen
                    half2 = np.zeros(new_cap)
                    half2[:cap] = half
                    child2 = np.full((new_cap, 4), -1, dtype=np.int64)
                    child2[:cap] = child
                    cnt2 = np.zeros(new_cap, dtype=np.int64)
                    cnt2[:cap] = cnt
                    comsum2 = np.zeros((new_cap, 2))
                    comsum2[:cap] = comsum
                    cen, half, child, cnt, comsum = cen2, half2, child2, cnt2, comsum2
                    cap = new_cap
                h = half[node] * 0.5
                for q in range(4):
                    c = n_nodes + q
                    cen[c, 0] = cen[node, 0] + (h if q & 1 else -h)
                    cen[c, 1] = cen[node, 1] + (h if q & 2 else -h)
                    half[c] = h
                    child[node, q] = c
                n_nodes += 4
                q = (1 if e0 >= cen[node, 0] else 0) + (2 if e1 >= cen[node, 1] else 0)
                dest = child[node, q]
                cnt[dest] = cnt[node]
                comsum[dest, 0] = comsum[node, 0]
                comsum[dest, 1] = comsum[node, 1]
                # fall through: node is internal now, descend with the new point
            cnt[node] += 1
            comsum[node, 0] += y0
            comsum[node, 1] += y1
            q = (1 if y0 >= cen[node, 0] else 0) + (2 if y1 >= cen[node, 1] else 0)
            node = child[node, q]
    return cen, half, child, cnt, comsum, n_nodes


@njit(cache=True)
def _bh_repulsion(Y, theta):
    """Barnes-Hut estimate of (sum_j q'_ij^2 (y_i - y_j), Z)."""
    n = Y.shape[0]
    cen, half, child, cnt, comsum, n_nodes = _build_quadtree(Y)
    rep = np.zeros((n, 2))
    z_total = 0.0
    stack = np.empty(n_nodes, dtype=np.int64)
    theta2 = theta * theta
    for i in range(n):
        y0 = Y[i, 0]
        y1 = Y[i, 1]
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            m = cnt[node]
            if m == 0:
                continue
            dx0 = y0 - comsum[node, 0] / m
            dx1 = y1 - comsum[node, 1] / m
            d2 = dx0 * dx0 + dx1 * dx1
            is_leaf = child[node, 0] == -1
            width = 2.0 * half[node]
            if is_leaf or width * width < theta2 * d2:
                if d2 == 0.0:
                    # the query's own leaf: exclude self, force is zero
                    z_total += m - 1
                    continue
                if d2 < DISTANCE_FLOOR:
                    d2 = DISTANCE_FLOOR
                qv = 1.0 / (1.0 + d2)
                z_total += m * qv
                qq = m * qv * qv
                rep[i, 0] += qq * dx0
                rep[i, 1] += qq * dx1
            else:
                for q in range(4):
                    stack[sp] = child[node, q]
                    sp += 1
    return rep, z_total


@njit(cache=True)
def _dense_attraction(P, Y):
    """Row-wise sum_j p_ij q'_ij (y_i - y_j) without n*n temporaries."""
    n = Y.shape[0]
    att = np.zeros((n, 2))
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            dx0 = Y[i, 0] - Y[j, 0]
            dx1 = Y[i, 1] - Y[j, 1]
            d2 = dx0 * dx0 + dx1 * dx1
            if d2 < DISTANCE_FLOOR:
                d2 = DISTANCE_FLOOR
            pq = P[i, j] / (1.0 + d2)
            att[i, 0] += pq * dx0
            att[i, 1] += pq * dx1
    return att


def _bh_gradient(P: np.ndarray, Y: np.ndarray, theta: float) -> np.ndarray:
    rep, z_total = _bh_repulsion(Y, theta)
    att = _dense_attraction(P, Y)
    return 4.0 * (att - rep / z_total)


@dataclass(frozen=True)
class Projection2D:
    """2D coordinates with the unexaggerated KL of the final layout."""

    coordinates: np.ndarray
    final_kl: float
    config: dict
    kl_trace: tuple = field(default=())

    def __post_init__(self):
        if not np.all(np.isfinite(self.coordinates)):
            raise ValueError("coordinates must be finite")
        if self.final_kl < 0:
            raise ValueError("final_kl must be non-negative")


def tsne(X, lr: float = 200.0, iterations: int = 1000, perplexity: float = 30.0,
         seed: int = 0, init=None, theta: float = 0.5,
         exact_threshold: int = 5000) -> Projection2D:
    """Project X to 2D; deterministic given the seed (or an explicit init).

    The repulsive gradient term is exact up to ``exact_threshold`` points and
    Barnes-Hut approximated (opening angle ``theta``) beyond. KL against the
    plain (unexaggerated) P is recorded every 50 iterations once the early
    phase ends, and final_kl reflects the returned coordinates.
    """
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite input")
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    aff = conditional_affinities(X, perplexity)
    P = aff.P
    n = X.shape[0]
    if init is None:
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x75E)))
        Y = rng.normal(0.0, 1e-4, size=(n, 2))
    else:
        Y = np.array(init, dtype=np.float64)
        if Y.shape != (n, 2):
            raise ValueError(f"init must have shape ({n}, 2)")
    exact = n <= exact_threshold
    velocity = np.zeros((n, 2))
    trace = []
    for it in range(iterations):
        early = it < EARLY_ITERS
        P_eff = P * EARLY_EXAGGERATION if early else P
        if exact:
            grad = kl_gradient(P_eff, Y)
        else:
            grad = _bh_gradient(P_eff, Y, theta)
        momentum = MOMENTUM_EARLY if early else MOMENTUM_LATE
        velocity = momentum * velocity - lr * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if (it + 1) % 50 == 0 and (it + 1) > EARLY_ITERS:
            trace.append((it + 1, kl_divergence(P, Y)))
    config = {"lr": float(lr), "iterations": int(iterations),
              "perplexity": float(perplexity), "seed": int(seed),
              "theta": float(theta), "exact_threshold": int(exact_threshold)}
    return Projection2D(coordinates=Y, final_kl=kl_divergence(P, Y),
                        config=config, kl_trace=tuple(trace))
