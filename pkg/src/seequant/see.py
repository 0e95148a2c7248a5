"""Submerging Entropy Estimate: a recursive residual-quantization entropy.

For a set of ``M >= 2`` vectors and a codebook, every class ``i`` contributes

    P_i * (log2(1/P_i) + 1) + (|Delta_i| / M) * SEE(Delta_i)

where ``Delta_i`` holds the non-zero residuals of the class members against
their codevector. Sets with at most one vector cost nothing. The estimate is the
minimum of the total over a family of codebooks; two families are offered:

* ``exhaustive`` enumerates every non-empty subset of the set's distinct
  vectors (desk-scale sets only).
* ``greedy`` trains codebooks of increasing size per level with
  :func:`seequant.vq.train_codebook`, snaps each codevector to a class member,
  keeps the best size under a one-level lookahead score, and recurses.

Because greedy codebooks are themselves subsets of the data, the greedy total
can never be below the exhaustive one.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
import math
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, RefusalError
from .vq import as_vectors, classify_all, train_codebook

EXHAUSTIVE_CAP = 8
DEPTH_CAP = 16
MAX_CODEBOOK_SIZE = 16
REAL_ZERO_TOLERANCE = 1e-9
_EPS = 1e-12


@dataclass
class SeeConfig:
    strategy: str = "greedy"
    max_depth: Optional[int] = None
    per_level_codebook_sizes: Optional[Sequence[int]] = None
    zero_tolerance: Optional[float] = None
    seed: int = 0
    exhaustive_cap: int = EXHAUSTIVE_CAP
    depth_cap: int = DEPTH_CAP
    max_codebook_size: int = MAX_CODEBOOK_SIZE
    # codec use: below the root, reject codebooks that raise any class's squared error
    monotone_refinement: bool = False

    def __post_init__(self):
        if self.strategy not in ("exhaustive", "greedy"):
            raise InvalidInputError(f"unknown SEE strategy {self.strategy!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidInputError("max_depth must be a positive integer or None")
        if self.zero_tolerance is not None and self.zero_tolerance < 0:
            raise InvalidInputError("zero_tolerance must be non-negative")
        if self.per_level_codebook_sizes is not None and any(
                n < 1 for n in self.per_level_codebook_sizes):
            raise InvalidInputError("per-level codebook sizes must be positive")


@dataclass
class SeeNode:
    codevector: np.ndarray
    count: int
    probability: float
    residual_fraction: float
    children: "SeeTree"
    info_bits: float
    members: np.ndarray = field(repr=False)
    residual_members: np.ndarray = field(repr=False)

    @property
    def residual_count(self):
        return len(self.residual_members)

    @property
    def level_bits(self):
        """This node's own cost, leaving out the recursion term."""
        return self.probability * (math.log2(1.0 / self.probability) + 1.0)


@dataclass
class SeeTree:
    nodes: list
    total_bits: float
    set_size: int
    truncated: bool = False

    @property
    def depth(self):
        if not self.nodes:
            return 0
        return 1 + max(n.children.depth for n in self.nodes)

    def levels(self):
        """Nodes grouped by depth, breadth-first, parents in order."""
        out = []
        frontier = [self]
        while frontier:
            nodes = [n for t in frontier for n in t.nodes]
            if not nodes:
                break
            out.append(nodes)
            frontier = [n.children for n in nodes]
        return out


@dataclass
class EventGroup:
    probabilities: Sequence[float]
    children: Optional[Sequence[Optional["EventGroup"]]] = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if len(p) == 0 or np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidInputError("event probabilities must be positive and sum to 1")
        if self.children is not None and len(self.children) != len(p):
            raise InvalidInputError("an event group needs one child slot per event")


def empty_tree(set_size=0, truncated=False):
    return SeeTree([], 0.0, set_size, truncated)


def default_tolerance(vectors):
    v = np.asarray(vectors)
    if np.issubdtype(v.dtype, np.integer) or np.all(v == np.round(v)):
        return 0.0
    return REAL_ZERO_TOLERANCE


def residual_set(data, codebook, assignment, j, tol=0.0):
    """Residuals ``v_i - v'_j`` of class ``j`` whose norm exceeds ``tol``, in input order."""
    vectors = as_vectors(data)
    codebook = as_vectors(codebook)
    assignment = np.asarray(assignment)
    members = np.flatnonzero(assignment == j)
    res = vectors[members] - codebook[j]
    keep = np.sqrt((res.astype(float) ** 2).sum(axis=1)) > tol
    return res[keep]


def _split(vectors, codebook, tol):
    """Classify and split into per-class (members, residual member indices, residuals)."""
    assignment = classify_all(vectors, codebook)
    out = []
    for j in range(len(codebook)):
        members = np.flatnonzero(assignment == j)
        if len(members) == 0:
            continue
        res = vectors[members] - codebook[j]
        keep = np.sqrt((res.astype(float) ** 2).sum(axis=1)) > tol
        out.append((j, members, members[keep], res[keep]))
    return out


def _node(codevector, members, residual_members, M, child):
    count = len(members)
    p = count / M
    frac = len(residual_members) / count
    info = p * (math.log2(1.0 / p) + 1.0) + p * frac * child.total_bits
    return SeeNode(np.array(codevector), count, p, frac, child, info, members, residual_members)


def _tree(nodes, M):
    total = 0.0
    for n in nodes:
        total += n.info_bits
    return SeeTree(nodes, total, M)


# -- exhaustive -------------------------------------------------------------

def _canonical_key(vectors):
    return tuple(sorted(tuple(row) for row in vectors.tolist()))


def _subsets(n):
    for size in range(1, n + 1):
        yield from combinations(range(n), size)


@lru_cache(maxsize=None)
def _exhaustive_value(key, tol):
    M = len(key)
    if M <= 1:
        return 0.0
    vectors = np.array(key)
    return _best_exhaustive(vectors, tol)[1]


def _best_exhaustive(vectors, tol):
    distinct = np.unique(vectors, axis=0)
    M = len(vectors)
    best, best_cost = None, math.inf
    for subset in _subsets(len(distinct)):
        codebook = distinct[list(subset)]
        cost = 0.0
        for _, members, _, res in _split(vectors, codebook, tol):
            p = len(members) / M
            cost += p * (math.log2(1.0 / p) + 1.0)
            if len(res) > 1:
                cost += len(res) / M * _exhaustive_value(_canonical_key(res), tol)
        if cost < best_cost - _EPS:
            best, best_cost = codebook, cost
    return best, best_cost


def _exhaustive_tree(vectors, tol):
    M = len(vectors)
    if M <= 1:
        return empty_tree(M)
    codebook, _ = _best_exhaustive(vectors, tol)
    nodes = []
    for j, members, res_members, res in _split(vectors, codebook, tol):
        nodes.append(_node(codebook[j], members, res_members, M, _exhaustive_tree(res, tol)))
    return _tree(nodes, M)


# -- greedy -----------------------------------------------------------------

def exact_cover_bound(vectors):
    """SEE cost of covering ``vectors`` with their distinct values: an upper bound on SEE."""
    if len(vectors) <= 1:
        return 0.0
    _, counts = np.unique(vectors, axis=0, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum()) + 1.0


def _snap(vectors, codebook):
    """Replace every codevector by the class member nearest its class centroid."""
    assignment = classify_all(vectors, codebook)
    snapped = []
    for j in range(len(codebook)):
        members = vectors[assignment == j]
        if len(members) == 0:
            continue
        cands = np.unique(members, axis=0)
        centroid = members.astype(float).mean(axis=0)
        d = ((cands.astype(float) - centroid) ** 2).sum(axis=1)
        snapped.append(cands[int(np.argmin(d))])
    return np.unique(np.array(snapped), axis=0)


def _level_score(vectors, codebook, tol, check_monotone):
    """Level cost plus the exact-cover bound of each residual set (None if inadmissible)."""
    M = len(vectors)
    score = 0.0
    for j, members, _, res in _split(vectors, codebook, tol):
        if check_monotone:
            before = (vectors[members].astype(float) ** 2).sum()
            after = ((vectors[members] - codebook[j]).astype(float) ** 2).sum()
            if after > before:
                return None
        p = len(members) / M
        score += p * (math.log2(1.0 / p) + 1.0) + len(res) / M * exact_cover_bound(res)
    return score


def _greedy_tree(vectors, config, depth, tol):
    M = len(vectors)
    if M <= 1:
        return empty_tree(M)
    if config.max_depth is not None and depth >= config.max_depth:
        return empty_tree(M, truncated=True)
    if depth >= config.depth_cap:
        raise RefusalError(f"SEE recursion exceeded the depth cap of {config.depth_cap}")

    ordered = vectors[np.lexsort(vectors.T[::-1])] if vectors.shape[1] else vectors
    distinct = np.unique(vectors, axis=0)
    sizes = config.per_level_codebook_sizes
    if sizes is not None and depth < len(sizes):
        candidates = [min(sizes[depth], len(distinct))]
    else:
        candidates = range(1, min(config.max_codebook_size, len(distinct)) + 1)

    check = config.monotone_refinement and depth > 0
    best, best_score, seen = None, math.inf, set()
    for n in candidates:
        trained, _ = train_codebook(ordered, n, seed=config.seed)
        codebook = _snap(vectors, trained)
        sig = codebook.tobytes()
        if sig in seen:
            continue
        seen.add(sig)
        score = _level_score(vectors, codebook, tol, check)
        if score is not None and score < best_score - _EPS:
            best, best_score = codebook, score
    if best is None:
        best = distinct

    nodes = []
    for j, members, res_members, res in _split(vectors, best, tol):
        child = _greedy_tree(res, config, depth + 1, tol)
        nodes.append(_node(best[j], members, res_members, M, child))
    return _tree(nodes, M)


# -- public API -------------------------------------------------------------

def greedy_minimize(data, config=None):
    config = config or SeeConfig()
    vectors = as_vectors(data)
    tol = default_tolerance(vectors) if config.zero_tolerance is None else config.zero_tolerance
    return _greedy_tree(vectors, config, 0, tol)


def see_estimate(data, config=None):
    """Return ``(bits, tree)`` for the configured codebook family."""
    config = config or SeeConfig()
    vectors = as_vectors(data)
    if len(vectors) <= 1:
        return 0.0, empty_tree(len(vectors))
    if config.strategy == "greedy":
        tree = greedy_minimize(vectors, config)
        return tree.total_bits, tree
    if len(vectors) > config.exhaustive_cap:
        raise RefusalError(
            f"exhaustive SEE refused: M={len(vectors)} exceeds the cap of {config.exhaustive_cap}")
    tol = default_tolerance(vectors) if config.zero_tolerance is None else config.zero_tolerance
    tree = _exhaustive_tree(vectors, tol)
    return tree.total_bits, tree


def shannon_entropy(probabilities):
    p = np.asarray(probabilities, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def auto_generative_entropy(group):
    """Entropy of a recursively generated event group.

    Events without a child group are leaves; a group whose events are all
    leaves contributes its plain Shannon entropy.
    """
    p = np.asarray(group.probabilities, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12 or np.any(p <= 0):
        raise InvalidInputError("event probabilities must be positive and sum to 1")
    if group.children is None:
        return shannon_entropy(p)
    total = 0.0
    for pi, child in zip(p, group.children):
        sub = auto_generative_entropy(child) if child is not None else 0.0
        total += pi * (math.log2(1.0 / pi) + sub)
    return total


def prune_tree(tree, max_depth):
    """Cut ``tree`` below ``max_depth`` levels; return ``(pruned, dropped_bits)``.

    ``dropped_bits`` is the weighted cost of the removed subtrees, so the pruned
    total plus the dropped bits equals the original total.
    """
    if max_depth < 0:
        raise InvalidInputError("max_depth must be >= 0")
    if max_depth == 0:
        return empty_tree(tree.set_size, truncated=bool(tree.nodes)), tree.total_bits
    nodes, dropped = [], 0.0
    for n in tree.nodes:
        child, child_dropped = prune_tree(n.children, max_depth - 1)
        weight = n.probability * n.residual_fraction
        info = n.level_bits + weight * child.total_bits
        nodes.append(replace(n, children=child, info_bits=info))
        dropped += weight * child_dropped
    pruned = _tree(nodes, tree.set_size)
    pruned.truncated = tree.truncated or dropped > 0
    return pruned, dropped


def tree_storage_bits(tree, P, k, M):
    """Index bits (with a stop symbol) plus raw codebook bits, summed over levels."""
    if tree.nodes and tree.set_size != M:
        raise InvalidInputError(f"tree was built over {tree.set_size} vectors, not M={M}")
    bits = 0
    for nodes in tree.levels():
        n_level = len(nodes)
        m_level = sum(n.count for n in nodes)
        bits += m_level * math.ceil(math.log2(n_level + 1)) + P * k * n_level
    return bits


def tree_to_dict(tree):
    """Canonical JSON-ready form; probabilities are kept as exact count ratios."""
    return {
        "set_size": tree.set_size,
        "total_bits": tree.total_bits,
        "truncated": tree.truncated,
        "nodes": [
            {
                "codevector": n.codevector.tolist(),
                "count": n.count,
                "probability": str(Fraction(n.count, tree.set_size)),
                "residual_count": n.residual_count,
                "info_bits": n.info_bits,
                "children": tree_to_dict(n.children),
            }
            for n in tree.nodes
        ],
    }
