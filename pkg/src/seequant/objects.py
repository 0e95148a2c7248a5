"""Object quantization at desk scale.

An object is a finite point set in ``R^(d+1)``. Two objects of equal size are
compared through their pairwise-distance matrices under a point matching
``Omega`` (indexed lexicographically by ``gamma``) and a scale ``alpha``::

    chi = sum_{i,j} | D1[i, j] - alpha * D2[Omega(i), Omega(j)] |

For a fixed matching, ``chi`` is convex and piecewise linear in ``alpha``; it
is minimised exactly by a weighted median of the distance ratios.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
import math

import numpy as np

from .errors import InvalidInputError, RefusalError

MATCH_CAP = 8
OBJECT_CAP = 8
PARTITION_CAP = 8
ZERO_TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-9


@dataclass
class PointObject:
    points: np.ndarray  # (n, dim)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p.reshape(-1, 1)
        if p.ndim != 2:
            raise InvalidInputError("object points must form an (n, dim) array")
        self.points = p

    def __len__(self):
        return len(self.points)

    @property
    def has_duplicates(self):
        return len(np.unique(self.points, axis=0)) < len(self.points)

    def key(self):
        return (len(self.points), self.points.shape[1], tuple(self.points.ravel().tolist()))


@dataclass(frozen=True)
class MatchParams:
    alpha: float = 1.0
    gamma: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError("alpha must be positive")
        if self.gamma < 0:
            raise InvalidInputError("gamma must be non-negative")


@dataclass
class ObjectPartition:
    cells: list
    labels: tuple  # restricted growth string: labels[i] is the cell of point i

    def __post_init__(self):
        if sorted(set(self.labels)) != list(range(len(self.cells))):
            raise InvalidInputError("partition labels must name every cell")


def _as_object(o):
    return o if isinstance(o, PointObject) else PointObject(o)


def embed_signal(signal, levels):
    """Indicator embedding: one point ``(site..., value)`` per sample site."""
    s = np.asarray(signal)
    if s.size and (s.min() < 0 or s.max() >= levels):
        raise InvalidInputError(f"signal values must lie in [0, {levels})")
    pts = [(*idx, s[idx]) for idx in np.ndindex(s.shape)]
    return PointObject(np.array(pts, dtype=float).reshape(len(pts), s.ndim + 1))


def object_center(o):
    o = _as_object(o)
    if len(o) == 0:
        raise InvalidInputError("the center of an empty object is undefined")
    return o.points.mean(axis=0)


def auto_distance_matrix(o):
    p = _as_object(o).points
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def permutation_from_index(gamma, n):
    """Decode a lexicographic rank into a permutation (factorial number system)."""
    if not 0 <= gamma < math.factorial(n):
        raise InvalidInputError(f"gamma={gamma} outside [0, {n}!)")
    pool = list(range(n))
    perm = []
    for i in range(n - 1, -1, -1):
        f = math.factorial(i)
        perm.append(pool.pop(gamma // f))
        gamma %= f
    return tuple(perm)


def permutation_index(perm):
    pool = sorted(perm)
    rank = 0
    for i, p in enumerate(perm):
        j = pool.index(p)
        rank += j * math.factorial(len(perm) - 1 - i)
        pool.pop(j)
    return rank


def permutation_matrix(gamma, n):
    """``W[i, j] = 1`` iff ``j = Omega(i)``."""
    perm = permutation_from_index(gamma, n)
    W = np.zeros((n, n), dtype=np.int64)
    W[np.arange(n), perm] = 1
    return W


def _check_same_size(o1, o2):
    if len(o1) != len(o2) or len(o1) == 0:
        raise InvalidInputError(f"objects must be non-empty and equal in size ({len(o1)} vs {len(o2)})")


def chi_distance(o1, o2, params=MatchParams()):
    o1, o2 = _as_object(o1), _as_object(o2)
    _check_same_size(o1, o2)
    perm = np.array(permutation_from_index(params.gamma, len(o1)))
    D1 = auto_distance_matrix(o1)
    D2 = auto_distance_matrix(o2)
    return float(np.abs(D1 - params.alpha * D2[np.ix_(perm, perm)]).sum())


def chi_distance_matrix(o1, o2, params=MatchParams()):
    """Matrix form ``sum |D1 - alpha W D2 W^T|`` of :func:`chi_distance`."""
    o1, o2 = _as_object(o1), _as_object(o2)
    _check_same_size(o1, o2)
    W = permutation_matrix(params.gamma, len(o1))
    D1 = auto_distance_matrix(o1)
    D2 = auto_distance_matrix(o2)
    return float(np.abs(D1 - params.alpha * (W @ D2 @ W.T)).sum())


def optimal_alpha(a, b):
    """Lowest minimiser over ``alpha > 0`` of ``sum |a - alpha * b|``.

    Pairs with ``b = 0`` do not depend on ``alpha``. When no pair has
    ``b > 0``, or the weighted median of ``a / b`` is 0 (no positive minimiser
    exists), ``alpha = 1`` is returned.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    live = b > 0
    if not live.any():
        return 1.0
    r, w = a[live] / b[live], b[live]
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(w[order])
    alpha = float(r[order][np.searchsorted(cum, cum[-1] / 2.0)])
    return alpha if alpha > 0 else 1.0


def _batched_alpha(a, B):
    """Row-wise :func:`optimal_alpha` for a shared ``a`` and a stack of ``b`` rows."""
    live = B > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(live, a[None, :] / np.where(live, B, 1.0), np.inf)
    Wt = np.where(live, B, 0.0)
    order = np.argsort(R, axis=1, kind="stable")
    Rs = np.take_along_axis(R, order, axis=1)
    cum = np.cumsum(np.take_along_axis(Wt, order, axis=1), axis=1)
    half = cum[:, -1:] / 2.0
    idx = np.minimum((cum < half).sum(axis=1), B.shape[1] - 1)
    alpha = Rs[np.arange(len(B)), idx]
    bad = (cum[:, -1] == 0) | ~(alpha > 0) | ~np.isfinite(alpha)
    return np.where(bad, 1.0, alpha)


def best_match(o1, o2, cap=MATCH_CAP):
    """Exhaustive search over matchings with the exact optimal scale for each.

    Returns ``(MatchParams, chi_min)``; ties go to the lowest ``gamma``.
    """
    o1, o2 = _as_object(o1), _as_object(o2)
    _check_same_size(o1, o2)
    n = len(o1)
    if n > cap:
        raise RefusalError(f"exhaustive matching refused: {n} points exceeds the cap of {cap}")
    if n == 1:
        return MatchParams(1.0, 0), 0.0
    D1, D2 = auto_distance_matrix(o1), auto_distance_matrix(o2)
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    a = D1[ii, jj]
    perms = np.array(list(permutations(range(n))))  # lexicographic, so row index = gamma
    B = D2[perms[:, ii], perms[:, jj]]
    alphas = _batched_alpha(a, B)
    chis = np.abs(a[None, :] - alphas[:, None] * B).sum(axis=1)
    gamma = int(np.flatnonzero(chis <= chis.min() + 1e-12)[0])
    return MatchParams(float(alphas[gamma]), gamma), float(chis[gamma])


def object_diff(o1, o2, params=MatchParams()):
    """Per-point distance between each centred point and its scaled, centred match."""
    o1, o2 = _as_object(o1), _as_object(o2)
    _check_same_size(o1, o2)
    perm = np.array(permutation_from_index(params.gamma, len(o1)))
    a = o1.points - object_center(o1)
    b = params.alpha * (o2.points[perm] - object_center(o2))
    return PointObject(np.sqrt(((a - b) ** 2).sum(axis=1)).reshape(-1, 1))


def generalize(o, n):
    """Resize an object to exactly ``n`` points.

    Larger objects are reduced by farthest-point sampling seeded at the point
    nearest the center (kept in original order); smaller ones are padded with
    copies of the center.
    """
    o = _as_object(o)
    if len(o) == 0:
        raise InvalidInputError("cannot generalize an empty object")
    if n < 1:
        raise InvalidInputError("target size must be >= 1")
    pts = o.points
    if len(o) == n:
        return PointObject(pts.copy())
    if len(o) < n:
        pad = np.repeat(object_center(o)[None, :], n - len(o), axis=0)
        return PointObject(np.vstack([pts, pad]))
    D = auto_distance_matrix(o)
    first = int(np.argmin(np.sqrt(((pts - object_center(o)) ** 2).sum(axis=1))))
    chosen = [first]
    nearest = D[first].copy()
    while len(chosen) < n:
        nearest[chosen] = -1.0
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, D[nxt])
    return PointObject(pts[sorted(chosen)])


# -- object SEE ---------------------------------------------------------------

def _same(o1, o2):
    return o1.points.shape == o2.points.shape and np.array_equal(o1.points, o2.points)


def _subsets(items):
    for size in range(1, len(items) + 1):
        yield from combinations(items, size)


def _object_see(objs, tol, match_cap, object_cap):
    n = len(objs)
    if n <= 1:
        return 0.0
    if n > object_cap:
        raise RefusalError(f"object SEE refused: {n} objects exceeds the cap of {object_cap}")
    objs = sorted(objs, key=PointObject.key)
    candidates = [i for i in range(n) if not any(_same(objs[i], objs[j]) for j in range(i))]
    same = [[_same(objs[i], objs[j]) for j in range(n)] for i in range(n)]
    match = {}
    for i in candidates:
        for j in range(n):
            if same[i][j]:
                match[i, j] = (MatchParams(), 0.0)
            else:
                match[i, j] = best_match(generalize(objs[i], len(objs[j])), objs[j], match_cap)

    best = math.inf
    for subset in _subsets(candidates):
        classes = {i: [] for i in subset}
        for j in range(n):
            chi_min = min(match[i, j][1] for i in subset)
            tied = [i for i in subset if match[i, j][1] <= chi_min + TIE_TOLERANCE]
            # an object that is itself a codevector always lands in its own class
            owner = next((i for i in tied if same[i][j]), tied[0])
            classes[owner].append(j)
        cost = 0.0
        for i, members in classes.items():
            if not members:
                continue
            p = len(members) / n
            cost += p * (math.log2(1.0 / p) + 1.0)
            residuals = []
            for j in members:
                if same[i][j]:
                    continue
                d = object_diff(generalize(objs[i], len(objs[j])), objs[j], match[i, j][0])
                kept = d.points[d.points[:, 0] > tol]
                if len(kept):
                    residuals.append(PointObject(kept))
            if len(residuals) > 1:
                cost += len(residuals) / n * _object_see(residuals, tol, match_cap, object_cap)
        best = min(best, cost)
    return best


def object_see(objects, zero_tolerance=ZERO_TOLERANCE, match_cap=MATCH_CAP, object_cap=OBJECT_CAP):
    """SEE over objects, with codebooks drawn from the input objects themselves."""
    objs = [_as_object(o) for o in objects]
    if any(len(o) == 0 for o in objs):
        raise InvalidInputError("objects must be non-empty")
    return _object_see(objs, zero_tolerance, match_cap, object_cap)


def set_partitions(n):
    """All partitions of ``range(n)`` as restricted growth strings, lexicographically."""
    if n == 0:
        yield ()
        return

    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for label in range(top + 2):
            yield from grow(prefix + [label], max(top, label))

    yield from grow([0], 0)


def min_partition_see(o, max_cell_points=None, cap=PARTITION_CAP, **see_kwargs):
    """Partition minimising object SEE over its cells.

    Ties go to fewer cells, then to the lexicographically smallest labelling.
    """
    o = _as_object(o)
    n = len(o)
    if n == 0:
        raise InvalidInputError("cannot partition an empty object")
    if n > cap:
        raise RefusalError(f"partition search refused: {n} points exceeds the cap of {cap}")
    best = None
    for labels in set_partitions(n):
        k = max(labels) + 1
        cells = [o.points[[i for i in range(n) if labels[i] == c]] for c in range(k)]
        if max_cell_points is not None and max(len(c) for c in cells) > max_cell_points:
            continue
        bits = object_see(cells, **see_kwargs)
        if best is None or bits < best[0] - TIE_TOLERANCE or (
                abs(bits - best[0]) <= TIE_TOLERANCE and k < best[1]):
            best = (bits, k, labels, cells)
    if best is None:
        raise InvalidInputError("no partition satisfies the cell size limit")
    bits, _, labels, cells = best
    return ObjectPartition([PointObject(c) for c in cells], labels), bits
