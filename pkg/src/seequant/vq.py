"""Flat (single-level) vector quantization.

Vectors are rows of an ``(M, k)`` array, a codebook is an ``(N, k)`` array and
an assignment is an integer array of length ``M`` holding codevector indices.
All logarithms are base 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidInputError

MAX_TRAIN_ITERATIONS = 100
RELATIVE_TOLERANCE = 1e-9


@dataclass
class VectorSet:
    """``M`` vectors of dimension ``k`` whose scalars take ``value_bits`` bits each."""

    vectors: np.ndarray
    value_bits: int = 8

    def __post_init__(self):
        v = np.asarray(self.vectors)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise InvalidInputError(f"vectors must be a 2-D array, got shape {v.shape}")
        if self.value_bits < 1:
            raise InvalidInputError("value_bits must be >= 1")
        self.vectors = v

    @property
    def M(self):
        return self.vectors.shape[0]

    @property
    def k(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.M


@dataclass
class ClassDistribution:
    counts: np.ndarray
    probabilities: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        total = int(self.counts.sum())
        if total == 0:
            self.probabilities = np.zeros(len(self.counts))
        else:
            self.probabilities = self.counts / total

    def entropy(self):
        """Shannon entropy in bits; empty classes contribute nothing."""
        p = self.probabilities[self.probabilities > 0]
        return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True)
class EntropyObjectiveParams:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise InvalidInputError("objective weights must be non-negative")
        if self.a == 0 and self.b == 0:
            raise InvalidInputError("objective weights a and b cannot both be zero")


def as_vectors(data):
    """Coerce a VectorSet, sequence of vectors, or 1-D scalar sequence to ``(M, k)``."""
    if isinstance(data, VectorSet):
        return data.vectors
    v = np.asarray(data)
    if v.ndim == 1:
        v = v.reshape(-1, 1)
    if v.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array of vectors, got shape {v.shape}")
    return v


def _check_dims(vectors, codebook):
    if codebook.ndim != 2 or codebook.shape[0] == 0:
        raise InvalidInputError("codebook must be a non-empty (N, k) array")
    if vectors.shape[1] != codebook.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: vectors have k={vectors.shape[1]}, codebook k={codebook.shape[1]}")


def pairwise_distances(vectors, codebook):
    diff = vectors[:, None, :].astype(float) - codebook[None, :, :].astype(float)
    return np.sqrt((diff * diff).sum(axis=2))


def classify(v, codebook):
    """Index of the nearest codevector to ``v``; ties go to the lowest index."""
    codebook = as_vectors(codebook)
    v = np.asarray(v, dtype=float).reshape(1, -1)
    _check_dims(v, codebook)
    return int(np.argmin(pairwise_distances(v, codebook)[0]))


def classify_all(data, codebook):
    vectors = as_vectors(data)
    codebook = as_vectors(codebook)
    _check_dims(vectors, codebook)
    if vectors.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    # np.argmin returns the first minimum, which is the lowest-index tie-break
    return np.argmin(pairwise_distances(vectors, codebook), axis=1).astype(np.int64)


def _residual_norms(vectors, codebook, assignment):
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (vectors.shape[0],):
        raise InvalidInputError("assignment must have one entry per vector")
    if vectors.shape[0] and (assignment.min() < 0 or assignment.max() >= codebook.shape[0]):
        raise InvalidInputError("assignment refers to a codevector outside the codebook")
    diff = vectors.astype(float) - codebook[assignment].astype(float)
    return np.sqrt((diff * diff).sum(axis=1))


def distortion(data, codebook, assignment):
    """Sum of (unsquared) Euclidean distances from each vector to its codevector."""
    vectors = as_vectors(data)
    codebook = as_vectors(codebook)
    _check_dims(vectors, codebook)
    total = 0.0
    # fixed index-order summation keeps the value bit-reproducible
    for d in _residual_norms(vectors, codebook, assignment):
        total += float(d)
    return total


def coverage_radius(data, codebook, assignment):
    """Smallest delta with ``||v_i - v'_I(i)|| <= delta`` for every vector (0 when empty)."""
    vectors = as_vectors(data)
    codebook = as_vectors(codebook)
    _check_dims(vectors, codebook)
    norms = _residual_norms(vectors, codebook, assignment)
    return float(norms.max()) if len(norms) else 0.0


def compression_ratio(P, k, N, M):
    """Raw bits per block over index bits plus amortized codebook bits."""
    if min(P, k, N, M) < 1:
        raise InvalidInputError("compression_ratio needs P, k, N, M >= 1")
    return P * k / (math.log2(N) + P * k * N / M)


def empirical_distribution(assignment, N, M=None):
    assignment = np.asarray(assignment, dtype=np.int64)
    if M is not None and len(assignment) != M:
        raise InvalidInputError("assignment must cover every vector")
    if len(assignment) and (assignment.min() < 0 or assignment.max() >= N):
        raise InvalidInputError("assignment index out of range")
    return ClassDistribution(np.bincount(assignment, minlength=N))


def entropy_objective(data, codebook, params=EntropyObjectiveParams()):
    """``a * delta + b * H`` for the nearest-neighbour assignment of ``data``."""
    vectors = as_vectors(data)
    codebook = as_vectors(codebook)
    if vectors.shape[0] < 1:
        raise InvalidInputError("entropy_objective needs at least one vector")
    assignment = classify_all(vectors, codebook)
    delta = coverage_radius(vectors, codebook, assignment)
    h = empirical_distribution(assignment, codebook.shape[0]).entropy()
    return params.a * delta + params.b * h


def _centroids(vectors, assignment, codebook):
    new = codebook.astype(float).copy()
    counts = np.bincount(assignment, minlength=len(codebook))
    for j in np.flatnonzero(counts):
        new[j] = vectors[assignment == j].mean(axis=0)
    return new, counts


def train_codebook(data, N, seed=0, history=None):
    """LBG / k-means alternation from a seeded sample of distinct vectors.

    Returns ``(codebook, assignment)``. Duplicate codevectors are merged, so the
    codebook can come back smaller than ``N`` when the data has fewer distinct
    vectors. If ``history`` is a list, the distortion after every accepted
    iteration is appended to it; the sequence is non-increasing.
    """
    vectors = as_vectors(data).astype(float)
    M = vectors.shape[0]
    if not 1 <= N <= M:
        raise InvalidInputError(f"codebook size N={N} must satisfy 1 <= N <= M={M}")
    distinct = np.unique(vectors, axis=0)
    if len(distinct) <= N:
        assignment = classify_all(vectors, distinct)
        if history is not None:
            history.append(distortion(vectors, distinct, assignment))
        return distinct, assignment

    rng = np.random.default_rng(seed)
    codebook = distinct[np.sort(rng.choice(len(distinct), size=N, replace=False))]
    assignment = classify_all(vectors, codebook)
    D = distortion(vectors, codebook, assignment)
    if history is not None:
        history.append(D)

    for _ in range(MAX_TRAIN_ITERATIONS):
        candidate, counts = _centroids(vectors, assignment, codebook)
        empty = np.flatnonzero(counts == 0)
        if len(empty):
            far = np.argsort(-_residual_norms(vectors, codebook, assignment), kind="stable")
            for j, i in zip(empty, far):
                candidate[j] = vectors[i]
        new_assignment = classify_all(vectors, candidate)
        new_D = distortion(vectors, candidate, new_assignment)
        if new_D > D:
            # centroids minimise squared error, not the unsquared sum; keep the better codebook
            break
        improvement = D - new_D
        codebook, assignment, D = candidate, new_assignment, new_D
        if history is not None:
            history.append(D)
        if improvement <= RELATIVE_TOLERANCE * max(D, 1e-300):
            break

    merged = np.unique(codebook, axis=0)
    if len(merged) < len(codebook):
        codebook = merged
        assignment = classify_all(vectors, codebook)
    return codebook, assignment
