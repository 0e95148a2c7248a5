import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seequant.errors import InvalidInputError, RefusalError
from seequant.objects import (MatchParams, PointObject, auto_distance_matrix, best_match,
                              chi_distance, chi_distance_matrix, embed_signal, generalize,
                              min_partition_see, object_center, object_diff, object_see,
                              optimal_alpha, permutation_from_index, permutation_index,
                              permutation_matrix, set_partitions)

TRI = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 1.0]])


def rotation(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def rigid(points, rnd):
    d = points.shape[1]
    q, _ = np.linalg.qr(rnd.normal(size=(d, d)))
    return points @ q.T + rnd.normal(size=d) * 5


def pair_chi(o1, o2, alpha, perm):
    """Per-pair double loop over ordered pairs."""
    total = 0.0
    n = len(o1)
    for i in range(n):
        for j in range(n):
            total += abs(math.dist(o1[i], o1[j]) - alpha * math.dist(o2[perm[i]], o2[perm[j]]))
    return total


def grid_chi(o1, o2, steps=5000):
    """Oracle: every permutation against a dense alpha grid."""
    n = len(o1)
    D1, D2 = auto_distance_matrix(o1), auto_distance_matrix(o2)
    positive = D2 > 0
    hi = 2 * (D1[positive] / D2[positive]).max() if positive.any() else 2.0
    grid = np.linspace(hi / steps, hi, steps)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        B = D2[np.ix_(perm, perm)]
        vals = np.abs(D1[None] - grid[:, None, None] * B[None]).sum(axis=(1, 2))
        best = min(best, vals.min())
    return best


class TestEmbedding:
    def test_one_dimensional(self):
        assert embed_signal([3, 5], 8).points.tolist() == [[0, 3], [1, 5]]

    def test_constant_image(self):
        pts = {tuple(p) for p in embed_signal(np.full((2, 2), 4), 5).points.tolist()}
        assert pts == {(0, 0, 4), (1, 0, 4), (0, 1, 4), (1, 1, 4)}

    @given(st.lists(st.integers(1, 4), min_size=1, max_size=3), st.integers(0, 2**31))
    def test_point_count(self, dims, seed):
        s = np.random.default_rng(seed).integers(0, 7, size=dims)
        o = embed_signal(s, 7)
        assert len(o) == math.prod(dims) and o.points.shape[1] == len(dims) + 1

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            embed_signal([0, 8], 8)


class TestCenterAndDistances:
    def test_center(self):
        assert object_center([[2, 5]]).tolist() == [2, 5]
        assert object_center([[0, 0], [2, 2]]).tolist() == [1, 1]
        with pytest.raises(InvalidInputError):
            object_center(np.zeros((0, 2)))

    @given(st.integers(0, 2**31))
    def test_center_translation_equivariance(self, seed):
        r = np.random.default_rng(seed)
        pts, t = r.normal(size=(5, 3)), r.normal(size=3)
        np.testing.assert_allclose(object_center(pts + t), object_center(pts) + t, atol=1e-12)

    def test_collinear(self):
        D = auto_distance_matrix([[0], [1], [3]])
        assert D.tolist() == [[0, 1, 3], [1, 0, 2], [3, 2, 0]]

    def test_matches_pairwise_scan(self, rng):
        pts = rng.normal(size=(6, 3))
        D = auto_distance_matrix(pts)
        for i in range(6):
            for j in range(6):
                assert D[i, j] == pytest.approx(math.dist(pts[i], pts[j]), abs=1e-12)
        assert np.array_equal(D, D.T) and not np.diag(D).any()
        for i, j, k in itertools.permutations(range(6), 3):
            assert D[i, k] <= D[i, j] + D[j, k] + 1e-9


class TestPermutations:
    def test_identity_and_swap(self):
        assert np.array_equal(permutation_matrix(0, 3), np.eye(3))
        assert permutation_from_index(1, 3) == (0, 2, 1)
        assert permutation_from_index(5, 3) == (2, 1, 0)

    def test_all_of_four(self):
        seen = set()
        for g in range(24):
            W = permutation_matrix(g, 4)
            assert np.array_equal(W.T @ W, np.eye(4))
            assert (W.sum(axis=0) == 1).all() and (W.sum(axis=1) == 1).all()
            assert permutation_index(permutation_from_index(g, 4)) == g
            seen.add(W.tobytes())
        assert len(seen) == 24
        assert [permutation_from_index(g, 4) for g in range(24)] == \
            list(itertools.permutations(range(4)))

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            permutation_matrix(6, 3)


class TestChi:
    def test_self_distance(self, rng):
        pts = rng.normal(size=(5, 3))
        assert chi_distance(pts, pts, MatchParams(1.0, 0)) == 0

    def test_scaling(self, rng):
        pts = rng.normal(size=(4, 2))
        assert chi_distance(pts, 3 * pts, MatchParams(1 / 3, 0)) == pytest.approx(0, abs=1e-12)

    def test_forms_agree_with_pair_loop(self, rng):
        for _ in range(30):
            a, b = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
            params = MatchParams(float(rng.uniform(0.2, 3)), int(rng.integers(6)))
            perm = permutation_from_index(params.gamma, 3)
            oracle = pair_chi(a, b, params.alpha, perm)
            assert chi_distance(a, b, params) == pytest.approx(oracle, abs=1e-9)
            assert chi_distance_matrix(a, b, params) == pytest.approx(oracle, abs=1e-9)

    def test_transposed_scaled_form(self, rng):
        a, b = rng.normal(size=(4, 2)), rng.normal(size=(4, 2))
        params = MatchParams(1.7, 13)
        W = permutation_matrix(params.gamma, 4)
        D1, D2 = auto_distance_matrix(a), auto_distance_matrix(b)
        other = np.abs(D2 - (1 / params.alpha) * W.T @ D1 @ W).sum()
        assert other == pytest.approx(chi_distance(a, b, params) / params.alpha, abs=1e-9)

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError):
            chi_distance(TRI, TRI[:2])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31))
    def test_rigid_motion_invariance(self, seed):
        r = np.random.default_rng(seed)
        a, b = r.normal(size=(4, 3)), r.normal(size=(4, 3))
        params = MatchParams(float(r.uniform(0.5, 2)), int(r.integers(24)))
        assert chi_distance(rigid(a, r), rigid(b, r), params) == \
            pytest.approx(chi_distance(a, b, params), abs=1e-9)


class TestBestMatch:
    def test_congruent_permuted(self, rng):
        moved = rigid(TRI, rng)[[2, 0, 1]]
        params, chi = best_match(TRI, moved)
        assert chi < 1e-9 and params.alpha == pytest.approx(1)

    def test_identical(self, rng):
        pts = rng.normal(size=(5, 2))
        params, chi = best_match(pts, pts)
        assert chi == pytest.approx(0, abs=1e-12)
        assert chi_distance(pts, pts, params) == pytest.approx(0, abs=1e-12)

    def test_beats_grid_search(self, rng):
        for _ in range(5):
            a, b = rng.normal(size=(4, 2)), rng.normal(size=(4, 2)) * 2
            params, chi = best_match(a, b)
            assert chi <= grid_chi(a, b) + 1e-9
            assert chi == pytest.approx(chi_distance(a, b, params), abs=1e-9)

    def test_refuses_large(self):
        with pytest.raises(RefusalError):
            best_match(np.zeros((9, 1)), np.zeros((9, 1)))

    def test_single_point(self):
        assert best_match([[1, 2]], [[5, 5]]) == (MatchParams(1.0, 0), 0.0)

    @given(st.lists(st.floats(0.01, 10), min_size=1, max_size=12), st.integers(0, 2**31))
    def test_alpha_is_a_global_minimiser(self, a, seed):
        a = np.array(a)
        b = np.random.default_rng(seed).uniform(0.1, 5, size=len(a))
        alpha = optimal_alpha(a, b)
        f = lambda t: np.abs(a - t * b).sum()
        for t in np.linspace(1e-3, 3 * (a / b).max() + 1, 400):
            assert f(alpha) <= f(t) + 1e-9

    def test_degenerate_alpha(self):
        assert optimal_alpha([0, 0], [1, 1]) == 1.0
        assert optimal_alpha([1, 2], [0, 0]) == 1.0


class TestDiff:
    def test_translation(self, rng):
        pts = rng.normal(size=(5, 2))
        d = object_diff(pts, pts + [4, -1], MatchParams(1.0, 0))
        assert np.abs(d.points).max() < 1e-12 and d.points.shape == (5, 1)

    def test_scaling(self, rng):
        pts = rng.normal(size=(4, 3))
        pts -= pts.mean(axis=0)
        d = object_diff(pts, 2.5 * pts, MatchParams(1 / 2.5, 0))
        assert np.abs(d.points).max() < 1e-12

    def test_elementwise_oracle(self, rng):
        a, b = rng.normal(size=(4, 2)), rng.normal(size=(4, 2))
        params = MatchParams(0.7, 9)
        perm = permutation_from_index(9, 4)
        ca, cb = a.mean(axis=0), b.mean(axis=0)
        got = object_diff(a, b, params).points.ravel()
        for i in range(4):
            assert got[i] == pytest.approx(math.dist(a[i] - ca, 0.7 * (b[perm[i]] - cb)), abs=1e-12)


def simulate_fps(values, n):
    """Re-run the farthest-point rule on scalars."""
    center = sum(values) / len(values)
    picked = [min(range(len(values)), key=lambda i: (abs(values[i] - center), i))]
    while len(picked) < n:
        rest = [i for i in range(len(values)) if i not in picked]
        picked.append(max(rest, key=lambda i: (min(abs(values[i] - values[p]) for p in picked), -i)))
    return sorted(values[i] for i in picked)


class TestGeneralize:
    def test_identity(self, rng):
        pts = rng.normal(size=(4, 2))
        assert np.array_equal(generalize(pts, 4).points, pts)

    @given(st.integers(1, 6), st.integers(1, 10), st.integers(0, 2**31))
    def test_size_contract(self, n, target, seed):
        pts = np.random.default_rng(seed).normal(size=(n, 2))
        assert len(generalize(pts, target)) == target

    def test_collinear_downsample(self):
        vals = [0.0, 1.0, 2.0, 9.0]
        assert generalize([[v] for v in vals], 2).points.ravel().tolist() == simulate_fps(vals, 2) \
            == [2.0, 9.0]

    def test_upsample_uses_center(self):
        out = generalize([[0, 0], [2, 4]], 4).points
        assert out[2:].tolist() == [[1, 2], [1, 2]]

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            generalize(np.zeros((0, 2)), 3)


def brute_object_see(objs, tol=1e-9):
    """Oracle: every non-empty subset of the objects as codebook, explicit recursion."""
    n = len(objs)
    if n <= 1:
        return 0.0
    best = math.inf
    for size in range(1, n + 1):
        for code in itertools.combinations(range(n), size):
            classes = {c: [] for c in code}
            for j, o in enumerate(objs):
                scored = []
                for c in code:
                    g = generalize(objs[c], len(o))
                    params, chi = best_match(g, o)
                    is_self = np.array_equal(objs[c].points, o.points)
                    scored.append((round(chi, 9), not is_self, c, params))
                _, _, c, params = min(scored, key=lambda s: s[:3])
                classes[c].append((j, params))
            total = 0.0
            for c, members in classes.items():
                if not members:
                    continue
                p = len(members) / n
                total += p * (math.log2(1 / p) + 1)
                res = []
                for j, params in members:
                    d = object_diff(generalize(objs[c], len(objs[j])), objs[j], params).points
                    d = d[d[:, 0] > tol]
                    if len(d):
                        res.append(PointObject(d))
                total += len(res) / n * brute_object_see(res, tol)
            best = min(best, total)
    return best


class TestObjectSee:
    def test_single(self):
        assert object_see([TRI]) == 0

    def test_congruent_copies(self, rng):
        objs = [TRI, TRI + [5, 5], TRI[[2, 0, 1]] + [1, -2], TRI[[1, 2, 0]] - 7]
        assert object_see(objs) == 1.0
        assert brute_object_see([PointObject(o) for o in objs]) == 1.0

    def test_rotated_copies_keep_residuals(self):
        objs = [TRI, TRI @ rotation(0.7).T, TRI @ rotation(1.4).T + 1, TRI + 2]
        value = object_see(objs)
        assert value > 1.0
        assert value == pytest.approx(brute_object_see([PointObject(o) for o in objs]), abs=1e-9)

    def test_two_classes_match_subset_oracle(self):
        sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
        line = np.array([[0, 0], [1, 0], [2, 0], [7, 0.0]])
        objs = [sq, sq + 3, line, line[[3, 1, 0, 2]] - 4]
        value = object_see(objs)
        assert value == pytest.approx(brute_object_see([PointObject(o) for o in objs]), abs=1e-9)
        assert value <= 2.0  # one codevector per class already costs 2 bits

    def test_mixed_sizes(self, rng):
        objs = [rng.normal(size=(n, 2)) for n in (2, 3, 3, 4)]
        assert object_see(objs) == pytest.approx(
            brute_object_see([PointObject(o) for o in objs]), abs=1e-9)

    def test_reorder_and_motion_invariance(self, rng):
        objs = [rng.normal(size=(3, 2)) for _ in range(4)]
        base = object_see(objs)
        assert object_see(objs[::-1]) == pytest.approx(base, abs=1e-12)
        R, t = rotation(0.9), np.array([3.0, -2.0])
        assert object_see([o @ R.T + t for o in objs]) == pytest.approx(base, abs=1e-9)

    def test_caps(self):
        with pytest.raises(RefusalError):
            object_see([np.zeros((1, 1)) + i for i in range(9)])
        with pytest.raises(InvalidInputError):
            object_see([np.zeros((0, 2)), TRI])


class TestPartition:
    def test_bell_numbers(self):
        assert [sum(1 for _ in set_partitions(n)) for n in range(6)] == [1, 1, 2, 5, 15, 52]

    def test_single_point(self):
        part, bits = min_partition_see([[1, 1]])
        assert bits == 0 and part.labels == (0,)

    def test_two_points(self):
        pts = np.array([[0, 0], [1, 1.0]])
        part, bits = min_partition_see(pts)
        one = object_see([pts])
        two = object_see([pts[:1], pts[1:]])
        assert bits == min(one, two) == 0 and len(part.cells) == 1

    def test_two_congruent_pairs(self):
        pts = np.array([[0, 0], [1, 0], [10, 10], [11, 10.0]])
        part, bits = min_partition_see(pts, max_cell_points=2)
        assert part.labels == (0, 0, 1, 1)
        for labels in set_partitions(4):
            if max(labels.count(c) for c in set(labels)) > 2:
                continue
            cells = [pts[[i for i in range(4) if labels[i] == c]] for c in range(max(labels) + 1)]
            assert bits <= object_see(cells) + 1e-9
        assert bits == object_see(part.cells)

    def test_cap(self):
        with pytest.raises(RefusalError):
            min_partition_see(np.zeros((9, 1)))
