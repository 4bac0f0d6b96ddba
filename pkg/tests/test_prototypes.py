"""Winner selection, the novelty bracket, and prototype bookkeeping."""

import math

import numpy as np
import pytest

from protostream.prototypes import (
    DEFAULT_RADIUS,
    ClassState,
    add_prototype,
    find_winners,
    novelty_test,
    update_prototype,
)
from protostream.stats import normalize

from conftest import random_unit


def brute_force_winners(state, precision, x):
    """Exhaustive scan with per-candidate quadratic forms (different op order)."""
    dists = []
    for proto in state.prototypes:
        d = x - proto.centroid
        dists.append(float(d @ (precision @ d)))
    b1 = min(range(len(dists)), key=lambda j: (dists[j], j))
    if len(dists) == 1:
        return b1, None
    rest = [j for j in range(len(dists)) if j != b1]
    b2 = min(rest, key=lambda j: (dists[j], j))
    return b1, b2


def make_state(vectors, rng=None, precision=None):
    """Grow a class from a list of unit vectors through the real pipeline."""
    state = ClassState.bootstrap(0, vectors[0], "s0")
    if precision is None:
        precision = np.eye(vectors[0].size)
    for i, x in enumerate(vectors[1:], start=1):
        state.update(x)
        b1, b2 = find_winners(state, precision, x)
        if novelty_test(state, x):
            add_prototype(state, x, f"s{i}", b1)
        else:
            update_prototype(state, x, f"s{i}", b1, b2)
    return state


class TestRadiusConstant:
    def test_default_radius_value(self):
        # chord of a 30-degree arc on the unit sphere
        assert DEFAULT_RADIUS == pytest.approx(0.51764, abs=1e-5)
        assert DEFAULT_RADIUS == pytest.approx(math.sqrt(2 - math.sqrt(3)), abs=1e-12)


class TestFindWinners:
    def test_single_prototype(self, rng):
        state = ClassState.bootstrap(0, random_unit(rng, 5), "s0")
        assert find_winners(state, np.eye(5), random_unit(rng, 5)) == (0, None)

    def test_euclidean_special_case(self):
        e1 = np.zeros(3)
        e1[0] = 1.0
        e2 = np.zeros(3)
        e2[1] = 1.0
        state = ClassState.bootstrap(0, e1, "a")
        state.update(e2)
        add_prototype(state, e2, "b", 0)
        assert find_winners(state, np.eye(3), e1) == (0, 1)

    def test_matches_brute_force_with_random_spd(self, rng):
        for _ in range(25):
            dim = 6
            vecs = [random_unit(rng, dim) for _ in range(5)]
            state = ClassState.bootstrap(0, vecs[0], "s0")
            for i, v in enumerate(vecs[1:], 1):
                state.update(v)
                add_prototype(state, v, f"s{i}", 0)
            a = rng.standard_normal((dim, dim))
            precision = a @ a.T + 0.5 * np.eye(dim)
            x = random_unit(rng, dim)
            assert find_winners(state, precision, x) == brute_force_winners(state, precision, x)

    def test_tie_breaks_to_lowest_index(self, rng):
        v = random_unit(rng, 4)
        state = ClassState.bootstrap(0, v, "a")
        state.update(v)
        add_prototype(state, v, "b", 0)  # duplicate centroid
        b1, b2 = find_winners(state, np.eye(4), random_unit(rng, 4))
        assert (b1, b2) == (0, 1)


class TestNoveltyTest:
    def test_query_equal_to_sole_centroid_is_not_novel(self, rng):
        x = random_unit(rng, 6)
        state = ClassState.bootstrap(0, x, "s0")
        assert novelty_test(state, x) is False

    def test_far_outlier_is_novel(self):
        # Two close samples cluster near e1; a query at e3 sits far below
        # every prototype's density.
        e = np.eye(5)
        state = ClassState.bootstrap(0, e[0], "a")
        x2 = normalize(e[0] + 0.05 * e[1])
        state.update(x2)
        update_prototype(state, x2, "b", 0, None)
        assert novelty_test(state, e[2]) is True

    def test_query_at_mean_with_spread_prototypes_is_novel(self):
        # Prototypes at e1 and e2; the normalized midpoint is denser than
        # either prototype, firing the upper branch.
        e = np.eye(4)
        state = ClassState.bootstrap(0, e[0], "a")
        state.update(e[1])
        add_prototype(state, e[1], "b", 0)
        mid = normalize(e[0] + e[1])
        assert novelty_test(state, mid) is True

    def test_refreshes_density_caches(self, rng):
        x = random_unit(rng, 5)
        state = ClassState.bootstrap(0, x, "s0")
        state.prototypes[0].density_cache = -1.0
        novelty_test(state, random_unit(rng, 5))
        assert state.prototypes[0].density_cache == pytest.approx(state.density(x))


class TestAddPrototype:
    def test_grows_membership_and_edges(self, rng):
        x0 = random_unit(rng, 5)
        x1 = random_unit(rng, 5)
        state = ClassState.bootstrap(0, x0, "a")
        add_prototype(state, x1, "b", 0)
        assert state.prototype_count == 2
        np.testing.assert_array_equal(state.edges, np.array([[0, 1], [1, 0]]))
        new = state.prototypes[1]
        assert new.support == 1
        assert new.members == ["b"]
        assert new.radius == pytest.approx(0.51764, abs=1e-5)
        np.testing.assert_array_equal(new.centroid, x1)

    def test_edge_links_only_to_winner(self, rng):
        vecs = [random_unit(rng, 6) for _ in range(4)]
        state = ClassState.bootstrap(0, vecs[0], "s0")
        for i, v in enumerate(vecs[1:3], 1):
            add_prototype(state, v, f"s{i}", 0)
        before = state.edges.copy()
        add_prototype(state, vecs[3], "s3", 2)
        grown = state.edges
        np.testing.assert_array_equal(grown[:3, :3], before)
        new_row = grown[3]
        assert new_row[2] == 1 and grown[2, 3] == 1
        assert new_row[0] == new_row[1] == new_row[3] == 0


class TestUpdatePrototype:
    def test_same_sample_twice_halves_radius(self, rng):
        x = random_unit(rng, 5)
        state = ClassState.bootstrap(0, x, "a")
        state.update(x)
        update_prototype(state, x, "b", 0, None)
        proto = state.prototypes[0]
        assert proto.support == 2
        assert proto.members == ["a", "b"]
        np.testing.assert_allclose(proto.centroid, x, atol=1e-15)
        # ||p|| = 1 so the radius halving rule gives r*/sqrt(2)
        assert proto.radius == pytest.approx(DEFAULT_RADIUS / math.sqrt(2), abs=1e-9)

    def test_support_counts_assignments(self, rng):
        x = random_unit(rng, 4)
        state = ClassState.bootstrap(0, x, "s0")
        for i in range(9):
            v = random_unit(rng, 4)
            state.update(v)
            update_prototype(state, v, f"s{i + 1}", 0, None)
        assert state.prototypes[0].support == 10

    def test_centroid_matches_batch_mean_of_members(self, rng):
        xs = [random_unit(rng, 6) for _ in range(40)]
        state = ClassState.bootstrap(0, xs[0], "s0")
        for i, x in enumerate(xs[1:], 1):
            state.update(x)
            update_prototype(state, x, f"s{i}", 0, None)
        np.testing.assert_allclose(
            state.prototypes[0].centroid, np.mean(xs, axis=0), atol=1e-9
        )

    def test_b2_edge_increment(self, rng):
        vecs = [random_unit(rng, 5) for _ in range(3)]
        state = ClassState.bootstrap(0, vecs[0], "s0")
        add_prototype(state, vecs[1], "s1", 0)
        state.update(vecs[2])
        update_prototype(state, vecs[2], "s2", 1, 0)
        assert state.edges[1, 0] == 2  # 1 from the add link + 1 from the update
        assert state.edges[0, 1] == 2

    def test_radius_stays_positive_under_identical_floods(self, rng):
        x = random_unit(rng, 4)
        state = ClassState.bootstrap(0, x, "s0")
        for i in range(200):
            state.update(x)
            update_prototype(state, x, f"s{i + 1}", 0, None)
        assert state.prototypes[0].radius > 0


class TestStreamInvariants:
    def test_edges_symmetric_zero_diagonal_after_stream(self, rng):
        vecs = [random_unit(rng, 6) for _ in range(150)]
        state = make_state(vecs)
        np.testing.assert_array_equal(state.edges, state.edges.T)
        np.testing.assert_array_equal(np.diag(state.edges), 0)
        assert state.edges.shape == (state.prototype_count, state.prototype_count)

    def test_support_conservation(self, rng):
        vecs = [random_unit(rng, 6) for _ in range(150)]
        state = make_state(vecs)
        assert sum(p.support for p in state.prototypes) == len(vecs)

    def test_every_sample_in_exactly_one_prototype(self, rng):
        vecs = [random_unit(rng, 5) for _ in range(100)]
        state = make_state(vecs)
        seen = [m for p in state.prototypes for m in p.members]
        assert sorted(seen) == sorted(f"s{i}" for i in range(100))
