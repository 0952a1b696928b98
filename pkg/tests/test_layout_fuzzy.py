import math

import numpy as np
from scipy.optimize import brentq

from mirror.layout import (fuzzy_simplicial_set, knn_graph, membership_strengths,
                           smooth_knn_calibration)
from mirror.layout.base import NeighborGraph


class TestCalibration:
    def test_sigma_matches_independent_scalar_solver(self):
        # five-point instance, sigma solved by an unrelated root finder
        rng = np.random.default_rng(12)
        distances = np.sort(rng.uniform(0.05, 1.5, size=(5, 15)), axis=1)
        sigmas, rhos = smooth_knn_calibration(distances, 15)
        target = math.log2(15)
        for i in range(5):
            def weight_sum(s):
                return np.exp(-np.maximum(distances[i] - rhos[i], 0.0) / s).sum() - target

            oracle = brentq(weight_sum, 1e-12, 1e6, xtol=1e-12)
            assert abs(sigmas[i] - oracle) < 1e-4

    def test_rho_is_nearest_neighbor_distance(self):
        distances = np.array([[0.2, 0.4, 0.9]])
        _, rhos = smooth_knn_calibration(distances, 3)
        assert rhos[0] == 0.2

    def test_all_duplicates_clamps_to_floor(self):
        distances = np.zeros((1, 4))
        sigmas, _ = smooth_knn_calibration(distances, 4)
        assert sigmas[0] <= 1e-6  # weight sum is k regardless; bisection hits the floor


class TestMembership:
    def test_nearest_neighbor_weight_is_one(self):
        distances = np.array([[0.3, 0.5, 0.8]])
        indices = np.array([[1, 2, 3]])
        graph = NeighborGraph(indices=indices, distances=distances)
        sigmas, rhos = smooth_knn_calibration(distances, 3)
        weights = membership_strengths(graph, sigmas, rhos)
        assert weights[0, 0] == 1.0
        assert np.all(weights[0, 1:] < 1.0)

    def test_symmetrization_identity_for_mutual_ones(self):
        # two points that are each other's nearest neighbor: both directed
        # weights are 1, and 1 + 1 - 1*1 = 1
        vectors = np.array([[1.0, 0.0], [0.9995, 0.0316], [0.0, 1.0], [0.05, 0.99]])
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        graph = knn_graph(vectors, k=2)
        fuzzy = fuzzy_simplicial_set(graph)
        assert abs(fuzzy.matrix[0, 1] - 1.0) < 1e-12
        assert abs(fuzzy.matrix[1, 0] - 1.0) < 1e-12

    def test_symmetric_weights_in_unit_interval(self):
        rng = np.random.default_rng(3)
        vectors = rng.normal(size=(60, 8))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        fuzzy = fuzzy_simplicial_set(knn_graph(vectors, k=6))
        coo = fuzzy.matrix.tocoo()
        assert len(coo.data)
        assert np.all(coo.data > 0) and np.all(coo.data <= 1.0 + 1e-12)
        diff = (fuzzy.matrix - fuzzy.matrix.T)
        assert abs(diff).max() < 1e-12
        assert fuzzy.matrix.diagonal().max() == 0.0  # no self-edges
