#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import unittest
import logging
import numpy as np

# Adiciona o diretório pai ao path para importar os módulos
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.data_validator import CloudTooLargeError, SpecValidationError
from src.fiber_space import (FiberPoint, FiberSpaceSpec, MetricSpec, dist, explicit_cloud, grid, nearest_grid_points,
                             pairwise_dist, random_cloud, truncation_window)


class TestFiberSpace(unittest.TestCase):
    """Testes para a fibra, a métrica ponderada e as nuvens de candidatos"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.torus = FiberSpaceSpec(kind='torus_seq', D=1, window=3, metric=MetricSpec(kind='weighted_sup'))
        cls.cube_sum = FiberSpaceSpec(kind='cube_seq', D=1, window=4, metric=MetricSpec(kind='weighted_sum'))

    def test_distance_identity(self):
        x = np.array([0.2, 0.7, 0.1])
        self.assertEqual(dist(self.torus, x, x), 0.0, "d(x,x) deve ser 0")

    def test_torus_circle_distance(self):
        """0.0 e 0.9 estão a 0.1 no círculo"""
        x = FiberPoint.of(self.torus, [0.0, 0.0, 0.0])
        y = FiberPoint.of(self.torus, [0.9, 0.0, 0.0])
        self.assertAlmostEqual(dist(self.torus, x, y), 0.1, places=12)

    def test_weighted_sup_uses_symbol_weights(self):
        """Diferença no símbolo 2 pesa 1/4"""
        x = np.zeros(3)
        y = np.array([0.0, 0.0, 0.4])
        self.assertAlmostEqual(dist(self.torus, x, y), 0.25 * 0.4, places=12)

    def test_weighted_sum_normalized(self):
        """Soma ponderada de zeros contra uns com W=4 dá 0.9375"""
        self.assertAlmostEqual(dist(self.cube_sum, np.zeros(4), np.ones(4)), 0.9375, places=12)

    def test_distance_symmetry_and_triangle(self):
        """Simetria e desigualdade triangular em pontos aleatórios"""
        rng = np.random.default_rng(0)
        X = rng.random((40, 3))
        D = pairwise_dist(self.torus, X, X)
        np.testing.assert_allclose(D, D.T, atol=1e-15)
        for i in range(0, 40, 7):
            self.assertTrue(np.all(D[i][:, None] <= D[i][None, :] + D + 1e-12), "Desigualdade triangular violada")

    def test_grid_examples(self):
        """Grelhas de referência no cubo e no toro"""
        cube = FiberSpaceSpec(kind='cube_seq')
        np.testing.assert_allclose(grid(cube, 0.5).points.ravel(), [0.0, 0.5, 1.0])
        np.testing.assert_allclose(grid(FiberSpaceSpec(kind='torus_seq'), 0.25).points.ravel(), [0, 0.25, 0.5, 0.75])
        self.assertEqual(grid(FiberSpaceSpec(kind='cube_seq', D=2, window=2), 0.5).size, 81)

    def test_grid_cap(self):
        """Grelhas acima do limite levantam CloudTooLargeError"""
        spec = FiberSpaceSpec(kind='cube_seq', D=2, window=3)
        with self.assertRaises(CloudTooLargeError) as ctx:
            grid(spec, 0.01, cap=1000)
        self.assertGreater(ctx.exception.cardinality, 1000)
        lazy = grid(spec, 0.01, materialize=False)
        self.assertTrue(lazy.is_product, "A grelha não materializada deve manter a forma produto")

    def test_random_cloud_seeded(self):
        a = random_cloud(self.torus, 50, seed=4)
        b = random_cloud(self.torus, 50, seed=4)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertEqual(a.describe()["count"], 50)

    def test_explicit_cloud_validation(self):
        with self.assertRaises(SpecValidationError):
            explicit_cloud(self.torus, np.array([[0.1, 1.5, 0.0]]))
        with self.assertRaises(SpecValidationError):
            explicit_cloud(self.torus, np.array([[0.1, 0.2]]))

    def test_nearest_grid_points_wraps(self):
        """No toro, 0.99 projeta em 0.0"""
        cloud = grid(FiberSpaceSpec(kind='torus_seq'), 0.25)
        projected = nearest_grid_points(cloud, np.array([[0.99], [0.3], [0.6]]))
        np.testing.assert_allclose(projected.ravel(), [0.0, 0.25, 0.5])

    def test_truncation_window(self):
        """W = n + ⌈log₂(1/ε)⌉ + margem"""
        self.assertEqual(truncation_window(1 / 8, 4, margin=2), 9)
        self.assertEqual(truncation_window(0.3, 1, margin=2), 5)
        with self.assertRaises(SpecValidationError):
            truncation_window(1.5, 2)

    def test_spec_validation(self):
        with self.assertRaises(SpecValidationError) as ctx:
            FiberSpaceSpec(kind='sphere')
        self.assertEqual(ctx.exception.field, 'fiber.kind')
        spec = FiberSpaceSpec.from_dict(self.cube_sum.to_dict())
        self.assertEqual(spec, self.cube_sum)


if __name__ == '__main__':
    unittest.main()
