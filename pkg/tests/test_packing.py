#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import math
import unittest
import logging
import numpy as np

# Adiciona o diretório pai ao path para importar os módulos
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.base_system import BaseSystemSpec, make_path, sample_omega
from src.data_validator import SpecValidationError
from src.fiber_space import FiberSpaceSpec, MetricSpec, grid
from src.packing import (CloudSpec, GridPartition, axis_count, build_cloud, cover_inequality_terms,
                         exact_separated_product, greedy_separated, linear_circle_oracle, partition_function,
                         pn_hat, qn_hat, verify_separated_set)
from src.rds_core import PotentialSpec, RandomMapSpec, RandomSystem, constant, zero_potential


class TestPacking(unittest.TestCase):
    """Testes para os conjuntos separados, os oráculos exatos e as funções de partição"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        base = BaseSystemSpec(kind='iid_symbols', alphabet=2, weights=(0.5, 0.5), seed=3)
        cls.cube = FiberSpaceSpec(kind='cube_seq')
        cls.circle = FiberSpaceSpec(kind='torus_seq')
        cls.identity = RandomSystem(base=base, fiber=cls.cube, map=RandomMapSpec(kind='identity'))
        cls.doubling = RandomSystem(base=base, fiber=cls.circle, map=RandomMapSpec(kind='doubling_circle'))
        cls.expanding = RandomSystem(base=base, fiber=cls.circle,
                                     map=RandomMapSpec(kind='random_expanding', factors=(2, 3)))
        cls.path = make_path(sample_omega(base, 0), 8)
        cls.trig = PotentialSpec(kind='trig', terms=((0.5, 1, 0),))

    def test_exact_oracles(self):
        """Cardinais contínuos: cubo ε=0.3 → 4, cubo³ ε=0.25 → 64, toro ε=0.25 → 3"""
        self.assertEqual(exact_separated_product(self.cube, 0.3), 4)
        self.assertEqual(exact_separated_product(FiberSpaceSpec(kind='cube_seq', D=3), 0.25), 64)
        self.assertEqual(exact_separated_product(self.circle, 0.25), 3)
        with self.assertRaises(SpecValidationError):
            exact_separated_product(FiberSpaceSpec(kind='cube_seq', metric=MetricSpec(kind='weighted_sum')), 0.3)

    def test_identity_greedy_on_grid(self):
        """Grelha de passo 0.05 com ε=0.3: a seleção gulosa escolhe 0, 0.35, 0.7"""
        cloud = grid(self.cube, 0.05)
        F = greedy_separated(cloud, self.identity, self.path, 3, 0.3)
        self.assertEqual(F.cardinality, 3)
        self.assertEqual(F.cardinality, axis_count('cube_seq', 0.3, mesh=0.05))
        np.testing.assert_allclose(F.points.ravel(), [0.0, 0.35, 0.7])

    def test_identity_greedy_reaches_continuum_count(self):
        """Com passo 0.01 e ε=0.3 a seleção gulosa atinge o cardinal contínuo 4"""
        cloud = grid(self.cube, 0.01)
        F = greedy_separated(cloud, self.identity, self.path, 3, 0.3)
        self.assertEqual(F.cardinality, 4)
        self.assertEqual(F.cardinality, exact_separated_product(self.cube, 0.3))
        self.assertEqual(F.cardinality, axis_count('cube_seq', 0.3, mesh=0.01))
        np.testing.assert_allclose(F.points.ravel(), [0.0, 0.31, 0.62, 0.93])

    def test_greedy_modes_agree(self):
        """Modos produto, kd-tree e ingénuo coincidem na ordem canónica"""
        cloud = grid(self.cube, 0.02)
        sizes = {method: greedy_separated(cloud, self.identity, self.path, 2, 0.1, method=method).cardinality
                 for method in ('product', 'kdtree', 'naive')}
        self.assertEqual(len(set(sizes.values())), 1, f"Cardinais distintos: {sizes}")

    def test_verify_separated_set(self):
        cloud = grid(self.circle, 1.0 / 128)
        for order_seed in (None, 5):
            F = greedy_separated(cloud, self.expanding, self.path, 4, 0.05, order_seed=order_seed)
            valid, details = verify_separated_set(F)
            self.assertTrue(valid, f"Conjunto inválido: {details}")
            self.assertEqual(details["bad_pairs"], 0)

    def test_linear_circle_oracle(self):
        """Duplicação em 512 pontos, n=2, ε=0.1: 19 pontos"""
        cloud = grid(self.circle, 1.0 / 512)
        F = greedy_separated(cloud, self.doubling, self.path, 2, 0.1, method='kdtree')
        self.assertEqual(linear_circle_oracle(512, 0.1, [2]), 19)
        self.assertEqual(F.cardinality, 19)
        with self.assertRaises(SpecValidationError):
            linear_circle_oracle(512, 0.3, [2])

    def test_partition_function_zero_and_constant(self):
        """Cinco pontos 0.25-espaçados: log 5, deslocado por n·c·log(1/ε) com f ≡ c"""
        cloud = grid(self.cube, 0.25)
        F = greedy_separated(cloud, self.identity, self.path, 2, 0.2)
        self.assertEqual(F.cardinality, 5)
        self.assertAlmostEqual(partition_function(F, zero_potential()).log_value, math.log(5), places=12)
        shifted = partition_function(F, constant(0.5)).log_value
        self.assertAlmostEqual(shifted, math.log(5) + 2 * 0.5 * math.log(1 / 0.2), places=9)

    def test_pn_hat_bounds(self):
        """log|F| − n·B·log(1/ε) ≤ P̂_n ≤ log|F| + n·B·log(1/ε)"""
        cloud = grid(self.circle, 1.0 / 256)
        value = pn_hat(cloud, self.expanding, self.path, 3, 0.05, self.trig)
        self.assertTrue(value.bounds_hold(self.trig.bound), f"Cotas violadas: {value.to_dict()}")
        canonical = partition_function(greedy_separated(cloud, self.expanding, self.path, 3, 0.05), self.trig)
        self.assertGreaterEqual(value.log_value, canonical.log_value - 1e-12)

    def test_qn_hat_doubling(self):
        """Partição em 2 arcos refinada 4 vezes pela duplicação: 16 células"""
        cloud = grid(self.circle, 1.0 / 64)
        value = qn_hat(GridPartition(self.circle, 0.5), self.doubling, self.path, 4, 0.25, zero_potential(), cloud)
        self.assertEqual(value.term_count, 16)
        self.assertAlmostEqual(value.log_value, math.log(16), places=12)

    def test_pn_below_qn(self):
        """P̂_n(ε) ≤ Q̂_n para partições de lado ε"""
        cloud = grid(self.circle, 1.0 / 256)
        for n, eps in ((2, 0.25), (3, 0.1), (4, 0.05)):
            pn = pn_hat(cloud, self.expanding, self.path, n, eps, self.trig)
            qn = qn_hat(GridPartition(self.circle, eps), self.expanding, self.path, n, eps, self.trig, cloud)
            self.assertLessEqual(pn.log_value, qn.log_value + 1e-9, f"n={n}, ε={eps}")

    def test_cover_inequality(self):
        cloud = grid(self.circle, 1.0 / 128)
        terms = cover_inequality_terms(cloud, self.expanding, self.path, 3, 0.2, self.trig)
        self.assertLessEqual(terms["lhs"], terms["rhs"] + 1e-9, f"Desigualdade violada: {terms}")
        self.assertGreaterEqual(terms["cover_size"], 1.0)

    def test_build_cloud(self):
        spec = CloudSpec(kind='grid', mesh=0.1)
        cloud = build_cloud(spec, self.identity, self.path, 2, 0.2)
        self.assertEqual(cloud.size, 11)
        adaptive = build_cloud(CloudSpec(), self.identity, self.path, 2, 0.2)
        self.assertTrue(adaptive.is_product)
        with self.assertRaises(SpecValidationError):
            CloudSpec(kind='random')
        self.assertEqual(CloudSpec.from_dict(spec.to_dict()), spec)


if __name__ == '__main__':
    unittest.main()
