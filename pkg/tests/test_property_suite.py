#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import unittest
import logging
import numpy as np

# Adiciona o diretório pai ao path para importar os módulos
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.acceptance_rules import AcceptanceRules
from src.property_suite import POTENTIAL_FAMILIES, PartitionTrial, pressure_property_suite, random_potential
from src.reference_systems import get_reference


class TestPropertySuite(unittest.TestCase):
    """Testes para a bateria de propriedades das funções de partição"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.expanding = get_reference('random_expanding').system
        cls.shift = get_reference('torus_shift_d2').system

    def test_suite_passes_on_expanding_map(self):
        report = pressure_property_suite(self.expanding, trials=15, seed=1, cloud_size=80)
        self.assertTrue(report['passed'], f"Violações: {report['failures'][:3]}")
        self.assertGreater(report['checks'], 15 * 10)

    def test_suite_passes_on_shift(self):
        report = pressure_property_suite(self.shift, trials=10, seed=2, cloud_size=80)
        self.assertTrue(report['passed'], f"Violações: {report['failures'][:3]}")

    def test_suite_is_reproducible(self):
        """A mesma semente mestra dá o mesmo relatório"""
        first = pressure_property_suite(self.expanding, trials=4, seed=7, cloud_size=60)
        second = pressure_property_suite(self.expanding, trials=4, seed=7, cloud_size=60)
        self.assertEqual(first, second)

    def test_trial_fixes_one_separated_set(self):
        trial = PartitionTrial(self.expanding, 3, 11, cloud_size=60)
        self.assertEqual(trial.path.length, trial.n + 1)
        self.assertEqual(trial.orbit_F.shape[1], trial.F.cardinality)
        self.assertIn(trial.epsilon, (0.5, 0.25, 0.125))
        self.assertEqual(trial.context['seed'], trial.seed)

    def test_random_potentials_respect_bound(self):
        """Cada família respeita o limite B declarado numa nuvem aleatória"""
        rng = np.random.default_rng(5)
        trial = PartitionTrial(self.expanding, 0, 5, cloud_size=60)
        for family in POTENTIAL_FAMILIES:
            f = random_potential(rng, trial.system, family)
            self.assertLessEqual(trial.sup(f, 0), f.bound + 1e-12, f"Família {family}")

    def test_check_records_failure(self):
        """Uma relação violada devolve um registo com o contexto de reprodução"""
        failure = AcceptanceRules.check('monotonicity', 2.0, 1.0, 'leq', context={'seed': 9})
        self.assertEqual(failure['item'], 'monotonicity')
        self.assertEqual(failure['context'], {'seed': 9})
        self.assertIsNone(AcceptanceRules.check('monotonicity', 1.0, 1.0 + 1e-12, 'eq'))
        self.assertIsNotNone(AcceptanceRules.check('eq', 1.0, float('nan'), 'leq'))

    def test_tie_convention(self):
        """Distância igual a ε não separa nem pertence à bola aberta"""
        self.assertFalse(AcceptanceRules.separated(0.25, 0.25))
        self.assertFalse(AcceptanceRules.inside_open_ball(0.25, 0.25))
        self.assertTrue(AcceptanceRules.separated(0.25 + 1e-9, 0.25))


if __name__ == '__main__':
    unittest.main()
