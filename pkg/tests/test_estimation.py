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

from src.base_system import BaseSystemSpec
from src.data_validator import SpecValidationError
from src.estimation import (assemble_pressure, fiber_entropy, fit_mdim, geometric_ladder, mdim_estimate, pressure_at,
                            summarize_entropy, system_for, validate_ladder, validate_schedule)
from src.fiber_space import FiberSpaceSpec
from src.packing import CloudSpec
from src.rds_core import RandomMapSpec, RandomSystem, constant, zero_potential
from src.reference_systems import get_reference

SCHEDULE = (2, 4, 6, 8)


def synthetic_record(epsilon, rate, rows=3):
    """Registo com log P_n = n·rate exato em todas as linhas"""
    table = np.tile(np.array(SCHEDULE, dtype=float) * rate, (rows, 1))
    return assemble_pressure(epsilon, SCHEDULE, range(rows), table)


class TestEstimation(unittest.TestCase):
    """Testes para as curvas de pressão, a entropia e o ajuste da dimensão média"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        base = BaseSystemSpec(kind='iid_symbols', alphabet=2, weights=(0.5, 0.5), seed=0)
        cls.identity = RandomSystem(base=base, fiber=FiberSpaceSpec(kind='cube_seq'),
                                    map=RandomMapSpec(kind='identity'))
        cls.doubling = RandomSystem(base=base, fiber=FiberSpaceSpec(kind='torus_seq'),
                                    map=RandomMapSpec(kind='doubling_circle'))
        cls.shift = RandomSystem(base=base, fiber=FiberSpaceSpec(kind='torus_seq'), map=RandomMapSpec(kind='shift'))

    def test_ladder_validation(self):
        self.assertEqual(validate_ladder(geometric_ladder(0.25, 4)), (0.25, 0.125, 0.0625, 0.03125))
        with self.assertRaises(SpecValidationError) as ctx:
            validate_ladder([0.1])
        self.assertEqual(ctx.exception.field, 'epsilon_ladder')
        with self.assertRaises(SpecValidationError):
            validate_ladder([0.5, 0.25, 0.2, 0.1])
        with self.assertRaises(SpecValidationError):
            validate_ladder([0.1, 0.2, 0.4, 0.8])

    def test_schedule_validation(self):
        self.assertEqual(validate_schedule([1, 2, 3, 5]), (1, 2, 3, 5))
        with self.assertRaises(SpecValidationError):
            validate_schedule([4, 2, 6, 8])
        with self.assertRaises(SpecValidationError):
            validate_schedule([2, 4, 6])

    def test_system_for_adjusts_window(self):
        """Deslocamentos recebem W = n + ⌈log₂(1/ε)⌉ + margem; as outras aplicações não mudam"""
        self.assertEqual(system_for(self.shift, 0.125, 4).fiber.window, 9)
        self.assertIs(system_for(self.doubling, 0.125, 4), self.doubling)

    def test_assemble_exact_growth(self):
        """Linhas idênticas n·log 2 dão taxa log 2 com erro nulo"""
        record = synthetic_record(0.1, math.log(2))
        self.assertAlmostEqual(record.growth_rate, math.log(2), places=12)
        self.assertEqual(record.growth_stderr, 0.0)
        self.assertAlmostEqual(record.inside_rate, math.log(2), places=12)
        self.assertFalse(record.flagged)
        np.testing.assert_allclose(record.per_n_mean, math.log(2))
        self.assertEqual(len(record.rows()), len(SCHEDULE))

    def test_fit_mdim_exact_slope(self):
        """Taxas log(1/ε) + 0.3 dão declive 1 e ordenada 0.3"""
        records = [synthetic_record(eps, math.log(1 / eps) + 0.3) for eps in geometric_ladder(0.25, 5)]
        estimate = fit_mdim(records)
        self.assertAlmostEqual(estimate.slope, 1.0, places=9)
        self.assertAlmostEqual(estimate.intercept, 0.3, places=9)
        self.assertFalse(estimate.weighted)
        self.assertAlmostEqual(estimate.upper, 1.0, places=9)
        self.assertAlmostEqual(estimate.lower, 1.0, places=9)

    def test_fit_mdim_rejects_short_ladder(self):
        with self.assertRaises(SpecValidationError):
            fit_mdim([synthetic_record(0.1, 1.0)])

    def test_summarize_entropy_envelope(self):
        """Envelope monótono e supremo sobre a escada"""
        records = [synthetic_record(0.5, 0.4), synthetic_record(0.25, 0.6), synthetic_record(0.125, 0.55)]
        estimate = summarize_entropy(records)
        self.assertEqual(estimate.epsilons, (0.5, 0.25, 0.125))
        np.testing.assert_allclose(estimate.envelope, [0.4, 0.6, 0.6])
        self.assertAlmostEqual(estimate.value, 0.6)
        self.assertEqual(estimate.monotonicity_flags, (2,))

    def test_identity_pressure(self):
        """Identidade: P(0) = 0 e P(c) = c·log(1/ε)"""
        record = pressure_at(0.25, zero_potential(), self.identity, SCHEDULE, 2)
        self.assertAlmostEqual(record.growth_rate, 0.0, places=9)
        shifted = pressure_at(0.25, constant(0.5), self.identity, SCHEDULE, 2)
        self.assertAlmostEqual(shifted.growth_rate, 0.5 * math.log(4.0), places=9)
        cover = pressure_at(0.25, zero_potential(), self.identity, SCHEDULE, 2, estimator='cover')
        self.assertAlmostEqual(cover.growth_rate, 0.0, places=9)

    def test_doubling_entropy(self):
        """Duplicação do círculo: entropia log 2"""
        estimate = fiber_entropy(self.doubling, [1.0 / 16.0], SCHEDULE, 2)
        self.assertAlmostEqual(estimate.value, math.log(2), delta=0.05)

    def reference_kwargs(self, name):
        """Argumentos do estimador a partir das definições do sistema de referência"""
        reference = get_reference(name)
        settings = reference.settings
        args = (settings["epsilon_ladder"], settings["n_schedule"], settings["m_omega"])
        return reference, args, {"cloud_spec": CloudSpec.from_dict(settings["cloud"])}

    def assertReferenceEntropy(self, name):
        reference, args, kwargs = self.reference_kwargs(name)
        estimate = fiber_entropy(reference.system, *args, **kwargs)
        self.assertAlmostEqual(estimate.value, reference.expected, delta=reference.tolerance,
                               msg=f"{name}: entropia {estimate.value:.5f}")

    def assertReferenceMdim(self, name):
        reference, args, kwargs = self.reference_kwargs(name)
        estimate = mdim_estimate(zero_potential(), reference.system, *args, **kwargs)
        self.assertAlmostEqual(estimate.slope, reference.expected, delta=reference.tolerance,
                               msg=f"{name}: declive {estimate.slope:.5f}")

    def test_reference_doubling(self):
        """Duplicação com ε = 1/32 e 16 caminhos: log 2 ± 0.05"""
        self.assertEqual(get_reference('doubling').settings["epsilon_ladder"], [1.0 / 32.0])
        self.assertReferenceEntropy('doubling')

    def test_reference_random_expanding(self):
        """Fatores i.i.d. em {2,3}: (log 2 + log 3)/2 ≈ 0.8959 ± 0.07"""
        self.assertAlmostEqual(get_reference('random_expanding').expected, 0.8959, places=4)
        self.assertReferenceEntropy('random_expanding')

    def test_reference_identity(self):
        self.assertReferenceMdim('identity')

    def test_reference_torus_shift_d1(self):
        """Deslocamento com D = 1: declive 1 ± 0.15"""
        self.assertReferenceMdim('torus_shift_d1')

    def test_reference_torus_shift_d2(self):
        """Deslocamento com D = 2: declive 2 ± 0.30"""
        self.assertAlmostEqual(get_reference('torus_shift_d2').tolerance, 0.15 * 2)
        self.assertReferenceMdim('torus_shift_d2')

    def test_parallel_matches_serial(self):
        """O número de trabalhadores não altera a tabela"""
        serial = pressure_at(1.0 / 16.0, zero_potential(), self.doubling, SCHEDULE, 3, n_jobs=1)
        parallel = pressure_at(1.0 / 16.0, zero_potential(), self.doubling, SCHEDULE, 3, n_jobs=2)
        np.testing.assert_array_equal(serial.log_table, parallel.log_table)

    def test_pressure_argument_checks(self):
        with self.assertRaises(SpecValidationError):
            pressure_at(1.5, zero_potential(), self.identity, SCHEDULE, 2)
        with self.assertRaises(SpecValidationError):
            pressure_at(0.25, zero_potential(), self.identity, SCHEDULE, 1)
        with self.assertRaises(SpecValidationError):
            pressure_at(0.25, zero_potential(), self.identity, SCHEDULE, 2, estimator='other')


if __name__ == '__main__':
    unittest.main()
