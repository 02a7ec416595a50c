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
from src.data_validator import SpecValidationError
from src.measure_mdim import (MdimSettings, MeasureRep, PotentialFamily, a_membership, atomic_orbit_measure,
                              cesaro_pushforward, concavity_probe, constants_family, f_estimate, integrate,
                              invariance_defect, marginal_defect, maximal_measure_search, mixture, product_measure,
                              trig_linear_family)
from src.rds_core import PotentialSpec, zero_potential
from src.reference_systems import get_reference

X0 = PotentialSpec(kind='coordinate_linear', coefficients=(1.0,))
COS = PotentialSpec(kind='trig', terms=((1.0, 1, 0),))


class TestMeasureMdim(unittest.TestCase):
    """Testes para as medidas em Ω×X, a integração e o estimador F̂(μ,d)"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.identity = get_reference('identity').system
        cls.doubling = get_reference('doubling').system
        cls.settings = MdimSettings(epsilon_ladder=(0.25, 0.125, 0.0625, 0.03125), n_schedule=(2, 3, 4, 5),
                                    m_omega=2, m_samples=500, seed=3)

    def test_uniform_integral(self):
        """∫x dμ = 1/2 para a lei uniforme"""
        estimate, stderr = integrate(X0, product_measure(self.identity), 5000, seed=1)
        self.assertAlmostEqual(estimate, 0.5, delta=0.03)
        self.assertGreater(stderr, 0.0)
        self.assertLessEqual(abs(estimate), X0.bound)

    def test_atomic_law(self):
        """Átomos 0.2 e 0.8 com pesos (1/4, 3/4): média 0.65"""
        mu = product_measure(self.identity, 'atomic', atoms=((0.2,), (0.8,)), atom_weights=(0.25, 0.75))
        estimate, _ = integrate(X0, mu, 4000, seed=2)
        self.assertAlmostEqual(estimate, 0.65, delta=0.03)
        with self.assertRaises(SpecValidationError):
            product_measure(self.identity, 'atomic', atoms=((0.2,), (0.8,)), atom_weights=(0.5, 0.6))
        with self.assertRaises(SpecValidationError):
            product_measure(self.identity, 'atomic', atoms=((1.5,),))

    def test_grid_law(self):
        sample = product_measure(self.identity, 'grid', mesh=0.25).sample(200, seed=0)
        self.assertTrue(set(np.round(sample.points.ravel(), 12)) <= {0.0, 0.25, 0.5, 0.75, 1.0})

    def test_sampling_is_deterministic(self):
        mu = cesaro_pushforward(product_measure(self.doubling), 10)
        first, second = mu.sample(50, seed=4), mu.sample(50, seed=4)
        np.testing.assert_array_equal(first.points, second.points)
        self.assertEqual(first.omegas, second.omegas)

    def test_mixture_extremes(self):
        """t = 1 devolve a primeira componente e t = 0 a segunda"""
        low = product_measure(self.identity, 'atomic', atoms=((0.2,),))
        high = product_measure(self.identity, 'atomic', atoms=((0.8,),))
        np.testing.assert_allclose(mixture(low, high, 1.0).sample(30, 0).points, 0.2)
        np.testing.assert_allclose(mixture(low, high, 0.0).sample(30, 0).points, 0.8)
        with self.assertRaises(SpecValidationError):
            mixture(low, high, 1.5)

    def test_measure_round_trip(self):
        mu = atomic_orbit_measure(cesaro_pushforward(product_measure(self.doubling, name='uniform'), 5), 4, 3, seed=2)
        self.assertEqual(MeasureRep.from_dict(mu.to_dict()), mu)
        self.assertIn('uniform', mu.label)

    def test_uniform_is_doubling_invariant(self):
        """A lei uniforme é invariante pela duplicação"""
        defect, stderr = invariance_defect(product_measure(self.doubling), [COS, X0], 4000, seed=5)
        self.assertLessEqual(defect, 4.0 * stderr + 1e-12)

    def test_cesaro_invariance_bound(self):
        """Defeito das médias de Cesàro a partir de um átomo ≤ 2·B/N + 4σ"""
        initial = product_measure(self.doubling, 'atomic', atoms=((0.1,),))
        for N in (10, 100):
            defect, stderr = invariance_defect(cesaro_pushforward(initial, N), [COS], 3000, seed=6)
            self.assertLessEqual(defect, 2.0 * COS.bound / N + 4.0 * stderr, f"N={N}")

    def test_marginal_defect(self):
        """A marginal em Ω da medida produto é ℙ"""
        defect, error = marginal_defect(product_measure(self.doubling), lambda omega: float(omega.symbol(0)), 4000)
        self.assertLessEqual(defect, 4.0 * error + 1e-12)

    def test_family_construction(self):
        family = trig_linear_family(coordinates=1, frequencies=(1, 2))
        self.assertEqual(family.size, 3)
        self.assertEqual(family.combine([0.0, 0.0, 0.0]), zero_potential())
        self.assertAlmostEqual(family.combine([0.5, -0.25, 1.0]).bound, 1.75)
        self.assertEqual(family.extended([COS]).size, 4)
        self.assertEqual(PotentialFamily.from_dict(family.to_dict()), family)
        with self.assertRaises(SpecValidationError):
            PotentialFamily(basis=(COS,), lower=(0.5,), upper=(1.0,))

    def test_f_estimate_constants_family(self):
        """Com f = λ as duas parcelas cancelam: F̂ = m̂dim(0)"""
        estimate = f_estimate(product_measure(self.identity), constants_family(), self.identity, 10, self.settings)
        self.assertAlmostEqual(estimate.value, estimate.mdim_zero, delta=AcceptanceRules.LOG_SLACK)
        self.assertLessEqual(estimate.evaluations, 10)
        self.assertEqual(estimate.trace[0]["lambda"], [0.0])

    def test_f_estimate_upper_bound(self):
        """F̂(μ) ≤ m̂dim(0) e cada entrada do traço é um majorante"""
        estimate = f_estimate(product_measure(self.identity), trig_linear_family(), self.identity, 12, self.settings)
        self.assertLessEqual(estimate.value, estimate.mdim_zero + 1e-12)
        self.assertAlmostEqual(estimate.mdim_zero, 0.0, delta=1e-9)
        self.assertTrue(all(entry["objective"] >= estimate.value for entry in estimate.trace))
        payload = estimate.to_dict()
        self.assertAlmostEqual(payload["gap"], estimate.mdim_zero - estimate.value)

    def test_f_estimate_budget(self):
        with self.assertRaises(SpecValidationError):
            f_estimate(product_measure(self.identity), constants_family(), self.identity, 5, self.settings)

    def test_maximal_measure_search_ranking(self):
        candidates = [product_measure(self.identity, name='uniform'),
                      product_measure(self.identity, 'atomic', atoms=((1.0,),), name='atom_1')]
        report = maximal_measure_search(candidates, constants_family(), self.identity, 10, self.settings)
        values = [row["value"] for row in report["ranking"]]
        self.assertEqual(values, sorted(values, reverse=True))
        self.assertEqual(report["max_value"], values[0])
        self.assertLessEqual(report["max_value"], report["mdim"] + AcceptanceRules.LOG_SLACK)

    def test_maximal_measure_search_needs_two_candidates(self):
        with self.assertRaises(SpecValidationError) as ctx:
            maximal_measure_search([product_measure(self.identity)], constants_family(), self.identity, 10,
                                   self.settings)
        self.assertEqual(ctx.exception.field, 'candidates')

    def test_enlarged_family_never_increases_estimate(self):
        """Família alargada com arranque em λ* da família menor: F̂ não aumenta"""
        mu = product_measure(self.identity)
        small = f_estimate(mu, constants_family(), self.identity, 10, self.settings)
        enlarged = constants_family().extended(trig_linear_family().basis)
        large = f_estimate(mu, enlarged, self.identity, 12, self.settings, warm_start=small.lambda_star)
        self.assertLessEqual(large.value, small.value + AcceptanceRules.LOG_SLACK)
        self.assertEqual(enlarged.combine(list(small.lambda_star) + [0.0, 0.0]),
                         constants_family().combine(list(small.lambda_star)))

    def test_concavity_midpoint(self):
        """F̂(½μ₁ + ½μ₂) ≥ ½F̂(μ₁) + ½F̂(μ₂) − folga; a marca só surge abaixo da corda"""
        low = product_measure(self.identity, 'atomic', atoms=((0.2,),), name='atom_low')
        high = product_measure(self.identity, 'atomic', atoms=((0.8,),), name='atom_high')
        result = concavity_probe(low, high, 0.5, constants_family(), self.identity, 10, self.settings)
        self.assertAlmostEqual(result["chord"], 0.5 * result["first"] + 0.5 * result["second"], places=12)
        self.assertGreaterEqual(result["mixture"], result["chord"] - result["slack"])
        self.assertFalse(result["flagged"])

        # Folga negativa: exige que a mistura fique acima da corda por mais de 1
        strict = concavity_probe(low, high, 0.5, constants_family(), self.identity, 10, self.settings, slack=-1.0)
        self.assertTrue(strict["flagged"])
        with self.assertRaises(SpecValidationError):
            concavity_probe(low, high, 1.5, constants_family(), self.identity, 10, self.settings)

    def test_a_membership_zero(self):
        member, diagnostics = a_membership(zero_potential(), self.identity, 0.05, self.settings)
        self.assertTrue(member, f"Diagnóstico: {diagnostics}")


if __name__ == '__main__':
    unittest.main()
