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

from src.base_system import (BaseState, BaseSystemSpec, advance, expectation, make_path, sample_omega,
                             summarize_samples)
from src.data_validator import SpecValidationError


class TestBaseSystem(unittest.TestCase):
    """Testes para o sistema de base (amostragem, deslocamento, caminhos e médias)"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.logger.setLevel(logging.INFO)
        cls.bernoulli = BaseSystemSpec(kind='iid_symbols', alphabet=2, weights=(0.5, 0.5), seed=11)

    def test_sample_is_deterministic(self):
        """A mesma (semente, índice) devolve o mesmo estado"""
        first = sample_omega(self.bernoulli, 7)
        second = sample_omega(self.bernoulli, 7)
        self.assertEqual(first, second, "Estados diferentes para a mesma semente")
        np.testing.assert_array_equal(first.symbols(200), second.symbols(200))

    def test_distinct_streams_differ(self):
        """Índices distintos dão sequências distintas"""
        a = sample_omega(self.bernoulli, 0).symbols(128)
        b = sample_omega(self.bernoulli, 1).symbols(128)
        self.assertFalse(np.array_equal(a, b), "Sequências independentes coincidem")

    def test_rotation_angles_uniform(self):
        """Ângulos amostrados têm média próxima de 1/2"""
        spec = BaseSystemSpec(kind='rotation', alphabet=2, seed=3)
        angles = np.array([sample_omega(spec, k).angle for k in range(10_000)])
        self.assertTrue(np.all((angles >= 0.0) & (angles < 1.0)), "Ângulo fora de [0,1)")
        self.assertAlmostEqual(float(angles.mean()), 0.5, delta=0.02, msg="Média dos ângulos afastada de 1/2")

    def test_markov_not_irreducible(self):
        """Matriz com estado absorvente é rejeitada"""
        with self.assertRaises(SpecValidationError) as ctx:
            BaseSystemSpec(kind='markov_symbols', alphabet=2, transition=((1.0, 0.0), (0.5, 0.5)))
        self.assertEqual(ctx.exception.field, 'transition')
        self.assertIn("not irreducible", str(ctx.exception))

    def test_markov_symbols_follow_transitions(self):
        """Cadeia determinística alterna os símbolos"""
        spec = BaseSystemSpec(kind='markov_symbols', alphabet=2, transition=((0.0, 1.0), (1.0, 0.0)), seed=5)
        symbols = sample_omega(spec, 2).symbols(150)
        self.assertTrue(np.all(np.abs(np.diff(symbols)) == 1), "A cadeia alternada não alterna")

    def test_advance_shifts_symbols(self):
        """θ desloca a sequência de um símbolo"""
        omega = sample_omega(self.bernoulli, 4)
        symbols = omega.symbols(70)
        np.testing.assert_array_equal(advance(omega).symbols(69), symbols[1:])

    def test_advance_rotation(self):
        """Ângulo 0.9 com número de rotação 0.25 passa a 0.15"""
        spec = BaseSystemSpec(kind='rotation', rotation_number=0.25)
        omega = BaseState(spec=spec, stream_index=0, angle=0.9)
        self.assertAlmostEqual(advance(omega).angle, 0.15, places=12)

    def test_make_path(self):
        """Caminhos [ω, θω, θ²ω]"""
        omega = sample_omega(self.bernoulli, 1)
        self.assertEqual(make_path(omega, 1).states, (omega,))
        path = make_path(omega, 3)
        self.assertEqual(path.length, 3)
        self.assertEqual(path[2], advance(advance(omega)))
        self.assertEqual(path.tail(1)[0], path[1])
        with self.assertRaises(SpecValidationError):
            make_path(omega, 0)

    def test_expectation_constant(self):
        """g ≡ c devolve (c, 0)"""
        estimate, stderr = expectation(lambda omega: 0.7, self.bernoulli, 50)
        self.assertEqual(estimate, 0.7)
        self.assertEqual(stderr, 0.0)

    def test_expectation_bernoulli(self):
        """Primeiro símbolo de Bernoulli(0.3) tem média 0.3"""
        spec = BaseSystemSpec(kind='iid_symbols', alphabet=2, weights=(0.7, 0.3), seed=9)
        estimate, stderr = expectation(lambda omega: float(omega.symbol(0)), spec, 100_000)
        self.assertAlmostEqual(estimate, 0.3, delta=0.005, msg="Frequência do símbolo 1 incorreta")
        self.assertGreater(stderr, 0.0)

    def test_expectation_log_factor(self):
        """𝔼 log a(ω) com a ∈ {2,3} equiprováveis"""
        factors = np.array([2.0, 3.0])
        estimate, _ = expectation(lambda omega: math.log(factors[omega.symbol(0)]), self.bernoulli, 20_000)
        self.assertAlmostEqual(estimate, 0.5 * (math.log(2) + math.log(3)), delta=0.01)

    def test_expectation_requires_two_samples(self):
        with self.assertRaises(SpecValidationError):
            expectation(lambda omega: 1.0, self.bernoulli, 1)

    def test_summarize_samples(self):
        """Amostras idênticas devolvem o valor com erro nulo"""
        self.assertEqual(summarize_samples(np.full(5, 2.5)), (2.5, 0.0))
        mean, stderr = summarize_samples(np.array([0.0, 1.0]))
        self.assertAlmostEqual(mean, 0.5)
        self.assertAlmostEqual(stderr, 0.5)

    def test_spec_round_trip(self):
        spec = BaseSystemSpec.from_dict(self.bernoulli.to_dict())
        self.assertEqual(spec, self.bernoulli)


if __name__ == '__main__':
    unittest.main()
