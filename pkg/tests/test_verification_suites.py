#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import json
import shutil
import tempfile
import unittest
import logging
from contextlib import redirect_stdout
from io import StringIO

# Adiciona o diretório pai ao path para importar os módulos
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.data_validator import SpecValidationError
from src.main import EXIT_OK, main
from src.verification_report import VerificationReport
from src.verification_suites import SUITES, SuiteCollector, run_suite, suite_names


class TestVerificationSuites(unittest.TestCase):
    """Testes para as suites de verificação e o respetivo relatório"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.logger.setLevel(logging.INFO)
        cls.test_dir = tempfile.mkdtemp()
        os.environ['MDIM_LOG_DIR'] = os.path.join(cls.test_dir, 'logs')

    @classmethod
    def tearDownClass(cls):
        """Limpeza executada uma vez após todos os testes"""
        shutil.rmtree(cls.test_dir)

    def assertSuitePasses(self, name, trials):
        report = run_suite(name, trials=trials, seed=0)
        self.assertEqual(report['suite'], name)
        self.assertGreater(report['checks'], 0, f"Suite {name} sem verificações")
        self.assertTrue(report['passed'], f"Suite {name}: {report['failures'][:3]}")
        return report

    def test_suite_registry(self):
        self.assertEqual(suite_names(), ['pressure-properties', 'packing-oracles', 'cover-inequalities', 'kingman',
                                         'cocycle', 'measure-bounds'])
        self.assertTrue(all(default >= 1 for _, default in SUITES.values()))

    def test_pressure_properties(self):
        self.assertSuitePasses('pressure-properties', 10)

    def test_packing_oracles(self):
        self.assertSuitePasses('packing-oracles', 4)

    def test_cover_inequalities(self):
        self.assertSuitePasses('cover-inequalities', 6)

    def test_kingman(self):
        self.assertSuitePasses('kingman', 6)

    def test_cocycle(self):
        report = self.assertSuitePasses('cocycle', 12)
        self.assertEqual(report['violations'], 0)

    def test_measure_bounds(self):
        self.assertSuitePasses('measure-bounds', 1)

    def test_invalid_requests(self):
        with self.assertRaises(SpecValidationError) as ctx:
            run_suite('inequalities')
        self.assertEqual(ctx.exception.field, 'suite')
        with self.assertRaises(SpecValidationError) as ctx:
            run_suite('cocycle', trials=0)
        self.assertEqual(ctx.exception.field, 'trials')

    def test_report_records_failures(self):
        """Uma violação chega ao relatório com o contexto e a suite"""
        collector = SuiteCollector('synthetic', 1, 0)
        collector.check('monotonicity', 1.0, 2.0, 'leq')
        collector.check('monotonicity', 3.0, 2.0, 'leq', context={'seed': 42})
        report = VerificationReport(self.logger)
        report.start_timing()
        report.log_suite(collector.report())
        report.end_timing()
        self.assertFalse(report.passed)
        failures = report.get_failures()
        self.assertEqual(len(failures), 1)
        self.assertEqual(failures[0]['suite'], 'synthetic')
        self.assertEqual(failures[0]['context'], {'seed': 42})

        path = report.save_report(os.path.join(self.test_dir, 'synthetic.json'))
        with open(path, 'r', encoding='utf-8') as f:
            saved = json.load(f)
        self.assertIn('summary', saved)

    def test_verify_command(self):
        """O comando verify grava o relatório e devolve 0 quando tudo passa"""
        out = os.path.join(self.test_dir, 'verify')
        with redirect_stdout(StringIO()):
            code = main(['verify', '--suite', 'cocycle', '--trials', '5', '--out', out])
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.exists(os.path.join(out, 'verification_cocycle.json')))


if __name__ == '__main__':
    unittest.main()
