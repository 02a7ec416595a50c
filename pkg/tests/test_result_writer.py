#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import json
import shutil
import hashlib
import tempfile
import unittest
import logging

# Adiciona o diretório pai ao path para importar os módulos
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.data_validator import SpecValidationError
from src.result_writer import ResultWriter

ROWS = [
    {"epsilon": 0.25, "n": 2, "log_pn": 1.0 / 3.0},
    {"epsilon": 0.25, "n": 4, "log_pn": 2.0 / 3.0},
]


class TestResultWriter(unittest.TestCase):
    """Testes para a escrita determinística de tabelas e documentos"""

    @classmethod
    def setUpClass(cls):
        """Configuração executada uma vez antes de todos os testes"""
        cls.logger = logging.getLogger('test_logger')
        cls.logger.setLevel(logging.INFO)
        cls.test_dir = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        """Limpeza executada uma vez após todos os testes"""
        shutil.rmtree(cls.test_dir)

    def read(self, path):
        with open(path, 'rb') as f:
            return f.read()

    def test_csv_table(self):
        writer = ResultWriter(os.path.join(self.test_dir, 'csv'), logger=self.logger)
        path = writer.write_table(ROWS, 'pressure')
        self.assertTrue(path.endswith('pressure.csv'))
        lines = self.read(path).decode('utf-8').splitlines()
        self.assertEqual(lines[0], 'epsilon,n,log_pn')
        self.assertEqual(lines[1], '0.25,2,0.333333333333333')
        self.assertFalse(os.path.exists(path + '.tmp'), "Ficheiro temporário não removido")

    def test_json_table_keeps_column_order(self):
        writer = ResultWriter(os.path.join(self.test_dir, 'json'), output_format='json', logger=self.logger)
        path = writer.write_table(ROWS, 'pressure', columns=['n', 'epsilon', 'log_pn'])
        with open(path, 'r', encoding='utf-8') as f:
            rows = json.load(f)
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[1]['n'], 4)
        self.assertAlmostEqual(rows[1]['log_pn'], 2.0 / 3.0, places=12)

    def test_repeated_writes_are_byte_identical(self):
        """A mesma entrada produz os mesmos bytes"""
        first = ResultWriter(os.path.join(self.test_dir, 'first'), logger=self.logger)
        second = ResultWriter(os.path.join(self.test_dir, 'second'), logger=self.logger)
        for writer in (first, second):
            writer.write_table(ROWS, 'pressure')
            writer.write_json({"b": 1, "a": [0.1, 0.2]}, 'summary.json')
        for name in ('pressure.csv', 'summary.json'):
            self.assertEqual(self.read(os.path.join(first.output_dir, name)),
                             self.read(os.path.join(second.output_dir, name)), f"{name} difere")

    def test_inventory_digests(self):
        """Inventário ordenado por nome com tamanho e SHA-256 de cada ficheiro"""
        writer = ResultWriter(os.path.join(self.test_dir, 'inventory'), logger=self.logger)
        writer.write_json({"value": 0.0}, 'summary.json')
        writer.write_table(ROWS, 'pressure')
        inventory = writer.inventory()
        self.assertEqual([entry['path'] for entry in inventory], ['pressure.csv', 'summary.json'])
        for entry in inventory:
            content = self.read(os.path.join(writer.output_dir, entry['path']))
            self.assertEqual(entry['bytes'], len(content))
            self.assertEqual(entry['sha256'], hashlib.sha256(content).hexdigest())

    def test_unknown_format(self):
        with self.assertRaises(SpecValidationError) as ctx:
            ResultWriter(os.path.join(self.test_dir, 'xlsx'), output_format='xlsx')
        self.assertEqual(ctx.exception.field, 'format')


if __name__ == '__main__':
    unittest.main()
