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

from src.data_validator import ManifestValidator, SpecValidationError
from src.experiments import MANIFEST_NAME, ExperimentRunner, RunConfig, load_config
from src.initialize import mmdim_example_config, write_default_configs
from src.main import EXIT_CONFIG, EXIT_OK, main
from src.reference_systems import get_reference
from src.task_runner import TaskRunner


def identity_config(**overrides):
    """Configuração mdim pequena sobre a identidade em [0,1]"""
    payload = {
        "name": "identity_small",
        "task": "mdim",
        "system": get_reference('identity').system.to_dict(),
        "epsilon_ladder": [0.25, 0.125, 0.0625, 0.03125],
        "n_schedule": [2, 3, 4, 5],
        "m_omega": 2,
        "seed": 4,
        "expected": {"value": 0.0, "tolerance": 0.05},
    }
    payload.update(overrides)
    return payload


def run_cli(argv):
    """Executa a linha de comando e devolve (código, saída)"""
    buffer = StringIO()
    with redirect_stdout(buffer):
        code = main(argv)
    return code, buffer.getvalue()


class TestExperiments(unittest.TestCase):
    """Testes para as execuções configuradas, o manifesto e a linha de comando"""

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

    def write_config(self, name, payload):
        path = os.path.join(self.test_dir, f"{name}.json")
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f)
        return path

    def read_bytes(self, *parts):
        with open(os.path.join(*parts), 'rb') as f:
            return f.read()

    def test_config_hash_ignores_runtime(self):
        config = RunConfig.from_dict(identity_config())
        moved = config.with_runtime(output_dir=os.path.join(self.test_dir, 'elsewhere'), threads=3)
        self.assertEqual(config.config_hash, moved.config_hash)
        reseeded = config.with_runtime(seed=5)
        self.assertNotEqual(config.config_hash, reseeded.config_hash)
        self.assertEqual(RunConfig.from_dict(config.to_dict()), config)

    def test_config_validation(self):
        with self.assertRaises(SpecValidationError) as ctx:
            RunConfig.from_dict(identity_config(epsilon_ladder=[0.1]))
        self.assertEqual(ctx.exception.field, 'epsilon_ladder')
        with self.assertRaises(SpecValidationError):
            RunConfig.from_dict(identity_config(task='f_estimate'))
        with self.assertRaises(SpecValidationError):
            load_config(os.path.join(self.test_dir, 'missing.json'))
        broken = os.path.join(self.test_dir, 'broken.json')
        with open(broken, 'w', encoding='utf-8') as f:
            f.write('{"task": ')
        with self.assertRaises(SpecValidationError):
            load_config(broken)

    def test_estimate_outputs_and_manifest(self):
        """Tabelas, resumo e manifesto íntegro escrito em último lugar"""
        out = os.path.join(self.test_dir, 'estimate')
        config = RunConfig.from_dict(identity_config()).with_runtime(output_dir=out)
        summary = ExperimentRunner(config, logger=self.logger).cmd_estimate()
        self.assertEqual(summary['status'], 'completed')
        self.assertAlmostEqual(summary['result']['value'], 0.0, delta=1e-9)
        self.assertTrue(summary['expected_check']['within_tolerance'])
        for name in ('pressure.csv', 'pressure_summary.csv', 'summary.json', 'config.json', MANIFEST_NAME):
            self.assertTrue(os.path.exists(os.path.join(out, name)), f"Ficheiro em falta: {name}")

        manifest_path = os.path.join(out, MANIFEST_NAME)
        is_valid, details = ManifestValidator(self.logger).validate_manifest(manifest_path)
        self.assertTrue(is_valid, f"Manifesto inválido: {details}")
        with open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        self.assertEqual(manifest['config_hash'], config.config_hash)
        self.assertEqual(len(manifest['seed_table']), 4 * 2)
        self.assertNotIn(MANIFEST_NAME, [entry['path'] for entry in manifest['outputs']])

    def test_rerun_is_byte_identical_across_threads(self):
        """Mesma configuração com 1 e 8 trabalhadores: resultados idênticos byte a byte"""
        path = self.write_config('identity_threads', identity_config())
        first = os.path.join(self.test_dir, 'threads_1')
        second = os.path.join(self.test_dir, 'threads_8')
        self.assertEqual(run_cli(['estimate', '--config', path, '--out', first, '--threads', '1'])[0], EXIT_OK)
        self.assertEqual(run_cli(['estimate', '--config', path, '--out', second, '--threads', '8'])[0], EXIT_OK)
        for name in ('pressure.csv', 'pressure_summary.csv', 'summary.json', 'config.json'):
            self.assertEqual(self.read_bytes(first, name), self.read_bytes(second, name), f"{name} difere")

    def test_resume_reuses_completed_tasks(self):
        """Registos concluídos são retomados; registos removidos são recalculados"""
        out = os.path.join(self.test_dir, 'resume')
        config = RunConfig.from_dict(identity_config()).with_runtime(output_dir=out)
        first = ExperimentRunner(config, logger=self.logger).cmd_estimate()
        summary_bytes = self.read_bytes(out, 'summary.json')

        tasks_dir = os.path.join(out, 'tasks')
        records = sorted(os.listdir(tasks_dir))
        self.assertEqual(len(records), 8)
        os.remove(os.path.join(tasks_dir, records[0]))

        runner = TaskRunner(out, config.config_hash, logger=self.logger)
        self.assertIsNone(runner.load_record(records[0][:-len('.json')]))
        self.assertIsNotNone(runner.load_record(records[1][:-len('.json')]))
        other = TaskRunner(out, 'outro-hash', logger=self.logger)
        self.assertIsNone(other.load_record(records[1][:-len('.json')]))

        second = ExperimentRunner(config, logger=self.logger).cmd_estimate()
        self.assertEqual(first, second)
        self.assertEqual(summary_bytes, self.read_bytes(out, 'summary.json'))

    def test_entropy_reference_json_format(self):
        """Tarefa de entropia com tabelas em JSON"""
        out = os.path.join(self.test_dir, 'entropy')
        payload = identity_config(task='entropy', epsilon_ladder=[0.25], expected=None)
        config = RunConfig.from_dict(payload).with_runtime(output_dir=out)
        summary = ExperimentRunner(config, output_format='json', logger=self.logger).cmd_estimate()
        self.assertAlmostEqual(summary['result']['value'], 0.0, delta=1e-9)
        with open(os.path.join(out, 'pressure.json'), 'r', encoding='utf-8') as f:
            rows = json.load(f)
        self.assertEqual(len(rows), 4)

    def test_single_rung_ladder_exit_code(self):
        """Escada com um degrau numa tarefa mdim: código 2 com o campo na mensagem"""
        path = self.write_config('single_rung', identity_config(epsilon_ladder=[0.1]))
        code, output = run_cli(['estimate', '--config', path, '--out', os.path.join(self.test_dir, 'single')])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn('epsilon_ladder', output)

    def test_mmdim_requires_f_estimate(self):
        path = self.write_config('wrong_task', identity_config())
        code, _ = run_cli(['mmdim', '--config', path, '--out', os.path.join(self.test_dir, 'wrong')])
        self.assertEqual(code, EXIT_CONFIG)

    def test_unknown_suite_rejected(self):
        with self.assertRaises(SystemExit) as ctx:
            with redirect_stdout(StringIO()):
                main(['verify', '--suite', 'nope'])
        self.assertEqual(ctx.exception.code, 2)

    def test_default_configs_are_valid(self):
        """As configurações de referência e o exemplo mmdim passam a validação"""
        paths = write_default_configs(os.path.join(self.test_dir, 'configs'))
        self.assertEqual(len(paths), 7)
        for path in paths:
            config = load_config(path)
            self.assertIn(config.task, ('entropy', 'mdim', 'f_estimate'))
        example = RunConfig.from_dict(mmdim_example_config())
        self.assertEqual(len(example.measures), 2)


if __name__ == '__main__':
    unittest.main()
