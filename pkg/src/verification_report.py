import json
from datetime import datetime
from typing import Any, Dict, List, Optional

from src.data_validator import CustomJSONEncoder
from src.utils import atomic_write_text, get_logger


class VerificationReport:
    """
    Classe responsável pela geração de relatórios das suites de verificação:
    contagens, violações com sementes de reprodução e tempos de execução.
    """

    def __init__(self, logger=None):
        """
        Inicializa o gerador de relatórios.

        Args:
            logger: Logger configurado
        """
        self.logger = logger or get_logger('verification_report')
        self.suite_results: Dict[str, Dict[str, Any]] = {}
        self.performance_metrics: Dict[str, float] = {}
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None

    def start_timing(self):
        """Inicia o cronómetro da verificação"""
        self.start_time = datetime.now()
        self.logger.debug("Cronómetro de verificação iniciado")

    def end_timing(self):
        """Termina o cronómetro da verificação"""
        self.end_time = datetime.now()
        if self.start_time:
            duration = (self.end_time - self.start_time).total_seconds()
            self.performance_metrics['total_duration_seconds'] = duration
            self.logger.debug(f"Cronómetro de verificação terminado: {duration:.2f}s")

    def log_suite(self, report: Dict[str, Any]):
        """
        Regista o resultado de uma suite.

        Args:
            report: Relatório devolvido pela suite (inclui 'suite', 'checks', 'violations', 'failures')
        """
        self.suite_results[report['suite']] = report
        status = "PASSOU" if report['passed'] else "FALHOU"
        self.logger.info(f"Suite '{report['suite']}': {report['checks']} verificações, "
                         f"{report['violations']} violações -> {status}")

    @property
    def passed(self) -> bool:
        return bool(self.suite_results) and all(r['passed'] for r in self.suite_results.values())

    def get_failures(self) -> List[Dict[str, Any]]:
        """Falhas de todas as suites, com o nome da suite."""
        return [dict(failure, suite=name) for name, report in self.suite_results.items()
                for failure in report['failures']]

    def generate_summary(self) -> Dict[str, Any]:
        return {
            'suites': {name: {'checks': r['checks'], 'violations': r['violations'], 'passed': r['passed'],
                              'by_item': r['by_item'], 'trials': r['trials'], 'seed': r['seed']}
                       for name, r in self.suite_results.items()},
            'passed': self.passed,
            'execution_time_seconds': round(self.performance_metrics.get('total_duration_seconds', 0.0), 2),
        }

    def generate_detailed_report(self) -> Dict[str, Any]:
        details = dict(self.performance_metrics)
        if self.start_time and self.end_time:
            details['start_time'] = self.start_time.isoformat()
            details['end_time'] = self.end_time.isoformat()
        return {
            'report_metadata': {'generated_at': datetime.now().isoformat(), 'report_version': '1.0',
                                'generator': 'VerificationReport'},
            'summary': self.generate_summary(),
            'failures': self.get_failures(),
            'performance_details': details,
        }

    def save_report(self, file_path: str) -> str:
        """
        Guarda o relatório detalhado num ficheiro JSON.

        Args:
            file_path: Caminho do ficheiro de saída

        Returns:
            Caminho do ficheiro guardado
        """
        try:
            text = json.dumps(self.generate_detailed_report(), indent=2, ensure_ascii=False, cls=CustomJSONEncoder)
            atomic_write_text(file_path, text + '\n')
            self.logger.info(f"Relatório guardado em: {file_path}")
            return file_path
        except Exception as e:
            self.logger.error(f"Erro ao guardar relatório: {str(e)}")
            raise

    def print_summary(self):
        """Imprime resumo formatado no console"""
        if not self.suite_results:
            print("Nenhum resumo disponível")
            return

        summary = self.generate_summary()
        print("\n============================================================")
        print("              RELATÓRIO DE VERIFICAÇÃO")
        print("============================================================")
        for name, result in summary['suites'].items():
            status = "[OK]" if result['passed'] else "[FALHOU]"
            print(f"{status} {name}: {result['checks']} verificações, {result['violations']} violações")
            for item, count in result['by_item'].items():
                print(f"    • {item}: {count}")

        failures = self.get_failures()
        if failures:
            print(f"\nPrimeiras violações (de {len(failures)}):")
            for failure in failures[:5]:
                print(f"  - [{failure['suite']}] {failure['item']}: lhs={failure['lhs']:.12g}, "
                      f"rhs={failure['rhs']:.12g}, contexto={failure['context']}")

        if summary['execution_time_seconds']:
            print(f"\nTempo de execução: {summary['execution_time_seconds']:.2f} segundos")
        print("============================================================")
