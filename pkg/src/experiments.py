"""
Execuções configuradas por JSON: validação da configuração, hash canónico, grelha de tarefas
de pressão, resultados em CSV/JSON e manifesto de execução escrito em último lugar.
"""

import os
import json
import platform
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

import joblib
import numpy as np
import pandas as pd
import scipy

from src.data_validator import ManifestValidator, SpecValidationError, VerificationError, require
from src.estimation import (assemble_pressure, fit_mdim, pressure_task, summarize_entropy, system_for,
                            validate_ladder, validate_schedule)
from src.fiber_space import FiberSpaceSpec, MetricSpec
from src.measure_mdim import MdimSettings, MeasureRep, PotentialFamily, f_estimate, maximal_measure_search
from src.packing import CloudSpec
from src.rds_core import PotentialSpec, RandomSystem
from src.result_writer import ResultWriter
from src.task_runner import Task, TaskRunner
from src.utils import atomic_write_text, calculate_config_hash, float_key, get_logger

__version__ = '1.0.0'

ESTIMATE_TASKS = ('entropy', 'mdim', 'pressure', 'compare_metrics')
MMDIM_TASKS = ('f_estimate',)
MANIFEST_NAME = 'manifest.json'

# Campos que não alteram os resultados e ficam fora do hash
RUNTIME_FIELDS = ('output_dir', 'threads')


@dataclass(frozen=True)
class RunConfig:
    """Configuração completa de uma execução."""
    name: str
    task: str
    system: RandomSystem
    epsilon_ladder: Tuple[float, ...]
    n_schedule: Tuple[int, ...]
    m_omega: int
    potential: PotentialSpec = field(default_factory=lambda: PotentialSpec(kind='zero'))
    cloud: CloudSpec = field(default_factory=CloudSpec)
    seed: int = 0
    estimator: str = 'packing'
    margin: int = 2
    family: Optional[PotentialFamily] = None
    measures: Tuple[MeasureRep, ...] = ()
    budget: int = 20
    m_samples: int = 2000
    expected: Optional[Dict[str, float]] = None
    output_dir: str = 'results'
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        require(self.task in ESTIMATE_TASKS + MMDIM_TASKS, 'task', f"tarefa desconhecida '{self.task}'")
        validate_schedule(self.n_schedule)
        require(self.m_omega >= 2, 'm_omega', "são necessárias pelo menos 2 amostras de ω")
        require(self.threads >= 1, 'threads', "o número de trabalhadores deve ser ≥ 1")
        if self.task in ('mdim', 'compare_metrics', 'f_estimate'):
            validate_ladder(self.epsilon_ladder)
        else:
            require(len(self.epsilon_ladder) >= 1, 'epsilon_ladder', "a escada não pode ser vazia")
            require(all(0.0 < e < 1.0 for e in self.epsilon_ladder), 'epsilon_ladder', "os degraus devem estar em (0,1)")
        if self.task == 'f_estimate':
            require(self.family is not None, 'family', "a tarefa f_estimate exige uma família de potenciais")
            require(len(self.measures) >= 1, 'measures', "a tarefa f_estimate exige pelo menos uma medida")
            require(self.budget >= 10, 'budget', "o orçamento deve ser ≥ 10 avaliações")

    def effective_system(self) -> RandomSystem:
        """Sistema com a semente mestra da execução aplicada ao sistema de base."""
        return RandomSystem(base=self.system.base.with_seed(self.seed), fiber=self.system.fiber, map=self.system.map)

    def to_dict(self, include_runtime: bool = True) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "name": self.name, "task": self.task, "system": self.system.to_dict(),
            "epsilon_ladder": list(self.epsilon_ladder), "n_schedule": list(self.n_schedule),
            "m_omega": self.m_omega, "potential": self.potential.to_dict(), "cloud": self.cloud.to_dict(),
            "seed": self.seed, "estimator": self.estimator, "margin": self.margin,
        }
        if self.task == 'f_estimate':
            payload.update(family=self.family.to_dict(), measures=[m.to_dict() for m in self.measures],
                           budget=self.budget, m_samples=self.m_samples)
        if self.expected is not None:
            payload["expected"] = dict(self.expected)
        if include_runtime:
            payload.update(output_dir=self.output_dir, threads=self.threads)
        return payload

    @property
    def config_hash(self) -> str:
        return calculate_config_hash(self.to_dict(include_runtime=False))

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'RunConfig':
        for key in ('task', 'system', 'epsilon_ladder', 'n_schedule', 'm_omega'):
            require(key in payload, key, "campo obrigatório em falta")
        family = payload.get('family')
        try:
            return cls(name=payload.get('name', payload['task']), task=payload['task'],
                       system=RandomSystem.from_dict(payload['system']),
                       epsilon_ladder=tuple(float(e) for e in payload['epsilon_ladder']),
                       n_schedule=tuple(int(n) for n in payload['n_schedule']),
                       m_omega=int(payload['m_omega']),
                       potential=PotentialSpec.from_dict(payload.get('potential', {"kind": "zero"})),
                       cloud=CloudSpec.from_dict(payload.get('cloud', {})),
                       seed=int(payload.get('seed', 0)), estimator=payload.get('estimator', 'packing'),
                       margin=int(payload.get('margin', 2)),
                       family=PotentialFamily.from_dict(family) if family else None,
                       measures=tuple(MeasureRep.from_dict(m) for m in payload.get('measures', ())),
                       budget=int(payload.get('budget', 20)), m_samples=int(payload.get('m_samples', 2000)),
                       expected=payload.get('expected'), output_dir=payload.get('output_dir', 'results'),
                       threads=int(payload.get('threads', 1)))
        except SpecValidationError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise SpecValidationError('config', f"configuração malformada: {e}") from e

    def with_runtime(self, output_dir: Optional[str] = None, threads: Optional[int] = None,
                     seed: Optional[int] = None) -> 'RunConfig':
        """Cópia com os parâmetros de execução da linha de comando (os flags prevalecem)."""
        return replace(self, output_dir=output_dir or self.output_dir,
                       threads=self.threads if threads is None else int(threads),
                       seed=self.seed if seed is None else int(seed))


def load_config(path: str) -> RunConfig:
    """
    Lê e valida uma configuração JSON.

    Raises:
        SpecValidationError: Ficheiro ilegível, JSON inválido ou campo inválido
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except OSError as e:
        raise SpecValidationError('config', f"não foi possível ler '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise SpecValidationError('config', f"JSON inválido em '{path}': {e}") from e
    require(isinstance(payload, dict), 'config', "a configuração deve ser um objeto JSON")
    return RunConfig.from_dict(payload)


@dataclass
class RunManifest:
    """Manifesto: hash da configuração, tempos, versões, sementes por tarefa e inventário das saídas."""
    config_hash: str
    name: str
    command: str
    started_at: str
    finished_at: str = ''
    status: str = 'completed'
    versions: Dict[str, str] = field(default_factory=dict)
    seed_table: List[Dict[str, Any]] = field(default_factory=list)
    outputs: List[Dict[str, Any]] = field(default_factory=list)
    failed_tasks: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"config_hash": self.config_hash, "name": self.name, "command": self.command,
                "started_at": self.started_at, "finished_at": self.finished_at, "status": self.status,
                "versions": self.versions, "seed_table": self.seed_table, "outputs": self.outputs,
                "failed_tasks": self.failed_tasks}

    def write(self, output_dir: str) -> str:
        """Escreve o manifesto por renomeação atómica (é sempre o último ficheiro escrito)."""
        path = os.path.join(output_dir, MANIFEST_NAME)
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, ensure_ascii=False, sort_keys=True) + '\n')
        return path


def artifact_versions() -> Dict[str, str]:
    return {"mdim_lab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pandas": pd.__version__, "joblib": joblib.__version__}


def _metric_variant(system: RandomSystem, kind: str) -> RandomSystem:
    fiber = system.fiber
    return RandomSystem(base=system.base, map=system.map,
                        fiber=FiberSpaceSpec(kind=fiber.kind, D=fiber.D, window=fiber.window,
                                             metric=MetricSpec(kind=kind)))


class ExperimentRunner:
    """
    Classe responsável por executar os comandos estimate e mmdim de uma configuração,
    persistindo resultados, registos de tarefas e o manifesto.
    """

    def __init__(self, config: RunConfig, output_format: str = 'csv', progress: bool = False, logger=None):
        """
        Inicializa o executor de experiências.

        Args:
            config: Configuração validada
            output_format: Formato das tabelas ('csv' ou 'json')
            progress: Mostra barras de progresso
            logger: Logger configurado
        """
        self.config = config
        self.output_format = output_format
        self.progress = progress
        self.logger = logger or get_logger('experiments')
        self.writer = ResultWriter(config.output_dir, output_format, self.logger)

    def _manifest(self, command: str, started_at: str) -> RunManifest:
        return RunManifest(config_hash=self.config.config_hash, name=self.config.name, command=command,
                           started_at=started_at, versions=artifact_versions())

    def _finish(self, manifest: RunManifest) -> str:
        manifest.finished_at = datetime.now().isoformat()
        manifest.outputs = self.writer.inventory()
        path = manifest.write(self.config.output_dir)
        is_valid, _ = ManifestValidator(self.logger).validate_manifest(path)
        if not is_valid:
            self.logger.error("O manifesto não corresponde aos ficheiros escritos")
        return path

    def _pressure_tasks(self, system: RandomSystem, label: str) -> Tuple[List[Task], Dict[float, RandomSystem]]:
        config = self.config
        tasks, sized = [], {}
        for epsilon in config.epsilon_ladder:
            sized[epsilon] = system_for(system, epsilon, max(config.n_schedule), config.margin)
            for i in range(config.m_omega):
                key = f"{label}__eps_{float_key(epsilon)}__omega_{i:05d}"
                tasks.append(Task(key=key, func=pressure_task,
                                  args=(sized[epsilon], config.potential, epsilon, config.n_schedule, i,
                                        config.cloud, config.estimator),
                                  seed_info={"metric": label, "epsilon": epsilon, "stream_index": i,
                                             "base_seed": system.base.seed}))
        return tasks, sized

    def _assemble(self, records: Dict[str, Dict[str, Any]], sized: Dict[float, RandomSystem], label: str):
        """Registos de pressão dos degraus com todas as tarefas concluídas."""
        config = self.config
        pressures = []
        for epsilon in config.epsilon_ladder:
            keys = [f"{label}__eps_{float_key(epsilon)}__omega_{i:05d}" for i in range(config.m_omega)]
            if any(records[k]["status"] != "done" for k in keys):
                self.logger.warning(f"ε={epsilon:.6g} ({label}) incompleto: degrau omitido")
                continue
            table = np.array([records[k]["result"] for k in keys], dtype=float)
            pressures.append(assemble_pressure(epsilon, config.n_schedule, range(config.m_omega), table,
                                               config.estimator, sized[epsilon].fiber.window))
        return pressures

    def cmd_estimate(self) -> Dict[str, Any]:
        """
        Estima entropia, pressão ou dimensão média conforme a configuração.

        Returns:
            Resumo (conteúdo de summary.json) com o estado da execução
        """
        config = self.config
        started_at = datetime.now().isoformat()
        self.logger.info(f"Execução '{config.name}' ({config.task}), hash {config.config_hash[:12]}")
        system = config.effective_system()
        labels = ('weighted_sum', 'weighted_sup') if config.task == 'compare_metrics' else (system.fiber.metric.kind,)

        tasks, sized_by_label = [], {}
        for label in labels:
            variant = _metric_variant(system, label)
            label_tasks, sized = self._pressure_tasks(variant, label)
            tasks.extend(label_tasks)
            sized_by_label[label] = sized

        runner = TaskRunner(config.output_dir, config.config_hash, config.threads, self.progress, self.logger)
        records = runner.run(tasks)
        failed = runner.failed(records)

        results: Dict[str, Any] = {}
        rows, summaries = [], []
        for label in labels:
            pressures = self._assemble(records, sized_by_label[label], label)
            for record in pressures:
                rows.extend(dict(row, metric=label) for row in record.rows())
                summary_row = record.to_dict()
                summary_row.pop("n_schedule")
                summaries.append(dict(summary_row, metric=label))
            results[label] = self._reduce(pressures, label)

        self.writer.write_table(rows, 'pressure')
        self.writer.write_table(summaries, 'pressure_summary')
        result = results[labels[0]] if len(labels) == 1 else results
        summary = {"name": config.name, "task": config.task, "config_hash": config.config_hash,
                   "status": "partial" if failed else "completed", "failed_tasks": failed, "result": result}
        if config.expected is not None and isinstance(result, dict) and result.get("value") is not None:
            deviation = abs(result["value"] - config.expected["value"])
            summary["expected_check"] = {"expected": config.expected["value"],
                                         "tolerance": config.expected["tolerance"], "deviation": deviation,
                                         "within_tolerance": deviation <= config.expected["tolerance"]}
        self.writer.write_json(config.to_dict(include_runtime=False), 'config.json')
        self.writer.write_json(summary, 'summary.json')

        manifest = self._manifest('estimate', started_at)
        manifest.seed_table = [dict(t.seed_info, task=t.key) for t in tasks]
        manifest.failed_tasks = failed
        manifest.status = 'partial' if failed else 'completed'
        self._finish(manifest)
        self.logger.info(f"Execução '{config.name}' terminada: {summary['status']}")
        return summary

    def _reduce(self, pressures, label: str) -> Optional[Dict[str, Any]]:
        task = self.config.task
        if not pressures:
            return None
        if task == 'entropy':
            return summarize_entropy(pressures).to_dict()
        if task == 'pressure':
            return {"records": [p.to_dict() for p in pressures]}
        if len(pressures) < len(self.config.epsilon_ladder):
            self.logger.error(f"Ajuste de {label} omitido: degraus incompletos")
            return None
        estimate = fit_mdim(pressures).to_dict()
        estimate["value"] = estimate["slope"]
        return estimate

    def cmd_mmdim(self) -> Dict[str, Any]:
        """
        F̂(μ,d) para uma medida, ou pesquisa da medida maximal para várias.

        Raises:
            VerificationError: max F̂ acima de m̂dim (manifesto escrito com estado 'verification_failed')
        """
        config = self.config
        started_at = datetime.now().isoformat()
        system = config.effective_system()
        settings = MdimSettings(epsilon_ladder=config.epsilon_ladder, n_schedule=config.n_schedule,
                                m_omega=config.m_omega, m_samples=config.m_samples, seed=config.seed,
                                cloud=config.cloud, estimator=config.estimator, margin=config.margin,
                                n_jobs=config.threads)
        self.logger.info(f"Execução '{config.name}' (F̂), hash {config.config_hash[:12]}")
        manifest = self._manifest('mmdim', started_at)
        self.writer.write_json(config.to_dict(include_runtime=False), 'config.json')
        try:
            if len(config.measures) == 1:
                estimate = f_estimate(config.measures[0], config.family, system, config.budget, settings)
                report = dict(estimate.to_dict(), config_hash=config.config_hash)
                self.writer.write_json(report, 'f_estimate.json')
                self.writer.write_table([dict(entry, **{"lambda": json.dumps(entry["lambda"])})
                                         for entry in estimate.trace], 'optimizer_trace')
            else:
                report = maximal_measure_search(list(config.measures), config.family, system, config.budget,
                                                settings)
                report = dict(report, config_hash=config.config_hash)
                self.writer.write_json(report, 'maximal_measure.json')
                self.writer.write_table([{k: v for k, v in r.items() if k != 'lambda_star'}
                                         for r in report["ranking"]], 'ranking')
        except VerificationError:
            manifest.status = 'verification_failed'
            self._finish(manifest)
            raise
        self._finish(manifest)
        return report
