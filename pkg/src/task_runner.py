"""
Execução paralela de uma grelha de tarefas determinísticas com registos por tarefa,
retoma de execuções interrompidas e redução por ordem de chave.
"""

import os
import json
import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from src.data_validator import CustomJSONEncoder
from src.utils import atomic_write_text, ensure_directory_exists, get_logger

TASKS_DIRNAME = 'tasks'


@dataclass
class Task:
    """Unidade de trabalho: chave estável, função de módulo e argumentos."""
    key: str
    func: Callable[..., Any] = field(repr=False)
    args: Tuple[Any, ...] = field(default=(), repr=False)
    seed_info: Dict[str, Any] = field(default_factory=dict)


def _record_path(tasks_dir: str, key: str) -> str:
    return os.path.join(tasks_dir, f"{key}.json")


def _execute(task: Task, tasks_dir: str, config_hash: str) -> Dict[str, Any]:
    """Executa uma tarefa e grava o seu registo atomicamente (corre nos trabalhadores)."""
    record: Dict[str, Any] = {"key": task.key, "config_hash": config_hash, "seed": task.seed_info}
    try:
        record["result"] = task.func(*task.args)
        record["status"] = "done"
    except Exception as e:
        record["status"] = "failed"
        record["error"] = f"{type(e).__name__}: {e}"
        record["traceback"] = traceback.format_exc()
    atomic_write_text(_record_path(tasks_dir, task.key),
                      json.dumps(record, sort_keys=True, cls=CustomJSONEncoder))
    return record


class TaskRunner:
    """
    Classe responsável por executar tarefas em paralelo (joblib) com registos em
    '<saída>/tasks/<chave>.json'. Registos concluídos com o mesmo hash de configuração são
    reutilizados; os restantes são (re)executados.
    """

    def __init__(self, output_dir: str, config_hash: str, n_jobs: int = 1, progress: bool = False, logger=None):
        """
        Inicializa o executor.

        Args:
            output_dir: Diretório de saída da execução
            config_hash: Hash da configuração (identifica registos reutilizáveis)
            n_jobs: Número de trabalhadores
            progress: Mostra barra de progresso
            logger: Logger configurado
        """
        self.tasks_dir = os.path.join(output_dir, TASKS_DIRNAME)
        self.config_hash = config_hash
        self.n_jobs = max(1, int(n_jobs))
        self.progress = progress
        self.logger = logger or get_logger('task_runner')
        ensure_directory_exists(self.tasks_dir)

    def load_record(self, key: str) -> Optional[Dict[str, Any]]:
        """Registo concluído e compatível de uma tarefa, ou None."""
        path = _record_path(self.tasks_dir, key)
        if not os.path.exists(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as f:
                record = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            self.logger.warning(f"Registo de tarefa ilegível ({key}): {e}")
            return None
        if record.get("config_hash") != self.config_hash or record.get("status") != "done":
            return None
        return record

    def run(self, tasks: Sequence[Task]) -> Dict[str, Dict[str, Any]]:
        """
        Executa as tarefas em falta e devolve todos os registos indexados pela chave.

        Returns:
            Dicionário chave -> registo (status 'done' ou 'failed')
        """
        keys = [t.key for t in tasks]
        if len(set(keys)) != len(keys):
            raise ValueError("chaves de tarefa duplicadas")

        records: Dict[str, Dict[str, Any]] = {}
        pending: List[Task] = []
        for task in tasks:
            record = self.load_record(task.key)
            if record is not None:
                records[task.key] = record
            else:
                pending.append(task)

        self.logger.info(f"Tarefas: {len(tasks)} no total, {len(records)} retomadas, {len(pending)} a executar "
                         f"({self.n_jobs} trabalhadores)")
        iterator = tqdm(pending, desc="Tarefas", disable=not self.progress)
        if self.n_jobs == 1:
            results = [_execute(task, self.tasks_dir, self.config_hash) for task in iterator]
        else:
            results = Parallel(n_jobs=self.n_jobs)(
                delayed(_execute)(task, self.tasks_dir, self.config_hash) for task in iterator)

        for record in results:
            records[record["key"]] = record
            if record["status"] == "failed":
                self.logger.error(f"Tarefa {record['key']} falhou: {record['error']}")
            else:
                self.logger.debug(f"Tarefa {record['key']} concluída")
        return dict(sorted(records.items()))

    @staticmethod
    def failed(records: Dict[str, Dict[str, Any]]) -> List[str]:
        return [key for key, record in records.items() if record.get("status") != "done"]
