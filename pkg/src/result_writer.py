import os
import json
import pandas as pd
from typing import Any, Dict, List, Optional, Sequence

from src.data_validator import CustomJSONEncoder, SpecValidationError
from src.utils import atomic_write_text, calculate_file_digest, ensure_directory_exists, get_logger

OUTPUT_FORMATS = ('csv', 'json')


class ResultWriter:
    """
    Classe responsável pela escrita dos resultados de uma execução em CSV ou JSON,
    garantindo saídas determinísticas (mesma configuração, mesmos bytes) e escrita atómica.
    """

    def __init__(self, output_dir: str, output_format: str = 'csv', logger=None):
        """
        Inicializa o escritor de resultados.

        Args:
            output_dir: Diretório de saída
            output_format: Formato das tabelas ('csv' ou 'json')
            logger: Logger configurado
        """
        if output_format not in OUTPUT_FORMATS:
            raise SpecValidationError('format', f"formato de saída não suportado: {output_format}")
        self.output_dir = output_dir
        self.output_format = output_format
        self.logger = logger or get_logger('result_writer')
        self.written: List[str] = []

        ensure_directory_exists(self.output_dir)

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def to_csv_text(self, df: pd.DataFrame) -> str:
        """Texto CSV com precisão total dos floats."""
        return df.to_csv(index=False, na_rep='', float_format='%.15g', lineterminator='\n')

    def to_json_text(self, df: pd.DataFrame) -> str:
        """Texto JSON (lista de registos) com precisão total dos floats."""
        records = json.loads(df.to_json(orient='records', double_precision=15, force_ascii=False))
        return json.dumps(records, indent=2, ensure_ascii=False, sort_keys=True) + '\n'

    def write_table(self, rows: Sequence[Dict[str, Any]], stem: str, columns: Optional[List[str]] = None) -> str:
        """
        Escreve uma tabela no formato configurado.

        Args:
            rows: Linhas (dicionários)
            stem: Nome do ficheiro sem extensão
            columns: Ordem das colunas (por omissão a ordem da primeira linha)

        Returns:
            Caminho do ficheiro gerado
        """
        df = pd.DataFrame(list(rows), columns=columns)
        path = self._path(f"{stem}.{self.output_format}")
        text = self.to_csv_text(df) if self.output_format == 'csv' else self.to_json_text(df)
        atomic_write_text(path, text)
        self.written.append(path)
        self.logger.info(f"Tabela gerada: {path} ({df.shape[0]} linhas, {df.shape[1]} colunas)")
        return path

    def write_json(self, payload: Any, name: str) -> str:
        """
        Escreve um documento JSON com chaves ordenadas.

        Args:
            payload: Objeto serializável (objetos do domínio via to_dict)
            name: Nome do ficheiro

        Returns:
            Caminho do ficheiro gerado
        """
        path = self._path(name)
        text = json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True, cls=CustomJSONEncoder) + '\n'
        atomic_write_text(path, text)
        self.written.append(path)
        self.logger.info(f"Documento JSON gerado: {path}")
        return path

    def inventory(self) -> List[Dict[str, Any]]:
        """Inventário dos ficheiros escritos (caminho relativo, tamanho e SHA-256), por ordem de nome."""
        entries = []
        for path in sorted(set(self.written)):
            entries.append({"path": os.path.relpath(path, self.output_dir),
                            "bytes": os.path.getsize(path),
                            "sha256": calculate_file_digest(path)})
        return entries
