"""
Sistema de base (Ω, ℱ, ℙ, θ): sequências simbólicas unilaterais (i.i.d. ou Markov) e rotações
do círculo, com amostragem determinística por semente e médias de Monte Carlo contra ℙ.

Os símbolos são endereçados por (semente, índice da sequência, posição) através de blocos
gerados com numpy.random.SeedSequence, pelo que θ é apenas um incremento do deslocamento.
"""

import math
import numpy as np
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Dict, Tuple

from src.acceptance_rules import AcceptanceRules
from src.data_validator import (NonFiniteValueError, SpecValidationError, require)
from src.utils import get_logger

logger = get_logger('base_system')

BASE_KINDS = ('iid_symbols', 'markov_symbols', 'rotation')
DEFAULT_ROTATION_NUMBER = (math.sqrt(5.0) - 1.0) / 2.0
BLOCK_SIZE = 64


@lru_cache(maxsize=16384)
def _uniform_block(seed: int, stream_index: int, block: int) -> np.ndarray:
    """Bloco de BLOCK_SIZE uniformes endereçado por (semente, sequência, bloco)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(stream_index, block))
    values = np.random.default_rng(sequence).random(BLOCK_SIZE)
    values.flags.writeable = False
    return values


def _uniforms(seed: int, stream_index: int, start: int, count: int) -> np.ndarray:
    """Uniformes nas posições [start, start+count) da sequência."""
    first_block = start // BLOCK_SIZE
    last_block = (start + count - 1) // BLOCK_SIZE
    blocks = [_uniform_block(seed, stream_index, b) for b in range(first_block, last_block + 1)]
    joined = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
    offset = start - first_block * BLOCK_SIZE
    return joined[offset:offset + count]


@dataclass(frozen=True)
class BaseSystemSpec:
    """Especificação do sistema de base ergódico."""
    kind: str
    alphabet: int = 2
    weights: Tuple[float, ...] = ()
    transition: Tuple[Tuple[float, ...], ...] = ()
    rotation_number: float = DEFAULT_ROTATION_NUMBER
    seed: int = 0

    def __post_init__(self):
        # Normaliza listas vindas de JSON para tuplos (a especificação é imutável e hashable)
        object.__setattr__(self, 'weights', tuple(float(w) for w in self.weights))
        object.__setattr__(self, 'transition', tuple(tuple(float(p) for p in row) for row in self.transition))
        self.validate()

    def validate(self) -> None:
        """Valida os parâmetros; levanta SpecValidationError com o nome do campo."""
        require(self.kind in BASE_KINDS, 'kind', f"tipo desconhecido '{self.kind}', esperado um de {BASE_KINDS}")
        require(isinstance(self.seed, (int, np.integer)) and self.seed >= 0, 'seed', "semente deve ser inteiro não negativo")
        require(int(self.alphabet) >= 1, 'alphabet', "alfabeto deve ter pelo menos um símbolo")

        if self.kind == 'iid_symbols' and self.weights:
            weights = np.asarray(self.weights)
            require(len(weights) == self.alphabet, 'weights', f"esperados {self.alphabet} pesos, recebidos {len(weights)}")
            require(bool(np.all(weights >= 0)), 'weights', "pesos devem ser não negativos")
            require(abs(weights.sum() - 1.0) <= AcceptanceRules.WEIGHT_SUM_TOL, 'weights', "pesos devem somar 1")

        if self.kind == 'markov_symbols':
            matrix = np.asarray(self.transition, dtype=float)
            require(matrix.shape == (self.alphabet, self.alphabet), 'transition',
                    f"matriz deve ser {self.alphabet}x{self.alphabet}")
            require(bool(np.all(matrix >= 0)), 'transition', "entradas devem ser não negativas")
            require(bool(np.all(np.abs(matrix.sum(axis=1) - 1.0) <= AcceptanceRules.WEIGHT_SUM_TOL)),
                    'transition', "linhas devem somar 1")
            require(_is_irreducible(matrix), 'transition', "cadeia de Markov não é irredutível (not irreducible)")

        if self.kind == 'rotation':
            require(0.0 < self.rotation_number < 1.0, 'rotation_number', "número de rotação deve estar em (0,1)")

    @property
    def symbol_weights(self) -> np.ndarray:
        """Distribuição dos símbolos (uniforme por omissão)."""
        if self.weights:
            return np.asarray(self.weights)
        return np.full(self.alphabet, 1.0 / self.alphabet)

    def stationary_distribution(self) -> np.ndarray:
        """Distribuição estacionária da cadeia de Markov."""
        matrix = np.asarray(self.transition, dtype=float)
        k = matrix.shape[0]
        system = np.vstack([matrix.T - np.eye(k), np.ones(k)])
        rhs = np.concatenate([np.zeros(k), [1.0]])
        pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()

    def with_seed(self, seed: int) -> 'BaseSystemSpec':
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind, "alphabet": int(self.alphabet), "seed": int(self.seed)}
        if self.weights:
            payload["weights"] = list(self.weights)
        if self.transition:
            payload["transition"] = [list(row) for row in self.transition]
        if self.kind == 'rotation':
            payload["rotation_number"] = float(self.rotation_number)
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'BaseSystemSpec':
        require('kind' in payload, 'kind', "campo obrigatório em falta")
        return cls(
            kind=payload['kind'],
            alphabet=int(payload.get('alphabet', 2)),
            weights=tuple(payload.get('weights', ())),
            transition=tuple(tuple(row) for row in payload.get('transition', ())),
            rotation_number=float(payload.get('rotation_number', DEFAULT_ROTATION_NUMBER)),
            seed=int(payload.get('seed', 0)),
        )


def _is_irreducible(matrix: np.ndarray) -> bool:
    """Irredutibilidade por acessibilidade: cada estado alcança todos os outros."""
    k = matrix.shape[0]
    for start in range(k):
        seen = {start}
        queue = deque([start])
        while queue:
            state = queue.popleft()
            for nxt in np.flatnonzero(matrix[state] > 0):
                if nxt not in seen:
                    seen.add(int(nxt))
                    queue.append(int(nxt))
        if len(seen) < k:
            return False
    return True


@lru_cache(maxsize=8192)
def _markov_block(spec: BaseSystemSpec, stream_index: int, block: int, previous: int) -> Tuple[int, ...]:
    """Bloco de símbolos da cadeia de Markov dado o último símbolo do bloco anterior (-1 no início)."""
    uniforms = _uniform_block(spec.seed, stream_index, block)
    matrix = np.cumsum(np.asarray(spec.transition, dtype=float), axis=1)
    symbols = []
    state = previous
    for u in uniforms:
        if state < 0:
            cumulative = np.cumsum(spec.stationary_distribution())
        else:
            cumulative = matrix[state]
        state = int(min(np.searchsorted(cumulative, u, side='right'), spec.alphabet - 1))
        symbols.append(state)
    return tuple(symbols)


def _markov_symbols(spec: BaseSystemSpec, stream_index: int, start: int, count: int) -> np.ndarray:
    last_block = (start + count - 1) // BLOCK_SIZE
    previous = -1
    blocks = []
    for b in range(last_block + 1):
        block = _markov_block(spec, stream_index, b, previous)
        previous = block[-1]
        blocks.append(block)
    joined = np.concatenate([np.asarray(b, dtype=np.int64) for b in blocks])
    return joined[start:start + count]


@dataclass(frozen=True)
class BaseState:
    """
    Um ponto ω de Ω: para sequências simbólicas, (semente, índice, deslocamento);
    para rotações, o ângulo atual.
    """
    spec: BaseSystemSpec = field(repr=False)
    stream_index: int
    offset: int = 0
    angle: float = 0.0

    @property
    def kind(self) -> str:
        return self.spec.kind

    def symbols(self, count: int, start: int = 0) -> np.ndarray:
        """Símbolos nas posições [start, start+count) de ω."""
        if count <= 0:
            return np.zeros(0, dtype=np.int64)
        if self.kind == 'iid_symbols':
            uniforms = _uniforms(self.spec.seed, self.stream_index, self.offset + start, count)
            cumulative = np.cumsum(self.spec.symbol_weights)
            return np.minimum(np.searchsorted(cumulative, uniforms, side='right'), self.spec.alphabet - 1)
        if self.kind == 'markov_symbols':
            return _markov_symbols(self.spec, self.stream_index, self.offset + start, count)
        # Rotação: codificação do ângulo em 'alphabet' arcos iguais
        angles = np.mod(self.angle + self.spec.rotation_number * np.arange(start, start + count), 1.0)
        return np.minimum((angles * self.spec.alphabet).astype(np.int64), self.spec.alphabet - 1)

    def symbol(self, k: int = 0) -> int:
        return int(self.symbols(1, start=k)[0])

    def uniform(self, k: int = 0) -> float:
        """Variável uniforme associada à posição k (o ângulo, no caso das rotações)."""
        if self.kind == 'rotation':
            return float(np.mod(self.angle + self.spec.rotation_number * k, 1.0))
        return float(_uniforms(self.spec.seed, self.stream_index, self.offset + k, 1)[0])

    def advance(self) -> 'BaseState':
        return advance(self)


@dataclass(frozen=True)
class BasePath:
    """Realização finita ω, θω, …, θ^{L−1}ω."""
    states: Tuple[BaseState, ...]

    def __post_init__(self):
        object.__setattr__(self, 'states', tuple(self.states))
        if not self.states:
            raise SpecValidationError('length', "caminho vazio")

    @property
    def length(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, j: int) -> BaseState:
        return self.states[j]

    def tail(self, j: int) -> 'BasePath':
        """Caminho a partir de θ^jω."""
        return BasePath(self.states[j:])

    def head(self, length: int) -> 'BasePath':
        return BasePath(self.states[:length])


def sample_omega(spec: BaseSystemSpec, stream_index: int) -> BaseState:
    """
    Amostra ω ~ ℙ de forma determinística em (semente mestra, índice).

    Args:
        spec: Especificação válida do sistema de base
        stream_index: Índice da sequência (índices distintos dão amostras independentes)

    Returns:
        Estado de base
    """
    spec.validate()
    if stream_index < 0:
        raise SpecValidationError('stream_index', "índice deve ser não negativo")
    if spec.kind == 'rotation':
        angle = float(_uniform_block(spec.seed, int(stream_index), 0)[0])
        return BaseState(spec=spec, stream_index=int(stream_index), offset=0, angle=angle)
    return BaseState(spec=spec, stream_index=int(stream_index), offset=0)


def advance(omega: BaseState) -> BaseState:
    """θ: deslocamento do símbolo ou rotação do ângulo."""
    if omega.kind == 'rotation':
        angle = float(np.mod(omega.angle + omega.spec.rotation_number, 1.0))
        return replace(omega, offset=omega.offset + 1, angle=angle)
    return replace(omega, offset=omega.offset + 1)


def make_path(omega: BaseState, length: int) -> BasePath:
    """
    Constrói o caminho [ω, θω, …, θ^{L−1}ω].

    Args:
        omega: Estado inicial
        length: Comprimento L ≥ 1

    Returns:
        Caminho de base
    """
    if length <= 0:
        raise SpecValidationError('length', f"comprimento deve ser positivo, recebido {length}")
    states = [omega]
    for _ in range(length - 1):
        states.append(advance(states[-1]))
    return BasePath(tuple(states))


def expectation(g: Callable[[BaseState], float], spec: BaseSystemSpec, m: int,
                start_index: int = 0) -> Tuple[float, float]:
    """
    Média de Monte Carlo de g contra ℙ com erro-padrão.

    Args:
        g: Função limitada de ω
        spec: Sistema de base
        m: Número de amostras (≥ 2)
        start_index: Primeiro índice de sequência usado

    Returns:
        Tupla (estimativa, erro-padrão)
    """
    if m < 2:
        raise SpecValidationError('m', "são necessárias pelo menos 2 amostras")

    values = np.empty(m)
    for i in range(m):
        stream_index = start_index + i
        value = float(g(sample_omega(spec, stream_index)))
        if not math.isfinite(value):
            raise NonFiniteValueError("valor não finito na média sobre ℙ", stream_index)
        values[i] = value

    return summarize_samples(values)


def summarize_samples(values: np.ndarray) -> Tuple[float, float]:
    """Média e erro-padrão (desvio amostral / √m); amostras idênticas devolvem o próprio valor."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise SpecValidationError('m', "sem amostras")
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))
