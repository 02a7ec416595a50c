"""
Fibra compacta X (sequências no cubo, no toro ou binárias) com métrica ponderada, nuvens de
candidatos (grelhas, nuvens aleatórias) e a janela de truncatura que torna X computável.

Os pontos são arrays de D·W coordenadas em ordem símbolo-maior: coords[s·D + d] é a
coordenada d do símbolo s.
"""

import math
import os
import numpy as np
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple

from src.data_validator import CloudTooLargeError, SpecValidationError, require
from src.utils import get_logger

logger = get_logger('fiber_space')

FIBER_KINDS = ('cube_seq', 'torus_seq', 'binary_seq')
METRIC_KINDS = ('weighted_sum', 'weighted_sup')
DEFAULT_CLOUD_CAP = 200000
# Limite para eixos 1-D de nuvens produto (nunca materializadas como produto)
AXIS_CAP = 1 << 22


def cloud_cap() -> int:
    """Limite de pontos materializados (MDIM_CLOUD_CAP ou 200000)."""
    value = os.environ.get('MDIM_CLOUD_CAP')
    if value is None:
        return DEFAULT_CLOUD_CAP
    try:
        return max(1, int(value))
    except ValueError:
        raise SpecValidationError('MDIM_CLOUD_CAP', f"valor inválido '{value}'")


@dataclass(frozen=True)
class MetricSpec:
    """Métrica ponderada com pesos de base 2 por índice de símbolo."""
    kind: str = 'weighted_sup'
    weight_base: int = 2

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        require(self.kind in METRIC_KINDS, 'metric.kind', f"métrica desconhecida '{self.kind}'")
        require(self.weight_base == 2, 'metric.weight_base', "apenas a base 2 é suportada")

    def symbol_weights(self, window: int) -> np.ndarray:
        """
        Pesos w_k por símbolo: 2^{−k} (sup) ou 2^{−k}/2 (soma, para que Σw_k ≤ 1).

        Args:
            window: Número de símbolos W

        Returns:
            Array de W pesos
        """
        weights = np.ldexp(1.0, -np.arange(window))
        if self.kind == 'weighted_sum':
            weights = weights / 2.0
        return weights

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "weight_base": self.weight_base}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'MetricSpec':
        return cls(kind=payload.get('kind', 'weighted_sup'), weight_base=int(payload.get('weight_base', 2)))


@dataclass(frozen=True)
class FiberSpaceSpec:
    """Especificação da fibra: tipo, coordenadas por símbolo D, janela W e métrica."""
    kind: str
    D: int = 1
    window: int = 1
    metric: MetricSpec = field(default_factory=MetricSpec)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        require(self.kind in FIBER_KINDS, 'fiber.kind', f"fibra desconhecida '{self.kind}'")
        require(int(self.D) >= 1, 'fiber.D', "D deve ser ≥ 1")
        require(int(self.window) >= 1, 'fiber.window', "a janela deve ser ≥ 1")

    @property
    def dim(self) -> int:
        return int(self.D) * int(self.window)

    @property
    def periodic(self) -> bool:
        return self.kind == 'torus_seq'

    def with_window(self, window: int) -> 'FiberSpaceSpec':
        return FiberSpaceSpec(kind=self.kind, D=self.D, window=int(window), metric=self.metric)

    def coordinate_weights(self) -> np.ndarray:
        """Peso de cada coordenada (o peso do símbolo a que pertence)."""
        return np.repeat(self.metric.symbol_weights(self.window), self.D)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "D": int(self.D), "window": int(self.window), "metric": self.metric.to_dict()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'FiberSpaceSpec':
        require('kind' in payload, 'fiber.kind', "campo obrigatório em falta")
        return cls(kind=payload['kind'], D=int(payload.get('D', 1)), window=int(payload.get('window', 1)),
                   metric=MetricSpec.from_dict(payload.get('metric', {})))


@dataclass(frozen=True)
class FiberPoint:
    """Ponto x ∈ X nas coordenadas da janela."""
    coords: np.ndarray

    @classmethod
    def of(cls, spec: FiberSpaceSpec, coords: Sequence[float]) -> 'FiberPoint':
        array = np.asarray(coords, dtype=float)
        validate_points(spec, array.reshape(1, -1))
        return cls(coords=array)


def as_coords(x: Any) -> np.ndarray:
    return np.asarray(x.coords if isinstance(x, FiberPoint) else x, dtype=float)


def validate_points(spec: FiberSpaceSpec, X: np.ndarray) -> None:
    """Verifica dimensão e intervalo legal das coordenadas (array N×dim)."""
    if X.ndim != 2 or X.shape[1] != spec.dim:
        raise SpecValidationError('coords', f"esperadas {spec.dim} coordenadas, recebido array com forma {X.shape}")
    if spec.kind == 'binary_seq':
        require(bool(np.all((X == 0.0) | (X == 1.0))), 'coords', "coordenadas binárias devem estar em {0,1}")
    else:
        require(bool(np.all((X >= 0.0) & (X <= 1.0))), 'coords', "coordenadas devem estar em [0,1]")


def coordinate_gaps(spec: FiberSpaceSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Distância por coordenada (|·| no cubo, distância circular no toro, 0/1 no binário)."""
    if spec.kind == 'binary_seq':
        return (X != Y).astype(float)
    gaps = np.abs(X - Y)
    if spec.periodic:
        gaps = np.minimum(gaps, 1.0 - gaps)
    return gaps


def batch_dist(spec: FiberSpaceSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """
    Distâncias d(X[i], Y[i]) com broadcasting sobre as dimensões iniciais.

    Args:
        spec: Especificação da fibra
        X: Array (..., dim)
        Y: Array (..., dim)

    Returns:
        Array (...) de distâncias em [0, 1]
    """
    gaps = coordinate_gaps(spec, X, Y)
    per_symbol = gaps.reshape(gaps.shape[:-1] + (spec.window, spec.D)).max(axis=-1)
    weights = spec.metric.symbol_weights(spec.window)
    if spec.metric.kind == 'weighted_sum':
        return (per_symbol * weights).sum(axis=-1)
    return (per_symbol * weights).max(axis=-1)


def dist(spec: FiberSpaceSpec, x: Any, y: Any) -> float:
    """
    Distância d(x, y) na métrica da fibra.

    Args:
        spec: Especificação da fibra
        x: FiberPoint ou array de coordenadas
        y: FiberPoint ou array de coordenadas

    Returns:
        Distância em [0, 1]
    """
    a, b = as_coords(x), as_coords(y)
    if a.shape != (spec.dim,) or b.shape != (spec.dim,):
        raise SpecValidationError('coords', f"formas incompatíveis {a.shape} e {b.shape} para dim={spec.dim}")
    return float(batch_dist(spec, a, b))


def pairwise_dist(spec: FiberSpaceSpec, X: np.ndarray, Y: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Matriz de distâncias |X|×|Y| calculada por blocos de linhas."""
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], chunk):
        block = X[start:start + chunk]
        out[start:start + chunk] = batch_dist(spec, block[:, None, :], Y[None, :, :])
    return out


def axis_values(kind: str, mesh: float) -> np.ndarray:
    """
    Valores 1-D de uma grelha com passo ≤ mesh.

    Args:
        kind: Tipo de fibra
        mesh: Passo máximo

    Returns:
        Cubo: k+1 pontos j/k com k = ⌈1/mesh⌉; toro: m pontos j/m; binário: {0, 1}
    """
    if kind == 'binary_seq':
        return np.array([0.0, 1.0])
    count = max(1, int(math.ceil(1.0 / mesh - 1e-9)))
    if kind == 'torus_seq':
        return np.arange(count) / count
    return np.arange(count + 1) / count


@dataclass(frozen=True)
class CandidateCloud:
    """
    Nuvem finita de candidatos. Nuvens de grelha guardam os eixos 1-D e só materializam o
    produto quando os pontos são pedidos.
    """
    spec: FiberSpaceSpec
    provenance: str
    axes: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False, compare=False)
    explicit_points: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    mesh: Optional[float] = None
    count: Optional[int] = None
    seed: Optional[int] = None

    @property
    def is_product(self) -> bool:
        return self.axes is not None

    @property
    def size(self) -> int:
        if self.axes is not None:
            return int(np.prod([len(a) for a in self.axes], dtype=object))
        return int(self.explicit_points.shape[0])

    @cached_property
    def points(self) -> np.ndarray:
        """Pontos materializados (N×dim); levanta CloudTooLargeError acima do limite."""
        if self.explicit_points is not None:
            return self.explicit_points
        cap = cloud_cap()
        if self.size > cap:
            raise CloudTooLargeError(self.size, cap)
        mesh_grid = np.meshgrid(*self.axes, indexing='ij')
        return np.stack([g.ravel() for g in mesh_grid], axis=1)

    def materialized(self) -> 'CandidateCloud':
        """Cópia explícita (sem estrutura produto) da mesma nuvem."""
        return CandidateCloud(spec=self.spec, provenance=self.provenance, explicit_points=self.points,
                              mesh=self.mesh, count=self.count, seed=self.seed)

    def __len__(self) -> int:
        return self.size

    def describe(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"provenance": self.provenance, "size": self.size}
        if self.mesh is not None:
            payload["mesh"] = self.mesh
        if self.count is not None:
            payload["count"] = self.count
            payload["seed"] = self.seed
        if self.axes is not None:
            payload["axis_sizes"] = [len(a) for a in self.axes]
        return payload


def grid(spec: FiberSpaceSpec, mesh: float, cap: Optional[int] = None, materialize: bool = True) -> CandidateCloud:
    """
    Grelha produto com passo ≤ mesh em todas as coordenadas da janela.

    Args:
        spec: Especificação da fibra
        mesh: Passo (> 0)
        cap: Limite de cardinalidade (por omissão cloud_cap())
        materialize: Se False, devolve a nuvem em forma produto sem aplicar o limite

    Returns:
        Nuvem de candidatos
    """
    require(mesh > 0, 'mesh', "o passo deve ser positivo")
    values = axis_values(spec.kind, mesh)
    cloud = CandidateCloud(spec=spec, provenance='grid', axes=tuple(values for _ in range(spec.dim)), mesh=float(mesh))
    if materialize:
        cap = cloud_cap() if cap is None else cap
        if cloud.size > cap:
            raise CloudTooLargeError(cloud.size, cap)
    logger.debug(f"Grelha com passo {mesh}: {cloud.size} pontos")
    return cloud


def product_cloud(spec: FiberSpaceSpec, axes: Sequence[np.ndarray], mesh: Optional[float] = None) -> CandidateCloud:
    """Nuvem produto com eixos próprios (passos distintos por coordenada)."""
    require(len(axes) == spec.dim, 'axes', f"esperados {spec.dim} eixos, recebidos {len(axes)}")
    for values in axes:
        if len(values) > AXIS_CAP:
            raise CloudTooLargeError(len(values), AXIS_CAP)
    return CandidateCloud(spec=spec, provenance='grid', axes=tuple(np.asarray(a, dtype=float) for a in axes), mesh=mesh)


def random_cloud(spec: FiberSpaceSpec, count: int, seed: int) -> CandidateCloud:
    """Nuvem de 'count' pontos uniformes gerados com a semente indicada."""
    require(count >= 1, 'count', "a nuvem deve ter pelo menos um ponto")
    cap = cloud_cap()
    if count > cap:
        raise CloudTooLargeError(count, cap)
    rng = np.random.default_rng(seed)
    return CandidateCloud(spec=spec, provenance='random', explicit_points=sample_points(spec, rng, count),
                          count=int(count), seed=int(seed))


def explicit_cloud(spec: FiberSpaceSpec, points: np.ndarray, provenance: str = 'explicit') -> CandidateCloud:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, spec.dim)
    require(points.shape[0] >= 1, 'points', "nuvem vazia")
    validate_points(spec, points)
    return CandidateCloud(spec=spec, provenance=provenance, explicit_points=points)


def sample_points(spec: FiberSpaceSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Pontos uniformes em X (binário: coordenadas Bernoulli(1/2))."""
    if spec.kind == 'binary_seq':
        return rng.integers(0, 2, size=(count, spec.dim)).astype(float)
    return rng.random((count, spec.dim))


def nearest_grid_points(cloud: CandidateCloud, X: np.ndarray) -> np.ndarray:
    """Projeção coordenada a coordenada de X no ponto de grelha mais próximo."""
    require(cloud.is_product, 'cloud', "a projeção exige uma nuvem de grelha")
    out = np.empty_like(X)
    for i, values in enumerate(cloud.axes):
        column = X[:, i]
        if cloud.spec.periodic:
            # Inclui o ponto 1 ≡ 0 para a volta do círculo
            extended = np.append(values, 1.0)
            idx = np.clip(np.searchsorted(extended, column), 1, len(extended) - 1)
            left, right = extended[idx - 1], extended[idx]
            pick = np.where(column - left <= right - column, left, right)
            out[:, i] = np.mod(pick, 1.0)
        else:
            idx = np.clip(np.searchsorted(values, column), 1, max(1, len(values) - 1))
            if len(values) == 1:
                out[:, i] = values[0]
                continue
            left, right = values[idx - 1], values[idx]
            out[:, i] = np.where(column - left <= right - column, left, right)
    return out


def truncation_window(epsilon: float, n: int, metric: Optional[MetricSpec] = None, margin: int = 2) -> int:
    """
    Janela W = n + ⌈log₂(1/ε)⌉ + margem.

    Args:
        epsilon: Escala ε ∈ (0, 1)
        n: Número de iterações (≥ 1)
        metric: Métrica (pesos de base 2)
        margin: Símbolos extra

    Returns:
        Número de símbolos representados
    """
    require(0.0 < epsilon < 1.0, 'epsilon', f"ε deve estar em (0,1), recebido {epsilon}")
    require(n >= 1, 'n', "n deve ser ≥ 1")
    if metric is not None:
        metric.validate()
    return int(n + math.ceil(math.log2(1.0 / epsilon) - 1e-12) + margin)
