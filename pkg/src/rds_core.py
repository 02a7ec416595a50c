"""
Núcleo do sistema dinâmico aleatório: aplicações T_ω, produto cruzado Θ, iteração do cociclo,
métricas de Bowen d_n^ω, bolas de Bowen, somas de Birkhoff, potenciais f com a norma ‖f‖ e o
módulo de continuidade γ_ε.

Todas as funções trabalham por lotes: um conjunto de pontos é um array N×dim.
"""

import math
import numpy as np
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

from src.acceptance_rules import AcceptanceRules
from src.base_system import BasePath, BaseState, BaseSystemSpec, advance, expectation
from src.data_validator import (NonFiniteValueError, PathTooShortError, PotentialBoundError,
                                SpecValidationError, require)
from src.fiber_space import CandidateCloud, FiberPoint, FiberSpaceSpec, as_coords, batch_dist
from src.utils import get_logger

logger = get_logger('rds_core')

MAP_KINDS = ('identity', 'shift', 'doubling_circle', 'random_expanding', 'shift_random_rotation')
POTENTIAL_KINDS = ('zero', 'constant', 'coordinate_linear', 'trig', 'env_modulated', 'combined')
SHIFT_KINDS = ('shift', 'shift_random_rotation')
CIRCLE_KINDS = ('doubling_circle', 'random_expanding')


@dataclass(frozen=True)
class RandomMapSpec:
    """Aplicação aleatória T_ω; 'factors' define a(ω) para random_expanding."""
    kind: str
    factors: Tuple[int, ...] = (2, 3)

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(int(a) for a in self.factors))
        self.validate()

    def validate(self) -> None:
        require(self.kind in MAP_KINDS, 'map.kind', f"aplicação desconhecida '{self.kind}'")
        if self.kind == 'random_expanding':
            require(len(self.factors) >= 1 and all(a >= 1 for a in self.factors), 'map.factors',
                    "os fatores devem ser inteiros ≥ 1")

    def check_fiber(self, fiber: FiberSpaceSpec) -> None:
        """Verifica que a aplicação é compatível com a fibra."""
        if self.kind in CIRCLE_KINDS + ('shift_random_rotation',):
            require(fiber.kind == 'torus_seq', 'map.kind', f"'{self.kind}' exige uma fibra torus_seq")

    def factor(self, omega: BaseState) -> int:
        """Fator de expansão a(ω) lido do símbolo 0 de ω."""
        if self.kind == 'doubling_circle':
            return 2
        return self.factors[omega.symbol(0) % len(self.factors)]

    @property
    def max_factor(self) -> int:
        return 2 if self.kind == 'doubling_circle' else max(self.factors)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind}
        if self.kind == 'random_expanding':
            payload["factors"] = list(self.factors)
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'RandomMapSpec':
        require('kind' in payload, 'map.kind', "campo obrigatório em falta")
        return cls(kind=payload['kind'], factors=tuple(payload.get('factors', (2, 3))))


@dataclass(frozen=True)
class RandomSystem:
    """Conjunto (sistema de base, fibra, aplicação aleatória) que define o produto cruzado Θ."""
    base: BaseSystemSpec
    fiber: FiberSpaceSpec
    map: RandomMapSpec

    def __post_init__(self):
        self.map.check_fiber(self.fiber)

    def with_window(self, window: int) -> 'RandomSystem':
        return RandomSystem(base=self.base, fiber=self.fiber.with_window(window), map=self.map)

    @property
    def uses_window(self) -> bool:
        """Aplicações de deslocamento consomem um símbolo por iteração."""
        return self.map.kind in SHIFT_KINDS

    def to_dict(self) -> Dict[str, Any]:
        return {"base": self.base.to_dict(), "fiber": self.fiber.to_dict(), "map": self.map.to_dict()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'RandomSystem':
        return cls(base=BaseSystemSpec.from_dict(payload['base']),
                   fiber=FiberSpaceSpec.from_dict(payload['fiber']),
                   map=RandomMapSpec.from_dict(payload['map']))


def apply_map(system: RandomSystem, omega: BaseState, X: np.ndarray) -> np.ndarray:
    """
    Avalia T_ω num lote de pontos.

    Args:
        system: Sistema
        omega: Estado de base
        X: Array N×dim

    Returns:
        Array N×dim com T_ω(X)
    """
    kind = system.map.kind
    D = system.fiber.D
    if kind == 'identity':
        return X.copy()
    if kind in SHIFT_KINDS:
        # Deslocamento: perde o primeiro símbolo e preenche a cauda com 0
        shifted = np.concatenate([X[:, D:], np.zeros((X.shape[0], D))], axis=1)
        if kind == 'shift_random_rotation':
            return np.mod(shifted + omega.uniform(0), 1.0)
        return shifted
    return np.mod(system.map.factor(omega) * X, 1.0)


def skew_step(system: RandomSystem, omega: BaseState, x: Any) -> Tuple[BaseState, FiberPoint]:
    """Θ(ω, x) = (θω, T_ω x)."""
    coords = as_coords(x)
    if coords.shape != (system.fiber.dim,):
        raise SpecValidationError('coords', f"esperadas {system.fiber.dim} coordenadas")
    image = apply_map(system, omega, coords.reshape(1, -1))[0]
    return advance(omega), FiberPoint(coords=image)


def _require_length(path: BasePath, n: int) -> None:
    if n < 1:
        raise SpecValidationError('n', "n deve ser ≥ 1")
    if path.length < n:
        raise PathTooShortError(f"caminho com {path.length} estados, são necessários {n}")


def orbit(system: RandomSystem, path: BasePath, n: int, X: np.ndarray) -> np.ndarray:
    """
    Iterados [X, T_ω X, …, T_ω^{n−1} X].

    Returns:
        Array n×N×dim
    """
    _require_length(path, n)
    X = np.asarray(X, dtype=float)
    out = np.empty((n,) + X.shape)
    out[0] = X
    for j in range(1, n):
        out[j] = apply_map(system, path[j - 1], out[j - 1])
    return out


def iterate_map(system: RandomSystem, path: BasePath, n: int, X: np.ndarray) -> np.ndarray:
    """T_ω^n X (exige pelo menos n estados no caminho)."""
    if n == 0:
        return np.asarray(X, dtype=float).copy()
    _require_length(path, n)
    current = np.asarray(X, dtype=float)
    for j in range(n):
        current = apply_map(system, path[j], current)
    return current


@dataclass(frozen=True)
class OrbitTable:
    """Tabela de iterados de um lote de pontos ao longo de um caminho."""
    path: BasePath = field(repr=False)
    n: int
    base_points: np.ndarray = field(repr=False, compare=False)
    iterates: np.ndarray = field(repr=False, compare=False)
    window: int = 1
    shifts_window: bool = False

    def valid_symbols(self, j: int) -> int:
        """Símbolos não preenchidos após j iterações (deslocamentos perdem um por passo)."""
        return max(0, self.window - j) if self.shifts_window else self.window


def build_orbit_table(system: RandomSystem, path: BasePath, n: int, X: np.ndarray) -> OrbitTable:
    X = np.asarray(X, dtype=float)
    iterates = orbit(system, path, n, X)
    return OrbitTable(path=path, n=n, base_points=X, iterates=iterates,
                      window=system.fiber.window, shifts_window=system.uses_window)


def bowen_distances_from_orbits(fiber: FiberSpaceSpec, OX: np.ndarray, OY: np.ndarray) -> np.ndarray:
    """max_j d(OX[j], OY[j]) por ponto (órbitas n×N×dim)."""
    return batch_dist(fiber, OX, OY).max(axis=0)


def bowen_dist(system: RandomSystem, path: BasePath, n: int, x: Any, y: Any) -> float:
    """
    Métrica de Bowen d_n^ω(x, y) = max_{j<n} d(T_ω^j x, T_ω^j y).

    Args:
        system: Sistema
        path: Caminho de base com pelo menos n estados
        n: Número de iterações
        x: Primeiro ponto
        y: Segundo ponto

    Returns:
        Distância de Bowen
    """
    X = np.stack([as_coords(x), as_coords(y)])
    O = orbit(system, path, n, X)
    return float(bowen_distances_from_orbits(system.fiber, O[:, :1], O[:, 1:])[0])


def bowen_ball_contains(system: RandomSystem, path: BasePath, n: int, center: Any, epsilon: float, y: Any) -> bool:
    """Pertença estrita à bola de Bowen: d_n^ω(center, y) < ε."""
    return bool(AcceptanceRules.inside_open_ball(bowen_dist(system, path, n, center, y), epsilon))


def bowen_pair_distances(system: RandomSystem, O: np.ndarray, left: np.ndarray, right: np.ndarray,
                         chunk: int = 65536) -> np.ndarray:
    """Distâncias de Bowen para pares (left[k], right[k]) de índices de uma órbita n×N×dim."""
    out = np.empty(len(left))
    for start in range(0, len(left), chunk):
        i = left[start:start + chunk]
        j = right[start:start + chunk]
        out[start:start + chunk] = bowen_distances_from_orbits(system.fiber, O[:, i], O[:, j])
    return out


def lipschitz_constant(map_spec: RandomMapSpec, omega: Optional[BaseState] = None) -> float:
    """Constante de Lipschitz de T_ω na métrica da fibra (pior caso quando ω é omitido)."""
    if map_spec.kind == 'identity':
        return 1.0
    if map_spec.kind == 'random_expanding':
        return float(map_spec.factor(omega) if omega is not None else map_spec.max_factor)
    return 2.0


def path_lipschitz_product(system: RandomSystem, path: BasePath, n: int) -> float:
    """Π_{j<n−1} Lip(T_{θ^jω}): controla a escala de d_n^ω."""
    return float(np.prod([lipschitz_constant(system.map, path[j]) for j in range(n - 1)]))


def axis_bowen_weights(system: RandomSystem, path: BasePath, n: int, epsilon: float) -> Optional[np.ndarray]:
    """
    Pesos C_i tais que d_n^ω(x, y) = max_i C_i·gap_i(x_i, y_i) na região não separada,
    ou None quando d_n^ω não se decompõe por coordenadas.

    Decompõe-se para a métrica sup ponderada com identidade e deslocamentos (rotações são
    isometrias) e, para as aplicações lineares do círculo, quando a·ε/c_i < 1/2.
    """
    fiber = system.fiber
    if fiber.metric.kind != 'weighted_sup':
        return None
    weights = fiber.coordinate_weights()
    kind = system.map.kind
    if kind == 'identity':
        return weights
    if kind in SHIFT_KINDS:
        symbols = np.repeat(np.arange(fiber.window), fiber.D)
        return np.ldexp(1.0, -(symbols - np.minimum(symbols, n - 1)))
    # Aplicações lineares do círculo
    threshold = (epsilon + AcceptanceRules.TIE_TOL) / weights
    if np.any(system.map.max_factor * threshold >= 0.5):
        return None
    return weights * path_lipschitz_product(system, path, n)


@dataclass(frozen=True)
class PotentialSpec:
    """
    Potencial f(ω, x) limitado. Todos os tipos são somas de termos de uma só coordenada
    (para ω fixo), o que permite a fatorização por eixos das funções de partição.
    """
    kind: str
    value: float = 0.0
    coefficients: Tuple[float, ...] = ()
    terms: Tuple[Tuple[float, int, int], ...] = ()
    env_values: Tuple[float, ...] = ()
    coordinate: int = 0
    components: Tuple[Tuple[float, 'PotentialSpec'], ...] = ()
    declared_bound: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'coefficients', tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, 'terms', tuple((float(a), int(k), int(c)) for a, k, c in self.terms))
        object.__setattr__(self, 'env_values', tuple(float(h) for h in self.env_values))
        object.__setattr__(self, 'components', tuple((float(c), p) for c, p in self.components))
        self.validate()

    def validate(self) -> None:
        require(self.kind in POTENTIAL_KINDS, 'potential.kind', f"potencial desconhecido '{self.kind}'")
        if self.kind == 'env_modulated':
            require(len(self.env_values) >= 1, 'potential.env_values', "são necessários valores de h(ω)")
        if self.declared_bound is not None:
            require(self.declared_bound >= 0, 'potential.declared_bound', "o limite deve ser não negativo")
        values = [self.value] + list(self.coefficients) + list(self.env_values) + [t[0] for t in self.terms]
        require(all(math.isfinite(v) for v in values), 'potential', "parâmetros não finitos")

    @property
    def bound(self) -> float:
        """Limite B = sup|f| declarado (ou deduzido dos coeficientes)."""
        if self.declared_bound is not None:
            return float(self.declared_bound)
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'constant':
            return abs(self.value)
        if self.kind == 'coordinate_linear':
            return float(sum(abs(c) for c in self.coefficients))
        if self.kind == 'trig':
            return float(sum(abs(a) for a, _, _ in self.terms))
        if self.kind == 'env_modulated':
            return float(max(abs(h) for h in self.env_values))
        return float(sum(abs(c) * p.bound for c, p in self.components))

    def max_coordinate(self) -> int:
        """Maior índice de coordenada lido pelo potencial (−1 se nenhum)."""
        if self.kind == 'coordinate_linear':
            return len(self.coefficients) - 1
        if self.kind == 'trig':
            return max((c for _, _, c in self.terms), default=-1)
        if self.kind == 'env_modulated':
            return self.coordinate
        if self.kind == 'combined':
            return max((p.max_coordinate() for _, p in self.components), default=-1)
        return -1

    # Construtores auxiliares de combinações lineares

    def scaled(self, coefficient: float) -> 'PotentialSpec':
        return combine([(coefficient, self)])

    def plus(self, other: 'PotentialSpec', coefficient: float = 1.0) -> 'PotentialSpec':
        return combine([(1.0, self), (coefficient, other)])

    def plus_constant(self, c: float) -> 'PotentialSpec':
        return self.plus(constant(c))

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind}
        if self.kind == 'constant':
            payload["value"] = self.value
        elif self.kind == 'coordinate_linear':
            payload["coefficients"] = list(self.coefficients)
        elif self.kind == 'trig':
            payload["terms"] = [list(t) for t in self.terms]
        elif self.kind == 'env_modulated':
            payload["env_values"] = list(self.env_values)
            payload["coordinate"] = self.coordinate
        elif self.kind == 'combined':
            payload["components"] = [[c, p.to_dict()] for c, p in self.components]
        if self.declared_bound is not None:
            payload["declared_bound"] = self.declared_bound
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'PotentialSpec':
        require('kind' in payload, 'potential.kind', "campo obrigatório em falta")
        return cls(
            kind=payload['kind'],
            value=float(payload.get('value', 0.0)),
            coefficients=tuple(payload.get('coefficients', ())),
            terms=tuple(tuple(t) for t in payload.get('terms', ())),
            env_values=tuple(payload.get('env_values', ())),
            coordinate=int(payload.get('coordinate', 0)),
            components=tuple((float(c), cls.from_dict(p)) for c, p in payload.get('components', ())),
            declared_bound=payload.get('declared_bound'),
        )


def zero_potential() -> PotentialSpec:
    return PotentialSpec(kind='zero')


def constant(c: float) -> PotentialSpec:
    return PotentialSpec(kind='constant', value=float(c))


def combine(components: Sequence[Tuple[float, PotentialSpec]]) -> PotentialSpec:
    """f = Σ cᵢ·φᵢ (a ordem dos termos é preservada na avaliação)."""
    return PotentialSpec(kind='combined', components=tuple((float(c), p) for c, p in components))


def _evaluate_raw(f: PotentialSpec, omega: BaseState, X: np.ndarray) -> np.ndarray:
    kind = f.kind
    if kind == 'zero':
        return np.zeros(X.shape[0])
    if kind == 'constant':
        return np.full(X.shape[0], f.value)
    if kind == 'coordinate_linear':
        k = len(f.coefficients)
        if k > X.shape[1]:
            raise SpecValidationError('potential.coefficients', f"{k} coeficientes para {X.shape[1]} coordenadas")
        return X[:, :k] @ np.asarray(f.coefficients) if k else np.zeros(X.shape[0])
    if kind == 'trig':
        total = np.zeros(X.shape[0])
        for amplitude, frequency, coordinate in f.terms:
            total = total + amplitude * np.cos(2.0 * np.pi * frequency * X[:, coordinate])
        return total
    if kind == 'env_modulated':
        h = f.env_values[omega.symbol(0) % len(f.env_values)]
        return h * X[:, f.coordinate]
    total = np.zeros(X.shape[0])
    for coefficient, component in f.components:
        total = total + coefficient * _evaluate_raw(component, omega, X)
    return total


def evaluate_potential(f: PotentialSpec, omega: BaseState, X: np.ndarray) -> np.ndarray:
    """
    Avalia f(ω, ·) num lote de pontos e verifica |f| ≤ B.

    Args:
        f: Potencial
        omega: Estado de base
        X: Array N×dim

    Returns:
        Array de N valores
    """
    values = _evaluate_raw(f, omega, np.atleast_2d(np.asarray(X, dtype=float)))
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError("potencial com valor não finito", omega.stream_index)
    bound = f.bound
    if values.size and np.max(np.abs(values)) > bound + AcceptanceRules.METRIC_TOL * max(1.0, bound):
        raise PotentialBoundError(
            f"|f| = {np.max(np.abs(values)):.6g} excede o limite declarado {bound:.6g} (stream_index={omega.stream_index})")
    return values


def potential_table(system: RandomSystem, f: PotentialSpec, path: BasePath, n: int, X: np.ndarray,
                    O: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Tabela V[j, i] = f(θ^jω, T_ω^j x_i) para j < n.

    Args:
        O: Órbita já calculada (n'×N×dim com n' ≥ n), opcional

    Returns:
        Array n×N
    """
    if O is None:
        O = orbit(system, path, n, X)
    _require_length(path, n)
    return np.stack([evaluate_potential(f, path[j], O[j]) for j in range(n)])


def birkhoff_sums(system: RandomSystem, f: PotentialSpec, path: BasePath, n: int, X: np.ndarray,
                  O: Optional[np.ndarray] = None) -> np.ndarray:
    """S_nf(ω, x) = Σ_{j<n} f(Θ^j(ω, x)) para um lote de pontos."""
    if f.kind == 'zero':
        _require_length(path, n)
        return np.zeros(np.atleast_2d(X).shape[0])
    return potential_table(system, f, path, n, np.atleast_2d(X), O).sum(axis=0)


def birkhoff_sum(f: PotentialSpec, path: BasePath, x: Any, n: int, system: RandomSystem) -> float:
    """
    Soma de Birkhoff de um ponto.

    Args:
        f: Potencial
        path: Caminho com pelo menos n estados
        x: Ponto da fibra
        n: Número de termos
        system: Sistema

    Returns:
        S_nf(ω, x)
    """
    return float(birkhoff_sums(system, f, path, n, as_coords(x).reshape(1, -1))[0])


def potential_norm(f: PotentialSpec, base_spec: BaseSystemSpec, fiber_spec: FiberSpaceSpec, m_omega: int,
                   cloud: CandidateCloud) -> Tuple[float, float]:
    """
    Estimativa de ‖f‖ = ∫‖f(ω)‖_∞ dℙ por Monte Carlo, com o sup tomado sobre a nuvem.

    O resultado é um minorante de ‖f‖ (resolução da nuvem) e nunca excede B.

    Returns:
        Tupla (estimativa, erro-padrão)
    """
    require(cloud.size >= 1, 'cloud', "nuvem vazia")
    require(cloud.spec.dim == fiber_spec.dim, 'cloud', "a nuvem não corresponde à fibra")
    points = cloud.points

    def sup_abs(omega: BaseState) -> float:
        return float(np.max(np.abs(evaluate_potential(f, omega, points))))

    estimate, stderr = expectation(sup_abs, base_spec, m_omega)
    logger.debug(f"‖f‖ ≈ {estimate:.6g} ± {stderr:.2g} ({m_omega} amostras de ω, {cloud.size} pontos)")
    return estimate, stderr


def modulus_gamma(f: PotentialSpec, omega: BaseState, epsilon: float, cloud: Any,
                  fiber: Optional[FiberSpaceSpec] = None, chunk: int = 512) -> float:
    """
    γ_ε(ω) = max{|f(ω,x) − f(ω,y)| : x, y na nuvem, d(x, y) < 2ε}.

    Args:
        f: Potencial
        omega: Estado de base
        epsilon: Escala
        cloud: CandidateCloud ou array N×dim (com 'fiber')
        fiber: Fibra, obrigatória quando 'cloud' é um array

    Returns:
        Módulo de continuidade relativo à nuvem (0 sem pares admissíveis)
    """
    if isinstance(cloud, CandidateCloud):
        fiber = cloud.spec
        points = cloud.points
    else:
        points = np.asarray(cloud, dtype=float)
    require(fiber is not None, 'fiber', "a fibra é obrigatória para nuvens em array")
    require(points.shape[0] >= 2, 'cloud', "são necessários pelo menos 2 pontos")
    values = evaluate_potential(f, omega, points)

    gamma = 0.0
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        distances = batch_dist(fiber, block[:, None, :], points[None, :, :])
        close = AcceptanceRules.inside_open_ball(distances, 2.0 * epsilon)
        if np.any(close):
            gaps = np.abs(values[start:start + chunk, None] - values[None, :])
            gamma = max(gamma, float(np.max(np.where(close, gaps, 0.0))))
    return gamma
