"""
Conjuntos (ω,n,ε)-separados maximais sobre nuvens de candidatos, oráculos combinatórios exatos,
funções de partição em domínio logarítmico P_n e pressões de cobertura/partição Q_n.

Dois modos de empacotamento:
  - produto: quando d_n^ω é um sup ponderado coordenada a coordenada e a nuvem é uma grelha
    produto, cada eixo é empacotado em 1-D e o conjunto separado é o produto dos eixos;
  - genérico: pré-filtro de vizinhos com uma KD-tree de Chebyshev sobre a órbita escalada,
    refinamento exato com d_n^ω e seleção gulosa sequencial.
"""

import bisect
import math
import numpy as np
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from src.acceptance_rules import AcceptanceRules
from src.base_system import BasePath
from src.data_validator import CloudTooLargeError, PathTooShortError, SpecValidationError, require
from src.fiber_space import (CandidateCloud, FiberSpaceSpec, axis_values, batch_dist, cloud_cap, explicit_cloud,
                             grid, product_cloud, random_cloud)
from src.rds_core import (PotentialSpec, RandomSystem, axis_bowen_weights, birkhoff_sums,
                          bowen_pair_distances, evaluate_potential, iterate_map, modulus_gamma, orbit,
                          path_lipschitz_product)
from src.utils import get_logger

logger = get_logger('packing')

CLOUD_KINDS = ('grid', 'random', 'adaptive')
PACKING_METHODS = ('auto', 'product', 'kdtree', 'naive')


@dataclass(frozen=True)
class CloudSpec:
    """
    Receita da nuvem de candidatos usada pelos estimadores.

    'adaptive' escolhe o passo a partir da escala de Bowen: ε/(resolution·C_i) por eixo no modo
    produto, ε/(resolution·L_n) no modo genérico (L_n o produto das constantes de Lipschitz).
    """
    kind: str = 'adaptive'
    mesh: Optional[float] = None
    count: Optional[int] = None
    seed: int = 0
    resolution: int = 4

    def __post_init__(self):
        require(self.kind in CLOUD_KINDS, 'cloud.kind', f"nuvem desconhecida '{self.kind}'")
        if self.kind == 'grid':
            require(self.mesh is not None and self.mesh > 0, 'cloud.mesh', "grelhas exigem passo positivo")
        if self.kind == 'random':
            require(self.count is not None and self.count >= 1, 'cloud.count', "nuvens aleatórias exigem 'count'")
        require(self.resolution >= 1, 'cloud.resolution', "a resolução deve ser ≥ 1")

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind, "resolution": self.resolution, "seed": self.seed}
        if self.mesh is not None:
            payload["mesh"] = self.mesh
        if self.count is not None:
            payload["count"] = self.count
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'CloudSpec':
        return cls(kind=payload.get('kind', 'adaptive'), mesh=payload.get('mesh'), count=payload.get('count'),
                   seed=int(payload.get('seed', 0)), resolution=int(payload.get('resolution', 4)))


def build_cloud(spec: CloudSpec, system: RandomSystem, path: BasePath, n: int, epsilon: float) -> CandidateCloud:
    """
    Constrói a nuvem para uma tarefa (caminho, n, ε).

    Args:
        spec: Receita da nuvem
        system: Sistema (a janela da fibra já ajustada)
        path: Caminho de base
        n: Número de iterações
        epsilon: Escala

    Returns:
        Nuvem de candidatos (forma produto sempre que o modo produto se aplica)
    """
    fiber = system.fiber
    weights = axis_bowen_weights(system, path, n, epsilon)
    if spec.kind == 'random':
        return random_cloud(fiber, spec.count, spec.seed)
    if spec.kind == 'grid':
        return grid(fiber, spec.mesh, materialize=weights is None)

    if weights is not None:
        axes = []
        for weight in weights:
            threshold = min(epsilon / weight, 1.0)
            axes.append(axis_values(fiber.kind, threshold / spec.resolution))
        return product_cloud(fiber, axes)

    mesh = epsilon / (spec.resolution * path_lipschitz_product(system, path, n))
    return grid(fiber, mesh, materialize=True)


@dataclass(frozen=True)
class SeparatedSet:
    """
    Conjunto (ω,n,ε)-separado sobre uma nuvem. No modo genérico guarda índices da nuvem; no
    modo produto guarda os valores selecionados em cada eixo.
    """
    cloud: CandidateCloud = field(repr=False)
    system: RandomSystem = field(repr=False)
    path: BasePath = field(repr=False)
    n: int
    epsilon: float
    indices: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    axis_selections: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False, compare=False)
    axis_weights: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    certificate: bool = True
    mode: str = 'kdtree'

    @property
    def cardinality(self) -> int:
        if self.axis_selections is not None:
            return int(np.prod([len(a) for a in self.axis_selections], dtype=object))
        return int(len(self.indices))

    @property
    def log_cardinality(self) -> float:
        if self.axis_selections is not None:
            return float(sum(math.log(len(a)) for a in self.axis_selections))
        return math.log(len(self.indices))

    @property
    def points(self) -> np.ndarray:
        """Pontos selecionados (N×dim); no modo produto materializa o produto dos eixos."""
        if self.axis_selections is not None:
            return explicit_product(self.cloud.spec, self.axis_selections)
        return self.cloud.points[self.indices]

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "epsilon": self.epsilon, "cardinality": self.cardinality,
                "log_cardinality": self.log_cardinality, "certificate": self.certificate, "mode": self.mode,
                "stream_index": self.path[0].stream_index, "cloud": self.cloud.describe()}


def explicit_product(spec: FiberSpaceSpec, axes: Sequence[np.ndarray]) -> np.ndarray:
    size = int(np.prod([len(a) for a in axes], dtype=object))
    if size > cloud_cap():
        raise CloudTooLargeError(size, cloud_cap())
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class LogPartitionValue:
    """Valor log Σ_{x∈F}(1/ε)^{S_nf(ω,x)} (logaritmo natural)."""
    log_value: float
    term_count: int
    epsilon: float
    n: int
    log_term_count: float
    selection: str = 'canonical'

    def bounds_hold(self, bound: float) -> bool:
        """log|F| − n·B·log(1/ε) ≤ valor ≤ log|F| + n·B·log(1/ε)."""
        spread = self.n * bound * math.log(1.0 / self.epsilon)
        slack = AcceptanceRules.LOG_SLACK
        return (self.log_term_count - spread - slack <= self.log_value <= self.log_term_count + spread + slack)

    def to_dict(self) -> Dict[str, Any]:
        return {"log_value": self.log_value, "term_count": self.term_count, "epsilon": self.epsilon,
                "n": self.n, "selection": self.selection}


# Empacotamento 1-D por eixo

def _is_lattice(values: np.ndarray, periodic: bool) -> bool:
    denom = len(values) if periodic else len(values) - 1
    if denom < 1:
        return False
    return bool(np.array_equal(values, np.arange(len(values)) / denom))


def greedy_axis(values: np.ndarray, threshold: float, periodic: bool,
                order: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Empacotamento guloso 1-D: aceita um valor quando dista mais de 'threshold' de todos os aceites.

    Args:
        values: Valores do eixo por ordem crescente
        threshold: Limiar (a tolerância de empate já incluída)
        periodic: Distância circular
        order: Permutação de processamento (por omissão a ordem crescente)

    Returns:
        Índices aceites (ordem crescente)
    """
    count = len(values)
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if order is not None and not np.array_equal(order, np.arange(count)):
        return _greedy_axis_ordered(values, threshold, periodic, order)

    if _is_lattice(values, periodic):
        # Rede uniforme: o varrimento aceita índices em progressão aritmética
        step = int(np.searchsorted(values, values[0] + threshold, side='right'))
        if step >= count:
            return np.array([0], dtype=np.int64)
        accepted = np.arange(0, count, step, dtype=np.int64)
        if periodic:
            accepted = accepted[1.0 - values[accepted] + values[0] > threshold]
            accepted = accepted if len(accepted) else np.array([0], dtype=np.int64)
        return accepted

    first = values[0]
    accepted = [0]
    last, current = first, 0
    while True:
        idx = int(np.searchsorted(values, last + threshold, side='right'))
        while idx < count and not (values[idx] - last > threshold):
            idx += 1
        while idx - 1 > current and values[idx - 1] - last > threshold:
            idx -= 1
        if idx >= count:
            break
        if periodic and not (1.0 - values[idx] + first > threshold):
            break
        accepted.append(idx)
        last, current = values[idx], idx
    return np.asarray(accepted, dtype=np.int64)


def _greedy_axis_ordered(values: np.ndarray, threshold: float, periodic: bool, order: np.ndarray) -> np.ndarray:
    accepted: List[float] = []
    chosen: List[int] = []
    for idx in order:
        v = float(values[idx])
        pos = bisect.bisect_left(accepted, v)
        neighbours = []
        if pos > 0:
            neighbours.append(accepted[pos - 1])
        if pos < len(accepted):
            neighbours.append(accepted[pos])
        if periodic and accepted:
            neighbours.extend([accepted[0], accepted[-1]])
        separated = True
        for a in neighbours:
            gap = abs(v - a)
            if periodic:
                gap = min(gap, 1.0 - gap)
            if not gap > threshold:
                separated = False
                break
        if separated:
            accepted.insert(pos, v)
            chosen.append(int(idx))
    return np.sort(np.asarray(chosen, dtype=np.int64))


def _axis_thresholds(weights: np.ndarray, epsilon: float) -> np.ndarray:
    return (epsilon + AcceptanceRules.TIE_TOL) / weights


def _greedy_product(cloud: CandidateCloud, weights: np.ndarray, epsilon: float,
                    axis_orders: Optional[Sequence[np.ndarray]] = None) -> Tuple[np.ndarray, ...]:
    periodic = cloud.spec.periodic
    thresholds = _axis_thresholds(weights, epsilon)
    selections = []
    for i, values in enumerate(cloud.axes):
        order = None if axis_orders is None else axis_orders[i]
        selections.append(values[greedy_axis(values, thresholds[i], periodic, order)])
    return tuple(selections)


# Empacotamento genérico

def _embedding(system: RandomSystem, O: np.ndarray, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Órbita escalada pelos pesos de coordenada: a distância de Chebyshev minora d(T^j x, T^j y)
    em cada j, pelo que pares não separados estão a distância ≤ ε no mergulho.
    """
    fiber = system.fiber
    n, count, dim = O.shape
    weights = fiber.coordinate_weights()
    scaled = (O * weights).transpose(1, 0, 2).reshape(count, n * dim)
    if fiber.periodic:
        box = np.tile(weights, n)
        scaled = np.mod(scaled, box)
    else:
        box = np.tile(2.0 * weights + 1.0 + epsilon, n)
    return scaled, box


def not_separated_pairs(system: RandomSystem, O: np.ndarray, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pares (i<j) com d_n^ω(x_i, x_j) ≤ ε (empates incluídos).

    A KD-tree devolve um superconjunto; cada par é verificado com a distância de Bowen exata.
    """
    scaled, box = _embedding(system, O, epsilon)
    tree = cKDTree(scaled, boxsize=box)
    pairs = tree.query_pairs(r=epsilon + 2.0 * AcceptanceRules.TIE_TOL, p=np.inf, output_type='ndarray')
    if len(pairs) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    distances = bowen_pair_distances(system, O, pairs[:, 0], pairs[:, 1])
    keep = ~AcceptanceRules.separated(distances, epsilon)
    return pairs[keep, 0].astype(np.int64), pairs[keep, 1].astype(np.int64)


def _greedy_kdtree(system: RandomSystem, O: np.ndarray, epsilon: float, order: np.ndarray) -> np.ndarray:
    count = O.shape[1]
    left, right = not_separated_pairs(system, O, epsilon)
    rows = np.concatenate([left, right])
    cols = np.concatenate([right, left])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(count, count)).tocsr()
    indptr, neighbours = graph.indptr, graph.indices

    blocked = np.zeros(count, dtype=bool)
    accepted = []
    for idx in order:
        if blocked[idx]:
            continue
        accepted.append(int(idx))
        blocked[neighbours[indptr[idx]:indptr[idx + 1]]] = True
    return np.asarray(accepted, dtype=np.int64)


def _greedy_naive(system: RandomSystem, O: np.ndarray, epsilon: float, order: np.ndarray) -> np.ndarray:
    accepted: List[int] = []
    for idx in order:
        if accepted:
            chosen = np.asarray(accepted)
            distances = bowen_pair_distances(system, O, np.full(len(chosen), idx), chosen)
            if not np.all(AcceptanceRules.separated(distances, epsilon)):
                continue
        accepted.append(int(idx))
    return np.asarray(accepted, dtype=np.int64)


def _require_task(cloud: CandidateCloud, path: BasePath, n: int, epsilon: float) -> None:
    require(cloud.size >= 1, 'cloud', "nuvem vazia")
    require(n >= 1, 'n', "n deve ser ≥ 1")
    require(epsilon > 0, 'epsilon', "ε deve ser positivo")
    if path.length < n:
        raise PathTooShortError(f"caminho com {path.length} estados, são necessários {n}")


def greedy_separated(cloud: CandidateCloud, system: RandomSystem, path: BasePath, n: int, epsilon: float,
                     order_seed: Optional[int] = None, method: str = 'auto',
                     order: Optional[np.ndarray] = None,
                     axis_orders: Optional[Sequence[np.ndarray]] = None) -> SeparatedSet:
    """
    Conjunto (ω,n,ε)-separado maximal sobre a nuvem (minorante de s_n^ω).

    Args:
        cloud: Nuvem de candidatos
        system: Sistema
        path: Caminho com pelo menos n estados
        n: Número de iterações
        epsilon: Escala de separação
        order_seed: Semente da ordem de processamento (None: ordem canónica)
        method: 'auto', 'product', 'kdtree' ou 'naive'
        order: Ordem explícita dos pontos (modos genéricos)
        axis_orders: Ordens explícitas por eixo (modo produto)

    Returns:
        Conjunto separado com certificado de maximalidade
    """
    _require_task(cloud, path, n, epsilon)
    require(method in PACKING_METHODS, 'method', f"método desconhecido '{method}'")

    weights = axis_bowen_weights(system, path, n, epsilon) if cloud.is_product else None
    if method == 'auto':
        method = 'product' if weights is not None and order is None else 'kdtree'
    if method == 'product':
        require(weights is not None, 'method', "o modo produto exige grelha produto e métrica decomponível")
        if axis_orders is None and order_seed is not None:
            rng = np.random.default_rng(order_seed)
            axis_orders = [rng.permutation(len(a)) for a in cloud.axes]
        selections = _greedy_product(cloud, weights, epsilon, axis_orders)
        result = SeparatedSet(cloud=cloud, system=system, path=path, n=n, epsilon=epsilon,
                              axis_selections=selections, axis_weights=weights, mode='product')
    else:
        points = cloud.points
        if order is None:
            order = (np.random.default_rng(order_seed).permutation(points.shape[0])
                     if order_seed is not None else np.arange(points.shape[0]))
        O = orbit(system, path, n, points)
        chosen = _greedy_kdtree(system, O, epsilon, order) if method == 'kdtree' else _greedy_naive(system, O, epsilon, order)
        result = SeparatedSet(cloud=cloud, system=system, path=path, n=n, epsilon=epsilon,
                              indices=chosen, mode=method)

    logger.debug(f"Conjunto separado ({result.mode}): n={n}, ε={epsilon:.6g}, |F|={result.cardinality}")
    return result


def verify_separated_set(F: SeparatedSet, max_size: int = 5000, chunk: int = 256) -> Tuple[bool, Dict[str, Any]]:
    """
    Reverificação exaustiva: separação estrita dos pares de F e maximalidade sobre a nuvem.

    Returns:
        Tupla (válido, detalhes); conjuntos acima de 'max_size' não são verificados
    """
    if F.cardinality > max_size:
        return True, {"skipped": True, "cardinality": F.cardinality}

    system, path, n, eps = F.system, F.path, F.n, F.epsilon
    chosen = F.points
    cloud_points = F.cloud.points
    O_chosen = orbit(system, path, n, chosen)
    O_cloud = orbit(system, path, n, cloud_points)

    details: Dict[str, Any] = {"skipped": False, "cardinality": F.cardinality, "bad_pairs": 0, "addable": 0}
    for start in range(0, chosen.shape[0], chunk):
        block = O_chosen[:, start:start + chunk]
        d = _bowen_block(system, block, O_chosen)
        idx = np.arange(start, start + block.shape[1])
        d[np.arange(block.shape[1]), idx] = np.inf
        details["bad_pairs"] += int(np.count_nonzero(~AcceptanceRules.separated(d, eps)))

    for start in range(0, cloud_points.shape[0], chunk):
        block = O_cloud[:, start:start + chunk]
        d = _bowen_block(system, block, O_chosen)
        addable = np.all(AcceptanceRules.separated(d, eps), axis=1)
        details["addable"] += int(np.count_nonzero(addable))

    valid = details["bad_pairs"] == 0 and details["addable"] == 0
    if not valid:
        logger.warning(f"Conjunto separado inválido: {details}")
    return valid, details


def _bowen_block(system: RandomSystem, OA: np.ndarray, OB: np.ndarray) -> np.ndarray:
    """Matriz |A|×|B| de distâncias de Bowen entre duas órbitas."""
    out = np.zeros((OA.shape[1], OB.shape[1]))
    for j in range(OA.shape[0]):
        out = np.maximum(out, batch_dist(system.fiber, OA[j][:, None, :], OB[j][None, :, :]))
    return out


# Oráculos combinatórios

def axis_count(kind: str, threshold: float, mesh: Optional[float] = None) -> int:
    """
    Cardinal máximo 1-D com separações estritamente acima de 'threshold'.

    Args:
        kind: Tipo de fibra
        threshold: Limiar do eixo
        mesh: Passo da grelha (None: contínuo)

    Returns:
        Contínuo: ⌈1/t⌉ no cubo, max(1, ⌈1/t⌉−1) no toro; grelha: ⌊k/g⌋+1 no cubo e
        max(1, ⌊m/g⌋) no toro, com g o menor salto inteiro acima do limiar
    """
    if kind == 'binary_seq':
        return 2 if threshold < 1.0 else 1
    if mesh is None:
        ceiling = int(math.ceil(1.0 / threshold - 1e-9))
        if kind == 'torus_seq':
            return max(1, ceiling - 1)
        return max(1, ceiling)
    denom = int(math.ceil(1.0 / mesh - 1e-9))
    step = int(math.floor(threshold * denom + 1e-9)) + 1
    if kind == 'torus_seq':
        return max(1, denom // step)
    return denom // step + 1


def exact_separated_product(spec: FiberSpaceSpec, epsilon: float, n_window: Optional[int] = None,
                            mesh: Optional[float] = None, axis_weights: Optional[np.ndarray] = None) -> int:
    """
    Cardinal exato do maior conjunto separado numa grelha produto com métrica sup ponderada.

    Args:
        spec: Fibra (métrica weighted_sup)
        epsilon: Escala
        n_window: Número de símbolos ativos (por omissão a janela)
        mesh: Passo da grelha (None: contínuo)
        axis_weights: Pesos de Bowen por coordenada (por omissão os pesos da métrica)

    Returns:
        Produto dos cardinais 1-D
    """
    if spec.metric.kind != 'weighted_sup':
        raise SpecValidationError('metric.kind', f"oráculo produto não suporta '{spec.metric.kind}'")
    if axis_weights is None:
        window = spec.window if n_window is None else n_window
        axis_weights = np.repeat(spec.metric.symbol_weights(window), spec.D)
    total = 1
    for weight in np.asarray(axis_weights, dtype=float):
        total *= axis_count(spec.kind, epsilon / weight, mesh)
    return total


def linear_circle_oracle(points: int, epsilon: float, factors: Sequence[int]) -> int:
    """
    Contagem gulosa numa grelha de M pontos do círculo para x ↦ a_j·x mod 1 ao longo de n passos.

    Args:
        points: M
        epsilon: Escala (ε < 1/(2·max a))
        factors: a_0, …, a_{n−2}

    Returns:
        ⌊M/(⌊rM⌋+1)⌋ com r = ε/Π a_j
    """
    largest = max(factors) if len(factors) else 1
    require(epsilon < 0.5 / largest, 'epsilon', "o oráculo linear exige ε < 1/(2·max a)")
    product = float(np.prod(factors)) if len(factors) else 1.0
    return axis_count('torus_seq', epsilon / product, mesh=1.0 / points)


# Funções de partição

def _log_zero_guard(epsilon: float) -> float:
    if not 0.0 < epsilon < 1.0:
        raise SpecValidationError('epsilon', f"ε deve estar em (0,1), recebido {epsilon}")
    return math.log(1.0 / epsilon)


def _reference_and_probes(axes: Sequence[np.ndarray]) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Ponto de referência (primeiro valor de cada eixo) e sondas que variam um eixo de cada vez."""
    reference = np.array([a[0] for a in axes], dtype=float)
    probes = []
    for i, values in enumerate(axes):
        block = np.tile(reference, (len(values), 1))
        block[:, i] = values
        probes.append(block)
    return reference, probes


def _axis_contributions(system: RandomSystem, f: PotentialSpec, path: BasePath, n: int,
                        axes: Sequence[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    """S_nf da referência e, por eixo, S_nf(sonda) − S_nf(referência) (f é aditivo por coordenada)."""
    reference, probes = _reference_and_probes(axes)
    s_ref = float(birkhoff_sums(system, f, path, n, reference.reshape(1, -1))[0])
    stacked = np.concatenate(probes)
    s_all = birkhoff_sums(system, f, path, n, stacked) - s_ref
    splits = np.cumsum([len(a) for a in axes])[:-1]
    return s_ref, np.split(s_all, splits)


def partition_function(F: SeparatedSet, f: PotentialSpec, path: Optional[BasePath] = None,
                       epsilon: Optional[float] = None) -> LogPartitionValue:
    """
    log Σ_{x∈F}(1/ε)^{S_nf(ω,x)} por acumulação log-sum-exp.

    Args:
        F: Conjunto separado
        f: Potencial
        path: Caminho (por omissão o de F)
        epsilon: Escala dos pesos (por omissão a de F)

    Returns:
        Valor da função de partição
    """
    path = F.path if path is None else path
    epsilon = F.epsilon if epsilon is None else epsilon
    t = _log_zero_guard(epsilon)
    n = F.n

    if f.kind == 'zero':
        log_value = F.log_cardinality
    elif F.axis_selections is not None:
        s_ref, contributions = _axis_contributions(F.system, f, path, n, F.axis_selections)
        log_value = t * s_ref + float(sum(logsumexp(t * c) for c in contributions))
    else:
        sums = birkhoff_sums(F.system, f, path, n, F.points)
        log_value = float(logsumexp(t * sums))

    return LogPartitionValue(log_value=float(log_value), term_count=F.cardinality, epsilon=epsilon, n=n,
                             log_term_count=F.log_cardinality)


def pn_hat(cloud: CandidateCloud, system: RandomSystem, path: BasePath, n: int, epsilon: float,
           f: PotentialSpec, order_seed: Optional[int] = None, method: str = 'auto') -> LogPartitionValue:
    """
    Estimativa de P_n(T,f,d,ω,ε): melhor de duas seleções gulosas (ordem canónica e ordem
    decrescente de S_nf).

    Returns:
        Minorante de P_n sobre o contínuo
    """
    first = greedy_separated(cloud, system, path, n, epsilon, order_seed=order_seed, method=method)
    best = partition_function(first, f, path, epsilon)
    if f.kind == 'zero':
        return best

    if first.mode == 'product':
        _, contributions = _axis_contributions(system, f, path, n, cloud.axes)
        axis_orders = [np.argsort(-c, kind='stable') for c in contributions]
        second = greedy_separated(cloud, system, path, n, epsilon, method='product', axis_orders=axis_orders)
    else:
        sums = birkhoff_sums(system, f, path, n, cloud.points)
        second = greedy_separated(cloud, system, path, n, epsilon, method=first.mode,
                                  order=np.argsort(-sums, kind='stable'))
    reselected = partition_function(second, f, path, epsilon)
    if reselected.log_value > best.log_value:
        return LogPartitionValue(log_value=reselected.log_value, term_count=reselected.term_count,
                                 epsilon=epsilon, n=n, log_term_count=reselected.log_term_count,
                                 selection='weighted')
    return best


@dataclass(frozen=True)
class GridPartition:
    """Partição em células de lado ≤ 'side' (m = ⌈1/side⌉ células por coordenada)."""
    fiber: FiberSpaceSpec
    side: float

    def __post_init__(self):
        require(self.side > 0, 'side', "o lado das células deve ser positivo")

    @property
    def cells_per_axis(self) -> int:
        return max(1, int(math.ceil(1.0 / self.side - 1e-9)))

    @property
    def diameter_bound(self) -> float:
        return 1.0 / self.cells_per_axis

    def labels(self, X: np.ndarray) -> np.ndarray:
        """Índice da célula de cada coordenada (N×dim inteiros)."""
        m = self.cells_per_axis
        cells = np.floor(np.asarray(X) * m).astype(np.int64)
        if self.fiber.periodic:
            return np.mod(cells, m)
        return np.clip(cells, 0, m - 1)

    def refined_labels(self, O: np.ndarray) -> np.ndarray:
        """Rótulos de ∨_{j<n}(T^j)^{−1}𝒰: concatenação das células dos iterados (N×(n·dim))."""
        n, count, dim = O.shape
        return self.labels(O).transpose(1, 0, 2).reshape(count, n * dim)

    def occupied_cells(self, X: np.ndarray) -> Dict[Tuple[int, ...], np.ndarray]:
        """Representantes da nuvem por célula não vazia."""
        labels = self.labels(X)
        unique, inverse = np.unique(labels, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        return {tuple(int(v) for v in unique[k]): np.flatnonzero(inverse == k) for k in range(len(unique))}


def _grouped_log_sum_max(labels: np.ndarray, weights: np.ndarray) -> Tuple[float, int]:
    """log Σ_{rótulos} max_{pontos do rótulo} e^{peso}."""
    _, inverse = np.unique(labels, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    groups = int(inverse.max()) + 1
    best = np.full(groups, -np.inf)
    np.maximum.at(best, inverse, weights)
    return float(logsumexp(best)), groups


def qn_hat(partition: GridPartition, system: RandomSystem, path: BasePath, n: int, epsilon: float,
           f: PotentialSpec, cloud: CandidateCloud) -> LogPartitionValue:
    """
    log Σ sobre as células refinadas não vazias do máximo de (1/ε)^{S_nf} nos representantes.

    Args:
        partition: Partição de base 𝒰
        system: Sistema
        path: Caminho com pelo menos n estados
        n: Número de iterações
        epsilon: Escala dos pesos
        f: Potencial
        cloud: Nuvem de representantes

    Returns:
        Majorante (todas as células não vazias) do ínfimo sobre subcoberturas
    """
    t = _log_zero_guard(epsilon)
    _require_task(cloud, path, n, epsilon)

    if cloud.is_product:
        # Rótulos e somas separam-se por eixo: cada sonda só varia uma coordenada
        reference, probes = _reference_and_probes(cloud.axes)
        s_ref = float(birkhoff_sums(system, f, path, n, reference.reshape(1, -1))[0])
        log_value, log_count, term_count = t * s_ref, 0.0, 1
        for block in probes:
            O = orbit(system, path, n, block)
            weights = t * (birkhoff_sums(system, f, path, n, block, O) - s_ref)
            value, groups = _grouped_log_sum_max(partition.refined_labels(O), weights)
            log_value += value
            log_count += math.log(groups)
            term_count *= groups
        return LogPartitionValue(log_value=float(log_value), term_count=term_count, epsilon=epsilon, n=n,
                                 log_term_count=log_count, selection='partition')

    points = cloud.points
    O = orbit(system, path, n, points)
    weights = t * birkhoff_sums(system, f, path, n, points, O)
    log_value, groups = _grouped_log_sum_max(partition.refined_labels(O), weights)
    return LogPartitionValue(log_value=log_value, term_count=groups, epsilon=epsilon, n=n,
                             log_term_count=math.log(groups), selection='partition')


def image_cloud(system: RandomSystem, path: BasePath, j: int, cloud: CandidateCloud) -> CandidateCloud:
    """Nuvem T_ω^j(cloud), usada para avaliar Q_m em θ^jω."""
    return explicit_cloud(cloud.spec, iterate_map(system, path, j, cloud.points), provenance='image')


@dataclass(frozen=True)
class BallCover:
    """Cobertura da nuvem pelas bolas fechadas de raio ε/4 centradas num conjunto ε/4-separado maximal."""
    centers: SeparatedSet = field(repr=False)
    members: Tuple[np.ndarray, ...] = field(repr=False, compare=False)
    epsilon: float = 0.0

    @property
    def size(self) -> int:
        return len(self.members)


def ball_cover(cloud: CandidateCloud, system: RandomSystem, path: BasePath, n: int, epsilon: float) -> BallCover:
    """
    Constrói a cobertura por bolas de Bowen de raio ε/4 (empates incluídos) em torno de um
    conjunto (ω,n,ε/4)-separado maximal; a maximalidade garante que cobre a nuvem.
    """
    quarter = epsilon / 4.0
    centers = greedy_separated(cloud, system, path, n, quarter, method='kdtree')
    points = cloud.points
    O_cloud = orbit(system, path, n, points)
    O_centers = O_cloud[:, centers.indices]
    distances = _bowen_block(system, O_centers, O_cloud)
    members = tuple(np.flatnonzero(~AcceptanceRules.separated(row, quarter)) for row in distances)
    return BallCover(centers=centers, members=members, epsilon=epsilon)


def qn_ball_cover(cover: BallCover, f: PotentialSpec, epsilon: Optional[float] = None) -> LogPartitionValue:
    """log Σ_{V∈𝒱} sup_{y∈V}(1/ε)^{S_nf(ω,y)} sobre a cobertura por bolas."""
    F = cover.centers
    epsilon = cover.epsilon if epsilon is None else epsilon
    t = _log_zero_guard(epsilon)
    sums = birkhoff_sums(F.system, f, F.path, F.n, F.cloud.points)
    maxima = np.array([np.max(sums[m]) for m in cover.members])
    return LogPartitionValue(log_value=float(logsumexp(t * maxima)), term_count=cover.size, epsilon=epsilon,
                             n=F.n, log_term_count=math.log(cover.size), selection='ball_cover')


def cover_inequality_terms(cloud: CandidateCloud, system: RandomSystem, path: BasePath, n: int,
                           epsilon: float, f: PotentialSpec) -> Dict[str, float]:
    """
    Termos da desigualdade Q_n(𝒱) ≤ (1/ε)^{Σγ_j}·4^{ΣB_j}·P_n(ε/4), com γ_j e B_j avaliados nas
    nuvens imagem T_ω^j(cloud) e o mesmo conjunto ε/4-separado a definir 𝒱 e P_n(ε/4).

    Returns:
        Dicionário com lhs, rhs e as parcelas em domínio logarítmico
    """
    cover = ball_cover(cloud, system, path, n, epsilon)
    lhs = qn_ball_cover(cover, f, epsilon).log_value
    pn_quarter = partition_function(cover.centers, f, path, epsilon / 4.0).log_value

    O = orbit(system, path, n, cloud.points)
    gamma_sum, bound_sum = 0.0, 0.0
    for j in range(n):
        gamma_sum += modulus_gamma(f, path[j], epsilon, O[j], fiber=system.fiber) if O.shape[1] >= 2 else 0.0
        bound_sum += float(np.max(np.abs(evaluate_potential(f, path[j], O[j]))))

    t = math.log(1.0 / epsilon)
    rhs = t * gamma_sum + math.log(4.0) * bound_sum + pn_quarter
    return {"lhs": lhs, "rhs": rhs, "gamma_sum": gamma_sum, "bound_sum": bound_sum,
            "pn_quarter": pn_quarter, "cover_size": float(cover.size)}
