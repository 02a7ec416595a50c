"""
Registo dos sistemas de referência com respostas analíticas conhecidas e as configurações
de execução que as reproduzem.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.base_system import BaseSystemSpec
from src.data_validator import SpecValidationError
from src.fiber_space import FiberSpaceSpec, MetricSpec
from src.rds_core import RandomMapSpec, RandomSystem


@dataclass(frozen=True)
class ReferenceSystem:
    """Sistema de referência: definição, tarefa de estimação, valor esperado e tolerância."""
    name: str
    system: RandomSystem
    task: str
    expected: float
    tolerance: float
    settings: Dict[str, Any] = field(default_factory=dict)
    description: str = ''

    def run_config(self, seed: Optional[int] = None) -> Dict[str, Any]:
        """Configuração JSON completa (formato RunConfig) para o comando estimate."""
        payload = {"name": self.name, "task": self.task, "system": self.system.to_dict(),
                   "potential": {"kind": "zero"}, "seed": self.system.base.seed if seed is None else seed,
                   "expected": {"value": self.expected, "tolerance": self.tolerance}}
        payload.update(self.settings)
        return payload


def _bernoulli_base(seed: int = 0) -> BaseSystemSpec:
    return BaseSystemSpec(kind='iid_symbols', alphabet=2, weights=(0.5, 0.5), seed=seed)


def _torus_shift(D: int, rotation: bool = False) -> RandomSystem:
    return RandomSystem(base=_bernoulli_base(),
                        fiber=FiberSpaceSpec(kind='torus_seq', D=D, window=1, metric=MetricSpec(kind='weighted_sup')),
                        map=RandomMapSpec(kind='shift_random_rotation' if rotation else 'shift'))


_SHIFT_SETTINGS = {"epsilon_ladder": [2.0 ** -k for k in range(3, 8)], "n_schedule": [2, 4, 6, 8],
                   "m_omega": 4, "cloud": {"kind": "adaptive", "resolution": 4}}

REFERENCE_SYSTEMS: Dict[str, ReferenceSystem] = {
    'identity': ReferenceSystem(
        name='identity',
        system=RandomSystem(base=_bernoulli_base(), fiber=FiberSpaceSpec(kind='cube_seq', D=1, window=1),
                            map=RandomMapSpec(kind='identity')),
        task='mdim', expected=0.0, tolerance=0.05,
        settings={"epsilon_ladder": [2.0 ** -k for k in range(2, 7)], "n_schedule": [2, 4, 6, 8],
                  "m_omega": 4, "cloud": {"kind": "adaptive", "resolution": 4}},
        description="Aplicação identidade em [0,1]: entropia nula e dimensão média nula"),
    'doubling': ReferenceSystem(
        name='doubling',
        system=RandomSystem(base=_bernoulli_base(), fiber=FiberSpaceSpec(kind='torus_seq', D=1, window=1),
                            map=RandomMapSpec(kind='doubling_circle')),
        task='entropy', expected=math.log(2.0), tolerance=0.05,
        settings={"epsilon_ladder": [1.0 / 32.0], "n_schedule": [8, 10, 12, 14], "m_omega": 16,
                  "cloud": {"kind": "adaptive", "resolution": 4}},
        description="Duplicação do círculo: entropia log 2"),
    'random_expanding': ReferenceSystem(
        name='random_expanding',
        system=RandomSystem(base=_bernoulli_base(), fiber=FiberSpaceSpec(kind='torus_seq', D=1, window=1),
                            map=RandomMapSpec(kind='random_expanding', factors=(2, 3))),
        task='entropy', expected=0.5 * (math.log(2.0) + math.log(3.0)), tolerance=0.07,
        settings={"epsilon_ladder": [1.0 / 16.0], "n_schedule": [3, 5, 7, 9], "m_omega": 64,
                  "cloud": {"kind": "adaptive", "resolution": 4}},
        description="x ↦ a(ω)x mod 1 com a(ω) ∈ {2,3} i.i.d.: entropia (log 2 + log 3)/2"),
    'torus_shift_d1': ReferenceSystem(
        name='torus_shift_d1', system=_torus_shift(1), task='mdim', expected=1.0, tolerance=0.15,
        settings=dict(_SHIFT_SETTINGS), description="Deslocamento em ([0,1]/~)^ℕ com D=1: dimensão média 1"),
    'torus_shift_d2': ReferenceSystem(
        name='torus_shift_d2', system=_torus_shift(2), task='mdim', expected=2.0, tolerance=0.30,
        settings=dict(_SHIFT_SETTINGS), description="Deslocamento em (([0,1]/~)²)^ℕ: dimensão média 2"),
    'shift_random_rotation': ReferenceSystem(
        name='shift_random_rotation', system=_torus_shift(1, rotation=True), task='mdim', expected=1.0,
        tolerance=0.15, settings=dict(_SHIFT_SETTINGS),
        description="Deslocamento seguido de rotação aleatória (isometria): mesmas contagens que o deslocamento"),
}


def reference_names() -> List[str]:
    return sorted(REFERENCE_SYSTEMS)


def get_reference(name: str) -> ReferenceSystem:
    """
    Devolve o sistema de referência pelo nome.

    Raises:
        SpecValidationError: Nome desconhecido
    """
    if name not in REFERENCE_SYSTEMS:
        raise SpecValidationError('reference', f"sistema de referência desconhecido '{name}' "
                                               f"(disponíveis: {', '.join(reference_names())})")
    return REFERENCE_SYSTEMS[name]
