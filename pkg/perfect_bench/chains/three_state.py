from typing import List, Tuple

import numpy as np

from ..lib.chain import ChainModel, register_chain
from ..lib.errors import InvalidInputError
from ..lib.init_helper import get_logger

logger = get_logger()

# RULE[x][u] = next state. u = 0 sends every state to 0; u = 1 and u = 2
# otherwise move 0 to 1 or 2 and keep 1 and 2 where they are.
RULE = (
    (0, 1, 2),
    (0, 1, 1),
    (0, 2, 2),
)


class ThreeStateModel(ChainModel):
    """
    Reversible, non-monotone chain on {0, 1, 2}:

        K = [[eps, (1-eps)/2, (1-eps)/2],
             [eps, 1-eps,     0        ],
             [eps, 0,         1-eps    ]]

    CFTP coalesces over a window only if some innovation in it is 0, while
    FMMR started at 0 always imputes u = 0 and accepts after one step.
    """

    name = "three-state"

    def __init__(self, epsilon: float):
        if not 0 < epsilon < 1:
            raise InvalidInputError(f"epsilon must be in (0, 1), got {epsilon}")
        self.epsilon = float(epsilon)
        self._probs = np.array(
            [epsilon, (1.0 - epsilon) / 2.0, (1.0 - epsilon) / 2.0]
        )

    @property
    def enumerable(self) -> bool:
        return True

    def states(self) -> List[int]:
        return [0, 1, 2]

    def innovations(self) -> List[Tuple[int, float]]:
        return [(u, float(p)) for u, p in enumerate(self._probs)]

    def validate_state(self, x: int):
        if x not in (0, 1, 2):
            raise InvalidInputError(f"invalid three-state chain state: {x}")

    def validate_innovation(self, u: int):
        if u not in (0, 1, 2):
            raise InvalidInputError(f"invalid three-state chain innovation: {u}")

    def step(self, x: int, u: int) -> int:
        return RULE[x][u]

    def sample_innovation(self, rng: np.random.Generator) -> int:
        return int(rng.choice(3, p=self._probs))

    def parse_state(self, text: str) -> int:
        try:
            x = int(text)
        except ValueError:
            raise InvalidInputError(f"invalid three-state chain state: {text!r}") from None
        self.validate_state(x)
        return x

    def reverse_step(self, y: int, rng: np.random.Generator) -> int:
        # The chain is reversible: the reversed kernel is K itself.
        return self.step(y, self.sample_innovation(rng))


def three_state_chain(epsilon: float = 0.1) -> ThreeStateModel:
    return ThreeStateModel(epsilon)


register_chain("three-state", three_state_chain)
