import abc
from typing import Any, Callable, Dict, Hashable, List, Sequence, Tuple

import numpy as np

from .errors import ImputationError, InvalidInputError, UnsupportedModelError
from .init_helper import get_logger

logger = get_logger()

State = Hashable
Innovation = Any


class ChainModel(metaclass=abc.ABCMeta):
    """
    A Markov chain written as a stochastic recursive sequence
    X_s = step(X_{s-1}, U_s) with i.i.d. innovations U_s.

    A model must implement `step` and `sample_innovation`. The samplers need
    more depending on the algorithm:

    - CFTP needs either an enumerable state space (`states`) or a partial
      order with extreme states (`leq`, `bottom`, `top`).
    - FMMR additionally needs `reverse_step` (a draw from the time-reversed
      kernel) and `impute` (a draw of U given an observed transition).
    - The exact oracles in `kernel` need `states` and `innovations`.

    Models are immutable after construction; all randomness comes from the
    numpy Generator passed in by the caller.
    """

    @classmethod
    def __subclasshook__(cls, subclass):
        return (
            hasattr(subclass, "step")
            and callable(subclass.step)
            and hasattr(subclass, "sample_innovation")
            and callable(subclass.sample_innovation)
            or NotImplemented
        )

    name: str = "chain"

    # Elementary updates per chain transition (a sweep counts every site).
    cost_per_step: int = 1

    @property
    def enumerable(self) -> bool:
        return False

    @property
    def has_order(self) -> bool:
        return False

    def states(self) -> List[State]:
        raise UnsupportedModelError(f"{self.name}: state space is not enumerable")

    def innovations(self) -> List[Tuple[Innovation, float]]:
        raise UnsupportedModelError(
            f"{self.name}: innovation space is not enumerable"
        )

    def validate_state(self, x: State):
        pass

    def validate_innovation(self, u: Innovation):
        pass

    @abc.abstractmethod
    def step(self, x: State, u: Innovation) -> State:
        raise NotImplementedError

    @abc.abstractmethod
    def sample_innovation(self, rng: np.random.Generator) -> Innovation:
        raise NotImplementedError

    def reverse_step(self, y: State, rng: np.random.Generator) -> State:
        raise UnsupportedModelError(f"{self.name}: no reverse sampler")

    def impute(
        self, x_prev: State, x_next: State, rng: np.random.Generator
    ) -> Innovation:
        # Conditional law of U given step(x_prev, U) = x_next, read off the
        # enumerated rule table.
        candidates = []
        weights = []
        for u, prob in self.innovations():
            if self.step(x_prev, u) == x_next:
                candidates.append(u)
                weights.append(prob)
        if not candidates:
            raise ImputationError(
                f"{self.name}: transition {x_prev} -> {x_next} is impossible"
            )
        weights = np.asarray(weights, dtype=float)
        idx = rng.choice(len(candidates), p=weights / weights.sum())
        return candidates[idx]

    def leq(self, x: State, y: State) -> bool:
        raise UnsupportedModelError(f"{self.name}: no partial order")

    def bottom(self) -> State:
        raise UnsupportedModelError(f"{self.name}: no minimum state")

    def top(self) -> State:
        raise UnsupportedModelError(f"{self.name}: no maximum state")

    def encode(self, x: State) -> str:
        """Canonical string form of a state, used in result files."""
        if isinstance(x, (tuple, list)):
            return "-".join(str(v) for v in x)
        return str(x)

    def parse_state(self, text: str) -> State:
        """Inverse of `encode` for command line and config input."""
        if text == "bottom":
            return self.bottom()
        if text == "top":
            return self.top()
        raise InvalidInputError(f"{self.name}: cannot parse state {text!r}")


def forward_step(model: ChainModel, x: State, u: Innovation) -> State:
    model.validate_state(x)
    model.validate_innovation(u)
    return model.step(x, u)


def impute_innovation(
    model: ChainModel, x_prev: State, x_next: State, rng: np.random.Generator
) -> Innovation:
    model.validate_state(x_prev)
    model.validate_state(x_next)
    u = model.impute(x_prev, x_next, rng)
    if model.step(x_prev, u) != x_next:
        raise ImputationError(
            f"{model.name}: imputed {u} does not reproduce {x_prev} -> {x_next}"
        )
    return u


def run_forward(model: ChainModel, x: State, us: Sequence[Innovation]) -> State:
    for u in us:
        x = model.step(x, u)
    return x


def register_chain(name: str, factory: Callable[..., ChainModel]):
    global chain_map
    logger.debug(f"register chain: {name}")
    if name not in chain_map:
        chain_map[name] = factory
    else:
        raise ValueError(f"Duplicate chain registration name: {name}")


def register_chains(chain_dict: Dict[str, Callable[..., ChainModel]]):
    for name, factory in chain_dict.items():
        register_chain(name, factory)


def make_chain(name: str, **params) -> ChainModel:
    if name not in chain_map:
        raise InvalidInputError(
            f"unknown chain: {name} (registered: {sorted(chain_map)})"
        )
    return chain_map[name](**params)


# Global chain registry, a mapping of name to a factory taking keyword params.
chain_map: Dict[str, Callable[..., ChainModel]] = {}
