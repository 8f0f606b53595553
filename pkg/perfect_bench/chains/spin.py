import enum
import itertools
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from ..lib.chain import ChainModel, register_chain
from ..lib.errors import InvalidInputError, UnsupportedModelError
from ..lib.init_helper import get_logger

logger = get_logger()

Spins = Tuple[int, ...]

MAX_ENUMERABLE_SITES = 6

# (h, beta, H): field on sites 1..n-1, coupling, field on site n.
DEFAULT_REGIME = (3.0, 6.0, 20.0)
DEFAULT_SITES = 10


@enum.unique
class SweepDirection(enum.Enum):
    LEFT_TO_RIGHT = "left"
    RIGHT_TO_LEFT = "right"

    def opposite(self) -> "SweepDirection":
        if self is SweepDirection.LEFT_TO_RIGHT:
            return SweepDirection.RIGHT_TO_LEFT
        return SweepDirection.LEFT_TO_RIGHT


class SpinChainModel(ChainModel):
    """
    Heat-bath Gibbs sampler for a ferromagnetic Ising chain with free
    boundary, one chain step being a full directional sweep. Site i turns +
    iff u_i < expit(2 (beta (s_{i-1} + s_{i+1}) + h_i)), missing neighbours
    counting 0. The reversed chain sweeps in the opposite direction.
    """

    name = "spin"

    def __init__(
        self,
        n_sites: int,
        beta: float,
        h: float,
        H: float,
        sweep_dir: SweepDirection = SweepDirection.LEFT_TO_RIGHT,
    ):
        if n_sites < 1:
            raise InvalidInputError(f"n_sites must be >= 1, got {n_sites}")
        if beta < 0 or h < 0 or H < 0:
            raise InvalidInputError("beta, h and H must be >= 0")
        self.n_sites = int(n_sites)
        self.beta = float(beta)
        self.h = float(h)
        self.H = float(H)
        self.sweep_dir = SweepDirection(sweep_dir)
        self.fields = np.full(self.n_sites, self.h)
        self.fields[-1] = self.H
        self.cost_per_step = self.n_sites

    @property
    def enumerable(self) -> bool:
        return self.n_sites <= MAX_ENUMERABLE_SITES

    @property
    def has_order(self) -> bool:
        return True

    def heat_bath_prob(self, i: int, left: int, right: int) -> float:
        return float(expit(2.0 * (self.beta * (left + right) + self.fields[i])))

    def _neighbours(self, s: Sequence[int], i: int) -> Tuple[int, int]:
        left = s[i - 1] if i > 0 else 0
        right = s[i + 1] if i < self.n_sites - 1 else 0
        return left, right

    def _order(self, direction: SweepDirection) -> Sequence[int]:
        if direction is SweepDirection.LEFT_TO_RIGHT:
            return range(self.n_sites)
        return range(self.n_sites - 1, -1, -1)

    def sweep(self, x: Spins, u: Sequence[float], direction: SweepDirection) -> Spins:
        s = list(x)
        for i in self._order(direction):
            left, right = self._neighbours(s, i)
            s[i] = 1 if u[i] < self.heat_bath_prob(i, left, right) else -1
        return tuple(s)

    def states(self) -> List[Spins]:
        if not self.enumerable:
            raise UnsupportedModelError(
                f"{self.n_sites} sites are too many to enumerate"
            )
        return list(itertools.product((-1, 1), repeat=self.n_sites))

    def _site_cells(self, i: int) -> List[Tuple[float, float]]:
        lefts = (-1, 1) if i > 0 else (0,)
        rights = (-1, 1) if i < self.n_sites - 1 else (0,)
        thresholds = sorted(
            {self.heat_bath_prob(i, l, r) for l in lefts for r in rights}
        )
        cuts = [0.0] + thresholds + [1.0]
        # (midpoint, width) of each cell between consecutive thresholds
        return [
            ((a + b) / 2.0, b - a) for a, b in zip(cuts[:-1], cuts[1:]) if b > a
        ]

    def innovations(self) -> List[Tuple[Tuple[float, ...], float]]:
        """
        Per-site uniforms discretized on the grid of heat-bath thresholds.
        Within a cell every comparison u_i < p has the same outcome, so the
        midpoints with the cell widths as masses reproduce the kernel.
        """
        if not self.enumerable:
            raise UnsupportedModelError(
                f"{self.n_sites} sites are too many to enumerate"
            )
        cells = [self._site_cells(i) for i in range(self.n_sites)]
        result = []
        for combo in itertools.product(*cells):
            u = tuple(mid for mid, _ in combo)
            prob = math.prod(width for _, width in combo)
            result.append((u, prob))
        return result

    def validate_state(self, x: Spins):
        if len(x) != self.n_sites or any(v not in (-1, 1) for v in x):
            raise InvalidInputError(f"invalid spin configuration: {x}")

    def validate_innovation(self, u: Sequence[float]):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_sites,) or np.any(u < 0) or np.any(u >= 1):
            raise InvalidInputError(f"innovation must be {self.n_sites} uniforms")

    def step(self, x: Spins, u: Sequence[float]) -> Spins:
        return self.sweep(x, u, self.sweep_dir)

    def sample_innovation(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.n_sites)

    def reverse_step(self, y: Spins, rng: np.random.Generator) -> Spins:
        return self.sweep(y, rng.random(self.n_sites), self.sweep_dir.opposite())

    def impute(self, x_prev: Spins, x_next: Spins, rng: np.random.Generator) -> np.ndarray:
        # Replay the sweep: sites already visited hold their new value.
        self.validate_state(x_prev)
        s = list(x_prev)
        u = np.empty(self.n_sites)
        for i in self._order(self.sweep_dir):
            left, right = self._neighbours(s, i)
            p = self.heat_bath_prob(i, left, right)
            r = rng.random()
            u[i] = p * r if x_next[i] == 1 else p + (1.0 - p) * r
            s[i] = x_next[i]
        return u

    def leq(self, x: Spins, y: Spins) -> bool:
        return all(a <= b for a, b in zip(x, y))

    def bottom(self) -> Spins:
        return (-1,) * self.n_sites

    def top(self) -> Spins:
        return (1,) * self.n_sites

    def encode(self, x: Spins) -> str:
        return "".join("+" if v == 1 else "-" for v in x)

    def parse_state(self, text: str) -> Spins:
        if text in ("bottom", "top"):
            return super().parse_state(text)
        x = tuple(1 if c == "+" else -1 if c == "-" else 0 for c in text)
        self.validate_state(x)
        return x

    def gibbs_pmf(self) -> Dict[Spins, float]:
        """pi(s) proportional to exp(beta sum s_i s_{i+1} + sum h_i s_i)."""
        energies = {}
        for s in self.states():
            a = np.asarray(s, dtype=float)
            energies[s] = self.beta * float(np.dot(a[:-1], a[1:])) + float(
                np.dot(self.fields, a)
            )
        top = max(energies.values())
        weights = {s: math.exp(e - top) for s, e in energies.items()}
        total = math.fsum(weights.values())
        return {s: v / total for s, v in weights.items()}


def spin_chain(
    n: int = DEFAULT_SITES,
    beta: float = DEFAULT_REGIME[1],
    h: float = DEFAULT_REGIME[0],
    H: float = DEFAULT_REGIME[2],
    sweep_dir: str = "left",
) -> SpinChainModel:
    return SpinChainModel(n, beta, h, H, SweepDirection(sweep_dir))


register_chain("spin", spin_chain)
