"""
The move-to-front (MTF) self-organizing list as a chain on permutations.

A permutation z is a tuple of the labels 1..n; z[0] is the front of the
list. Request probabilities are a WeightVector w with w_1 >= ... >= w_n > 0.
The stationary law is the law of drawing all n labels without replacement
with probabilities proportional to w, and the chain is monotone for the
weak Bruhat order with id as minimum and rev as maximum.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Sequence, Tuple, Union

import numpy as np

from ..lib.chain import ChainModel, register_chain
from ..lib.errors import (
    ImputationError,
    InvalidInputError,
    ResourceBudgetError,
    UnsupportedModelError,
)
from ..lib.init_helper import get_logger

logger = get_logger()

Permutation = Tuple[int, ...]

# Largest n for which S_n is enumerated.
MAX_ENUMERABLE_N = 8

WEIGHT_FAMILIES = ("uniform", "zipf", "gzl", "power", "geometric")


def validate_permutation(z: Sequence[int], n: int = None) -> Permutation:
    z = tuple(int(v) for v in z)
    if n is not None and len(z) != n:
        raise InvalidInputError(f"expected a permutation of size {n}, got {z}")
    if sorted(z) != list(range(1, len(z) + 1)):
        raise InvalidInputError(f"not a permutation of 1..{len(z)}: {z}")
    return z


def identity(n: int) -> Permutation:
    return tuple(range(1, n + 1))


def reverse(n: int) -> Permutation:
    return tuple(range(n, 0, -1))


def all_permutations(n: int) -> List[Permutation]:
    return list(itertools.permutations(range(1, n + 1)))


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInputError(f"weight vector must be 1-D and non-empty: {w}")
        if np.any(w <= 0.0):
            raise InvalidInputError("weights must be strictly positive")
        if np.any(np.diff(w) > 1e-15):
            raise InvalidInputError("weights must be sorted in decreasing order")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise InvalidInputError(f"weights sum to {math.fsum(w)!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.size

    def __getitem__(self, label: int) -> float:
        return float(self.w[label - 1])

    def prefix(self) -> np.ndarray:
        """w^+_r for r = 0..n."""
        return np.concatenate(([0.0], np.cumsum(self.w)))

    def restricted(self, k: int) -> "WeightVector":
        """Weights of records 1..k, renormalized."""
        head = self.w[:k]
        return WeightVector(head / math.fsum(head))

    def tolist(self) -> List[float]:
        return self.w.tolist()


def family_weights(family: str, n: int, **params) -> np.ndarray:
    """
    Raw weights of a named family, normalized exactly as in the scaling
    results. No positivity check: for large n the geometric tail underflows,
    which the scaling table handles as an infinite worst-case mean.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    i = np.arange(1, n + 1, dtype=float)
    if family == "uniform":
        return np.full(n, 1.0 / n)
    if family == "zipf":
        return 1.0 / (i * np.sum(1.0 / i))
    if family == "gzl":
        alpha = float(params.get("alpha", 1.0))
        if alpha <= 0:
            raise InvalidInputError(f"gzl needs alpha > 0, got {alpha}")
        return i ** -alpha / np.sum(i ** -alpha)
    if family == "power":
        s = float(params.get("s", 1.0))
        if s <= 0:
            raise InvalidInputError(f"power needs s > 0, got {s}")
        return (n - i + 1) ** s / np.sum(i**s)
    if family == "geometric":
        theta = float(params.get("theta", 0.5))
        if not 0 < theta < 1:
            raise InvalidInputError(f"geometric needs 0 < theta < 1, got {theta}")
        w = (1.0 - theta) * theta ** (i - 1)
        w[-1] = theta ** (n - 1)
        # For theta > 1/2 the last weight exceeds the one before it; relabel
        # so the vector stays sorted.
        return np.sort(w)[::-1].copy()
    raise InvalidInputError(
        f"unknown weight family: {family} (expected one of {WEIGHT_FAMILIES})"
    )


def weight_family(family: str, n: int, **params) -> WeightVector:
    return WeightVector(family_weights(family, n, **params))


FAMILY_PARAM = {"gzl": "alpha", "power": "s", "geometric": "theta"}


def parse_family(text: str) -> Tuple[str, Dict[str, float]]:
    """Split "family[:param]" into the family name and its keyword params."""
    family, _, arg = text.strip().partition(":")
    if family not in WEIGHT_FAMILIES:
        raise InvalidInputError(
            f"unknown weight family: {family} (expected one of {WEIGHT_FAMILIES})"
        )
    params = {}
    if arg:
        if family not in FAMILY_PARAM:
            raise InvalidInputError(f"weight family {family} takes no parameter")
        params[FAMILY_PARAM[family]] = float(arg)
    return family, params


def parse_weights(text: str, n: int = None) -> WeightVector:
    """
    Parse "family[:param]" (uniform, zipf, gzl:<alpha>, power:<s>,
    geometric:<theta>) or an explicit comma separated list of weights.
    """
    text = text.strip()
    if "," in text or text[:1].isdigit():
        values = np.array([float(v) for v in text.split(",")])
        if n is not None and values.size != n:
            raise InvalidInputError(f"expected {n} weights, got {values.size}")
        return WeightVector(values)
    family, params = parse_family(text)
    if n is None:
        raise InvalidInputError(f"weight family {family} needs n")
    return weight_family(family, n, **params)


def tail_sums(y: np.ndarray) -> np.ndarray:
    # tails[r] = y[r] + ... + y[-1], summed from the small end.
    return np.cumsum(y[::-1])[::-1]


def log_stationary_prob(w: WeightVector, z: Permutation) -> float:
    if len(z) != w.n:
        raise InvalidInputError(f"dimension mismatch: |z|={len(z)}, |w|={w.n}")
    y = w.w[np.asarray(z, dtype=np.int64) - 1]
    return float(np.sum(np.log(y)) - np.sum(np.log(tail_sums(y))))


def stationary_prob(w: WeightVector, z: Permutation) -> float:
    """pi(z) = prod_r y_r / (y_r + ... + y_n), y_r = w_{z_r}."""
    return math.exp(log_stationary_prob(w, z))


def stationary_pmf(w: WeightVector) -> Dict[Permutation, float]:
    if w.n > MAX_ENUMERABLE_N:
        raise UnsupportedModelError(f"S_{w.n} is too large to enumerate")
    return {z: stationary_prob(w, z) for z in all_permutations(w.n)}


def move_to_front(z: Permutation, i: int) -> Permutation:
    if not 1 <= i <= len(z):
        raise InvalidInputError(f"label {i} out of range 1..{len(z)}")
    if z[0] == i:
        return z
    pos = z.index(i)
    return (i,) + z[:pos] + z[pos + 1 :]


def reverse_step_probs(w: WeightVector, y: Permutation) -> np.ndarray:
    """
    Law of the slot r (0-based) the front record of y came from. The
    predecessors of y are y with its front record i reinserted at slot r,
    chosen with probability w_i pi(x_r) / pi(y), which factors into a
    sequence of stop/continue decisions with stop probability w_i / T_r,
    T_r = w_i + (weight of the records behind slot r).
    """
    wi = w[y[0]]
    rest = w.w[np.asarray(y[1:], dtype=np.int64) - 1]
    tails = np.concatenate((tail_sums(rest), [0.0]))
    totals = wi + tails
    stop = wi / totals
    cont = tails / totals
    reach = np.concatenate(([1.0], np.cumprod(cont[:-1])))
    return stop * reach


def mtf_reverse_step(
    w: WeightVector, y: Permutation, rng: np.random.Generator
) -> Permutation:
    probs = reverse_step_probs(w, y)
    cdf = np.cumsum(probs)
    r = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    r = min(r, len(y) - 1)
    rest = y[1:]
    return rest[:r] + (y[0],) + rest[r:]


def mtf_impute(x_prev: Permutation, x_next: Permutation) -> int:
    # move_i(x) = x only for i = front(x), so the request is the new front.
    i = x_next[0]
    if move_to_front(x_prev, i) != x_next:
        raise ImputationError(f"{x_prev} -> {x_next} is not one MTF step")
    return i


def inversions(z: Permutation) -> FrozenSet[Tuple[int, int]]:
    """Pairs (a, b), a < b, with b listed before a."""
    result = []
    for pos, b in enumerate(z):
        for a in z[pos + 1 :]:
            if a < b:
                result.append((a, b))
    return frozenset(result)


def weak_bruhat_leq(z: Permutation, z2: Permutation) -> bool:
    if len(z) != len(z2):
        raise InvalidInputError("permutations of different sizes")
    return inversions(z) <= inversions(z2)


def _rank_matrix(z: Permutation) -> np.ndarray:
    # R[a, b] = #{r <= a : z_r >= b}
    n = len(z)
    occupancy = np.zeros((n, n), dtype=np.int64)
    occupancy[np.arange(n), np.asarray(z) - 1] = 1
    at_least = np.cumsum(occupancy[:, ::-1], axis=1)[:, ::-1]
    return np.cumsum(at_least, axis=0)


def bruhat_leq(z: Permutation, z2: Permutation) -> bool:
    if len(z) != len(z2):
        raise InvalidInputError("permutations of different sizes")
    return bool(np.all(_rank_matrix(z) <= _rank_matrix(z2)))


def bruhat_leq_by_transpositions(z: Permutation, z2: Permutation) -> bool:
    """
    Bruhat order straight from its definition: z2 is reachable from z by
    transpositions that each put a pair of records out of natural order.
    Exponential; used to validate `bruhat_leq` on small n.
    """
    if len(z) != len(z2):
        raise InvalidInputError("permutations of different sizes")
    seen = {z}
    frontier = [z]
    while frontier:
        cur = frontier.pop()
        if cur == z2:
            return True
        for r, s in itertools.combinations(range(len(cur)), 2):
            if cur[r] < cur[s]:
                nxt = list(cur)
                nxt[r], nxt[s] = nxt[s], nxt[r]
                nxt = tuple(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
    return False


def incremental_sampler(
    w: WeightVector,
    rng: np.random.Generator,
    reverse_step: Callable[..., Permutation] = None,
) -> Permutation:
    """
    Exact draw from pi in exactly n - 1 reverse MTF steps. Stage k holds a
    draw from pi restricted to records 1..k; putting record k+1 in front is
    an exact draw given that k+1 leads, and one reverse step under the
    weights of 1..k+1 is then accepted by set coalescence at once, since
    requesting k+1 sends every list into the set with k+1 in front.
    """
    reverse_step = reverse_step or mtf_reverse_step
    z: Permutation = (1,)
    for k in range(1, w.n):
        z = reverse_step(w.restricted(k + 1), (k + 1,) + z, rng)
    return z


class FrontIs:
    """Membership in S_k = {z : z_1 = k}."""

    def __init__(self, label: int):
        self.label = label

    def __call__(self, z: Permutation) -> bool:
        return z[0] == self.label


class PrincipalDownSet:
    """Membership in {z : z <= top} for the weak Bruhat order."""

    def __init__(self, top: Permutation):
        self.top = validate_permutation(top)
        self._inversions = inversions(self.top)

    def __call__(self, z: Permutation) -> bool:
        return inversions(z) <= self._inversions


class ConditionalSampler:
    """Exact draws from pi(. | S) by rejection from the incremental sampler."""

    def __init__(
        self,
        w: WeightVector,
        member: Callable[[Permutation], bool],
        max_tries: int = 10**6,
    ):
        self.w = w
        self.member = member
        self.max_tries = max_tries

    def __call__(self, rng: np.random.Generator) -> Permutation:
        for _ in range(self.max_tries):
            z = incremental_sampler(self.w, rng)
            if self.member(z):
                return z
        raise ResourceBudgetError(
            f"no draw inside the target set after {self.max_tries} tries"
        )


def conditional_sampler(
    w: WeightVector,
    member: Callable[[Permutation], bool],
    max_tries: int = 10**6,
) -> ConditionalSampler:
    """
    Picklable sampler of pi(. | S) for S = {z : member(z)}. Each draw costs
    the expected 1 / pi(S) incremental runs, no kernel is built.
    """
    if max_tries < 1:
        raise InvalidInputError(f"max_tries must be >= 1, got {max_tries}")
    return ConditionalSampler(w, member, max_tries)


class MTFModel(ChainModel):
    name = "mtf"

    def __init__(self, weights: WeightVector):
        self.weights = weights
        self.n = weights.n
        self._cdf = np.cumsum(weights.w)

    @property
    def enumerable(self) -> bool:
        return self.n <= MAX_ENUMERABLE_N

    @property
    def has_order(self) -> bool:
        return True

    def states(self) -> List[Permutation]:
        if not self.enumerable:
            raise UnsupportedModelError(f"S_{self.n} is too large to enumerate")
        return all_permutations(self.n)

    def innovations(self) -> List[Tuple[int, float]]:
        return [(i, self.weights[i]) for i in range(1, self.n + 1)]

    def validate_state(self, x: Permutation):
        validate_permutation(x, self.n)

    def validate_innovation(self, u: int):
        if not (isinstance(u, (int, np.integer)) and 1 <= u <= self.n):
            raise InvalidInputError(f"request {u} out of range 1..{self.n}")

    def step(self, x: Permutation, u: int) -> Permutation:
        return move_to_front(x, u)

    def sample_innovation(self, rng: np.random.Generator) -> int:
        i = int(np.searchsorted(self._cdf, rng.random() * self._cdf[-1], side="right"))
        return min(i, self.n - 1) + 1

    def reverse_step(self, y: Permutation, rng: np.random.Generator) -> Permutation:
        return mtf_reverse_step(self.weights, y, rng)

    def impute(self, x_prev: Permutation, x_next: Permutation, rng=None) -> int:
        return mtf_impute(x_prev, x_next)

    def leq(self, x: Permutation, y: Permutation) -> bool:
        return weak_bruhat_leq(x, y)

    def bottom(self) -> Permutation:
        return identity(self.n)

    def top(self) -> Permutation:
        return reverse(self.n)

    def stationary_prob(self, z: Permutation) -> float:
        return stationary_prob(self.weights, z)

    def parse_state(self, text: str) -> Permutation:
        if text in ("bottom", "top"):
            return super().parse_state(text)
        return parse_start(text.replace("-", ","), self.n)


def mtf_chain(
    n: int = None, weights: Union[str, Sequence[float], WeightVector] = "uniform"
) -> MTFModel:
    if isinstance(weights, WeightVector):
        w = weights
    elif isinstance(weights, str):
        w = parse_weights(weights, n)
    else:
        w = WeightVector(np.asarray(weights, dtype=float))
    if n is not None and w.n != n:
        raise InvalidInputError(f"n={n} but {w.n} weights given")
    return MTFModel(w)


def parse_start(text: str, n: int) -> Permutation:
    """`id`, `rev`, or an explicit permutation like 2,1,3."""
    if text == "id":
        return identity(n)
    if text == "rev":
        return reverse(n)
    return validate_permutation([int(v) for v in text.split(",")], n)


register_chain("mtf", mtf_chain)
