"""
Exact computations on small chains: the transition matrix built from the
forward rule and the innovation pmf, its time reversal, separation, and
exhaustive coalescence probabilities. These are the oracles the samplers
and the analytic running-time laws are checked against.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .chain import ChainModel, State
from .errors import (
    DegenerateStateError,
    InvalidInputError,
    ModelError,
    ResourceBudgetError,
    UnsupportedModelError,
)
from .init_helper import get_logger

logger = get_logger()

# Absolute tolerance for kernel identities; the matrices are tiny.
KERNEL_ATOL = 1e-10
STATIONARY_TOL = 1e-12
STATIONARY_MAX_ITER = 10**6
DEFAULT_ENUMERATION_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    states: Tuple[State, ...]
    entries: np.ndarray
    stationary: np.ndarray
    _index: Dict[State, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {x: i for i, x in enumerate(self.states)}
        )

    def index(self, x: State) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise InvalidInputError(f"unknown state: {x}") from None

    def prob(self, x: State, y: State) -> float:
        return float(self.entries[self.index(x), self.index(y)])

    def pi(self, x: State) -> float:
        return float(self.stationary[self.index(x)])


def stationary_distribution(entries: np.ndarray) -> np.ndarray:
    m = entries.shape[0]
    eigvals = np.linalg.eigvals(entries)
    on_circle = np.sum(np.abs(np.abs(eigvals) - 1.0) < KERNEL_ATOL)
    if on_circle > 1:
        raise ModelError(
            f"{on_circle} eigenvalues on the unit circle: chain is reducible or periodic"
        )

    # Direct solve of pi (K - I) = 0 with sum(pi) = 1, polished by fixed-point
    # iteration.
    a = entries.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pi = np.full(m, 1.0 / m)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()

    for it in range(STATIONARY_MAX_ITER):
        nxt = pi @ entries
        delta = np.max(np.abs(nxt - pi))
        pi = nxt
        if delta < STATIONARY_TOL:
            logger.debug(f"stationary vector converged after {it + 1} iterations")
            return pi / pi.sum()
    raise ModelError(
        f"stationary iteration did not converge in {STATIONARY_MAX_ITER} steps"
    )


def _transition_table(model: ChainModel) -> Tuple[List[State], np.ndarray, np.ndarray]:
    """
    Returns (states, next_index, probs) with next_index[k, i] the index of
    step(states[i], u_k) and probs[k] = P(U = u_k).
    """
    states = list(model.states())
    index = {x: i for i, x in enumerate(states)}
    innovations = model.innovations()
    next_index = np.empty((len(innovations), len(states)), dtype=np.int64)
    probs = np.empty(len(innovations))
    for k, (u, prob) in enumerate(innovations):
        probs[k] = prob
        for i, x in enumerate(states):
            next_index[k, i] = index[model.step(x, u)]
    return states, next_index, probs


def build_kernel(model: ChainModel) -> KernelMatrix:
    states, next_index, probs = _transition_table(model)
    m = len(states)
    entries = np.zeros((m, m))
    rows = np.arange(m)
    for k in range(len(probs)):
        np.add.at(entries, (rows, next_index[k]), probs[k])

    row_sums = entries.sum(axis=1)
    if np.max(np.abs(row_sums - 1.0)) > 1e-12:
        raise ModelError(
            f"{model.name}: innovation pmf does not sum to 1 (max row error "
            f"{np.max(np.abs(row_sums - 1.0)):.3e})"
        )
    return KernelMatrix(tuple(states), entries, stationary_distribution(entries))


def reverse_kernel(k: KernelMatrix) -> KernelMatrix:
    pi = k.stationary
    if np.any(pi <= 0.0):
        bad = [k.states[i] for i in np.flatnonzero(pi <= 0.0)]
        raise DegenerateStateError(f"zero stationary mass at {bad[:5]}")
    # K~(y, x) = pi(x) K(x, y) / pi(y)
    entries = k.entries.T * pi[np.newaxis, :] / pi[:, np.newaxis]
    return KernelMatrix(k.states, entries, pi.copy())


def separation(k: KernelMatrix, x: State, t: int) -> float:
    if t < 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    kt = np.linalg.matrix_power(k.entries, t)
    ratio = kt[k.index(x)] / k.stationary
    return float(np.clip(1.0 - ratio.min(), 0.0, 1.0))


def _image_law(
    model: ChainModel, t: int, budget: int
) -> Tuple[List[State], Dict[FrozenSet[int], float]]:
    """
    Law of the set of images at time 0 of all states started at time -t,
    i.e. the exhaustive enumeration of innovation sequences folded by the
    image set they produce.
    """
    if t < 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    states, next_index, probs = _transition_table(model)
    if len(probs) ** t > budget:
        raise ResourceBudgetError(
            f"{len(probs)}^{t} innovation sequences exceed the budget of {budget}"
        )
    law: Dict[FrozenSet[int], float] = {frozenset(range(len(states))): 1.0}
    for _ in range(t):
        nxt: Dict[FrozenSet[int], float] = {}
        for images, mass in law.items():
            members = np.fromiter(images, dtype=np.int64)
            for k in range(len(probs)):
                key = frozenset(next_index[k, members].tolist())
                nxt[key] = nxt.get(key, 0.0) + mass * probs[k]
        law = nxt
    return states, law


def exact_coalescence_prob(
    model: ChainModel,
    t: int,
    target: Optional[Any] = None,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> float:
    """
    Probability that all forward trajectories over a window of length t
    coalesce. `target` restricts the event: a state (coalescence to that
    state) or a set/frozenset of states (all trajectories end inside it).
    """
    states, law = _image_law(model, t, budget)
    if target is None:
        return float(sum(p for images, p in law.items() if len(images) == 1))
    index = {x: i for i, x in enumerate(states)}
    if isinstance(target, (set, frozenset)):
        allowed = {index[x] for x in target if x in index}
        return float(sum(p for images, p in law.items() if images <= allowed))
    if target not in index:
        raise InvalidInputError(f"unknown target state: {target}")
    goal = frozenset([index[target]])
    return float(law.get(goal, 0.0))


def cftp_conditional_prob(
    model: ChainModel,
    t: int,
    kernel: Optional[KernelMatrix] = None,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> Dict[State, float]:
    """
    P(coalescence to z) / pi(z) for every state z over a window of length t.
    This is both CFTP's conditional coalescence probability given output z
    and FMMR's acceptance probability when started at z.
    """
    kernel = kernel if kernel is not None else build_kernel(model)
    states, law = _image_law(model, t, budget)
    to_state = {x: 0.0 for x in states}
    for images, p in law.items():
        if len(images) == 1:
            (i,) = images
            to_state[states[i]] += p
    return {x: to_state[x] / kernel.pi(x) for x in states}


@dataclass
class MonotoneReport:
    checked_pairs: int = 0
    violations: List[Tuple[State, State, Any]] = field(default_factory=list)
    extreme_violations: List[State] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.extreme_violations


def check_monotone(model: ChainModel, max_violations: int = 100) -> MonotoneReport:
    if not model.has_order:
        raise UnsupportedModelError(f"{model.name}: no partial order to check")
    if not model.enumerable:
        raise UnsupportedModelError(f"{model.name}: not enumerable")
    states = model.states()
    innovations = [u for u, _ in model.innovations()]
    images = {x: [model.step(x, u) for u in innovations] for x in states}
    report = MonotoneReport()
    lo, hi = model.bottom(), model.top()
    for z in states:
        if not (model.leq(lo, z) and model.leq(z, hi)):
            report.extreme_violations.append(z)
    for x in states:
        for y in states:
            if x == y or not model.leq(x, y):
                continue
            report.checked_pairs += 1
            for u, fx, fy in zip(innovations, images[x], images[y]):
                if not model.leq(fx, fy):
                    report.violations.append((x, y, u))
                    if len(report.violations) >= max_violations:
                        return report
    logger.debug(
        f"{model.name}: monotone check over {report.checked_pairs} pairs, "
        f"{len(report.violations)} violations"
    )
    return report
