"""
Perfect samplers over a ChainModel: vanilla coupling from the past, FMMR
(read-backward, impute, run forward) from a chosen start state, and the
set-coalescence variant of FMMR.

All samplers share the same conventions:

- the innovation driving the step from time -s to time -s+1 is stored at
  index s-1 of a list that only ever grows into the past;
- window t is a success when the forward trajectories started at time -t
  from every state (or from the extreme states only, for a monotone model)
  end in a single state at time 0 (or inside the target set);
- a window larger than max_window raises WindowTimeout and nothing of the
  run is returned.
"""
import enum
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np

from .chain import ChainModel, Innovation, State, impute_innovation
from .errors import InvalidInputError, UnsupportedModelError, WindowTimeout
from .init_helper import get_logger

logger = get_logger()


@enum.unique
class Algorithm(enum.Enum):
    CFTP = "cftp"
    FMMR = "fmmr"
    FMMR_SET = "fmmr_set"
    INCREMENTAL = "incremental"


@dataclass(frozen=True)
class RunRecord:
    algorithm: Algorithm
    window: int
    total_steps: int
    output: State
    seed: Optional[int] = None
    start_state: Optional[State] = None
    coalesced_to: Optional[State] = None

    def to_dict(self, encode: Callable[[State], str] = str) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "window": self.window,
            "total_steps": self.total_steps,
            "output": encode(self.output),
            "seed": self.seed,
            "start_state": None
            if self.start_state is None
            else encode(self.start_state),
            "coalesced_to": None
            if self.coalesced_to is None
            else encode(self.coalesced_to),
        }


def window_schedule(doubling: bool = False) -> Iterator[int]:
    t = 1
    while True:
        yield t
        t = 2 * t if doubling else t + 1


def _use_monotone(model: ChainModel, monotone: Optional[bool]) -> bool:
    if monotone is None:
        return model.has_order
    if monotone and not model.has_order:
        raise UnsupportedModelError(f"{model.name}: no partial order for the monotone path")
    return monotone


def _starting_states(model: ChainModel, monotone: bool) -> List[State]:
    if monotone:
        return [model.bottom(), model.top()]
    if not model.enumerable:
        raise UnsupportedModelError(
            f"{model.name}: needs an enumerable state space or a partial order"
        )
    return list(model.states())


def _forward_images(
    model: ChainModel, starts: Iterable[State], us: Iterable[Innovation]
) -> Tuple[Set[State], int]:
    """
    Runs coupled trajectories from `starts` through `us`, collapsing the ones
    that meet. Returns the set of images and the number of transitions run.
    """
    current = set(starts)
    steps = 0
    for u in us:
        steps += len(current)
        current = {model.step(x, u) for x in current}
    return current, steps


def cftp(
    model: ChainModel,
    max_window: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    doubling: bool = False,
    monotone: Optional[bool] = None,
    on_window: Optional[Callable[[int, List[Innovation]], None]] = None,
) -> RunRecord:
    """
    Coupling from the past. `on_window(t, innovations)` is called after the
    forward pass of every window with the innovations used so far,
    innovations[s-1] driving the step out of time -s.
    """
    starts = _starting_states(model, _use_monotone(model, monotone))
    past: List[Innovation] = []
    total = 0
    for t in window_schedule(doubling):
        if t > max_window:
            raise WindowTimeout(Algorithm.CFTP.value, max_window)
        while len(past) < t:
            past.append(model.sample_innovation(rng))
        images, steps = _forward_images(model, starts, reversed(past))
        total += steps * model.cost_per_step
        if on_window is not None:
            on_window(t, past)
        logger.debug(f"cftp window {t}: {len(images)} distinct images")
        if len(images) == 1:
            (out,) = images
            return RunRecord(
                Algorithm.CFTP, t, total, out, seed=seed, coalesced_to=out
            )


def fmmr(
    model: ChainModel,
    z0: State,
    max_window: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    doubling: bool = False,
    monotone: Optional[bool] = None,
    on_window: Optional[Callable[[int, List[State]], None]] = None,
) -> RunRecord:
    """
    FMMR from z0. The backward path X_0 = z0, X_{-1}, ... and the imputed
    innovations are extended as the window grows and never redrawn; the
    forward pass is rerun for every window. Returns X_{-T}.
    """
    model.validate_state(z0)
    starts = _starting_states(model, _use_monotone(model, monotone))
    path: List[State] = [z0]
    imputed: List[Innovation] = []
    total = 0
    for t in window_schedule(doubling):
        if t > max_window:
            raise WindowTimeout(Algorithm.FMMR.value, max_window)
        while len(path) <= t:
            later = path[-1]
            earlier = model.reverse_step(later, rng)
            imputed.append(impute_innovation(model, earlier, later, rng))
            path.append(earlier)
            total += model.cost_per_step
        images, steps = _forward_images(model, starts, reversed(imputed))
        total += steps * model.cost_per_step
        if on_window is not None:
            on_window(t, path)
        logger.debug(f"fmmr window {t}: {len(images)} distinct images")
        if len(images) == 1:
            (image,) = images
            return RunRecord(
                Algorithm.FMMR,
                t,
                total,
                path[t],
                seed=seed,
                start_state=z0,
                coalesced_to=image,
            )


def fmmr_set(
    model: ChainModel,
    member: Callable[[State], bool],
    cond_sampler: Callable[[np.random.Generator], State],
    max_window: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    down_set: bool = False,
    doubling: bool = False,
    monotone: Optional[bool] = None,
) -> RunRecord:
    """
    FMMR with coalescence into a set S: X_0 is drawn from pi(. | S) by
    `cond_sampler`, and window t succeeds when every forward trajectory from
    time -t lands in S. With `down_set` set on a monotone model only the
    trajectory from the top state is followed.

    Window 0 is tried first and succeeds exactly when S is everything.
    """
    use_monotone = _use_monotone(model, monotone)
    if down_set and use_monotone:
        starts = [model.top()]
    else:
        starts = _starting_states(model, False)

    x0 = cond_sampler(rng)
    model.validate_state(x0)
    if not member(x0):
        raise InvalidInputError(f"conditional sampler returned {x0} outside the set")

    if all(member(x) for x in starts):
        return RunRecord(Algorithm.FMMR_SET, 0, 0, x0, seed=seed, start_state=x0)

    path: List[State] = [x0]
    imputed: List[Innovation] = []
    total = 0
    for t in window_schedule(doubling):
        if t > max_window:
            raise WindowTimeout(Algorithm.FMMR_SET.value, max_window)
        while len(path) <= t:
            later = path[-1]
            earlier = model.reverse_step(later, rng)
            imputed.append(impute_innovation(model, earlier, later, rng))
            path.append(earlier)
            total += model.cost_per_step
        images, steps = _forward_images(model, starts, reversed(imputed))
        total += steps * model.cost_per_step
        logger.debug(f"fmmr_set window {t}: {len(images)} distinct images")
        if all(member(y) for y in images):
            return RunRecord(
                Algorithm.FMMR_SET, t, total, path[t], seed=seed, start_state=x0
            )


def incremental_record(w, rng: np.random.Generator, seed: Optional[int] = None) -> RunRecord:
    """Wraps the incremental move-to-front sampler: n - 1 reverse steps."""
    # local import: the chain package registers itself against this library
    from ..chains.mtf import incremental_sampler

    z = incremental_sampler(w, rng)
    return RunRecord(Algorithm.INCREMENTAL, w.n - 1, w.n - 1, z, seed=seed)
