"""
Seeded, replicated sampler runs and their result files.

Replication i of an experiment with master seed s runs on
numpy.random.default_rng(replication_seed(s, i)), where the replication
seed is the first 64-bit word of SeedSequence([s, i]). The seed depends only
on (s, i), so results do not depend on worker count or scheduling, and any
single replication can be rerun from the seed stored in its record.
"""
import csv
import json
import os
import signal
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __format_version__
from .chain import ChainModel, State, make_chain
from .config import ExperimentSpec
from .errors import InvalidInputError, UnsupportedModelError, WindowTimeout
from .init_helper import get_logger
from .kernel import build_kernel
from .samplers import Algorithm, RunRecord, cftp, fmmr, fmmr_set, incremental_record
from .timer import Timer

logger = get_logger()

QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)

CSV_COLUMNS = (
    "format_version",
    "experiment",
    "index",
    "algorithm",
    "window",
    "total_steps",
    "output",
    "seed",
    "start_state",
    "coalesced_to",
    "timed_out",
)


def replication_seed(master_seed: int, index: int) -> int:
    seq = np.random.SeedSequence([master_seed, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class AllStates:
    def __call__(self, x: State) -> bool:
        return True


class StationarySampler:
    """Exact draws from pi of an enumerable chain, via its kernel."""

    def __init__(self, model: ChainModel):
        kernel = build_kernel(model)
        self.states = list(kernel.states)
        self.pi = kernel.stationary

    def __call__(self, rng: np.random.Generator) -> State:
        return self.states[int(rng.choice(len(self.states), p=self.pi))]


def make_target(
    model: ChainModel, text: str
) -> Tuple[Callable[[State], bool], Callable[[np.random.Generator], State], bool]:
    """
    Returns (member, cond_sampler, down_set) for a target set given as
    "all", "downset:<state>" or "front:<label>" (the last two for MTF).
    """
    from ..chains.mtf import FrontIs, MTFModel, PrincipalDownSet, conditional_sampler

    is_mtf = isinstance(model, MTFModel)
    if text == "all":
        member = AllStates()
        # MTF draws pi exactly in O(n^2) per draw; the dense kernel is for toy chains.
        if is_mtf:
            return member, conditional_sampler(model.weights, member), True
        return member, StationarySampler(model), True
    kind, _, arg = text.partition(":")
    if not is_mtf:
        raise UnsupportedModelError(f"{model.name}: target set {text} needs the mtf chain")
    if kind == "downset":
        member = PrincipalDownSet(model.parse_state(arg))
        return member, conditional_sampler(model.weights, member), True
    if kind == "front":
        member = FrontIs(int(arg))
        if not 1 <= member.label <= model.n:
            raise InvalidInputError(f"front label {arg} out of range 1..{model.n}")
        return member, conditional_sampler(model.weights, member), False
    raise InvalidInputError(f"unknown target set: {text}")


class Replication:
    """One seeded sampler run; picklable so it can be shipped to a worker pool."""

    def __init__(self, spec: ExperimentSpec, model: ChainModel):
        self.spec = spec
        self.model = model
        self.start = None
        self.target = None
        if spec.algorithm is Algorithm.FMMR:
            self.start = model.parse_state(spec.start)
        elif spec.algorithm is Algorithm.FMMR_SET:
            self.target = make_target(model, spec.target)
        elif spec.algorithm is Algorithm.INCREMENTAL and not hasattr(model, "weights"):
            raise UnsupportedModelError(f"{model.name}: incremental sampler needs mtf")

    def __call__(self, index: int) -> Optional[RunRecord]:
        spec = self.spec
        seed = replication_seed(spec.seed, index)
        rng = np.random.default_rng(seed)
        options = {"seed": seed, "doubling": spec.doubling, "monotone": spec.monotone}
        try:
            if spec.algorithm is Algorithm.CFTP:
                return cftp(self.model, spec.max_window, rng, **options)
            if spec.algorithm is Algorithm.FMMR:
                return fmmr(self.model, self.start, spec.max_window, rng, **options)
            if spec.algorithm is Algorithm.FMMR_SET:
                member, cond_sampler, down_set = self.target
                return fmmr_set(
                    self.model,
                    member,
                    cond_sampler,
                    spec.max_window,
                    rng,
                    down_set=down_set,
                    **options,
                )
            return incremental_record(self.model.weights, rng, seed=seed)
        except WindowTimeout as e:
            logger.debug(f"{spec.id} replication {index}: {e}")
            return None


def _ignore_sigint():
    # Workers leave KeyboardInterrupt to the parent.
    signal.signal(signal.SIGINT, signal.SIG_IGN)


def summarize(values: Sequence[float]) -> Dict[str, float]:
    if len(values) == 0:
        return {}
    x = np.asarray(values, dtype=float)
    result = {"mean": float(x.mean()), "min": float(x.min()), "max": float(x.max())}
    for q, v in zip(QUANTILES, np.quantile(x, QUANTILES)):
        result[f"q{int(round(q * 100)):02d}"] = float(v)
    result["median"] = result["q50"]
    return result


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    model: ChainModel
    # One entry per replication in index order; None marks a timeout.
    records: List[Optional[RunRecord]]

    @property
    def completed(self) -> List[RunRecord]:
        return [r for r in self.records if r is not None]

    @property
    def timeouts(self) -> int:
        return sum(1 for r in self.records if r is None)

    @property
    def timeout_fraction(self) -> float:
        return self.timeouts / len(self.records)

    def summary(self) -> Dict[str, Any]:
        done = self.completed
        return {
            "replications": len(self.records),
            "completed": len(done),
            "timeouts": self.timeouts,
            "timeout_fraction": self.timeout_fraction,
            "window": summarize([r.window for r in done]),
            "total_steps": summarize([r.total_steps for r in done]),
        }


def run_experiment(
    spec: ExperimentSpec, workers: int = 1, model: Optional[ChainModel] = None
) -> ExperimentResult:
    model = model if model is not None else make_chain(spec.chain, **spec.params)
    task = Replication(spec, model)
    logger.info(
        f"running {spec.id}: {spec.algorithm.value} on {model.name}, "
        f"{spec.replications} replications"
    )
    with Timer() as timer:
        indices = range(spec.replications)
        if workers <= 1:
            records = [task(i) for i in indices]
        else:
            chunksize = max(1, spec.replications // (4 * workers))
            with Pool(workers, _ignore_sigint) as pool:
                try:
                    records = list(pool.imap(task, indices, chunksize))
                except KeyboardInterrupt:
                    pool.terminate()
                    pool.join()
                    logger.error(f"{spec.id} interrupted")
                    raise
    result = ExperimentResult(spec, model, records)
    logger.info(
        f"{spec.id}: {len(result.completed)} completed, timeout fraction "
        f"{result.timeout_fraction:.4f}, {timer.elapsed_time_sec():.2f} s"
    )
    return result


def _record_row(result: ExperimentResult, index: int, record: Optional[RunRecord]) -> List[Any]:
    if record is None:
        return [__format_version__, result.spec.id, index] + [""] * 7 + [1]
    d = record.to_dict(result.model.encode)
    return [__format_version__, result.spec.id, index] + [
        "" if d[key] is None else d[key]
        for key in (
            "algorithm",
            "window",
            "total_steps",
            "output",
            "seed",
            "start_state",
            "coalesced_to",
        )
    ] + [0]


def write_csv(result: ExperimentResult, out_stream):
    writer = csv.writer(out_stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for index, record in enumerate(result.records):
        writer.writerow(_record_row(result, index, record))


def write_json(result: ExperimentResult, out_stream):
    doc = {
        "format_version": __format_version__,
        "experiment": result.spec.to_dict(),
        "summary": result.summary(),
        "records": [
            None if r is None else r.to_dict(result.model.encode)
            for r in result.records
        ],
    }
    json.dump(doc, out_stream, indent=2, sort_keys=True)
    out_stream.write("\n")


def write_results(result: ExperimentResult, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as out_file:
        if result.spec.format == "json":
            write_json(result, out_file)
        else:
            write_csv(result, out_file)
    logger.info(f"{result.spec.id}: results written to {path}")
