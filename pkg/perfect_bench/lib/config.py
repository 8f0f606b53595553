import copy
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .errors import InvalidInputError
from .init_helper import get_logger
from .iterator import expand_ranges
from .samplers import Algorithm

logger = get_logger()

OUTPUT_DIR_ENV = "PERFECT_BENCH_OUTPUT_DIR"
OUTPUT_FORMATS = ("csv", "json")


def get_run_id(name: str, k: int) -> str:
    return f"{name}:{k}"


def get_run_options() -> Dict[str, Any]:
    options = {
        "replications": 1000,
        "seed": 0,
        "max_window": 10**4,
        "doubling": False,
        "monotone": None,
        "format": "csv",
        "output_dir": os.environ.get(OUTPUT_DIR_ENV, "."),
        "workers": 1,
        "significance": 1e-3,
    }

    return options


@dataclass
class ExperimentSpec:
    """
    One experiment: a chain, a sampler, and how many seeded replications
    to run. `start` is the FMMR start state and `target` the set for
    set-coalescence FMMR, both in the chain's text form.
    """

    id: str
    chain: str
    algorithm: Algorithm
    params: Dict[str, Any] = field(default_factory=dict)
    replications: int = 1000
    seed: int = 0
    max_window: int = 10**4
    start: Optional[str] = None
    target: Optional[str] = None
    doubling: bool = False
    monotone: Optional[bool] = None
    output: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        if self.replications < 1:
            raise InvalidInputError(f"{self.id}: replications must be >= 1")
        if self.max_window < 1:
            raise InvalidInputError(f"{self.id}: max_window must be >= 1")
        if self.format not in OUTPUT_FORMATS:
            raise InvalidInputError(
                f"{self.id}: format must be one of {OUTPUT_FORMATS}, got {self.format}"
            )
        if self.algorithm is Algorithm.FMMR and self.start is None:
            raise InvalidInputError(f"{self.id}: fmmr needs a start state")
        if self.algorithm is Algorithm.FMMR_SET and self.target is None:
            raise InvalidInputError(f"{self.id}: fmmr_set needs a target set")

    @classmethod
    def from_dict(
        cls, id: str, info: Dict[str, Any], run_options: Dict[str, Any]
    ) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__) - {"id"}
        unknown = set(info) - known
        if unknown:
            raise InvalidInputError(f"{id}: unknown config keys {sorted(unknown)}")
        if "chain" not in info or "algorithm" not in info:
            raise InvalidInputError(f"{id}: chain and algorithm are required")
        values = {
            key: run_options[key]
            for key in ("replications", "seed", "max_window", "doubling", "monotone", "format")
            if key in run_options
        }
        values.update(copy.deepcopy(info))
        return cls(id=id, **values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "chain": self.chain,
            "algorithm": self.algorithm.value,
            "params": self.params,
            "replications": self.replications,
            "seed": self.seed,
            "max_window": self.max_window,
            "start": self.start,
            "target": self.target,
            "doubling": self.doubling,
            "monotone": self.monotone,
            "format": self.format,
        }

    def output_path(self, output_dir: str) -> str:
        if self.output:
            return self.output
        name = self.id.replace(":", "_")
        return os.path.join(output_dir, f"{name}.{self.format}")


class ExperimentConfig:
    """
    ExperimentConfig stores loaded experiment descriptions. Each top-level
    key names an experiment; fields listed under "__range__" are swept and
    every combination becomes one ExperimentSpec with id "<name>:<k>".
    """

    def __init__(self, run_options: Dict[str, Any]):
        self.run_options = run_options
        self._experiments: List[ExperimentSpec] = []
        self.experiment_config = None

    def _process_experiment_config(self):
        for name, info in self.experiment_config.items():
            if not isinstance(info, dict):
                raise InvalidInputError(f"experiment {name} must be an object")
            for k, variant in expand_ranges(info):
                spec = ExperimentSpec.from_dict(
                    get_run_id(name, k), variant, self.run_options
                )
                self._experiments.append(spec)
        logger.info(f"loaded {len(self._experiments)} experiment(s)")

    def load_json_file(self, config_file_name: str):
        with open(config_file_name) as config_file:
            self.experiment_config = json.load(config_file)
            self._process_experiment_config()

    def load_json(self, config_json: str):
        self.experiment_config = json.loads(config_json)
        self._process_experiment_config()

    def load(self, config: Dict[str, Any]):
        self.experiment_config = copy.deepcopy(config)
        self._process_experiment_config()

    @property
    def experiments(self) -> List[ExperimentSpec]:
        return self._experiments
