import copy
import itertools
from typing import Any, Dict, Iterator, List, Tuple

from .errors import InvalidInputError
from .init_helper import get_logger

logger = get_logger()

# Special meta attributes in range based experiment configs.
ATTR_RANGE = "__range__"
ATTR_LIST = "__list__"


def full_range(a: int, b: int, s: int = 1) -> range:
    """
    Returns inclusive range: a <= x <= b, by step of s
    """
    return range(a, b + 1, s)


def _get_path(config: Dict[str, Any], path: str) -> Any:
    node = config
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            raise InvalidInputError(f"ranged field {path} not found in config")
        node = node[key]
    return node


def _set_path(config: Dict[str, Any], path: str, value: Any):
    *parents, leaf = path.split(".")
    node = config
    for key in parents:
        node = node[key]
    node[leaf] = value


def range_values(path: str, value: Any) -> List[Any]:
    """
    Values a ranged field takes: [min, max] or [min, max, step] of ints is an
    inclusive range, {"__list__": [...]} and any other list are taken
    element by element.
    """
    if isinstance(value, dict) and ATTR_LIST in value:
        values = list(value[ATTR_LIST])
    elif isinstance(value, list) and value and all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        if len(value) not in (2, 3):
            raise InvalidInputError(
                f"integer range for {path} must be [min, max] or [min, max, step]"
            )
        values = list(full_range(*value))
    elif isinstance(value, list):
        values = list(value)
    else:
        raise InvalidInputError(f"ranged field {path} must be a list, got {value!r}")
    if not values:
        raise InvalidInputError(f"ranged field {path} is empty")
    return values


def expand_ranges(config: Dict[str, Any]) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    Yields (k, config) for every combination of the fields listed under
    "__range__", in row-major order of the listed fields. Dotted names reach
    into nested dicts ("params.n"). Without "__range__" the config is yielded
    once.
    """
    paths = list(config.get(ATTR_RANGE, []))
    base = copy.deepcopy(config)
    base.pop(ATTR_RANGE, None)
    choices = [range_values(path, _get_path(base, path)) for path in paths]
    for k, combo in enumerate(itertools.product(*choices)):
        result = copy.deepcopy(base)
        for path, value in zip(paths, combo):
            _set_path(result, path, value)
        logger.debug(f"range config {k}: {dict(zip(paths, combo))}")
        yield k, result
