import importlib
import logging
import pkgutil
from typing import List, Union

LOGGER_NAME = "perfect_bench"

DEBUG_FORMAT = (
    "[%(asctime)s] %(process)d %(filename)s:%(lineno)-3d [%(levelname)s]: %(message)s"
)
INFO_FORMAT = "[%(asctime)s] %(process)d [%(levelname)s]: %(message)s"

_logger = None


def get_logger() -> logging.Logger:
    if _logger is None:
        return init_logging(logging.INFO)
    return _logger


def init_logging(log_level: Union[int, str]) -> logging.Logger:
    """
    (Re)configure the package logger. Records go to stderr, so results
    written to stdout stay clean. Accepts a level number or name.
    """
    global _logger
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())
        if not isinstance(log_level, int):
            log_level = logging.INFO
    _logger = logging.getLogger(LOGGER_NAME)
    _logger.setLevel(log_level)
    # Re-init replaces the handler instead of stacking another one.
    _logger.handlers.clear()
    _logger.propagate = False
    handler = logging.StreamHandler()
    handler.setLevel(log_level)
    handler.setFormatter(
        logging.Formatter(DEBUG_FORMAT if log_level <= logging.DEBUG else INFO_FORMAT)
    )
    _logger.addHandler(handler)
    return _logger


logger = get_logger()


def load_modules(package) -> List[str]:
    """
    Import every module of a package. Chain modules register themselves on
    import, so this is how the CLI discovers the available chains. Returns
    the names of the modules that loaded.
    """
    loaded = []
    for _, name, _ in pkgutil.iter_modules(package.__path__, package.__name__ + "."):
        logger.debug(f"loading module: {name}")
        try:
            importlib.import_module(name)
        except ModuleNotFoundError as error:
            logger.warning(f"skipping chain module {name}: {error}")
            continue
        loaded.append(name)
    return loaded
