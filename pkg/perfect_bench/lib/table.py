"""
Exact expected FMMR running times on move-to-front for the named weight
families, next to the first-order rate constant k_n. Pure sums, no
simulation: E[T_rev] = sum_{r=2..n} 1 / w^+_r and
E[T_id] = sum_{r=0..n-2} 1 / (1 - w^+_r).
"""
import csv
from typing import Any, Dict, List, Sequence

import numpy as np

from . import __format_version__
from ..chains.mtf import family_weights, parse_family, tail_sums
from .analytics import cftp_rate_shape, rate_constant
from .errors import InvalidInputError
from .init_helper import get_logger

logger = get_logger()

TABLE_COLUMNS = ("family", "params", "n", "mean_rev", "mean_id", "k_n", "ratio_rev")

DEFAULT_FAMILIES = ("uniform", "zipf", "gzl:0.5", "gzl:2", "power:1", "geometric:0.5")
DEFAULT_SIZES = (1000, 10000, 100000)


def expected_runtimes(family: str, params: Dict[str, float], n: int) -> Dict[str, float]:
    w = family_weights(family, n, **params)
    # Weight behind the first r records, computed without cancellation.
    behind = tail_sums(w)
    with np.errstate(divide="ignore", over="ignore"):
        mean_rev = float(np.sum(1.0 / np.cumsum(w)[1:]))
        mean_id = float(np.sum(1.0 / behind[: n - 1]))
    return {"mean_rev": mean_rev, "mean_id": mean_id}


def scaling_row(family_text: str, n: int) -> Dict[str, Any]:
    if n < 2:
        raise InvalidInputError(f"scaling table needs n >= 2, got {n}")
    family, params = parse_family(family_text)
    means = expected_runtimes(family, params, n)
    k_n = rate_constant(family, params, n)
    return {
        "family": family,
        "params": ";".join(f"{k}={v:g}" for k, v in sorted(params.items())),
        "n": n,
        "mean_rev": means["mean_rev"],
        "mean_id": means["mean_id"],
        "k_n": k_n,
        "ratio_rev": means["mean_rev"] / k_n,
    }


def scaling_table(
    families: Sequence[str] = DEFAULT_FAMILIES, sizes: Sequence[int] = DEFAULT_SIZES
) -> List[Dict[str, Any]]:
    rows = []
    for family_text in families:
        for n in sizes:
            row = scaling_row(family_text, n)
            logger.debug(
                f"{family_text} n={n}: E[T_rev]/k_n={row['ratio_rev']:.4f} "
                f"(CFTP shape {cftp_rate_shape(row['family'], parse_family(family_text)[1])})"
            )
            rows.append(row)
    return rows


def write_table_csv(rows: Sequence[Dict[str, Any]], out_stream):
    writer = csv.writer(out_stream, lineterminator="\n")
    writer.writerow(("format_version",) + TABLE_COLUMNS)
    for row in rows:
        writer.writerow([__format_version__] + [row[c] for c in TABLE_COLUMNS])
