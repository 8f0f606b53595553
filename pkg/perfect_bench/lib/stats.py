import collections
import heapq
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import InsufficientSamplesError, InvalidInputError
from .init_helper import get_logger

logger = get_logger()

DEFAULT_SIGNIFICANCE = 1e-3
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class StatReport:
    name: str
    statistic: float
    dof: int
    p_value: float
    significance: float
    anchor: str = ""
    # Checks that must reject their null (a known dependence).
    expect_reject: bool = False
    # Deterministic checks carry p = 1 or p = 0 and take no multiplicity correction.
    exact: bool = False

    @property
    def passed(self) -> bool:
        return self.p_value >= self.significance

    @property
    def ok(self) -> bool:
        return self.passed != self.expect_reject

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result["passed"] = self.passed
        result["ok"] = self.ok
        return result

    def __str__(self) -> str:
        status = "OK" if self.ok else "FAIL"
        expect = " (rejection expected)" if self.expect_reject else ""
        return (
            f"[{status}] {self.name}: stat={self.statistic:.4g} dof={self.dof} "
            f"p={self.p_value:.4g} sig={self.significance:.3g}{expect}"
            + (f"  <{self.anchor}>" if self.anchor else "")
        )


def exact_report(
    name: str,
    ok: bool,
    deviation: float = 0.0,
    anchor: str = "",
    significance: float = DEFAULT_SIGNIFICANCE,
) -> StatReport:
    """Report for a deterministic check: p-value 1 if it holds, 0 if not."""
    return StatReport(
        name, float(deviation), 0, 1.0 if ok else 0.0, significance, anchor, exact=True
    )


def pool_cells(
    observed: Sequence[float], expected: Sequence[float], min_expected: float = MIN_EXPECTED
) -> Tuple[np.ndarray, np.ndarray]:
    """Merges the two cells with least expected count until all reach min_expected."""
    heap = [(float(e), i, float(o)) for i, (o, e) in enumerate(zip(observed, expected))]
    heapq.heapify(heap)
    tiebreak = len(heap)
    while len(heap) > 1 and heap[0][0] < min_expected:
        e1, _, o1 = heapq.heappop(heap)
        e2, _, o2 = heapq.heappop(heap)
        heapq.heappush(heap, (e1 + e2, tiebreak, o1 + o2))
        tiebreak += 1
    if len(heap) < 2:
        raise InsufficientSamplesError(
            f"fewer than 2 cells with expected count >= {min_expected} after pooling"
        )
    return np.array([o for _, _, o in heap]), np.array([e for e, _, _ in heap])


def gof_test(
    samples: Sequence[Hashable],
    exact_pmf: Mapping[Hashable, float],
    significance: float = DEFAULT_SIGNIFICANCE,
    name: str = "gof",
    anchor: str = "",
    min_expected: float = MIN_EXPECTED,
) -> StatReport:
    """Pearson chi-square goodness of fit of samples against an exact pmf."""
    n = len(samples)
    if n == 0:
        raise InsufficientSamplesError("no samples")
    counts = collections.Counter(samples)
    outside = [x for x in counts if exact_pmf.get(x, 0.0) <= 0.0]
    if outside:
        logger.warning(f"{name}: {len(outside)} sampled values have zero probability")
        return StatReport(name, math.inf, 0, 0.0, significance, anchor)

    keys = list(exact_pmf)
    probs = np.array([exact_pmf[k] for k in keys], dtype=float)
    probs /= probs.sum()
    observed, expected = pool_cells(
        [counts.get(k, 0) for k in keys], n * probs, min_expected
    )
    result = stats.chisquare(observed, expected)
    report = StatReport(
        name,
        float(result.statistic),
        observed.size - 1,
        float(result.pvalue),
        significance,
        anchor,
    )
    logger.debug(str(report))
    return report


def _merge_rows(table: List[np.ndarray], i: int, j: int) -> List[np.ndarray]:
    lo, hi = min(i, j), max(i, j)
    merged = table[:lo] + [table[lo] + table[hi]] + table[lo + 1 : hi] + table[hi + 1 :]
    return merged


def pool_contingency(
    rows: List[np.ndarray], min_expected: float = MIN_EXPECTED
) -> np.ndarray:
    """
    Pools an ordered contingency table until every expected count under
    independence reaches min_expected. Rows are ordered (running times) and
    only merge with a neighbour; columns merge smallest first.
    """
    table = np.array(rows, dtype=float)
    while table.shape[0] > 1 and table.shape[1] > 1:
        row_tot, col_tot = table.sum(axis=1), table.sum(axis=0)
        n = table.sum()
        if row_tot.min() * col_tot.min() / n >= min_expected:
            break
        if row_tot.min() <= col_tot.min():
            i = int(np.argmin(row_tot))
            if i == 0:
                j = 1
            elif i == table.shape[0] - 1:
                j = i - 1
            else:
                j = i - 1 if row_tot[i - 1] <= row_tot[i + 1] else i + 1
            table = np.array(_merge_rows(list(table), i, j))
        else:
            a, b = np.argsort(col_tot, kind="stable")[:2]
            table[:, a] += table[:, b]
            table = np.delete(table, b, axis=1)
    return table


def _contingency_report(
    rows: List[np.ndarray],
    significance: float,
    name: str,
    anchor: str,
    expect_reject: bool,
    min_expected: float,
) -> StatReport:
    table = pool_contingency(rows, min_expected)
    if table.shape[0] == 1 or table.shape[1] == 1:
        # One level left: nothing can depend on it.
        return StatReport(name, 0.0, 0, 1.0, significance, anchor, expect_reject)
    statistic, p_value, dof, _ = stats.chi2_contingency(table, correction=False)
    report = StatReport(
        name,
        float(statistic),
        int(dof),
        float(p_value),
        significance,
        anchor,
        expect_reject,
    )
    logger.debug(f"{report} table={table.shape}")
    return report


def _column_order(values: Sequence[Hashable]) -> List[Hashable]:
    try:
        return sorted(set(values))
    except TypeError:
        return sorted(set(values), key=repr)


def independence_test(
    pairs: Sequence[Tuple[int, Hashable]],
    significance: float = DEFAULT_SIGNIFICANCE,
    name: str = "independence",
    anchor: str = "",
    expect_reject: bool = False,
    min_expected: float = MIN_EXPECTED,
) -> StatReport:
    """Chi-square test of independence of (running time, output) pairs."""
    if len(pairs) == 0:
        raise InsufficientSamplesError("no samples")
    times = sorted({t for t, _ in pairs})
    outputs = _column_order([x for _, x in pairs])
    row_index = {t: i for i, t in enumerate(times)}
    col_index = {x: j for j, x in enumerate(outputs)}
    table = np.zeros((len(times), len(outputs)))
    for t, x in pairs:
        table[row_index[t], col_index[x]] += 1
    return _contingency_report(
        list(table), significance, name, anchor, expect_reject, min_expected
    )


def two_sample_test(
    a: Sequence[int],
    b: Sequence[int],
    significance: float = DEFAULT_SIGNIFICANCE,
    name: str = "two-sample",
    anchor: str = "",
    min_expected: float = MIN_EXPECTED,
) -> StatReport:
    """Chi-square homogeneity test of two samples of running times."""
    if len(a) == 0 or len(b) == 0:
        raise InsufficientSamplesError("both samples must be non-empty")
    pairs = [(t, 0) for t in a] + [(t, 1) for t in b]
    return independence_test(
        pairs, significance, name, anchor, min_expected=min_expected
    )


def mean_test(
    samples: Sequence[float],
    expected_mean: float,
    n_se: float = 3.0,
    expected_var: Optional[float] = None,
    name: str = "mean",
    anchor: str = "",
) -> StatReport:
    """
    Two-sided z-test of the sample mean; passes when the mean lies within
    n_se standard errors of expected_mean.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    if n_se <= 0:
        raise InvalidInputError(f"n_se must be positive, got {n_se}")
    var = expected_var if expected_var is not None else float(np.var(x, ddof=1))
    se = math.sqrt(var / x.size)
    if se == 0.0:
        z = 0.0 if x.mean() == expected_mean else math.inf
    else:
        z = (float(x.mean()) - expected_mean) / se
    return StatReport(
        name,
        float(z),
        0,
        float(2.0 * stats.norm.sf(abs(z))),
        float(2.0 * stats.norm.sf(n_se)),
        anchor,
    )
