"""
Exact running-time laws for FMMR and CFTP on the move-to-front chain.

FMMR started at z needs a number of steps distributed as a sum of
independent Geometric(1 - y^+_r), r = 0..n-2, where y_r = w_{z_r} and y^+_r
is the total weight of the first r records of z. Each Geometric(p) lives on
{1, 2, ...} with mass p (1 - p)^(k-1) at k. The CFTP law is the mixture of
these laws over z drawn from the stationary distribution.
"""
import functools
import math
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from ..chains.mtf import (
    Permutation,
    WeightVector,
    all_permutations,
    stationary_prob,
    tail_sums,
    validate_permutation,
)
from .errors import InconclusiveError, InvalidInputError, ResourceBudgetError
from .init_helper import get_logger

logger = get_logger()

DEFAULT_TAIL_TOL = 1e-12
# Largest tail mass allowed at the horizon of a stochastic order decision.
ORDER_TAIL_TOL = 1e-10
ORDER_ATOL = 1e-12
MAX_SUPPORT = 10**7
CACHE_SIZE = 64
CACHE_MAX_LENGTH = 2**16
MAX_CFTP_N = 6


@dataclass(frozen=True)
class GeomConvolution:
    params: Tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        for p in params:
            if not 0.0 < p <= 1.0:
                raise InvalidInputError(f"geometric parameter {p} not in (0, 1]")
        object.__setattr__(self, "params", params)

    @property
    def m(self) -> int:
        return len(self.params)


@dataclass(frozen=True, eq=False)
class TruncatedPmf:
    """pmf[k] = P(T = k) for k = 0..len(pmf)-1; tail = P(T >= len(pmf))."""

    pmf: np.ndarray
    tail: float

    def __post_init__(self):
        self.pmf.setflags(write=False)

    @property
    def horizon(self) -> int:
        return self.pmf.size - 1

    def at(self, k: int) -> float:
        if k < 0 or k > self.horizon:
            return 0.0 if k < 0 else math.nan
        return float(self.pmf[k])

    def cdf_array(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def cdf(self, k: int) -> float:
        if k < 0:
            return 0.0
        return float(np.sum(self.pmf[: k + 1]))

    def tail_after(self, k: int) -> float:
        """P(T > k), exact as long as k <= horizon."""
        return self.tail + float(np.sum(self.pmf[k + 1 :]))

    def mean(self) -> float:
        return float(np.dot(np.arange(self.pmf.size), self.pmf))


def _initial_length(params: Tuple[float, ...]) -> int:
    p = np.asarray(params)
    mean = np.sum(1.0 / p)
    sd = math.sqrt(np.sum((1.0 - p) / p**2))
    return int(mean + 12.0 * sd + len(params) + 16)


def _convolve_geometrics(params: Tuple[float, ...], length: int) -> np.ndarray:
    # f_new[k] = p f_old[k-1] + (1 - p) f_new[k-1]: one geometric per pass.
    f = np.zeros(length)
    f[0] = 1.0
    for p in params:
        f = lfilter([0.0, p], [1.0, -(1.0 - p)], f)
    f.setflags(write=False)
    return f


_convolve_cached = functools.lru_cache(maxsize=CACHE_SIZE)(_convolve_geometrics)


def _convolve(params: Tuple[float, ...], length: int) -> np.ndarray:
    # Long supports are recomputed; at most CACHE_SIZE short arrays stay alive.
    if length <= CACHE_MAX_LENGTH:
        return _convolve_cached(params, length)
    return _convolve_geometrics(params, length)


def conv_pmf_array(
    d: GeomConvolution,
    tail_tol: float = DEFAULT_TAIL_TOL,
    min_length: int = 0,
    max_support: int = MAX_SUPPORT,
) -> TruncatedPmf:
    """Exact pmf of the convolution, truncated once the tail is below tail_tol."""
    length = max(_initial_length(d.params), min_length)
    while True:
        if length > max_support:
            raise ResourceBudgetError(
                f"pmf support beyond {max_support} needed for tail {tail_tol}"
            )
        f = _convolve(d.params, length)
        tail = max(0.0, 1.0 - math.fsum(f))
        if tail < tail_tol:
            return TruncatedPmf(f.copy(), tail)
        length *= 2


def conv_pmf(d: GeomConvolution, k: int, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    if k < 0:
        raise InvalidInputError(f"k must be >= 0, got {k}")
    return conv_pmf_array(d, tail_tol, min_length=k + 1).at(k)


def conv_cdf(d: GeomConvolution, k: int, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    if k < 0:
        raise InvalidInputError(f"k must be >= 0, got {k}")
    return min(1.0, conv_pmf_array(d, tail_tol, min_length=k + 1).cdf(k))


def conv_mean(d: GeomConvolution) -> float:
    return float(np.sum(1.0 / np.asarray(d.params))) if d.m else 0.0


def conv_var(d: GeomConvolution) -> float:
    if not d.m:
        return 0.0
    p = np.asarray(d.params)
    return float(np.sum((1.0 - p) / p**2))


def fmmr_runtime_law(w: WeightVector, z: Permutation) -> GeomConvolution:
    if len(z) != w.n:
        raise InvalidInputError(f"dimension mismatch: |z|={len(z)}, |w|={w.n}")
    z = validate_permutation(z, w.n)
    y = w.w[np.asarray(z, dtype=np.int64) - 1]
    # 1 - y^+_r is the weight still behind the first r records.
    behind = tail_sums(y)
    return GeomConvolution(tuple(np.minimum(behind[: w.n - 1], 1.0).tolist()))


def cftp_runtime_law(w: WeightVector, horizon: int) -> TruncatedPmf:
    """sum_z pi(z) * law(T_z), truncated at `horizon`."""
    if w.n > MAX_CFTP_N:
        raise InvalidInputError(f"CFTP mixture enumerates S_n; n={w.n} > {MAX_CFTP_N}")
    if horizon < 0:
        raise InvalidInputError(f"horizon must be >= 0, got {horizon}")
    mixture = np.zeros(horizon + 1)
    for z in all_permutations(w.n):
        law = conv_pmf_array(fmmr_runtime_law(w, z), min_length=horizon + 1)
        mixture += stationary_prob(w, z) * law.pmf[: horizon + 1]
    return TruncatedPmf(mixture, max(0.0, 1.0 - math.fsum(mixture)))


Law = Union[GeomConvolution, TruncatedPmf]


def _as_pmf(law: Law, length: int) -> TruncatedPmf:
    if isinstance(law, GeomConvolution):
        return conv_pmf_array(law, min_length=length)
    return law


def _natural_horizon(law: Law) -> int:
    if isinstance(law, GeomConvolution):
        return conv_pmf_array(law).horizon
    return law.horizon


def _cdfs_on(a: Law, b: Law, horizon: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    if horizon is None:
        horizon = max(_natural_horizon(a), _natural_horizon(b))
    pa, pb = _as_pmf(a, horizon + 1), _as_pmf(b, horizon + 1)
    if horizon > min(pa.horizon, pb.horizon):
        raise InconclusiveError(f"law known only up to {min(pa.horizon, pb.horizon)}")
    for name, p in (("first", pa), ("second", pb)):
        tail = p.tail_after(horizon)
        if tail > ORDER_TAIL_TOL:
            raise InconclusiveError(
                f"{name} law has tail mass {tail:.3e} beyond horizon {horizon}"
            )
    return pa.cdf_array()[: horizon + 1], pb.cdf_array()[: horizon + 1]


def stochastic_leq(a: Law, b: Law, horizon: Optional[int] = None) -> bool:
    """a <=st b, i.e. P(a <= k) >= P(b <= k) for every k up to the horizon."""
    ca, cb = _cdfs_on(a, b, horizon)
    return bool(np.all(ca >= cb - ORDER_ATOL))


def cdf_gap(a: Law, b: Law, horizon: Optional[int] = None) -> float:
    """max_k P(a <= k) - P(b <= k)."""
    ca, cb = _cdfs_on(a, b, horizon)
    return float(np.max(ca - cb))


def majorizes(w: WeightVector, w2: WeightVector) -> bool:
    if w.n != w2.n:
        raise InvalidInputError(f"dimension mismatch: {w.n} != {w2.n}")
    return bool(np.all(np.cumsum(w.w) >= np.cumsum(w2.w) - ORDER_ATOL))


def rate_constant(family: str, params: Optional[Mapping[str, float]], n: int) -> float:
    """
    Number of steps k_n that FMMR from the best start state needs, to
    first order, for the named weight family.
    """
    params = params or {}
    if family == "uniform":
        return n * math.log(n)
    if family == "zipf":
        return float(n)
    if family == "gzl":
        alpha = float(params.get("alpha", 1.0))
        if alpha == 1.0:
            raise InvalidInputError("gzl with alpha = 1 is Zipf's law; use family zipf")
        return n / alpha if alpha < 1.0 else float(n)
    if family == "power":
        s = float(params.get("s", 1.0))
        return n * math.log(n) / (s + 1.0)
    if family == "geometric":
        return float(n)
    raise InvalidInputError(f"no rate constant for weight family {family}")


# Reference shapes of the CFTP (and worst-case FMMR) convergence rates,
# shown next to the computed constants. Unknown constants stay symbolic.
CFTP_RATE_SHAPES: Dict[str, str] = {
    "uniform": "n ln n",
    "zipf": "n (ln n)^2",
    "gzl(alpha<1)": "n ln n / (1 - alpha)",
    "gzl(alpha>1)": "zeta(alpha) n^alpha ln n",
    "power": "c n^(s+1)",
    "geometric": "c theta^(-n)",
}


def cftp_rate_shape(family: str, params: Optional[Mapping[str, float]] = None) -> str:
    if family == "gzl":
        alpha = float((params or {}).get("alpha", 1.0))
        return CFTP_RATE_SHAPES["gzl(alpha<1)" if alpha < 1.0 else "gzl(alpha>1)"]
    return CFTP_RATE_SHAPES[family]


def law_record(
    d: Union[GeomConvolution, TruncatedPmf],
    prefix_len: int = 64,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> Dict[str, Any]:
    """JSON-ready summary of a running-time law."""
    if isinstance(d, GeomConvolution):
        pmf = conv_pmf_array(d, tail_tol)
        params: Sequence[float] = list(d.params)
        mean, var = conv_mean(d), conv_var(d)
    else:
        pmf = d
        params = []
        mean = d.mean()
        k = np.arange(d.pmf.size)
        var = float(np.dot(k**2, d.pmf) - mean**2)
    last = min(prefix_len, pmf.pmf.size) - 1
    return {
        "law_params": params,
        "mean": mean,
        "var": var,
        "pmf_prefix": pmf.pmf[: last + 1].tolist(),
        "truncation_tail": pmf.tail_after(last),
    }
