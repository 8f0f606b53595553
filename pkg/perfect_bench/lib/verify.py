"""
Statistical and exact verification of the samplers and the running-time
analytics. Every check returns a StatReport tagged with a short anchor id
from ANCHORS; chi-square checks are Bonferroni corrected across the suite.
"""
import dataclasses
import enum
import itertools
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..chains.mtf import (
    FrontIs,
    MTFModel,
    WeightVector,
    all_permutations,
    bruhat_leq,
    identity,
    incremental_sampler,
    move_to_front,
    mtf_impute,
    mtf_reverse_step,
    reverse,
    reverse_step_probs,
    stationary_pmf,
    weight_family,
)
from ..chains.spin import spin_chain
from ..chains.three_state import ThreeStateModel
from .analytics import (
    cdf_gap,
    cftp_runtime_law,
    conv_cdf,
    conv_pmf_array,
    fmmr_runtime_law,
    majorizes,
    stochastic_leq,
)
from .chain import ChainModel, State
from .config import ExperimentSpec
from .errors import WindowTimeout
from .experiment import run_experiment
from .init_helper import get_logger
from .kernel import (
    build_kernel,
    cftp_conditional_prob,
    exact_coalescence_prob,
    reverse_kernel,
    separation,
)
from .samplers import Algorithm, RunRecord, fmmr
from .stats import (
    DEFAULT_SIGNIFICANCE,
    StatReport,
    exact_report,
    gof_test,
    independence_test,
    two_sample_test,
)
from .table import scaling_table

logger = get_logger()

# Short ids printed with each report, with the property each one establishes.
ANCHORS: Dict[str, str] = {
    "bruhat-monotone": "FMMR running time decreases stochastically in Bruhat order",
    "cftp-concentration": "CFTP running time grows with concentration of w",
    "cftp-given-output": "CFTP running time given output z is FMMR running time from z",
    "cftp-mixture": "CFTP running time law is the pi-mixture of FMMR laws",
    "cftp-not-interruptible": "CFTP output and running time are dependent",
    "extreme-starts": "rev minimizes and id maximizes FMMR running time",
    "fmmr-beats-cftp": "best FMMR start state is at least as fast as CFTP",
    "fmmr-geometric-sum": "FMMR running time is a sum of independent geometrics",
    "fmmr-interruptibility": "FMMR output and running time are independent",
    "fmmr-restart": "aborting and restarting FMMR keeps the output law",
    "incremental-stages": "each incremental stage is accepted after one step",
    "incremental-steps": "incremental sampler runs in exactly n-1 steps",
    "rev-scaling": "FMMR from rev needs k_n steps to first order",
    "schur-concave": "FMMR running time is stochastically Schur-concave in w",
    "separation-acceptance": "FMMR acceptance from an extreme state is 1 - separation",
    "spin-cftp-sweeps": "spin chain CFTP needs many sweeps",
    "spin-fmmr-sweep": "spin chain FMMR coalesces in one sweep",
    "start-state-gap": "best versus worst FMMR start state",
    "stationary-output": "sampler output follows the stationary law",
    "strict-schur-concave": "FMMR running time is strictly Schur-concave in w",
    "three-state-cftp": "three-state CFTP coalesces when some innovation is 0",
    "three-state-fmmr": "FMMR from 0 coalesces in one step",
}

# MTF weights with distinct records, used for the running-time checks.
SKEWED_3 = (1 / 2, 1 / 3, 1 / 6)
MAX_WINDOW = 10**5
ORACLE_HORIZON = 8
ORACLE_ATOL = 1e-9
# Long enough for the stationary mixture tail to vanish on n = 3.
CFTP_HORIZON = 2000


@enum.unique
class Level(enum.Enum):
    QUICK = "quick"
    FULL = "full"


@dataclasses.dataclass(frozen=True)
class SuiteSizes:
    exactness: int
    runtime_law: int
    identity: int
    independence: int
    dependence: int
    toy: int
    spin: int
    scaling_sizes: Sequence[int]


SIZES = {
    Level.QUICK: SuiteSizes(5000, 5000, 10000, 10000, 20000, 10000, 300, (1000, 10000)),
    Level.FULL: SuiteSizes(
        100000, 20000, 50000, 50000, 100000, 10000, 1000, (1000, 10000, 100000)
    ),
}


def mtf_model(weights: Sequence[float]) -> MTFModel:
    return MTFModel(WeightVector(np.asarray(weights, dtype=float)))


class _Runner:
    """Runs sampler experiments with distinct derived master seeds."""

    def __init__(self, seed: int, workers: int):
        self.seed = seed
        self.workers = workers
        self.count = 0

    def run(
        self,
        model: ChainModel,
        algorithm: Algorithm,
        replications: int,
        start: Optional[str] = None,
        target: Optional[str] = None,
    ) -> List[RunRecord]:
        self.count += 1
        spec = ExperimentSpec(
            id=f"verify:{self.count}",
            chain=model.name,
            algorithm=algorithm,
            replications=replications,
            seed=self.seed * 1000 + self.count,
            max_window=MAX_WINDOW,
            start=start,
            target=target,
        )
        return run_experiment(spec, self.workers, model=model).completed


def check_exactness(runner: _Runner, sizes: SuiteSizes) -> List[StatReport]:
    reports = []
    down_set_top = "2,1,4,3"
    for label in ("uniform", "geometric:0.5"):
        family, _, theta = label.partition(":")
        params = {"theta": float(theta)} if theta else {}
        model = MTFModel(weight_family(family, 4, **params))
        pi = stationary_pmf(model.weights)
        runs = [
            ("cftp", Algorithm.CFTP, None, None),
            ("fmmr(rev)", Algorithm.FMMR, "rev", None),
            ("fmmr(id)", Algorithm.FMMR, "id", None),
            (f"fmmr_set(downset {down_set_top})", Algorithm.FMMR_SET, None, f"downset:{down_set_top}"),
            ("incremental", Algorithm.INCREMENTAL, None, None),
        ]
        for name, algorithm, start, target in runs:
            records = runner.run(model, algorithm, sizes.exactness, start, target)
            reports.append(
                gof_test(
                    [r.output for r in records],
                    pi,
                    name=f"exactness mtf n=4 {label} {name}",
                    anchor="stationary-output",
                )
            )

    toys = [
        (ThreeStateModel(0.2), "0", "three-state eps=0.2"),
        (spin_chain(n=3, beta=1.0, h=0.5, H=2.0), "bottom", "spin n=3"),
    ]
    for model, start, label in toys:
        kernel = build_kernel(model)
        pi = {x: kernel.pi(x) for x in kernel.states}
        for name, algorithm, z0 in (("cftp", Algorithm.CFTP, None), ("fmmr", Algorithm.FMMR, start)):
            records = runner.run(model, algorithm, sizes.toy, z0)
            reports.append(
                gof_test(
                    [r.output for r in records],
                    pi,
                    name=f"exactness {label} {name}",
                    anchor="stationary-output",
                )
            )
    return reports


def _runtime_pmf(law) -> Dict[int, float]:
    pmf = conv_pmf_array(law)
    return {k: float(p) for k, p in enumerate(pmf.pmf)}


def check_runtime_law(runner: _Runner, sizes: SuiteSizes) -> List[StatReport]:
    model = mtf_model(SKEWED_3)
    reports = []
    for z in all_permutations(3):
        records = runner.run(model, Algorithm.FMMR, sizes.runtime_law, model.encode(z))
        reports.append(
            gof_test(
                [r.window for r in records],
                _runtime_pmf(fmmr_runtime_law(model.weights, z)),
                name=f"fmmr running time from {model.encode(z)}",
                anchor="fmmr-geometric-sum",
            )
        )

    kernel = build_kernel(model)
    worst = 0.0
    for t in range(1, ORACLE_HORIZON + 1):
        accept = cftp_conditional_prob(model, t, kernel)
        for z in all_permutations(3):
            worst = max(worst, abs(accept[z] - conv_cdf(fmmr_runtime_law(model.weights, z), t)))
    reports.append(
        exact_report(
            "enumeration oracle vs geometric convolution cdf",
            worst <= ORACLE_ATOL,
            worst,
            anchor="fmmr-geometric-sum",
        )
    )
    return reports


def check_cftp_fmmr_identity(runner: _Runner, sizes: SuiteSizes) -> List[StatReport]:
    model = mtf_model(SKEWED_3)
    cftp_records = runner.run(model, Algorithm.CFTP, sizes.identity)
    by_output: Dict[State, List[int]] = {}
    for r in cftp_records:
        by_output.setdefault(r.output, []).append(r.window)

    reports = []
    for z in all_permutations(3):
        fmmr_records = runner.run(
            model, Algorithm.FMMR, max(len(by_output.get(z, [])), 1000), model.encode(z)
        )
        reports.append(
            two_sample_test(
                by_output.get(z, []),
                [r.window for r in fmmr_records],
                name=f"cftp time given output {model.encode(z)} vs fmmr time from it",
                anchor="cftp-given-output",
            )
        )

    mixture = cftp_runtime_law(model.weights, CFTP_HORIZON)
    reports.append(
        gof_test(
            [r.window for r in cftp_records],
            {k: float(p) for k, p in enumerate(mixture.pmf)},
            name="cftp running time vs stationary mixture of fmmr laws",
            anchor="cftp-mixture",
        )
    )

    # If the CFTP time depends on its output, some start state beats it.
    gain = max(
        max(cftp_conditional_prob(model, t).values()) - exact_coalescence_prob(model, t)
        for t in range(1, ORACLE_HORIZON + 1)
    )
    reports.append(
        exact_report(
            "some fmmr start state accepts more often than cftp coalesces",
            gain > 0.0,
            gain,
            anchor="fmmr-beats-cftp",
        )
    )
    return reports


def fmmr_with_retries(
    model: ChainModel, z0: State, max_window: int, rng: np.random.Generator
) -> RunRecord:
    """FMMR restarted with fresh randomness after every timeout."""

    while True:
        try:
            return fmmr(model, z0, max_window, rng)
        except WindowTimeout:
            continue


def check_interruptibility(runner: _Runner, sizes: SuiteSizes, seed: int) -> List[StatReport]:
    reports = []
    model = mtf_model(SKEWED_3)
    for start in ("rev", "id"):
        records = runner.run(model, Algorithm.FMMR, sizes.independence, start)
        reports.append(
            independence_test(
                [(r.window, r.output) for r in records],
                name=f"fmmr({start}) mtf n=3 time independent of output",
                anchor="fmmr-interruptibility",
            )
        )
    records = runner.run(model, Algorithm.FMMR_SET, sizes.independence, target="downset:2,1,3")
    reports.append(
        independence_test(
            [(r.window, r.output) for r in records],
            name="fmmr_set(downset 2,1,3) time independent of output",
            anchor="fmmr-interruptibility",
        )
    )

    three = ThreeStateModel(0.2)
    records = runner.run(three, Algorithm.FMMR, sizes.independence, "1")
    reports.append(
        independence_test(
            [(r.window, r.output) for r in records],
            name="fmmr(1) three-state time independent of output",
            anchor="fmmr-interruptibility",
        )
    )

    records = runner.run(model, Algorithm.CFTP, sizes.dependence)
    reports.append(
        independence_test(
            [(r.window, r.output) for r in records],
            name="cftp mtf n=3 time depends on output",
            anchor="cftp-not-interruptible",
            expect_reject=True,
        )
    )

    rng = np.random.default_rng([seed, 7])
    outputs = [
        fmmr_with_retries(model, identity(3), 2, rng).output
        for _ in range(sizes.independence)
    ]
    reports.append(
        gof_test(
            outputs,
            stationary_pmf(model.weights),
            name="fmmr(id) with timeouts at window 2 and restarts",
            anchor="fmmr-restart",
        )
    )
    return reports


def _s4_weights() -> List[WeightVector]:
    return [
        weight_family("zipf", 4),
        weight_family("geometric", 4, theta=0.5),
        WeightVector(np.array([0.4, 0.3, 0.2, 0.1])),
    ]


def check_bruhat_monotonicity() -> List[StatReport]:
    perms = all_permutations(4)
    violations = 0
    pairs = 0
    extremes = 0
    for w in _s4_weights():
        laws = {z: fmmr_runtime_law(w, z) for z in perms}
        for z, z2 in itertools.product(perms, perms):
            if z != z2 and bruhat_leq(z, z2):
                pairs += 1
                if not stochastic_leq(laws[z2], laws[z]):
                    violations += 1
        for z in perms:
            if not stochastic_leq(laws[reverse(4)], laws[z]):
                extremes += 1
            if not stochastic_leq(laws[z], laws[identity(4)]):
                extremes += 1
    logger.info(f"bruhat monotonicity: {pairs} comparable pairs checked")
    return [
        exact_report(
            "fmmr time decreases along bruhat order on S_4",
            violations == 0,
            violations,
            anchor="bruhat-monotone",
        ),
        exact_report(
            "rev fastest and id slowest start on S_4",
            extremes == 0,
            extremes,
            anchor="extreme-starts",
        ),
    ]


def majorization_pairs(
    n: int, count: int, seed: int, floor: float = 1e-3
) -> List[tuple]:
    """
    Pairs (w, w2) with w majorizing w2: w is a sorted Dirichlet draw and w2
    mixes it with the uniform vector.
    """
    rng = np.random.default_rng(seed)
    uniform = np.full(n, 1.0 / n)
    pairs = []
    for _ in range(count):
        w = np.sort(rng.dirichlet(np.ones(n)))[::-1]
        w = np.maximum(w, floor)
        w /= w.sum()
        lam = rng.uniform(0.1, 0.9)
        w2 = lam * w + (1.0 - lam) * uniform
        pairs.append((WeightVector(w), WeightVector(w2 / w2.sum())))
    return pairs


def check_schur_concavity(seed: int) -> List[StatReport]:
    n = 5
    violations = 0
    strict_gap = 0.0
    for w, w2 in majorization_pairs(n, 20, seed):
        if not majorizes(w, w2):
            violations += 1
            continue
        t, t2 = fmmr_runtime_law(w, reverse(n)), fmmr_runtime_law(w2, reverse(n))
        if not stochastic_leq(t, t2):
            violations += 1
        strict_gap = max(strict_gap, cdf_gap(t, t2))

    # The CFTP mixture moves the other way: concentration slows CFTP down.
    cftp_violations = 0
    for w, w2 in majorization_pairs(3, 10, seed + 1, floor=0.05):
        if not stochastic_leq(cftp_runtime_law(w2, CFTP_HORIZON), cftp_runtime_law(w, CFTP_HORIZON)):
            cftp_violations += 1
    return [
        exact_report(
            "fmmr(rev) time Schur-concave in the weights, n=5",
            violations == 0,
            violations,
            anchor="schur-concave",
        ),
        exact_report(
            "strict majorization gives a strict cdf gap",
            strict_gap >= 1e-6,
            strict_gap,
            anchor="strict-schur-concave",
        ),
        exact_report(
            "cftp time Schur-convex in the weights, n=3",
            cftp_violations == 0,
            cftp_violations,
            anchor="cftp-concentration",
        ),
    ]


def check_scaling(sizes: SuiteSizes) -> List[StatReport]:
    families = ("zipf", "gzl:0.5", "gzl:2", "power:1", "geometric:0.5", "uniform")
    reports = []
    for family in families:
        ratios = [r["ratio_rev"] for r in scaling_table((family,), sizes.scaling_sizes)]
        in_band = all(0.8 <= r <= 1.3 for r in ratios)
        approaching = all(
            abs(b - 1.0) < abs(a - 1.0) for a, b in zip(ratios[:-1], ratios[1:])
        )
        reports.append(
            exact_report(
                f"E[T_rev]/k_n for {family} in [0.8, 1.3] and tending to 1",
                in_band and approaching,
                max(abs(r - 1.0) for r in ratios),
                anchor="rev-scaling",
            )
        )
    (row,) = scaling_table(("geometric:0.5",), (20,))
    speedup = row["mean_id"] / row["mean_rev"]
    reports.append(
        exact_report(
            "geometric(1/2) n=20: E[T_id]/E[T_rev] > 1e4",
            speedup > 1e4,
            speedup,
            anchor="start-state-gap",
        )
    )
    return reports


def _reverse_step_count(n: int, rng: np.random.Generator) -> int:
    calls = [0]

    def counted(*args):
        calls[0] += 1
        return mtf_reverse_step(*args)

    incremental_sampler(weight_family("zipf", n), rng, reverse_step=counted)
    return calls[0]


def check_incremental(seed: int) -> List[StatReport]:
    rng = np.random.default_rng([seed, 64])
    wrong = [n for n in range(1, 65) if _reverse_step_count(n, rng) != n - 1]

    # One reverse step from any list fronted by k+1 is accepted: the imputed
    # request is k+1, which sends every list into the set fronted by k+1.
    failures = 0
    for k in range(1, 5):
        w = weight_family("zipf", k + 1)
        inside = FrontIs(k + 1)
        for tail in all_permutations(k):
            y = (k + 1,) + tail
            probs = reverse_step_probs(w, y)
            for r, p in enumerate(probs):
                if p <= 0.0:
                    continue
                x = y[1:][:r] + (y[0],) + y[1:][r:]
                u = mtf_impute(x, y)
                if not all(inside(move_to_front(s, u)) for s in all_permutations(k + 1)):
                    failures += 1
    return [
        exact_report(
            "incremental sampler uses n-1 reverse steps, n <= 64",
            not wrong,
            len(wrong),
            anchor="incremental-steps",
        ),
        exact_report(
            "one-step set coalescence, k <= 4",
            failures == 0,
            failures,
            anchor="incremental-stages",
        ),
    ]


def check_toy_speedups(runner: _Runner, sizes: SuiteSizes) -> List[StatReport]:
    eps = 0.2
    three = ThreeStateModel(eps)
    records = runner.run(three, Algorithm.CFTP, sizes.toy)
    windows = np.array([r.window for r in records])
    worst = 0.0
    for t in range(1, 21):
        p = 1.0 - (1.0 - eps) ** t
        se = np.sqrt(p * (1.0 - p) / windows.size)
        worst = max(worst, abs(np.mean(windows <= t) - p) / se)
    reports = [
        exact_report(
            "three-state cftp window cdf within 3 SE of 1-(1-eps)^t, t <= 20",
            worst <= 3.0,
            worst,
            anchor="three-state-cftp",
        )
    ]
    records = runner.run(three, Algorithm.FMMR, sizes.toy, "0")
    ones = sum(1 for r in records if r.window == 1)
    reports.append(
        exact_report(
            "three-state fmmr from 0 always accepts after one step",
            ones == len(records),
            len(records) - ones,
            anchor="three-state-fmmr",
        )
    )

    spin = spin_chain()
    fmmr_records = runner.run(spin, Algorithm.FMMR, sizes.spin, "bottom")
    one_sweep = np.mean([r.window == 1 for r in fmmr_records])
    cftp_records = runner.run(spin, Algorithm.CFTP, sizes.spin)
    median = float(np.median([r.window for r in cftp_records]))
    reports.append(
        exact_report(
            "spin n=10 fmmr from all-minus: fraction with one sweep >= 0.8",
            one_sweep >= 0.8,
            one_sweep,
            anchor="spin-fmmr-sweep",
        )
    )
    reports.append(
        exact_report(
            "spin n=10 cftp: median window >= 5 sweeps",
            median >= 5,
            median,
            anchor="spin-cftp-sweeps",
        )
    )
    return reports


def check_separation() -> List[StatReport]:
    model = mtf_model(SKEWED_3)
    kernel = build_kernel(model)
    reversed_kernel = reverse_kernel(kernel)
    worst = 0.0
    for t in range(1, ORACLE_HORIZON + 1):
        accept = cftp_conditional_prob(model, t, kernel)
        for z in (model.bottom(), model.top()):
            worst = max(worst, abs(accept[z] - (1.0 - separation(reversed_kernel, z, t))))
    return [
        exact_report(
            "fmmr acceptance from extremes = 1 - reversed separation",
            worst <= ORACLE_ATOL,
            worst,
            anchor="separation-acceptance",
        )
    ]


def bonferroni(reports: List[StatReport], significance: float) -> List[StatReport]:
    m = sum(1 for r in reports if not r.exact)
    if m == 0:
        return reports
    return [
        r if r.exact else dataclasses.replace(r, significance=significance / m)
        for r in reports
    ]


def verify_suite(
    level: str = "quick",
    seed: int = 0,
    workers: int = 1,
    significance: float = DEFAULT_SIGNIFICANCE,
    on_report: Optional[Callable[[StatReport], None]] = None,
) -> List[StatReport]:
    level = Level(level)
    sizes = SIZES[level]
    runner = _Runner(seed, workers)
    groups = [
        ("exactness", lambda: check_exactness(runner, sizes)),
        ("running time law", lambda: check_runtime_law(runner, sizes)),
        ("cftp/fmmr identity", lambda: check_cftp_fmmr_identity(runner, sizes)),
        ("interruptibility", lambda: check_interruptibility(runner, sizes, seed)),
        ("bruhat monotonicity", check_bruhat_monotonicity),
        ("schur concavity", lambda: check_schur_concavity(seed)),
        ("scaling", lambda: check_scaling(sizes)),
        ("incremental sampler", lambda: check_incremental(seed)),
        ("toy speedups", lambda: check_toy_speedups(runner, sizes)),
        ("separation", check_separation),
    ]
    reports: List[StatReport] = []
    for name, check in groups:
        logger.info(f"verify: {name}")
        reports.extend(check())
    reports = bonferroni(reports, significance)
    for r in reports:
        logger.info(str(r))
        if on_report is not None:
            on_report(r)
    return reports
