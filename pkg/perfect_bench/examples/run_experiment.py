import logging

from .. import chains
from ..lib.analytics import conv_mean, conv_var, fmmr_runtime_law
from ..lib.chain import make_chain
from ..lib.config import ExperimentSpec, get_run_options
from ..lib.experiment import run_experiment
from ..lib.init_helper import init_logging, load_modules
from ..lib.samplers import Algorithm
from ..lib.stats import mean_test


def main():
    init_logging(logging.INFO)

    # Load chain implementations, they register themselves on import.
    load_modules(chains)

    run_options = get_run_options()

    # Move-to-front on 20 records with Zipf request probabilities.
    model = make_chain("mtf", n=20, weights="zipf")

    # FMMR started from the reversed list, the fastest start state.
    spec = ExperimentSpec(
        id="mtf_zipf_rev",
        chain="mtf",
        algorithm=Algorithm.FMMR,
        params={"n": 20, "weights": "zipf"},
        replications=2000,
        seed=run_options["seed"],
        start="rev",
    )
    result = run_experiment(spec, workers=run_options["workers"], model=model)

    # The running time from a fixed start has an exact law: compare the
    # sample mean against it.
    law = fmmr_runtime_law(model.weights, model.parse_state("rev"))
    windows = [r.window for r in result.completed]
    report = mean_test(windows, conv_mean(law), expected_var=conv_var(law))

    print("### Experiment Results ###")
    for name, stats in result.summary().items():
        print(name, stats)
    print(f"exact mean: {conv_mean(law):.3f}")
    print(report)


if __name__ == "__main__":
    main()
