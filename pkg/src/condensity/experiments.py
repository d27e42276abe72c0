"""Synthetic benchmark protocol shared by the scripts and the acceptance tests.

For each seed s, training data is drawn with seed s and a disjoint test set
of ``n_test`` points with seed ``TEST_SEED_OFFSET + s``.
"""

from dataclasses import dataclass

from . import estimator as E
from . import regress, synthetic

TEST_SEED_OFFSET = 1000

# ISE up to a constant, original target units, from the reference table
REFERENCE_NN_ISE = {"single_relevant": -0.3311, "manifold": -0.3853, "non_sparse": -0.2800}


@dataclass(frozen=True)
class RunResult:
    mechanism: str
    backend: str
    M: int
    h: float
    seed: int
    ise: float
    ise_original_units: float
    stub_ise: float
    stub_ise_original_units: float
    validation_ise: float
    rounds_trained: int


def regressor_for(backend):
    return regress.CONFIGS[backend]()


def run(mechanism, backend="tree", M=100, h=0.01, seed=0, n_train=10_000, n_test=1_000, regressor=None):
    mech = synthetic.mechanism(mechanism)
    train = synthetic.sample(mech, n_train, seed)
    test = synthetic.sample(mech, n_test, TEST_SEED_OFFSET + seed)
    reg = regressor if regressor is not None else regressor_for(backend)
    est = E.fit(train, E.FitConfig(M=M, h=h, regressor=reg, seed=seed))
    rep = E.ise(est, test)
    stub = E.constant_estimator(mech.d, est.scaler.y_min, est.scaler.y_max, grid_size=est.config.grid_size)
    stub_rep = E.ise(stub, test)
    return RunResult(mechanism, reg.variant, M, h, seed, rep.value, rep.value_original_units,
                     stub_rep.value, stub_rep.value_original_units, est.validation_ise, est.rounds_trained)
