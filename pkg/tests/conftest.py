import numpy as np
import pytest

from jamlab.vocabulary import Superstate, Vocabulary


def build_vocab(means, covs, pi, d=1, tau_max=20, cond=None):
    """Hand-built vocabulary with a dwell-independent transition model."""
    means = np.asarray(means, float)
    covs = np.asarray(covs, float)
    pi = np.asarray(pi, float)
    states = [Superstate(id=m, mean=means[m], cov=covs[m],
                         cond={} if cond is None else cond.get(m, {}))
              for m in range(len(means))]
    pi_tau = np.tile(pi, (tau_max, 1, 1))
    return Vocabulary(superstates=states, pi=pi, pi_tau=pi_tau, d=d)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
