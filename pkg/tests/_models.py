"""Random model construction shared by the test modules."""

import numpy as np

from tda.model import CorrelationScope, FittedTda, MarginalFamily, ModelSpec


def random_model(rng, J=3, family="loc", scope="global", order=4, shift=1.0, scale=0.3, corr=0.5):
    family, scope = MarginalFamily(family), CorrelationScope(scope)
    spec = ModelSpec(family, scope, order, tuple((-3.0, 3.0) for _ in range(J)))
    steps = rng.uniform(0.3, 1.5, size=(spec.n_sets, J, order))
    start = rng.uniform(-4.0, -2.0, size=(spec.n_sets, J, 1))
    coeffs = np.concatenate([start, start + np.cumsum(steps, axis=-1)], axis=-1)
    delta = np.zeros(J) if family is MarginalFamily.FREE else rng.normal(0.0, shift, J)
    gamma = rng.normal(0.0, scale, J) if family is MarginalFamily.LOCATION_SCALE else np.zeros(J)
    lams = rng.normal(0.0, corr, (spec.n_scope, J * (J - 1) // 2))
    return FittedTda(spec, coeffs, delta, gamma, lams, None)


def linear_model(delta, sigma, order=3):
    """Location model with identity transforms on [-10, 10] and the given correlation."""
    from tda.correlation import lambda_from_corr

    delta = np.asarray(delta, dtype=float)
    J = delta.size
    spec = ModelSpec("loc", "global", order, tuple((-10.0, 10.0) for _ in range(J)))
    coeffs = np.tile(np.linspace(-10.0, 10.0, order + 1), (1, J, 1))
    return FittedTda(spec, coeffs, delta, np.zeros(J), lambda_from_corr(np.asarray(sigma))[None, :], None)
