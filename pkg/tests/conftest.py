"""Shared fixtures: reference parameter sets and quadrature helpers.

The ``base_params`` fixture is the exponential-trawl configuration used
throughout the suite (moderate permanence, slightly asymmetric unit
jumps); ``skellam_params`` is the fully-permanent special case whose
return law is a Skellam difference of Poissons and therefore has a
closed-form oracle.
"""

import numpy as np
import pytest
from scipy import integrate, stats

from trawlprice import (
    DEFAULT_GRID,
    EmpiricalStats,
    ExponentialTrawl,
    LevyMeasure,
    ModelParams,
    TrawlSpec,
    expected_pv,
    jump_distribution,
    return_cumulant,
)

BASE_B = 0.396
BASE_LAM = 0.681
BASE_NU = {1: 0.0138, -1: 0.0131}


@pytest.fixture
def base_params() -> ModelParams:
    """Exponential trawl, b=0.396, lambda=0.681, unit jumps."""
    return ModelParams(
        levy=LevyMeasure(BASE_NU),
        trawl=TrawlSpec(b=BASE_B, family=ExponentialTrawl(lam=BASE_LAM)),
    )


@pytest.fixture
def skellam_params() -> ModelParams:
    """Fully permanent (b=1) symmetric unit jumps: Skellam returns."""
    return ModelParams(
        levy=LevyMeasure({1: 0.5, -1: 0.5}),
        trawl=TrawlSpec(b=1.0, family=ExponentialTrawl(lam=1.0)),
    )


def quad_area(family, upper: float = np.inf) -> float:
    """Numerical integral of the survival profile over (-upper, 0]."""
    val, _ = integrate.quad(lambda s: family.d_tilde(s), -upper, 0.0, limit=400)
    return val


def quad_overlap(family, t: float, upper: float = np.inf) -> float:
    """Numerical integral of the profile shifted by t (overlap oracle)."""
    val, _ = integrate.quad(lambda s: family.d_tilde(s - t), -upper, 0.0, limit=400)
    return val


def convolution_return_pmf(params: ModelParams, t: float, tail: float = 1e-16) -> dict:
    """Brute-force oracle for the return law by convolving Poisson counts.

    The return over a window of length ``t`` decomposes into independent
    Poisson counts: for each size ``y``, arrivals surviving or permanent
    with mean ``nu(y) (b t + inc(t))`` moving the price by ``+y``, and
    departures of older moves with mean ``nu(y) inc(t)`` moving it by
    ``-y``.  Convolving the truncated Poisson laws on the integer lattice
    gives the pmf to machine precision.
    """
    spec = params.trawl
    bt = params.b * t
    inc = float(spec.increment(t))
    pmf = np.array([1.0])
    offset = 0
    for y, rate in params.levy.as_dict().items():
        for step, mu in ((y, rate * (bt + inc)), (-y, rate * inc)):
            if mu <= 0.0:
                continue
            k_max = int(stats.poisson.isf(tail, mu)) + 2
            weights = stats.poisson.pmf(np.arange(k_max + 1), mu)
            a = abs(step)
            comp = np.zeros(k_max * a + 1)
            comp[np.arange(k_max + 1) * a] = weights
            if step > 0:
                pmf = np.convolve(pmf, comp)
            else:
                pmf = np.convolve(pmf, comp[::-1])
                offset -= k_max * a
    return {offset + i: p for i, p in enumerate(pmf)}


def theoretical_stats(params: ModelParams, deltas=None) -> EmpiricalStats:
    """Noise-free statistics: exact frequencies, rates, and variances."""
    if deltas is None:
        deltas = DEFAULT_GRID
    deltas = np.asarray(deltas, dtype=float)
    variances = np.array([return_cumulant(params, float(d), 2) for d in deltas])
    return EmpiricalStats(
        alpha=jump_distribution(params),
        beta={0.0: expected_pv(params, 1.0, 0.0)},
        deltas=deltas,
        variances=variances,
        counts=np.full(deltas.size, 10**6, dtype=np.int64),
        span=1e6,
        n_events=10**6,
    )
