"""Seeded synthetic-data generators for every simulation setting in the suite.

All randomness flows through ``numpy.random.default_rng`` (the PCG64
generator) keyed by a 64-bit seed, so every scenario is reproducible
bit-for-bit within this implementation: same name, same parameters, same
seed, same bytes. There is no global RNG state anywhere in the package.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix

__all__ = [
    "Scenario",
    "generate",
    "student_t3",
    "make_factor_data",
    "make_farmtest_data",
    "make_farmselect_data",
    "make_sbm",
    "make_completion",
    "make_phase_sync",
    "make_gmm_data",
    "make_spiked_cov",
]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def student_t3(seed, shape) -> np.ndarray:
    """i.i.d. t-distributed entries with 3 degrees of freedom.

    Built as a normal / chi-square ratio: ``z / sqrt(w / 3)`` with
    ``w ~ chi2(3)``, so the variance is 3.
    """
    rng = _rng(seed)
    z = rng.standard_normal(shape)
    w = rng.chisquare(3, size=shape)
    return z / np.sqrt(w / 3.0)


def make_factor_data(n=1000, p=400, n_factors=2, loading_sd=0.5, noise_sd=5**0.5,
                     mu=None, seed=0):
    """Gaussian factor model data ``X = 1 mu^T + F B^T + U``.

    Loadings are N(0, loading_sd^2), factors N(0, 1), noise
    N(0, noise_sd^2); the mean defaults to zero. Returns the data matrix
    (n, p) together with every ground-truth piece.
    """
    rng = _rng(seed)
    b = rng.normal(0.0, loading_sd, size=(p, n_factors))
    f = rng.normal(0.0, 1.0, size=(n, n_factors))
    u = rng.normal(0.0, noise_sd, size=(n, p))
    mu_vec = np.zeros(p) if mu is None else np.asarray(mu, dtype=float)
    x = mu_vec + f @ b.T + u
    return {"x": x, "loadings": b, "factors": f, "noise": u, "mu": mu_vec,
            "n_factors": n_factors}


def make_farmtest_data(n=100, p=500, n_factors=3, signal=0.6, n_signals=125,
                       loading_bound=2.0, seed=0):
    """Multiple-testing scenario: t3 idiosyncratic errors, dense factor part.

    The first ``n_signals`` coordinates carry mean ``signal``; the rest are
    true nulls. Loadings are i.i.d. uniform on [-loading_bound,
    loading_bound], factors are standard normal.
    """
    rng = _rng(seed)
    b = rng.uniform(-loading_bound, loading_bound, size=(p, n_factors))
    f = rng.normal(0.0, 1.0, size=(n, n_factors))
    u = student_t3(rng, (n, p))
    mu = np.zeros(p)
    mu[:n_signals] = signal
    x = mu + f @ b.T + u
    return {"x": x, "mu": mu, "loadings": b, "factors": f,
            "null_mask": mu == 0.0, "n_factors": n_factors}


def make_farmselect_data(n=160, p=500, n_factors=3, s=10, beta_low=2.0,
                         beta_high=5.0, noise_var=0.3, seed=0):
    """Sparse regression with factor-correlated covariates.

    Covariates follow a pervasive-factor design (loadings and idiosyncratic
    noise both standard normal); the response is ``y = X beta + eps`` with
    the support on the first ``s`` coordinates, coefficients uniform on
    [beta_low, beta_high] and noise variance ``noise_var``.
    """
    rng = _rng(seed)
    b = rng.normal(0.0, 1.0, size=(p, n_factors))
    f = rng.normal(0.0, 1.0, size=(n, n_factors))
    u = rng.normal(0.0, 1.0, size=(n, p))
    x = f @ b.T + u
    beta = np.zeros(p)
    beta[:s] = rng.uniform(beta_low, beta_high, size=s)
    y = x @ beta + rng.normal(0.0, np.sqrt(noise_var), size=n)
    return {"x": x, "y": y, "beta": beta, "support": np.arange(s),
            "loadings": b, "factors": f}


def make_sbm(n=2000, a=5.0, b=0.25, seed=0):
    """Two balanced blocks with edge probabilities a log n / n and b log n / n.

    The first half of the vertices forms block 0. Edges are sampled on the
    upper triangle and mirrored; the diagonal is zero.
    """
    rng = _rng(seed)
    if n % 2 != 0:
        raise ValueError("n must be even for two balanced blocks")
    labels = np.repeat([0, 1], n // 2)
    p_in = a * np.log(n) / n
    p_out = b * np.log(n) / n
    if max(p_in, p_out) > 1.0:
        raise ValueError("edge probabilities exceed 1; decrease a or b")
    same = labels[:, None] == labels[None, :]
    probs = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < probs, k=1)
    adjacency = (upper | upper.T).astype(np.float64)
    return {"adjacency": adjacency, "labels": labels, "a": a, "b": b}


def make_completion(n1=200, n2=200, rank=1, p_obs=0.5, noise_sd=0.01, seed=0):
    """Noisy low-rank matrix completion instance.

    ``M* = L R^T`` with standard normal factors; each entry is observed
    independently with probability ``p_obs`` and carries N(0, noise_sd^2)
    noise when observed.
    """
    rng = _rng(seed)
    left = rng.standard_normal((n1, rank))
    right = rng.standard_normal((n2, rank))
    m_star = left @ right.T
    mask = (rng.random((n1, n2)) < p_obs).astype(np.float64)
    values = np.where(mask > 0, m_star + rng.normal(0.0, noise_sd, (n1, n2)), 0.0)
    return {"values": values, "mask": mask, "m_star": m_star, "rank": rank,
            "p_obs": p_obs}


def make_phase_sync(n=500, sigma=1.0, seed=0):
    """Phase synchronization instance ``C = z z* + sigma W``.

    ``z`` holds unit-modulus phases; ``W`` is a Hermitian Gaussian matrix
    with zero diagonal whose off-diagonal real and imaginary parts are
    independent N(0, 1/2).
    """
    rng = _rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    z = np.exp(1j * theta)
    g = (rng.normal(0.0, np.sqrt(0.5), (n, n))
         + 1j * rng.normal(0.0, np.sqrt(0.5), (n, n)))
    w = np.triu(g, k=1)
    w = w + w.conj().T
    c = np.outer(z, z.conj()) + sigma * w
    return {"c": c, "z": z, "sigma": sigma}


def make_gmm_data(n=1000, p=5, n_components=2, weights=None, means=None,
                  sigmas=None, mean_scale=3.0, seed=0):
    """Samples from a spherical Gaussian mixture plus the generating truth."""
    rng = _rng(seed)
    k = n_components
    if weights is None:
        weights = np.full(k, 1.0 / k)
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    if means is None:
        means = rng.normal(0.0, mean_scale, size=(k, p))
    means = np.asarray(means, dtype=float)
    if sigmas is None:
        sigmas = np.linspace(0.8, 1.2, k)
    sigmas = np.asarray(sigmas, dtype=float)
    comps = rng.choice(k, size=n, p=weights)
    x = means[comps] + rng.standard_normal((n, p)) * sigmas[comps][:, None]
    return {"x": x, "weights": weights, "means": means, "sigmas": sigmas,
            "components": comps}


def make_spiked_cov(n=200, p=100, n_factors=1, spike_sd=1.0, noise_sd=1.0,
                    seed=0):
    """Data from a spiked covariance ``Sigma = B B^T + noise_sd^2 I``."""
    rng = _rng(seed)
    b = rng.normal(0.0, spike_sd, size=(p, n_factors))
    f = rng.standard_normal((n, n_factors))
    u = rng.normal(0.0, noise_sd, size=(n, p))
    x = f @ b.T + u
    sigma = b @ b.T + noise_sd**2 * np.eye(p)
    return {"x": x, "sigma": sigma, "loadings": b}


_SCENARIOS = {
    "fig1_factor": make_factor_data,
    "fig5_farmtest": make_farmtest_data,
    "fig6_farmselect": make_farmselect_data,
    "sbm": make_sbm,
    "completion": make_completion,
    "phase_sync": make_phase_sync,
    "gmm": make_gmm_data,
    "spiked_cov": make_spiked_cov,
}


@dataclass
class Scenario:
    """A named simulation setting: generator name, parameters and seed."""

    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.name not in _SCENARIOS:
            raise ValueError(
                f"unknown scenario {self.name!r}; choose from {sorted(_SCENARIOS)}"
            )


def generate(scenario: Scenario) -> dict:
    """Run a scenario generator; output includes the ground truth."""
    maker = _SCENARIOS[scenario.name]
    return maker(**scenario.params, seed=scenario.seed)
