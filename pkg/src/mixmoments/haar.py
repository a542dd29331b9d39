"""
Haar-distributed eigenangle samples from SO(2N) and USp(2N).

Every sample is keyed by ``(seed, index)``: sample ``i`` draws from its own
random stream, so results do not depend on batching or on the number of
workers.
"""

from dataclasses import dataclass, field
from enum import Enum
from math import factorial, pi

import numpy

from .errors import EigenPairingError

__all__ = [
    "EnsembleKind", "SamplerMethod", "SamplerConfig", "SpectrumSample",
    "sample_so2n", "sample_usp2n", "sample_batch", "jpdf_density_so",
    "jpdf_density_usp", "so_normalization",
]

PAIR_TOL = 1e-8
ANGLE_CLAMP = 1e-8


class EnsembleKind(Enum):
    """The two ensembles handled by the package."""

    SpecialOrthogonalEven = "so"
    UnitarySymplectic = "usp"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        for kind in cls:
            if key in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown ensemble {value!r}")


class SamplerMethod(Enum):
    MatrixQR = "qr"
    JpdfMcmc = "mcmc"


@dataclass(frozen=True)
class SamplerConfig:
    """
    Sampler settings.

    Attributes
    ----------
    seed : int
        Master seed (unsigned 64-bit).
    method : SamplerMethod
        ``MatrixQR`` (exact Haar) or ``JpdfMcmc`` (Metropolis on the joint
        eigenangle density, used for cross-checks).
    mcmc_burn_in : int
        Burn-in sweeps per chain.
    mcmc_thin : int
        Sweeps between retained states.
    mcmc_chains : int
        Number of independent chains; sample ``i`` belongs to chain
        ``i % mcmc_chains``.
    """

    seed: int = 0
    method: SamplerMethod = SamplerMethod.MatrixQR
    mcmc_burn_in: int = 10_000
    mcmc_thin: int = 10
    mcmc_chains: int = 64

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.mcmc_burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.mcmc_thin < 1:
            raise ValueError("thin must be >= 1")
        if self.mcmc_chains < 1:
            raise ValueError("need at least one chain")


@dataclass(frozen=True)
class SpectrumSample:
    """
    One Haar draw: ``n`` eigenangles in (0, pi], sorted ascending. The
    conjugate partners ``-theta`` are implicit.
    """

    n: int
    angles: numpy.ndarray = field(repr=False)

    def __post_init__(self):
        a = numpy.asarray(self.angles, dtype=float)
        if a.shape != (self.n,):
            raise ValueError("angles must have length n")
        object.__setattr__(self, "angles", a)


def so_normalization(n):
    """
    Normalising constant :math:`S_N = 2^{(N-1)^2}/(\\pi^N N!)` of the SO(2N)
    joint eigenangle density on :math:`[0, \\pi]^N`.
    """

    return 2.0 ** ((n - 1) ** 2) / (pi ** n * factorial(n))


def jpdf_density_so(angles):
    """
    Unnormalised SO(2N) eigenangle density
    :math:`\\prod_{j<k} (\\cos\\theta_k - \\cos\\theta_j)^2`.

    Examples
    --------
    >>> round(jpdf_density_so([pi / 3, 2 * pi / 3]), 12)
    1.0
    """

    c = numpy.cos(numpy.asarray(angles, dtype=float))
    diff = c[None, :] - c[:, None]
    iu = numpy.triu_indices(len(c), 1)
    return float(numpy.prod(diff[iu] ** 2))


def jpdf_density_usp(angles):
    """Unnormalised USp(2N) eigenangle density (SO factor times prod sin^2)."""

    a = numpy.asarray(angles, dtype=float)
    return jpdf_density_so(a) * float(numpy.prod(numpy.sin(a) ** 2))


# ------------------------
# Matrix (exact) sampling
# ------------------------

def _rng(seed, index):
    return numpy.random.default_rng([int(seed), int(index)])


def _haar_so_batch(n, seed, indices):
    dim = 2 * n
    g = numpy.stack([_rng(seed, i).standard_normal((dim, dim))
                     for i in indices])
    q, r = numpy.linalg.qr(g)
    d = numpy.sign(numpy.diagonal(r, axis1=1, axis2=2))
    d[d == 0] = 1.0
    q = q * d[:, None, :]
    det = numpy.linalg.det(q)
    q[det < 0, :, -1] *= -1.0
    return q


def _haar_usp_batch(n, seed, indices):
    """
    Haar unitary symplectic matrices by Gram-Schmidt over the quaternion
    structure: columns u_k are orthonormalised against u_j and -J conj(u_j).
    """

    dim = 2 * n
    batch = len(indices)
    raw = numpy.stack([
        (lambda gen: gen.standard_normal((n, dim))
         + 1j * gen.standard_normal((n, dim)))(_rng(seed, i))
        for i in indices])
    u = numpy.zeros((batch, dim, dim), dtype=complex)

    def jconj(v):
        # -J conj(v) with J = [[0, I], [-I, 0]]
        vc = numpy.conj(v)
        return numpy.concatenate([-vc[..., n:], vc[..., :n]], axis=-1)

    for k in range(n):
        v = raw[:, k, :]
        basis = numpy.concatenate([u[:, :, :k], u[:, :, n:n + k]], axis=2)
        for _ in range(2):
            coef = numpy.einsum("bij,bi->bj", basis.conj(), v)
            v = v - numpy.einsum("bij,bj->bi", basis, coef)
        v = v / numpy.linalg.norm(v, axis=1, keepdims=True)
        u[:, :, k] = v
        u[:, :, n + k] = jconj(v)
    return u


def _angles_from_cosines(c, n):
    """Pair the doubled eigenvalues of the Hermitian part into n angles."""

    c = numpy.sort(c, axis=-1)
    a, b = c[..., 0::2], c[..., 1::2]
    if numpy.any(numpy.abs(a - b) > PAIR_TOL):
        raise EigenPairingError("eigenvalues do not pair into e^{+-i theta}")
    cos = numpy.clip(0.5 * (a + b), -1.0, 1.0)
    theta = numpy.arccos(cos)[..., ::-1]
    return numpy.clip(theta, ANGLE_CLAMP, pi)


def _matrix_batch(kind, n, seed, indices):
    if kind is EnsembleKind.SpecialOrthogonalEven:
        q = _haar_so_batch(n, seed, indices)
        h = 0.5 * (q + numpy.swapaxes(q, 1, 2))
    else:
        q = _haar_usp_batch(n, seed, indices)
        h = 0.5 * (q + numpy.conj(numpy.swapaxes(q, 1, 2)))
    c = numpy.linalg.eigvalsh(h)
    return _angles_from_cosines(c, n)


# --------------------------
# Metropolis cross-checker
# --------------------------

def _log_target(kind, theta):
    c = numpy.cos(theta)
    diff = numpy.abs(c[..., None, :] - c[..., :, None])
    n = theta.shape[-1]
    iu = numpy.triu_indices(n, 1)
    out = 2.0 * numpy.log(diff[..., iu[0], iu[1]]).sum(axis=-1)
    if kind is EnsembleKind.UnitarySymplectic:
        out = out + 2.0 * numpy.log(numpy.abs(numpy.sin(theta))).sum(axis=-1)
    return out


def _site_log_weight(kind, theta, j, value):
    c = numpy.cos(theta)
    cj = numpy.cos(value)
    d = numpy.abs(c - cj[:, None])
    d[:, j] = 1.0
    out = 2.0 * numpy.log(d).sum(axis=1)
    if kind is EnsembleKind.UnitarySymplectic:
        out = out + 2.0 * numpy.log(numpy.abs(numpy.sin(value)))
    return out


def _fold(theta):
    # reflect into [0, pi]; the target is even and 2 pi periodic
    theta = numpy.mod(theta, 2.0 * pi)
    return numpy.where(theta > pi, 2.0 * pi - theta, theta)


def _mcmc_states(kind, n, cfg, chains, draws):
    """
    Run the given chains and return their first ``draws`` retained states,
    shape (len(chains), draws, n).
    """

    chains = list(chains)
    gens = [numpy.random.default_rng([int(cfg.seed), 2 ** 32 + c])
            for c in chains]
    theta = numpy.stack([numpy.sort(g.uniform(0, pi, n)) for g in gens])
    sd = 0.5 / n
    out = numpy.empty((len(chains), draws, n))

    def sweep():
        nonlocal theta
        steps = numpy.stack([g.standard_normal(n) for g in gens]) * sd
        logu = numpy.log(numpy.stack([g.uniform(size=n) for g in gens]))
        for j in range(n):
            prop = _fold(theta[:, j] + steps[:, j])
            new = _site_log_weight(kind, theta, j, prop)
            old = _site_log_weight(kind, theta, j, theta[:, j])
            acc = logu[:, j] < new - old
            theta[acc, j] = prop[acc]

    for _ in range(cfg.mcmc_burn_in):
        sweep()
    for d in range(draws):
        for _ in range(cfg.mcmc_thin):
            sweep()
        out[:, d, :] = numpy.sort(theta, axis=1)
    return out


def _mcmc_batch(kind, n, cfg, indices):
    indices = numpy.asarray(indices, dtype=int)
    c = cfg.mcmc_chains
    chain = indices % c
    draw = indices // c
    used = numpy.unique(chain)
    states = _mcmc_states(kind, n, cfg, used, int(draw.max()) + 1)
    pos = numpy.searchsorted(used, chain)
    return numpy.clip(states[pos, draw], ANGLE_CLAMP, pi)


# --------
# Public
# --------

def sample_batch(kind, n, cfg, start, count):
    """
    Eigenangles of samples ``start, ..., start + count - 1``.

    Parameters
    ----------
    kind : EnsembleKind or str
    n : int
        Half the matrix dimension.
    cfg : SamplerConfig
    start, count : int
        Index range.

    Returns
    -------
    numpy.ndarray
        Shape ``(count, n)``, each row sorted ascending in (0, pi].
    """

    kind = EnsembleKind.parse(kind)
    if n < 1:
        raise ValueError("n must be >= 1")
    indices = numpy.arange(start, start + count)
    if cfg.method is SamplerMethod.JpdfMcmc:
        return _mcmc_batch(kind, n, cfg, indices)
    return _matrix_batch(kind, n, cfg.seed, indices)


def sample_so2n(n, cfg, index):
    """
    Eigenangles of one Haar-distributed SO(2n) matrix.

    Deterministic in ``(cfg.seed, index)``.

    Raises
    ------
    EigenPairingError
        If the spectrum does not split into conjugate pairs within 1e-8.
    """

    return SpectrumSample(n, sample_batch(EnsembleKind.SpecialOrthogonalEven,
                                          n, cfg, index, 1)[0])


def sample_usp2n(n, cfg, index):
    """Eigenangles of one Haar-distributed USp(2n) matrix."""

    return SpectrumSample(n, sample_batch(EnsembleKind.UnitarySymplectic,
                                          n, cfg, index, 1)[0])
