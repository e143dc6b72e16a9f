"""Single-site Gibbs sampling of the mixed pinned measure.

Each site update draws pinned-versus-continuous from the exact single-site
conditional (an atom at zero plus a log-concave continuous part), then the
continuous height where needed: closed form for quadratic potentials,
adaptive quadrature plus rejection from the curvature-floor Gaussian
envelope otherwise. Long chains run through the compiled kernel in
_kernels; the pure-Python path here is the reference implementation used
on small volumes and in cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .disorder import DisorderModel, FieldConfig, sample_disorder
from .errors import EnvelopeViolationError, QuadratureError, VolumeTooLargeError
from .exact import ENUMERATION_LIMIT, exact_mixed_solution
from .lattice import Volume
from .model import ModelParams
from .potentials import Potential
from .rng import spawn_seed

_CHAIN_TAG = 0xC4A1
_DISORDER_TAG = 0xD150


@dataclass
class ChainState:
    """Heights plus pinned flags; pinned sites report height exactly zero."""

    phi: np.ndarray
    pinned: np.ndarray
    sweeps: int = 0

    @staticmethod
    def initial(vol: Volume) -> "ChainState":
        return ChainState(phi=np.zeros(vol.n_sites), pinned=np.zeros(vol.n_sites, dtype=bool))

    def heights(self) -> np.ndarray:
        out = self.phi.copy()
        out[self.pinned] = 0.0
        return out


@dataclass(frozen=True)
class MixedLaw:
    """Single-site conditional: atom weight, continuous mass, and sampler.

    atom_weight = epsilon * exp(-local energy at 0); the continuous part is
    exp(-local energy) against Lebesgue measure. For quadratic potentials
    mean and sd describe it exactly; otherwise they hold the minimizer and
    envelope scale used by rejection sampling.
    """

    atom_weight: float
    log_continuous_mass: float
    pin_prob: float
    mean: float
    sd: float
    gaussian: bool
    _energy: callable = field(repr=False, default=None)
    _energy_min: float = field(repr=False, default=0.0)
    _envelope_precision: float = field(repr=False, default=1.0)

    def density(self, x):
        """Unnormalized continuous density exp(-local energy)."""
        return np.exp(-self._energy(x))

    def sample(self, rng: np.random.Generator) -> tuple[bool, float]:
        """Draws (pinned, height); height is 0.0 when pinned."""
        if rng.random() < self.pin_prob:
            return True, 0.0
        if self.gaussian:
            return False, self.mean + self.sd * rng.standard_normal()
        a0 = self._envelope_precision
        for _ in range(100000):
            z = self.mean + rng.standard_normal() / math.sqrt(a0)
            log_ratio = -(self._energy(z) - self._energy_min) + 0.5 * a0 * (z - self.mean) ** 2
            if log_ratio > 1e-9:
                raise EnvelopeViolationError(
                    f"rejection ratio exp({log_ratio:.3e}) > 1: curvature floor too high")
            if math.log(rng.random()) < log_ratio:
                return False, z
        raise EnvelopeViolationError("rejection sampler failed to accept; check c_minus")


def site_conditional(state: ChainState, i: int, params: ModelParams,
                     force_quadrature: bool = False) -> MixedLaw:
    """Exact conditional law at site i given the current neighbor heights."""
    vol, pot = params.volume, params.potential
    nbrs = vol.neighbor_table()[i]
    heights = np.array([state.phi[j] if (j >= 0 and not state.pinned[j]) else 0.0
                        for j in nbrs])
    inv4d = 1.0 / (4.0 * vol.d)
    eta_i = float(params.eta.values[i])
    eps = params.epsilon

    def energy(x):
        return inv4d * float(np.sum(pot.v(x - heights))) - eta_i * x

    e_zero = energy(0.0)
    if pot.is_gaussian and not force_quadrature:
        c = pot.param
        a = 0.5 * c
        b = c * inv4d * float(heights.sum()) + eta_i
        mean = b / a
        log_mass = 0.5 * math.log(2.0 * math.pi / a) + 0.5 * b * b / a - inv4d * c * 0.5 * float(
            np.sum(heights ** 2))
        law_gauss = True
        sd = 1.0 / math.sqrt(a)
        e_min = energy(mean)
        a_env = a
    else:
        # strongly convex local energy: descend to the minimizer, then quadrature
        lip = 0.5 * pot.c_plus
        x = 0.0
        for _ in range(300):
            step = (inv4d * float(np.sum(pot.vp(x - heights))) - eta_i) / lip
            x -= step
            if abs(step) < 1e-14 * (1.0 + abs(x)):
                break
        e_min = energy(x)
        val, err = quad(lambda t: math.exp(-(energy(t) - e_min)), -np.inf, np.inf,
                        epsabs=1e-13, epsrel=1e-10, limit=200)
        if not np.isfinite(val) or val <= 0 or err > 1e-8 * val:
            raise QuadratureError(
                f"single-site mass quadrature failed at site {i}: neighbors {heights}, "
                f"field {eta_i}, estimate {val} +- {err}")
        log_mass = math.log(val) - e_min
        mean = x
        law_gauss = False
        sd = math.sqrt(2.0 / pot.c_minus)
        a_env = 0.5 * pot.c_minus
    if eps == 0.0:
        pin_prob = 0.0
        atom = 0.0
    else:
        atom = eps * math.exp(-e_zero)
        t = math.log(eps) - e_zero - log_mass
        pin_prob = 1.0 / (1.0 + math.exp(-t)) if t >= 0 else math.exp(t) / (1.0 + math.exp(t))
    return MixedLaw(atom_weight=atom, log_continuous_mass=log_mass, pin_prob=pin_prob,
                    mean=mean, sd=sd, gaussian=law_gauss, _energy=energy,
                    _energy_min=e_min, _envelope_precision=a_env)


def gibbs_sweep(state: ChainState, params: ModelParams, rng: np.random.Generator) -> ChainState:
    """One systematic scan in canonical site order; returns the updated state."""
    for i in range(params.volume.n_sites):
        law = site_conditional(state, i, params)
        pinned, value = law.sample(rng)
        state.pinned[i] = pinned
        state.phi[i] = value
    state.sweeps += 1
    return state


@dataclass(frozen=True)
class SamplerConfig:
    sweeps: int
    burnin: int
    thin: int = 1
    batches: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.batches < 8:
            raise ValueError("batch-means estimation needs at least 8 batches")
        if not 0 <= self.burnin < self.sweeps:
            raise ValueError("burn-in must be nonnegative and smaller than sweeps")
        if self.thin < 1:
            raise ValueError("thinning must be >= 1")

    def kept_samples(self) -> tuple[int, int]:
        kept = (self.sweeps - self.burnin) // self.thin
        batch_size = kept // self.batches
        if batch_size < 1:
            raise ValueError("not enough sweeps for the requested batch count")
        return batch_size, self.batches


@dataclass(frozen=True)
class EstimatorResult:
    """Batch-means estimates; arrays are per-site in canonical order."""

    overlap: float
    overlap_se: float
    pinned_fraction: float
    pinned_fraction_se: float
    site_mean: np.ndarray
    site_mean_se: np.ndarray
    site_second_moment: np.ndarray
    site_second_moment_se: np.ndarray
    site_pin_prob: np.ndarray
    site_pin_prob_se: np.ndarray
    batches: int
    sweeps_run: int
    seed: int
    slow_mixing: bool

    @property
    def variance_sum(self) -> float:
        return float(np.sum(self.site_second_moment - self.site_mean ** 2))

    def rows(self):
        """(observable, mean, stderr) triples for serialization."""
        out = [("overlap", self.overlap, self.overlap_se),
               ("pinned_fraction", self.pinned_fraction, self.pinned_fraction_se)]
        for i in range(self.site_mean.shape[0]):
            out.append((f"mean_site{i}", float(self.site_mean[i]), float(self.site_mean_se[i])))
        for i in range(self.site_mean.shape[0]):
            out.append((f"second_moment_site{i}", float(self.site_second_moment[i]),
                        float(self.site_second_moment_se[i])))
        return out


def _batch_stats(batch_means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = batch_means.mean(axis=0)
    se = batch_means.std(axis=0, ddof=1) / math.sqrt(batch_means.shape[0])
    return mean, se


def _halves_disagree(batch_series: np.ndarray) -> bool:
    b = batch_series.shape[0]
    first, second = batch_series[: b // 2], batch_series[b // 2:]
    se = math.sqrt(first.var(ddof=1) / first.shape[0] + second.var(ddof=1) / second.shape[0])
    if se == 0.0:
        return False
    return abs(first.mean() - second.mean()) / se > 5.0


def estimate_observables(params: ModelParams, config: SamplerConfig) -> EstimatorResult:
    """Runs the compiled chain and returns batch-means estimates.

    Deterministic given (params, config): the chain RNG is seeded from
    config.seed alone and the scan order is canonical.
    """
    vol, pot = params.volume, params.potential
    batch_size, n_batches = config.kept_samples()
    nbrs = vol.neighbor_table()
    kind = 0 if pot.is_gaussian else 1
    chain_seed = spawn_seed(config.seed, _CHAIN_TAG)
    bs_phi, bs_phi2, bs_pin, sweeps_run, status = _kernels.run_chain(
        nbrs, params.eta.values, vol.d, kind, pot.param, pot.c_minus, pot.c_plus,
        float(params.epsilon), chain_seed, config.burnin, config.thin,
        batch_size, n_batches)
    if status == _kernels.STATUS_ENVELOPE:
        raise EnvelopeViolationError("chain rejection envelope violated; check c_minus")
    bm_phi = bs_phi / batch_size
    bm_phi2 = bs_phi2 / batch_size
    bm_pin = bs_pin / batch_size
    site_mean, site_mean_se = _batch_stats(bm_phi)
    site_m2, site_m2_se = _batch_stats(bm_phi2)
    site_pin, site_pin_se = _batch_stats(bm_pin)
    overlap_series = bm_phi @ params.eta.values
    overlap, overlap_se = (float(x) for x in _batch_stats(overlap_series[:, None]))
    pf_series = bm_pin.mean(axis=1)
    pf, pf_se = (float(x) for x in _batch_stats(pf_series[:, None]))
    slow = _halves_disagree(overlap_series) or _halves_disagree(pf_series)
    return EstimatorResult(
        overlap=overlap, overlap_se=overlap_se,
        pinned_fraction=pf, pinned_fraction_se=pf_se,
        site_mean=site_mean, site_mean_se=site_mean_se,
        site_second_moment=site_m2, site_second_moment_se=site_m2_se,
        site_pin_prob=site_pin, site_pin_prob_se=site_pin_se,
        batches=n_batches, sweeps_run=int(sweeps_run), seed=config.seed,
        slow_mixing=bool(slow))


def chain_height_samples(params: ModelParams, sweeps: int, burnin: int,
                         thin: int, seed: int) -> np.ndarray:
    """Kept height snapshots from a Gaussian chain, one row per sample."""
    vol, pot = params.volume, params.potential
    if not pot.is_gaussian:
        raise ValueError("height snapshots are implemented for the quadratic potential")
    n_samples = (sweeps - burnin) // thin
    chain_seed = spawn_seed(seed, _CHAIN_TAG)
    return _kernels.run_chain_samples(
        vol.neighbor_table(), params.eta.values, vol.d, pot.param,
        float(params.epsilon), chain_seed, burnin, thin, n_samples)


def chain_pin_pattern_counts(params: ModelParams, sweeps: int, burnin: int,
                             thin: int, seed: int) -> np.ndarray:
    """Histogram over pinned-site bit patterns from a Gaussian chain (n <= 20)."""
    vol, pot = params.volume, params.potential
    if not pot.is_gaussian:
        raise ValueError("pattern histogram is implemented for the quadratic potential")
    if vol.n_sites > 20:
        raise VolumeTooLargeError("pattern histogram needs at most 20 sites")
    n_samples = (sweeps - burnin) // thin
    chain_seed = spawn_seed(seed, _CHAIN_TAG)
    return _kernels.run_chain_pin_patterns(
        vol.neighbor_table(), params.eta.values, vol.d, pot.param,
        float(params.epsilon), chain_seed, burnin, thin, n_samples)


@dataclass(frozen=True)
class DisorderAverageResult:
    """Replica-averaged observables with across-replica standard errors."""

    overlap: float
    overlap_se: float
    pinned_fraction: float
    pinned_fraction_se: float
    variance_sum: float
    variance_sum_se: float
    replica_overlap: np.ndarray
    replica_pinned_fraction: np.ndarray
    replica_variance_sum: np.ndarray
    engine: str
    replicas: int
    master_seed: int


def _replica_spread(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.shape[0])) if values.shape[0] > 1 else 0.0
    return mean, se


def disorder_average(vol: Volume, pot: Potential, epsilon: float, disorder: DisorderModel,
                     replicas: int, master_seed: int, engine: str = "auto",
                     sampler_config: SamplerConfig | None = None,
                     threads: int = 1) -> DisorderAverageResult:
    """Quenched average over independent field replicas.

    Replica r draws its fields from the counter stream keyed by
    (master_seed, r) and is solved exactly when possible (quadratic
    potential and either zero pinning or a volume inside the enumeration
    cutoff), by MCMC otherwise. Results are reduced in replica order, so
    the outcome is independent of the thread count.
    """
    if replicas < 2:
        raise ValueError("disorder averaging needs at least 2 replicas")
    if engine == "auto":
        exact_ok = pot.is_gaussian and (epsilon == 0.0 or vol.n_sites <= ENUMERATION_LIMIT)
        engine = "exact" if exact_ok else "mcmc"
    if engine == "mcmc" and sampler_config is None:
        raise ValueError("mcmc engine needs a SamplerConfig")

    zero_pin_solve = None
    zero_pin_trace = 0.0
    if engine == "exact" and epsilon == 0.0:
        # the covariance is field-independent: factor once, reuse per replica
        from .greens import box_green_stats
        from .precision import green_matrix, precision_matrix
        A = precision_matrix(vol, (), pot.param)
        if A.dense is not None:
            full = green_matrix(A).full
            zero_pin_solve = full.__matmul__
            zero_pin_trace = float(np.trace(full))
        elif vol.box_radius is not None:
            import scipy.sparse.linalg as spla
            lu = spla.splu(A.sparse.tocsc())
            zero_pin_solve = lu.solve
            stats = box_green_stats(vol.d, vol.box_radius, pot.param)
            zero_pin_trace = stats.avg_diagonal * vol.n_sites
        else:
            raise VolumeTooLargeError(
                "zero-pinning exact averaging beyond the dense limit supports boxes only")

    def one(r: int):
        eta = sample_disorder(disorder, vol, spawn_seed(master_seed, _DISORDER_TAG, r))
        if zero_pin_solve is not None:
            mean = zero_pin_solve(eta.values)
            return float(eta.values @ mean), 0.0, zero_pin_trace
        if engine == "exact":
            sol = exact_mixed_solution(vol, eta, epsilon, curvature=pot.param)
            return sol.overlap, sol.pinned_fraction, sol.variance_sum
        cfg = SamplerConfig(sweeps=sampler_config.sweeps, burnin=sampler_config.burnin,
                            thin=sampler_config.thin, batches=sampler_config.batches,
                            seed=spawn_seed(master_seed, _CHAIN_TAG, r))
        est = estimate_observables(ModelParams(vol, pot, epsilon, eta), cfg)
        return est.overlap, est.pinned_fraction, est.variance_sum

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(replicas)))
    else:
        results = [one(r) for r in range(replicas)]
    ov = np.asarray([x[0] for x in results])
    pf = np.asarray([x[1] for x in results])
    vs = np.asarray([x[2] for x in results])
    o_m, o_se = _replica_spread(ov)
    p_m, p_se = _replica_spread(pf)
    v_m, v_se = _replica_spread(vs)
    return DisorderAverageResult(
        overlap=o_m, overlap_se=o_se, pinned_fraction=p_m, pinned_fraction_se=p_se,
        variance_sum=v_m, variance_sum_se=v_se,
        replica_overlap=ov, replica_pinned_fraction=pf, replica_variance_sum=vs,
        engine=engine, replicas=replicas, master_seed=master_seed)
