import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import qmc_mixed_estimate
from pinfield import (ChainState, DisorderModel, FieldConfig, MixedLaw, ModelParams,
                      SamplerConfig, anharmonic_potential, chain_height_samples,
                      chain_pin_pattern_counts, disorder_average, estimate_observables,
                      exact_mixed_solution, gaussian_potential, gibbs_sweep, green_matrix,
                      make_box, make_grid, precision_matrix, site_conditional)
from pinfield import _kernels
from pinfield.errors import EnvelopeViolationError

SQRT_PI = np.sqrt(np.pi)


def _params(vol, pot, eps, eta):
    return ModelParams(vol, pot, eps, FieldConfig(np.asarray(eta, dtype=np.float64)))


class TestSiteConditional:
    def test_single_site_zero_field(self, single_site, unit_potential):
        params = _params(single_site, unit_potential, 1.0, [0.0])
        law = site_conditional(ChainState.initial(single_site), 0, params)
        assert law.pin_prob == pytest.approx(1 / (1 + 2 * SQRT_PI), rel=1e-12)
        assert law.mean == 0.0
        assert law.sd ** 2 == pytest.approx(2.0, rel=1e-12)

    def test_single_site_no_atom(self, single_site, unit_potential):
        params = _params(single_site, unit_potential, 0.0, [0.0])
        law = site_conditional(ChainState.initial(single_site), 0, params)
        assert law.pin_prob == 0.0 and law.atom_weight == 0.0

    def test_single_site_tilted(self, single_site, unit_potential):
        params = _params(single_site, unit_potential, 1.0, [0.5])
        law = site_conditional(ChainState.initial(single_site), 0, params)
        assert law.mean == pytest.approx(1.0, rel=1e-12)
        assert law.pin_prob == pytest.approx(1 / (1 + 2 * SQRT_PI * np.exp(0.25)), rel=1e-12)

    def test_neighbor_heights_enter(self, domino, unit_potential):
        params = _params(domino, unit_potential, 0.5, [0.0, 0.0])
        state = ChainState.initial(domino)
        state.phi[1] = 2.0
        law = site_conditional(state, 0, params)
        # b = (1/8) * 2.0, precision 1/2
        assert law.mean == pytest.approx(0.5, rel=1e-12)
        state.pinned[1] = True
        law_pinned = site_conditional(state, 0, params)
        assert law_pinned.mean == 0.0

    def test_quadrature_route_matches_analytic(self, box_3x3, unit_potential, rng):
        eta = rng.normal(size=9)
        params = _params(box_3x3, unit_potential, 0.8, eta)
        state = ChainState.initial(box_3x3)
        state.phi[:] = rng.normal(size=9)
        for i in (0, 4, 8):
            analytic = site_conditional(state, i, params)
            numeric = site_conditional(state, i, params, force_quadrature=True)
            assert numeric.log_continuous_mass == pytest.approx(
                analytic.log_continuous_mass, abs=1e-9)
            assert numeric.pin_prob == pytest.approx(analytic.pin_prob, abs=1e-9)

    def test_anharmonic_mass_against_dense_grid(self, single_site):
        pot = anharmonic_potential(0.5)
        params = _params(single_site, pot, 1.0, [0.4])
        law = site_conditional(ChainState.initial(single_site), 0, params)
        x = np.linspace(-40, 40, 400_001)
        riemann = np.trapezoid(law.density(x), x)
        assert np.exp(law.log_continuous_mass) == pytest.approx(riemann, rel=1e-9)

    def test_envelope_violation_detected(self):
        law = MixedLaw(atom_weight=0.0, log_continuous_mass=0.0, pin_prob=0.0,
                       mean=0.0, sd=1.0, gaussian=False,
                       _energy=lambda x: 0.01 * x * x, _energy_min=0.0,
                       _envelope_precision=5.0)
        with pytest.raises(EnvelopeViolationError):
            for _ in range(50):
                law.sample(np.random.default_rng(0))


class TestReferenceSweep:
    def test_single_site_pin_frequency(self, single_site, unit_potential):
        params = _params(single_site, unit_potential, 1.0, [0.0])
        state = ChainState.initial(single_site)
        rng = np.random.default_rng(2)
        hits = 0
        n = 20_000
        for _ in range(n):
            gibbs_sweep(state, params, rng)
            hits += int(state.pinned[0])
        p = 1 / (1 + 2 * SQRT_PI)
        se = np.sqrt(p * (1 - p) / n)  # single-site draws are independent
        assert abs(hits / n - p) <= 3 * se

    def test_sweep_counter_and_pinned_heights(self, domino, unit_potential):
        params = _params(domino, unit_potential, 5.0, [0.0, 0.0])
        state = ChainState.initial(domino)
        rng = np.random.default_rng(3)
        for _ in range(50):
            gibbs_sweep(state, params, rng)
        assert state.sweeps == 50
        assert (state.phi[state.pinned] == 0.0).all()

    def test_anharmonic_sweep_runs(self, domino):
        params = _params(domino, anharmonic_potential(0.5), 0.5, [0.2, -0.1])
        state = ChainState.initial(domino)
        rng = np.random.default_rng(4)
        for _ in range(200):
            gibbs_sweep(state, params, rng)
        assert np.isfinite(state.phi).all()


class TestKernelChain:
    def test_matches_exact_small_run(self, box_3x3, unit_potential):
        eta = np.random.default_rng(7).normal(size=9)
        params = _params(box_3x3, unit_potential, 0.5, eta)
        est = estimate_observables(params, SamplerConfig(
            sweeps=120_000, burnin=4_000, batches=16, seed=11))
        sol = exact_mixed_solution(box_3x3, eta, 0.5)
        assert abs(est.overlap - sol.overlap) <= 3 * est.overlap_se
        assert abs(est.pinned_fraction - sol.pinned_fraction) <= 3 * est.pinned_fraction_se

    def test_zero_field_means_vanish(self, box_3x3, unit_potential):
        params = _params(box_3x3, unit_potential, 0.0, np.zeros(9))
        est = estimate_observables(params, SamplerConfig(
            sweeps=60_000, burnin=2_000, batches=16, seed=5))
        assert (np.abs(est.site_mean) <= 3 * est.site_mean_se).all()
        assert est.pinned_fraction == 0.0
        assert not est.slow_mixing

    def test_domino_pin_patterns(self, domino, unit_potential):
        params = _params(domino, unit_potential, 1.0, np.zeros(2))
        counts = chain_pin_pattern_counts(params, sweeps=205_000, burnin=5_000,
                                          thin=1, seed=9)
        sol = exact_mixed_solution(domino, np.zeros(2), 1.0)
        z = np.exp(sol.log_z)
        z_dom = 2 * np.pi / np.sqrt(15 / 64)
        probs = np.array([z_dom, 2 * SQRT_PI, 2 * SQRT_PI, 1.0]) / z
        result = chisquare(counts, probs * counts.sum())
        assert result.pvalue > 0.001

    def test_covariance_recovery(self, box_3x3, unit_potential):
        params = _params(box_3x3, unit_potential, 0.0, np.zeros(9))
        samples = chain_height_samples(params, sweeps=164_000, burnin=4_000,
                                       thin=1, seed=13)
        G = green_matrix(precision_matrix(box_3x3, (), 1.0)).full
        batches = samples.reshape(16, -1, 9)
        covs = np.stack([np.einsum("ti,tj->ij", b, b) / b.shape[0] for b in batches])
        est = covs.mean(axis=0)
        se = covs.std(axis=0, ddof=1) / np.sqrt(covs.shape[0])
        assert (np.abs(est - G) <= 4 * se).all()

    def test_bit_identical_reruns(self, box_3x3, unit_potential):
        eta = np.random.default_rng(1).normal(size=9)
        params = _params(box_3x3, unit_potential, 0.7, eta)
        cfg = SamplerConfig(sweeps=20_000, burnin=1_000, batches=16, seed=42)
        a = estimate_observables(params, cfg)
        b = estimate_observables(params, cfg)
        assert a.overlap == b.overlap
        assert (a.site_mean == b.site_mean).all()
        assert (a.site_second_moment == b.site_second_moment).all()

    def test_envelope_status_from_wrong_floor(self, domino):
        # kappa-family curvature dips to 0.2 at large heights; a floor of 0.9
        # makes the rejection envelope invalid and the kernel must say so
        nbrs = domino.neighbor_table()
        out = _kernels.run_chain(nbrs, np.zeros(2), 2, 1, 0.2, 0.9, 1.0, 123,
                                 10, 1, 100, 8)
        assert out[-1] == _kernels.STATUS_ENVELOPE

    def test_thinning_and_sweep_accounting(self, domino, unit_potential):
        params = _params(domino, unit_potential, 0.5, np.zeros(2))
        cfg = SamplerConfig(sweeps=10_000, burnin=1_000, thin=3, batches=8, seed=1)
        est = estimate_observables(params, cfg)
        batch_size = (10_000 - 1_000) // 3 // 8
        assert est.sweeps_run == 1_000 + 3 * batch_size * 8


class TestSamplerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(sweeps=100, burnin=10, batches=4)
        with pytest.raises(ValueError):
            SamplerConfig(sweeps=100, burnin=100, batches=8)
        with pytest.raises(ValueError):
            SamplerConfig(sweeps=100, burnin=10, thin=0)
        with pytest.raises(ValueError):
            SamplerConfig(sweeps=9, burnin=0, batches=8).kept_samples()


@pytest.mark.slow
class TestAnharmonicAgainstQmc:
    def test_overlap_matches_oracle(self, box_3x3):
        pot = anharmonic_potential(0.5)
        eta = np.random.default_rng(7).normal(size=9)
        oracle = qmc_mixed_estimate(box_3x3, pot, eta, 0.5, scrambles=12,
                                    points_per=1 << 23, seed=5)
        params = _params(box_3x3, pot, 0.5, eta)
        est = estimate_observables(params, SamplerConfig(
            sweeps=150_000, burnin=5_000, batches=16, seed=33))
        tol = 3 * np.hypot(est.overlap_se, oracle.overlap_se)
        assert abs(est.overlap - oracle.overlap) <= tol
        tol_pf = 3 * np.hypot(est.pinned_fraction_se, oracle.pinned_fraction_se)
        assert abs(est.pinned_fraction - oracle.pinned_fraction) <= tol_pf


class TestDisorderAverage:
    def test_zero_disorder_exact_zero(self, box_3x3, unit_potential):
        res = disorder_average(box_3x3, unit_potential, 0.5, DisorderModel("zero"),
                               replicas=4, master_seed=1, engine="exact")
        assert res.overlap == 0.0 and res.overlap_se == 0.0

    def test_matches_green_trace_at_zero_pinning(self, unit_potential):
        vol = make_grid((4, 4))
        res = disorder_average(vol, unit_potential, 0.0,
                               DisorderModel("gaussian", sigma=1.0),
                               replicas=200, master_seed=3, engine="exact")
        trace = float(np.trace(green_matrix(precision_matrix(vol, (), 1.0)).full))
        assert abs(res.overlap - trace) <= 3 * res.overlap_se
        assert res.variance_sum == pytest.approx(trace, rel=1e-12)

    def test_rademacher_sign_flip_pairs(self, box_3x3):
        eta = np.where(np.random.default_rng(0).random(9) < 0.5, -0.7, 0.7)
        plus = exact_mixed_solution(box_3x3, eta, 1.0)
        minus = exact_mixed_solution(box_3x3, -eta, 1.0)
        assert float(np.dot(eta, plus.mean)) == pytest.approx(
            float(np.dot(-eta, minus.mean)), rel=1e-12)

    def test_thread_count_invariance(self, box_3x3, unit_potential):
        model = DisorderModel("gaussian", sigma=1.0)
        kw = dict(epsilon=0.5, disorder=model, replicas=16, master_seed=11,
                  engine="exact")
        a = disorder_average(box_3x3, unit_potential, **kw, threads=1)
        b = disorder_average(box_3x3, unit_potential, **kw, threads=4)
        assert (a.replica_overlap == b.replica_overlap).all()
        assert a.overlap == b.overlap

    def test_mcmc_engine_and_determinism(self, domino):
        pot = anharmonic_potential(0.5)
        cfg = SamplerConfig(sweeps=4_000, burnin=500, batches=8, seed=0)
        model = DisorderModel("rademacher", h=0.5)
        a = disorder_average(domino, pot, 0.5, model, replicas=3, master_seed=2,
                             engine="mcmc", sampler_config=cfg)
        b = disorder_average(domino, pot, 0.5, model, replicas=3, master_seed=2,
                             engine="mcmc", sampler_config=cfg, threads=3)
        assert (a.replica_overlap == b.replica_overlap).all()

    def test_replica_floor(self, box_3x3, unit_potential):
        with pytest.raises(ValueError):
            disorder_average(box_3x3, unit_potential, 0.5, DisorderModel("zero"),
                             replicas=1, master_seed=0)
