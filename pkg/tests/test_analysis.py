import math

import numpy as np
import pytest

import hardlattice as hl
from hardlattice import analysis as A
from hardlattice import geometry
from hardlattice.configuration import standard_config
from hardlattice.sampler import SamplerParams

SQRT3 = math.sqrt(3.0)


def _margin_objective(a1, a2, a3):
    lam = geometry.heron_area(a1, a2, a3)
    dev = (a1 - 1.0) + (a2 - 1.0) + (a3 - 1.0)
    return lam - SQRT3 / 4.0 - dev / (4.0 * SQRT3)


class TestEpsilonCertification:
    def test_objective_vanishes_at_unit_corner(self):
        assert _margin_objective(1.0, 1.0, 1.0) == 0.0

    def test_default_window_certifies(self):
        margin = A.epsilon_margin(0.1, 64)
        assert margin > 0.0
        cert = A.certify_epsilon(0.1, 64)
        assert cert.certified
        assert cert.lipschitz_slack > 0.0
        assert cert.grid_margin > cert.margin

    def test_wide_window_fails_with_negative_grid_margin(self):
        margin = A.epsilon_margin(1.0, 64)
        assert margin <= 0.0
        assert not A.certify_epsilon(1.0, 64).certified

    def test_certified_margin_is_a_true_lower_bound_on_random_triples(self, rng):
        cert = A.certify_epsilon(0.1, 64)
        for _ in range(20_000):
            a = 1.0 + 0.1 * rng.random(3)
            dev = float(np.sum(a - 1.0))
            if dev == 0.0:
                continue
            q = _margin_objective(*a) / dev
            assert q >= cert.margin - 1e-12

    def test_margin_ladder_monotone_nonincreasing(self):
        margins = [A.certify_epsilon(e, 64).grid_margin for e in (0.05, 0.1, 0.2)]
        assert margins[0] >= margins[1] >= margins[2]

    def test_grid_too_coarse_raises(self):
        with pytest.raises(A.CertificationError):
            A.epsilon_margin(0.2, 64)

    def test_finer_grid_certifies_wider_window(self):
        assert A.epsilon_margin(0.2, 512) > 0.0

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            A.epsilon_margin(0.1, 32)

    def test_hessian_bound_unavailable_at_degenerate_window(self):
        with pytest.raises(A.CertificationError):
            A._hessian_bound(1.0)

    def test_hessian_bound_dominates_sampled_hessians(self, rng):
        # central finite differences of the area function stay below the
        # interval bound everywhere in the box
        eps = 0.1
        bound = A._hessian_bound(eps)
        h = 1e-5
        for _ in range(200):
            a = 1.0 + eps * rng.random(3)
            H = np.empty((3, 3))
            for i in range(3):
                for j in range(3):
                    aij = a.copy()

                    def f(da_i, da_j, aij=aij, i=i, j=j):
                        b = aij.copy()
                        b[i] += da_i
                        b[j] += da_j
                        return geometry.heron_area(*b)

                    H[i, j] = (
                        f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)
                    ) / (4 * h * h)
            assert np.sqrt(np.sum(H * H)) <= bound + 1e-3


class TestSquaredBound:
    def test_zero_violations_on_certified_window(self):
        rep = A.verify_squared_bound(0.1, n_samples=100_000, seed=0)
        assert rep.ok
        assert rep.n_violations == 0
        assert rep.scalar_ok
        assert rep.min_margin > 0.0

    def test_boundary_triple_holds(self):
        eps = 0.1
        a = (1.0 + eps, 1.0 + eps, 1.0 + eps)
        lhs = sum((x - 1.0) ** 2 for x in a)
        rhs = 4.0 * SQRT3 * eps * (geometry.heron_area(*a) - SQRT3 / 4.0)
        assert lhs <= rhs

    def test_both_sides_vanish_at_unit_corner(self):
        a = (1.0 + 1e-12, 1.0 + 1e-12, 1.0 + 1e-12)
        lhs = sum((x - 1.0) ** 2 for x in a)
        rhs = 4.0 * SQRT3 * 0.1 * (geometry.heron_area(*a) - SQRT3 / 4.0)
        assert lhs < 1e-20 and abs(rhs) < 1e-10

    def test_requires_certified_window(self):
        with pytest.raises(A.CertificationError):
            A.verify_squared_bound(1.0, n_samples=10)


class TestRigidityConstant:
    def test_conformal_scaling_pins_ratio_two(self):
        # rotations of l*Id deviate by l-1 on every direction and sit at
        # squared distance 2(l-1)^2, so the supremum is at least 2
        l = 1.04
        A_mat = geometry.rotation(0.7) @ (l * np.eye(2))
        dist2 = geometry.dist_so2(A_mat) ** 2
        dev = abs(l - 1.0)
        assert abs(dist2 / dev**2 - 2.0) < 1e-9

    def test_estimate_exceeds_two_and_is_finite(self):
        est = A.estimate_rigidity_constant(n_samples=100_000, deviation_cap=0.1, seed=0)
        assert est.n_samples == 100_000
        assert 2.0 <= est.c_hat < 50.0

    def test_stable_across_seeds(self):
        vals = [
            A.estimate_rigidity_constant(n_samples=200_000, deviation_cap=0.1, seed=s).c_hat
            for s in (0, 1, 2)
        ]
        assert (max(vals) - min(vals)) / min(vals) < 0.05

    def test_monotone_in_cap(self):
        small = A.estimate_rigidity_constant(n_samples=100_000, deviation_cap=0.05, seed=0).c_hat
        large = A.estimate_rigidity_constant(n_samples=100_000, deviation_cap=0.2, seed=0).c_hat
        assert small <= large

    def test_rejects_bad_cap(self):
        with pytest.raises(ValueError):
            A.estimate_rigidity_constant(n_samples=10, deviation_cap=0.0)


@pytest.fixture(scope="module")
def c_hat():
    return A.estimate_rigidity_constant(n_samples=300_000, deviation_cap=0.1, seed=0).c_hat


class TestEstimateChain:
    def test_standard_config_closed_forms(self, c_hat):
        N, l, eps = 4, 1.05, 0.1
        cfg = standard_config(N, l, eps)
        rep = A.check_estimate_chain(cfg, c_hat)
        assert rep.ok
        # the side-sum vs area check reduces to 3N^2(l-1)^2 <= 6N^2 eps (l^2-1)
        expected = 4.0 * SQRT3 * eps * (2 * N * N * (SQRT3 / 4) * (l * l - 1)) - 3 * N * N * (
            l - 1
        ) ** 2
        assert abs(rep.side_sum_vs_area_margin - expected) < 1e-9

    def test_passes_on_samples(self, sample_snapshots, c_hat):
        for snap in sample_snapshots[::5]:
            rep = A.check_estimate_chain(snap, c_hat)
            assert rep.ok, rep

    def test_passes_near_window_edge(self, c_hat):
        # push bonds toward the upper edge of the window
        res = hl.run_chain(2, 1.09, 0.1, SamplerParams(sweeps=400, burn_in=100, thin=2, seed=5))
        for snap in res.records[::10]:
            assert A.check_estimate_chain(snap, c_hat).ok


class TestBatchMeans:
    def test_iid_standard_error(self, rng):
        x = rng.standard_normal(20_000)
        mean, se = A.batch_means(x)
        assert abs(mean) < 5 * se
        assert 0.5 / math.sqrt(20_000) < se < 2.0 / math.sqrt(20_000)

    def test_requires_enough_samples(self):
        with pytest.raises(ValueError):
            A.batch_means(np.arange(10.0))

    def test_autocorrelation_time_of_iid_series_is_small(self, rng):
        tau = A.integrated_autocorrelation_time(rng.standard_normal(5000))
        assert 0.5 < tau < 2.0


class TestAgreementOracles:
    def test_dist_so2_agreement_small(self):
        assert A.dist_so2_agreement(500, 3600, seed=1) <= 2e-3

    def test_heron_cross_agreement_small(self):
        assert A.heron_cross_agreement(2000, seed=1) <= 1e-12


class TestScan:
    def test_smoke_grid(self):
        params = SamplerParams(sweeps=600, burn_in=100, thin=5, seed=0)
        records = A.scan([2, 4], [1.01, 1.05], 0.1, params, master_seed=7)
        assert len(records) == 4
        assert [(r.N, r.l) for r in records] == [(2, 1.01), (2, 1.05), (4, 1.01), (4, 1.05)]
        for rec in records:
            assert rec.identities_ok
            assert rec.n_samples == 120
            assert 0.0 < rec.acceptance_rate < 1.0
            assert rec.se_op_id > 0.0

    def test_deterministic_given_seed(self):
        params = SamplerParams(sweeps=600, burn_in=100, thin=5, seed=0)
        a = A.scan([2], [1.05], 0.1, params, master_seed=42)
        b = A.scan([2], [1.05], 0.1, params, master_seed=42)
        assert A.scan_csv_text(a) == A.scan_csv_text(b)

    def test_thread_count_does_not_change_results(self):
        params = SamplerParams(sweeps=600, burn_in=100, thin=5, seed=0)
        seq = A.scan([2, 4], [1.05], 0.1, params, master_seed=5, threads=1)
        par = A.scan([2, 4], [1.05], 0.1, params, master_seed=5, threads=2)
        assert A.scan_csv_text(seq) == A.scan_csv_text(par)

    def test_rejects_side_length_outside_window(self):
        params = SamplerParams(sweeps=600, burn_in=0, thin=5, seed=0)
        with pytest.raises(ValueError):
            A.scan([2], [1.2], 0.1, params)

    def test_rejects_uncertified_window(self):
        params = SamplerParams(sweeps=600, burn_in=0, thin=5, seed=0)
        with pytest.raises(A.CertificationError):
            A.scan([2], [1.05], 0.2, params, certification_grid=64)

    def test_requires_enough_samples(self):
        params = SamplerParams(sweeps=100, burn_in=0, thin=5, seed=0)
        with pytest.raises(ValueError):
            A.scan([2], [1.05], 0.1, params)

    def test_csv_layout(self):
        params = SamplerParams(sweeps=600, burn_in=100, thin=5, seed=0)
        text = A.scan_csv_text(A.scan([2], [1.05], 0.1, params, master_seed=1))
        lines = text.strip().splitlines()
        assert lines[0] == ",".join(A.CSV_COLUMNS)
        assert len(lines) == 2
        cells = lines[1].split(",")
        assert cells[0] == "2" and cells[-1] in ("true", "false")
