import cmath
import math

import numpy as np
import pytest

from pronydec import (
    PronyModel,
    SamplingScheme,
    ValidationError,
    add_noise,
    condition_estimate,
    evaluate_moments,
    jacobian,
    moment_at,
    regularity_check,
)
from pronydec.fourier import induced_prony_model


def scalar_moments(model, ks):
    """Independent oracle: plain double loop, no vectorization shared with the library."""
    out = []
    for k in ks:
        total = 0j
        for theta, coeffs in zip(model.node_args, model.coefficients):
            poly = sum(c * k**l for l, c in enumerate(coeffs))
            total += cmath.exp(1j * theta * k) * poly
        out.append(total)
    return out


class TestEvaluateMoments:
    def test_linear_amplitude(self):
        # z = 1, Q(k) = 1 + k  ->  m_k = 1 + k
        m = PronyModel([1.0], [2], [[1.0, 1.0]])
        values = evaluate_moments(m, SamplingScheme(0, 1, 4)).values
        assert values == (1 + 0j, 2 + 0j, 3 + 0j, 4 + 0j)

    def test_alternating(self):
        m = PronyModel([-1.0], [1], [[1.0]])
        values = evaluate_moments(m, SamplingScheme(0, 1, 4)).values
        for got, want in zip(values, (1, -1, 1, -1)):
            assert abs(got - want) < 1e-14

    def test_two_node_oracle(self):
        m = PronyModel(
            [cmath.exp(1j * math.pi / 4), cmath.exp(-1j * math.pi / 3)],
            [1, 1],
            [[1.0], [1.0]],
        )
        scheme = SamplingScheme(3, 5, 4)
        got = evaluate_moments(m, scheme).values
        want = scalar_moments(m, [3, 8, 13, 18])
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-12

    def test_linearity_in_coefficients(self):
        rng = np.random.default_rng(5)
        nodes = [cmath.exp(1j * a) for a in rng.uniform(-math.pi, math.pi, 2)]
        c1 = [[complex(*rng.normal(size=2)), complex(*rng.normal(size=2))], [complex(*rng.normal(size=2))]]
        c2 = [[complex(*rng.normal(size=2)), complex(*rng.normal(size=2))], [complex(*rng.normal(size=2))]]
        scheme = SamplingScheme(0, 2, 6)
        ma = evaluate_moments(PronyModel(nodes, [2, 1], c1), scheme).values
        mb = evaluate_moments(PronyModel(nodes, [2, 1], c2), scheme).values
        csum = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(c1, c2)]
        mc = evaluate_moments(PronyModel(nodes, [2, 1], csum), scheme).values
        for a, b, c in zip(ma, mb, mc):
            assert abs((a + b) - c) < 1e-10

    def test_index_limit_enforced(self):
        m = PronyModel([1.0], [1], [[1.0]])
        with pytest.raises(ValidationError):
            evaluate_moments(m, SamplingScheme(0, 10**7, 2))

    def test_real_signal_conjugate_symmetry(self):
        # model induced by real jump data satisfies m_{-k} = conj(m_k)
        model = induced_prony_model([0.7, -1.9], [[2.0, -1.5], [0.3, 0.4]], 1)
        for k in [1, 5, 17]:
            assert abs(moment_at(model, -k) - moment_at(model, k).conjugate()) < 1e-12


class TestJacobian:
    def test_single_row_by_hand(self):
        # K=1, z=1, mult 1, c0=2: row at k=3 is (dm/dc0, dm/dz) = (1, 6)
        m = PronyModel([1.0], [1], [[2.0]])
        jac = jacobian(m, SamplingScheme(3, 1, 1))
        assert jac.shape == (1, 2)
        assert jac[0, 0] == pytest.approx(1.0)
        assert jac[0, 1] == pytest.approx(6.0)

    def test_zero_index_kills_node_column(self):
        m = PronyModel(
            [cmath.exp(0.4j), cmath.exp(-1.1j)], [2, 1], [[1.0, 2.0], [3.0]]
        )
        jac = jacobian(m, SamplingScheme(0, 3, 4))
        # node-derivative columns close each block: (c00, c10, z0, c01, z1)
        assert jac[0, 2] == 0.0
        assert jac[0, 4] == 0.0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        args = [0.5, -2.0]
        mults = [2, 1]
        coeffs = [
            [complex(*rng.normal(size=2)) for _ in range(m)] for m in mults
        ]
        model = PronyModel([cmath.exp(1j * a) for a in args], mults, coeffs)
        scheme = SamplingScheme(1, 3, 6)
        jac = jacobian(model, scheme)
        h = 1e-6

        def moments_of(nodes, cs):
            return np.asarray(
                evaluate_moments(PronyModel(nodes, mults, cs), scheme).values
            )

        col = 0
        for j, m in enumerate(mults):
            for l in range(m):
                for direction in (1.0, 1.0j):
                    cp = [list(row) for row in coeffs]
                    cm = [list(row) for row in coeffs]
                    cp[j][l] += h * direction
                    cm[j][l] -= h * direction
                    fd = (moments_of(model.nodes, cp) - moments_of(model.nodes, cm)) / (2 * h)
                    analytic = jac[:, col] * direction
                    scale = np.max(np.abs(analytic)) + 1.0
                    assert np.max(np.abs(fd - analytic)) / scale < 1e-5
                col += 1
            # node derivative via the argument (keeps the node on the circle):
            # dm/dtheta = dm/dz * iz
            ap = [cmath.exp(1j * (a + (h if i == j else 0.0))) for i, a in enumerate(args)]
            am = [cmath.exp(1j * (a - (h if i == j else 0.0))) for i, a in enumerate(args)]
            fd = (moments_of(ap, coeffs) - moments_of(am, coeffs)) / (2 * h)
            analytic = jac[:, col] * (1j * model.nodes[j])
            scale = np.max(np.abs(analytic))
            assert np.max(np.abs(fd - analytic)) / scale < 1e-5
            col += 1


class TestRegularity:
    def test_aliased_under_squaring(self):
        m = PronyModel([1.0, -1.0], [1, 1], [[1.0], [1.0]])
        report = regularity_check(m, 2)
        assert not report
        assert report.node_pair_violations

    def test_regular_at_stride_one(self):
        m = PronyModel([1.0, -1.0], [1, 1], [[1.0], [1.0]])
        assert regularity_check(m, 1)

    def test_vanishing_leading_coefficient(self):
        m = PronyModel([1.0], [2], [[1.0, 0.0]])
        for p in (1, 2, 7):
            report = regularity_check(m, p)
            assert not report
            assert report.coefficient_violations == ((0, 0.0),)

    def test_distinct_nodes_regular(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            args = rng.uniform(-math.pi, math.pi, size=3)
            if min(
                abs(args[i] - args[j]) for i in range(3) for j in range(i + 1, 3)
            ) < 1e-3:
                continue
            m = PronyModel(
                [cmath.exp(1j * a) for a in args], [1, 1, 1],
                [[1.0], [1.0 + 1j], [2.0]],
            )
            assert regularity_check(m, 1)


class TestConditionEstimate:
    def test_two_by_two_by_hand(self):
        # Jacobian ((1,0),(1,1)); inverse ((1,0),(-1,1)); max row sum = 2
        m = PronyModel([1.0], [1], [[1.0]])
        assert condition_estimate(m, SamplingScheme(0, 1, 2)) == pytest.approx(2.0)

    def test_non_regular_point_rejected(self):
        m = PronyModel([1.0, -1.0], [1, 1], [[1.0], [1.0]])
        with pytest.raises(ValidationError):
            condition_estimate(m, SamplingScheme(0, 2, 4))

    def test_grows_as_nodes_approach(self):
        estimates = []
        for delta in (1e-1, 1e-2, 1e-3):
            m = PronyModel(
                [cmath.exp(1j * delta / 2), cmath.exp(-1j * delta / 2)],
                [1, 1],
                [[1.0], [1.0]],
            )
            estimates.append(condition_estimate(m, SamplingScheme(0, 1, 4)))
        assert estimates[0] < estimates[1] < estimates[2]

    def test_requires_square_system(self):
        m = PronyModel([1.0], [1], [[1.0]])
        with pytest.raises(ValidationError):
            condition_estimate(m, SamplingScheme(0, 1, 5))


class TestAddNoise:
    def _samples(self, n=16):
        m = PronyModel([cmath.exp(0.3j)], [1], [[1.0]])
        return evaluate_moments(m, SamplingScheme(0, 1, n))

    def test_zero_noise_identity(self):
        s = self._samples()
        assert add_noise(s, 0.0, 123).values == s.values

    def test_deterministic(self):
        s = self._samples()
        assert add_noise(s, 1e-3, 7).values == add_noise(s, 1e-3, 7).values
        assert add_noise(s, 1e-3, 7).values != add_noise(s, 1e-3, 8).values

    def test_disk_statistics(self):
        m = PronyModel([1.0], [1], [[0.0]])
        s = evaluate_moments(m, SamplingScheme(0, 1, 10_000))
        eps = 1e-3
        noisy = add_noise(s, eps, 99)
        radii = np.abs(np.asarray(noisy.values))
        assert float(radii.max()) <= eps
        assert float(radii.max()) >= 0.95 * eps

    def test_noise_level_recorded(self):
        assert add_noise(self._samples(), 2e-4, 0).noise_level == 2e-4

    def test_gaussian_flag(self):
        s = self._samples()
        g = add_noise(s, 1e-3, 5, distribution="gaussian")
        assert g.values != add_noise(s, 1e-3, 5).values

    def test_negative_eps_rejected(self):
        with pytest.raises(ValidationError):
            add_noise(self._samples(), -1.0, 0)
