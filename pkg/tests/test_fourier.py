import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

import pronydec as pd
from pronydec import (
    CoefficientWindow,
    PiecewiseSignal,
    SamplingScheme,
    ValidationError,
    build_mollifier,
    circle_distance,
    eckhoff_transform,
    evaluate_absorbing,
    evaluate_moments,
    identity_mollifier,
    induced_prony_model,
    initial_jump_estimates,
    localize,
    magnitudes_from_coefficients,
    partial_sum,
    piecewise_poly_coeffs,
    random_piecewise_signal,
    reconstruct,
    signal_coeffs,
    sup_error_away,
)
from pronydec.fourier import jump_basis_eval, read_window_file, write_window_file


def sawtooth_window(bandwidth):
    """Exact window of f(x) = x: single jump of -2*pi at pi, coefficients i(-1)^k / k."""
    ks = np.arange(1, bandwidth + 1)
    pos = 1j * (-1.0) ** ks / ks
    coeffs = np.zeros(2 * bandwidth + 1, dtype=complex)
    coeffs[bandwidth + 1:] = pos
    coeffs[:bandwidth] = np.conj(pos[::-1])
    return CoefficientWindow(coeffs, bandwidth)


SAWTOOTH_JUMPS = [math.pi - 1e-12]  # position domain is [-pi, pi)
SAWTOOTH_MAGS = [[-2 * math.pi]]


class TestPiecewisePolyCoeffs:
    def test_sawtooth_closed_form(self):
        ks = np.arange(1, 201)
        got = piecewise_poly_coeffs([math.pi], SAWTOOTH_MAGS, 0, ks)
        want = 1j * (-1.0) ** ks / ks
        assert np.max(np.abs(got - want)) < 1e-14

    def test_zero_magnitudes(self):
        got = piecewise_poly_coeffs([0.5, -0.5], [[0.0, 0.0], [0.0, 0.0]], 1, [1, 2, 3])
        assert np.all(got == 0)

    def test_k_zero_rejected(self):
        with pytest.raises(ValidationError):
            piecewise_poly_coeffs([0.5], [[1.0]], 0, [0, 1])

    def test_two_jump_quadrature_oracle(self):
        # integrate the closed-form absorbing polynomial directly, splitting the
        # domain at the jumps so the quadrature never crosses a discontinuity
        jumps = [-1.2, 0.7]
        mags = [[2.0, -1.5], [0.5, 0.25]]
        d = 1

        def fvalue(x):
            return float(evaluate_absorbing(jumps, mags, np.asarray([x]))[0])

        for k in (3, 7):
            breaks = [-math.pi, *jumps, math.pi]
            re = im = 0.0
            for a, b in zip(breaks[:-1], breaks[1:]):
                re += quad(lambda x: fvalue(x) * math.cos(k * x), a, b, limit=200,
                           epsabs=1e-13)[0]
                im += quad(lambda x: -fvalue(x) * math.sin(k * x), a, b, limit=200,
                           epsabs=1e-13)[0]
            oracle = (re + 1j * im) / (2 * math.pi)
            got = piecewise_poly_coeffs(jumps, mags, d, [k])[0]
            assert abs(got - oracle) < 1e-10

    def test_decay_rate(self):
        # with a nonzero base magnitude, |k * c_k| stays bounded
        ks = np.arange(1, 2001)
        coeffs = piecewise_poly_coeffs([0.3, -2.0], [[1.0, 2.0]], 0, ks)
        assert np.max(np.abs(ks * coeffs)) < 2.0


class TestAbsorbingEvaluation:
    def test_sawtooth_pointwise(self):
        # the absorbing polynomial of the sawtooth's jump data is x itself
        xs = np.linspace(-3.0, 3.0, 41)
        got = evaluate_absorbing([math.pi], SAWTOOTH_MAGS, xs)
        assert np.max(np.abs(got - xs)) < 1e-12

    def test_jump_basis_mean_zero(self):
        # integrate over one period; (0, 2*pi) contains no interior jump
        for order in range(4):
            val, _ = quad(
                lambda x: float(jump_basis_eval(order, np.asarray([x]))[0]),
                0.0, 2 * math.pi, limit=100, epsabs=1e-12,
            )
            assert abs(val) < 1e-10

    def test_jump_basis_unit_jump(self):
        for order in range(3):
            right = float(jump_basis_eval(order, np.asarray([1e-9]))[0])
            left = float(jump_basis_eval(order, np.asarray([-1e-9]))[0])
            if order == 0:
                assert right - left == pytest.approx(1.0, abs=1e-6)
            else:
                assert right - left == pytest.approx(0.0, abs=1e-6)


class TestSignalCoeffs:
    def test_pure_jump_equals_formula(self):
        sig = PiecewiseSignal(0, SAWTOOTH_JUMPS, SAWTOOTH_MAGS, [0.0], 0.0)
        window = signal_coeffs(sig, 64)
        saw = sawtooth_window(64)
        assert np.max(np.abs(window.coeffs - saw.coeffs)) < 1e-9

    def test_zero_magnitudes_leave_smooth_part(self):
        psi = [0.25, 0.1 + 0.05j, 0.01 - 0.02j]
        sig = PiecewiseSignal(0, [0.0], [[0.0]], psi, 0.5)
        window = signal_coeffs(sig, 4)
        assert window.coeff(0) == psi[0]
        assert window.coeff(1) == psi[1]
        assert window.coeff(-2) == psi[2].conjugate()
        assert window.coeff(3) == 0.0

    def test_conjugate_symmetry(self):
        sig = random_piecewise_signal(1, 2, seed=4)
        window = signal_coeffs(sig, 32)
        flipped = np.conj(window.coeffs[::-1])
        assert np.max(np.abs(window.coeffs - flipped)) < 1e-12


class TestPartialSum:
    def test_constant(self):
        coeffs = np.zeros(5, dtype=complex)
        coeffs[2] = 1.0
        window = CoefficientWindow(coeffs, 2)
        for x in (-2.0, 0.0, 1.5):
            assert partial_sum(window, x) == pytest.approx(1.0, abs=1e-12)

    def test_sawtooth_off_jump(self):
        window = sawtooth_window(512)
        # direct-summation oracle
        want = sum(
            2 * (-math.sin(k * math.pi / 2) * (-1.0) ** k / k) * -1.0
            for k in range(1, 513)
        )
        oracle = sum(
            (1j * (-1.0) ** k / k * cmath.exp(1j * k * math.pi / 2)).real * 2
            for k in range(1, 513)
        )
        got = partial_sum(window, math.pi / 2)
        assert got == pytest.approx(oracle, abs=1e-12)
        assert abs(got - math.pi / 2) < 2e-3

    def test_value_at_jump_near_mean(self):
        window = sawtooth_window(256)
        # one-sided limits at the jump are +-pi; their mean is 0
        assert abs(partial_sum(window, math.pi)) < 1e-10


class TestEckhoffTransform:
    def test_sawtooth_closed_form(self):
        window = sawtooth_window(32)
        samples = eckhoff_transform(window, 0)
        ks = np.arange(1, 33)
        want = -2 * math.pi * (-1.0) ** ks
        assert np.max(np.abs(np.asarray(samples.values) - want)) < 1e-12
        assert samples.scheme == SamplingScheme(1, 1, 32)

    def test_smooth_window_decays(self):
        d = 1
        sig = random_piecewise_signal(d, 1, seed=9, psi_decay=2.0)
        psi_only = PiecewiseSignal(
            d, sig.jumps, [[0.0] * sig.num_jumps for _ in range(d + 1)],
            sig.psi_coeffs, sig.psi_decay,
        )
        window = signal_coeffs(psi_only, 64)
        samples = eckhoff_transform(window, d)
        for k, value in zip(range(1, 65), samples.values):
            assert abs(value) <= 2 * math.pi * sig.psi_decay / k * (1 + 1e-9)

    def test_transform_error_bounded_by_decay(self):
        d = 1
        m = 64
        sig = random_piecewise_signal(d, 1, seed=10, psi_decay=1.5)
        window = signal_coeffs(sig, m)
        samples = eckhoff_transform(window, d)
        model = induced_prony_model(sig.jumps, sig.magnitudes, d)
        pure = evaluate_moments(model, samples.scheme)
        diff = abs(samples.values[-1] - pure.values[-1])
        assert diff <= 2 * math.pi * sig.psi_decay / m * (1 + 1e-9)


class TestBridgeIdentity:
    def test_transform_of_formula_equals_moments(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            d = int(rng.integers(0, 4))
            k = int(rng.integers(1, 4))
            sig = random_piecewise_signal(
                d, k, seed=int(rng.integers(0, 10_000)), psi_decay=0.0, psi_degree=1
            )
            window = signal_coeffs(sig, 500)
            samples = eckhoff_transform(window, d)
            model = induced_prony_model(sig.jumps, sig.magnitudes, d)
            moments = evaluate_moments(model, samples.scheme)
            got = np.asarray(samples.values)
            want = np.asarray(moments.values)
            scale = np.maximum(np.abs(want), 1.0)
            assert np.max(np.abs(got - want) / scale) < 1e-10

    def test_magnitude_inverse(self):
        mags = np.asarray([1.5, -0.25, 0.75])
        model = induced_prony_model([0.4], [[1.5], [-0.25], [0.75]], 2)
        back = magnitudes_from_coefficients(model.coefficients[0], 2)
        assert np.max(np.abs(back - mags)) < 1e-14


class TestInitialJumpEstimates:
    def test_sawtooth(self):
        window = sawtooth_window(256)
        (est,) = initial_jump_estimates(window, 1)
        assert circle_distance(est, math.pi) < 0.05

    def test_two_jumps(self):
        sig = PiecewiseSignal(
            0, [-1.0, 1.0], [[2.0, -2.5]], [0.0, 0.05j, 0.01], 0.5
        )
        window = signal_coeffs(sig, 512)
        est = initial_jump_estimates(window, 2)
        assert circle_distance(est[0], -1.0) < 0.02
        assert circle_distance(est[1], 1.0) < 0.02

    def test_exact_when_smooth_part_vanishes(self):
        window = sawtooth_window(64)
        (est,) = initial_jump_estimates(window, 1)
        assert circle_distance(est, math.pi) < 1e-9

    def test_bandwidth_precondition(self):
        with pytest.raises(ValidationError):
            initial_jump_estimates(sawtooth_window(4), 2)


class TestMollifier:
    def test_mean_within_support_bounds(self):
        moll = build_mollifier(0.0, 0.6, 0.2, 16)
        mean = moll.coeff(0).real
        assert 0.2 / math.pi < mean < 0.6 / math.pi

    def test_modulation_law_exact(self):
        base = build_mollifier(0.0, 0.6, 0.2, 32)
        shifted = build_mollifier(0.75, 0.6, 0.2, 32)
        for n in (-7, -1, 0, 3, 20):
            want = cmath.exp(-1j * n * 0.75) * base.coeff(n)
            assert abs(shifted.coeff(n) - want) < 1e-12

    def test_centered_coefficients_real(self):
        moll = build_mollifier(0.0, 0.5, 0.15, 24)
        assert moll.centered_coeffs.dtype == np.float64
        assert abs(moll.coeff(5).imag) < 1e-12

    def test_superpolynomial_decay_spot_check(self):
        moll = build_mollifier(0.0, 1.5, 0.5, 512)
        tail = np.abs(moll.centered_coeffs[256:])
        assert float(tail.max()) <= 1e-10

    def test_accuracy_certified(self):
        moll = build_mollifier(0.3, 0.6, 0.2, 64)
        assert moll.accuracy <= 1e-13

    def test_geometry_validated(self):
        with pytest.raises(ValidationError):
            build_mollifier(0.0, 0.2, 0.6, 8)


class TestLocalize:
    def test_identity_mollifier(self):
        window = sawtooth_window(64)
        moll = identity_mollifier(128)
        out = localize(window, moll, 32)
        assert np.max(np.abs(out.coeffs - window.coeffs[32:-32])) < 1e-15

    def test_bandwidth_contract(self):
        window = sawtooth_window(64)
        moll = identity_mollifier(128)
        with pytest.raises(ValidationError):
            localize(window, moll, 33)

    def test_degree_contract(self):
        window = sawtooth_window(64)
        with pytest.raises(ValidationError):
            localize(window, identity_mollifier(64), 32)

    def test_two_jump_localization_isolates(self):
        sig = PiecewiseSignal(
            0, [-1.0, 1.0], [[2.0, -2.5]], [0.0], 0.0
        )
        window = signal_coeffs(sig, 256)
        moll = build_mollifier(-1.0, 0.6, 0.2, 256 + 128)
        loc = localize(window, moll, 128)
        (est,) = initial_jump_estimates(loc, 1)
        assert circle_distance(est, -1.0) < 0.02
        assert circle_distance(est, 1.0) > 1.5


class TestReconstruct:
    def test_sawtooth_machine_precision(self):
        window = sawtooth_window(128)
        result = reconstruct(window, 0, 1, 8.0)
        assert circle_distance(result.jumps[0], math.pi) < 1e-10
        assert abs(result.magnitudes[0][0] + 2 * math.pi) < 1e-8

    def test_localized_magnitudes_match_source(self):
        # through the full pipeline, each jump's recovered magnitudes come from
        # the mollified window yet match the original jump data
        sig = random_piecewise_signal(1, 2, seed=2, min_separation=1.6,
                                      base_magnitude_range=(3.0, 5.0),
                                      psi_decay=1.0, psi_degree=4096)
        window = signal_coeffs(sig, 1024)
        result = reconstruct(window, 1, 2, 1.5)
        for l in range(2):
            for got, want in zip(result.magnitudes[l], sig.magnitudes[l]):
                assert abs(got - want) < (1e-3 if l == 0 else 2e-1)

    def test_translation_equivariance(self):
        from pronydec import wrap_position

        sig = random_piecewise_signal(1, 2, seed=6, min_separation=1.6,
                                      base_magnitude_range=(3.0, 5.0),
                                      psi_decay=1.0, psi_degree=2048)
        m = 256
        tau = 0.37
        window = signal_coeffs(sig, m)
        ks = np.arange(-m, m + 1)
        rotated = CoefficientWindow(window.coeffs * np.exp(-1j * ks * tau), m)
        base = reconstruct(window, 1, 2, 1.5)
        shifted = reconstruct(rotated, 1, 2, 1.5)
        # shifting can wrap a jump past pi, which re-sorts the outputs
        expected = sorted(
            (wrap_position(x + tau), tuple(row[j] for row in base.magnitudes))
            for j, x in enumerate(base.jumps)
        )
        got = [
            (x, tuple(row[j] for row in shifted.magnitudes))
            for j, x in enumerate(shifted.jumps)
        ]
        for (xe, me), (xg, mg) in zip(expected, got):
            assert circle_distance(xg, xe) < 1e-8
            for a, b in zip(me, mg):
                assert abs(a - b) < 1e-6

    def test_synthesis_with_true_parameters(self):
        # assembling from the truth leaves only the smooth-part tail
        sig = random_piecewise_signal(1, 2, seed=12, psi_decay=2.0, psi_degree=4096)
        m = 128
        window = signal_coeffs(sig, m)
        ks = np.arange(-m, m + 1)
        corrected = np.array(window.coeffs)
        nz = ks != 0
        corrected[nz] -= piecewise_poly_coeffs(sig.jumps, sig.magnitudes, 1, ks[nz])
        result = pd.ReconstructionResult(
            jumps=sig.jumps, magnitudes=sig.magnitudes,
            corrected=CoefficientWindow(corrected, m), smoothness=1,
        )
        tail_bound = 2 * sig.psi_decay * sum(
            k ** -3.0 for k in range(m + 1, sig.psi_degree + 1)
        )
        err = sup_error_away(sig, result, 0.1, 1024)
        assert err <= tail_bound * (1 + 1e-6)

    def test_bandwidth_precondition(self):
        with pytest.raises(ValidationError):
            reconstruct(sawtooth_window(8), 0, 1, 1.0)


class TestSupErrorAway:
    def test_everything_excluded(self):
        sig = random_piecewise_signal(0, 1, seed=1)
        window = signal_coeffs(sig, 32)
        result = reconstruct(window, 0, 1, 6.0)
        with pytest.raises(ValidationError):
            sup_error_away(sig, result, 4.0, 64)

    def test_radius_positive(self):
        sig = random_piecewise_signal(0, 1, seed=1)
        window = signal_coeffs(sig, 32)
        result = reconstruct(window, 0, 1, 6.0)
        with pytest.raises(ValidationError):
            sup_error_away(sig, result, 0.0, 64)


class TestWindowFile:
    def test_roundtrip(self, tmp_path):
        sig = random_piecewise_signal(1, 2, seed=5)
        window = signal_coeffs(sig, 24)
        path = tmp_path / "win.txt"
        write_window_file(window, path)
        back = read_window_file(path)
        assert back.bandwidth == 24
        assert back.real_signal
        assert np.array_equal(back.coeffs, window.coeffs)

    def test_rejects_gaps(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("-1 0.0 0.0\n1 0.0 0.0\n")
        with pytest.raises(ValidationError):
            read_window_file(path)
