import json

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.special import eval_hermite, factorial

from heraldkit.fock import (
    DensityMatrix,
    LossInversionWarning,
    QuadratureSample,
    apply_loss,
    fidelity_with_fock,
    fock_wavefunction,
    invert_loss,
    quadrature_pdf,
    wigner,
    wigner_grid,
)


def hermite_psi(n, x):
    # independent oracle: explicit Hermite-polynomial form of psi_n
    return eval_hermite(n, x) * np.exp(-(x**2) / 2) / np.sqrt(
        2.0**n * factorial(n) * np.sqrt(np.pi)
    )


def wigner_parity_oracle(rho, x, p, pad=30):
    # independent oracle: W = (1/pi) Tr[rho D(a) P D(a)^dag], a = (x+ip)/sqrt(2)
    d = rho.dim + pad
    a = np.diag(np.sqrt(np.arange(1, d)), k=1)
    alpha = (x + 1j * p) / np.sqrt(2.0)
    disp = expm(alpha * a.conj().T - np.conj(alpha) * a)
    parity = np.diag((-1.0) ** np.arange(d))
    big = np.zeros((d, d), complex)
    big[: rho.dim, : rho.dim] = rho.entries
    return np.real(np.trace(big @ disp @ parity @ disp.conj().T)) / np.pi


def random_state(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


class TestWavefunction:
    def test_ground_state_peak(self):
        assert fock_wavefunction(0, 0.0) == pytest.approx(np.pi**-0.25, abs=1e-14)

    def test_single_photon_node_at_origin(self):
        assert fock_wavefunction(1, 0.0) == 0.0

    def test_recurrence_matches_hermite_oracle(self):
        # frozen from the oracle: psi_2(1.0)
        assert fock_wavefunction(2, 1.0) == pytest.approx(0.3221441825567377, abs=1e-12)
        x = np.linspace(-5, 5, 101)
        for n in range(11):
            assert np.max(np.abs(fock_wavefunction(n, x) - hermite_psi(n, x))) < 1e-10

    def test_orthonormality(self):
        x = np.linspace(-12, 12, 6001)
        table = np.array([fock_wavefunction(n, x) for n in range(7)])
        gram = np.trapezoid(table[:, None, :] * table[None, :, :], x, axis=2)
        assert np.max(np.abs(gram - np.eye(7))) < 1e-8

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            fock_wavefunction(-1, 0.0)

    def test_nonfinite_x_rejected(self):
        with pytest.raises(ValueError):
            fock_wavefunction(0, np.inf)


class TestDensityMatrix:
    def test_non_hermitian_rejected(self):
        m = np.eye(3, dtype=complex)
        m[0, 1] = 0.5
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(m / np.trace(m))

    def test_bad_trace_rejected(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(3) * 0.5)

    def test_non_psd_rejected(self):
        m = np.diag([1.5, -0.5, 0.0]).astype(complex)
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(m)

    def test_entries_are_read_only(self):
        rho = DensityMatrix.vacuum(3)
        with pytest.raises(ValueError):
            rho.entries[0, 0] = 0.5

    def test_json_round_trip(self):
        rng = np.random.default_rng(5)
        rho = random_state(rng, 4)
        again = DensityMatrix.from_json(json.loads(json.dumps(rho.to_json())))
        assert np.allclose(again.entries, rho.entries, atol=1e-15)

    def test_fock_constructor_bounds(self):
        with pytest.raises(ValueError):
            DensityMatrix.fock(5, 3)


class TestQuadraturePdf:
    def test_vacuum_peak(self):
        rho = DensityMatrix.vacuum(5)
        assert quadrature_pdf(rho, 0.3, 0.0) == pytest.approx(1 / np.sqrt(np.pi), abs=1e-12)

    def test_single_photon_formula(self):
        rho = DensityMatrix.fock(1, 5)
        x = np.linspace(-4, 4, 41)
        expected = 2 * x**2 * np.exp(-(x**2)) / np.sqrt(np.pi)
        assert np.max(np.abs(quadrature_pdf(rho, 1.1, x) - expected)) < 1e-12
        assert quadrature_pdf(rho, 0.0, 0.0) == 0.0

    def test_reference_mixture_dip(self):
        # frozen: 0.18/sqrt(pi) + 0.03*psi_2(0)^2, the nonzero dip between the
        # two peaks of a vacuum/one-photon/two-photon mixture
        rho = DensityMatrix.from_diagonal([0.18, 0.79, 0.03, 0.0])
        assert quadrature_pdf(rho, 0.0, 0.0) == pytest.approx(0.11001696879181247, abs=1e-12)
        x = np.linspace(-4, 4, 801)
        p = quadrature_pdf(rho, 0.0, x)
        mid = p[400]
        assert p.max() > 2 * mid  # double-peaked with a genuine dip

    def test_normalization_adaptive_quadrature(self):
        rng = np.random.default_rng(7)
        rho = random_state(rng, 6)
        for theta in (0.0, 0.7):
            total, _ = quad(lambda x: quadrature_pdf(rho, theta, x), -np.inf, np.inf)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_nonnegative_and_real(self):
        rng = np.random.default_rng(11)
        rho = random_state(rng, 5)
        x = np.linspace(-6, 6, 501)
        assert np.all(quadrature_pdf(rho, 0.4, x) >= -1e-12)

    def test_theta_independent_for_diagonal_states(self):
        rho = DensityMatrix.from_diagonal([0.2, 0.5, 0.2, 0.1])
        x = np.linspace(-3, 3, 61)
        base = quadrature_pdf(rho, 0.0, x)
        for theta in np.linspace(0, np.pi, 9):
            assert np.max(np.abs(quadrature_pdf(rho, theta, x) - base)) < 1e-12

    def test_second_moment_is_n_plus_half(self):
        for n in range(4):
            rho = DensityMatrix.fock(n, 6)
            m2, _ = quad(lambda x: x**2 * quadrature_pdf(rho, 0.2, x), -np.inf, np.inf)
            assert m2 == pytest.approx(n + 0.5, abs=1e-6)

    def test_invalid_rho_rejected(self):
        with pytest.raises(TypeError):
            quadrature_pdf(np.eye(3) / 3, 0.0, 0.0)


class TestWigner:
    def test_fock_extrema_at_origin(self):
        assert wigner(DensityMatrix.fock(1, 5), 0.0, 0.0) == pytest.approx(-1 / np.pi, abs=1e-12)
        assert wigner(DensityMatrix.vacuum(5), 0.0, 0.0) == pytest.approx(1 / np.pi, abs=1e-12)

    def test_reference_diagonal_at_origin(self):
        rho = DensityMatrix.from_diagonal([0.18, 0.786, 0.03, 0.004])
        w0 = wigner(rho, 0.0, 0.0)
        # (1/pi) * (0.18 - 0.786 + 0.03 - 0.004): negative, as the corrected
        # single-photon state must be
        assert w0 == pytest.approx(-0.18461973398659862, abs=1e-12)
        signs = (-1.0) ** np.arange(rho.dim)
        assert w0 == pytest.approx((signs * rho.diagonal()).sum() / np.pi, abs=1e-10)

    def test_matches_displaced_parity_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(3):
            rho = random_state(rng, 5)
            for x, p in [(0.0, 0.0), (0.7, 0.3), (-1.2, 0.5), (2.0, -1.0)]:
                assert wigner(rho, x, p) == pytest.approx(
                    wigner_parity_oracle(rho, x, p), abs=1e-10
                )

    def test_origin_parity_formula_random_states(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            rho = random_state(rng, 7)
            expected = ((-1.0) ** np.arange(rho.dim) * rho.diagonal()).sum() / np.pi
            assert wigner(rho, 0.0, 0.0) == pytest.approx(expected, abs=1e-10)

    def test_magnitude_bound(self):
        rng = np.random.default_rng(19)
        xs = np.linspace(-4, 4, 81)
        gx, gp = np.meshgrid(xs, xs, indexing="ij")
        for _ in range(5):
            rho = random_state(rng, 6)
            assert np.max(np.abs(wigner(rho, gx, gp))) <= 1 / np.pi + 1e-12


class TestWignerGrid:
    def test_vacuum_normalization(self):
        grid = wigner_grid(DensityMatrix.vacuum(3), (-5, 5), (-5, 5), 201)
        assert grid.integral() == pytest.approx(1.0, abs=1e-3)

    def test_single_photon_minimum_at_origin(self):
        grid = wigner_grid(DensityMatrix.fock(1, 4), (-4, 4), (-4, 4), 161)
        i, j = np.unravel_index(np.argmin(grid.values), grid.values.shape)
        assert abs(grid.x_axis[i]) < 1e-9 and abs(grid.p_axis[j]) < 1e-9

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            wigner_grid(DensityMatrix.vacuum(3), (1.0, 1.0), (-5, 5), 101)

    def test_csv_layout(self, tmp_path):
        grid = wigner_grid(DensityMatrix.vacuum(2), (-1, 1), (-2, 2), 5)
        path = tmp_path / "w.csv"
        grid.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 6
        header = lines[0].split(",")
        assert header[0] == "x\\p"
        assert [float(v) for v in header[1:]] == pytest.approx(list(grid.p_axis))
        first = lines[1].split(",")
        assert float(first[0]) == pytest.approx(grid.x_axis[0])


class TestLossChannel:
    def test_identity_at_unit_transmission(self):
        rng = np.random.default_rng(23)
        rho = random_state(rng, 5)
        assert np.allclose(apply_loss(rho, 1.0).entries, rho.entries, atol=1e-15)

    def test_single_photon_binomial(self):
        out = apply_loss(DensityMatrix.fock(1, 4), 0.85)
        assert out.diagonal()[:2] == pytest.approx([0.15, 0.85], abs=1e-14)

    def test_two_photon_enumeration(self):
        out = apply_loss(DensityMatrix.fock(2, 4), 0.5)
        assert out.diagonal()[:3] == pytest.approx([0.25, 0.5, 0.25], abs=1e-14)

    def test_semigroup_composition(self):
        rng = np.random.default_rng(29)
        for eta1 in (0.3, 0.5, 0.9):
            for eta2 in (0.3, 0.5, 0.9):
                rho = random_state(rng, 6)
                two_step = apply_loss(apply_loss(rho, eta1), eta2)
                one_step = apply_loss(rho, eta1 * eta2)
                assert np.max(np.abs(two_step.entries - one_step.entries)) < 1e-10

    def test_trace_preserved(self):
        rng = np.random.default_rng(31)
        rho = random_state(rng, 8)
        assert np.trace(apply_loss(rho, 0.37).entries).real == pytest.approx(1.0, abs=1e-12)

    def test_fidelity_after_loss_equals_eta(self):
        for eta in (0.1, 0.5, 0.85):
            lossy = apply_loss(DensityMatrix.fock(1, 5), eta)
            assert fidelity_with_fock(lossy, 1) == eta

    def test_out_of_range_rejected(self):
        rho = DensityMatrix.vacuum(3)
        for eta in (-0.1, 1.1):
            with pytest.raises(ValueError):
                apply_loss(rho, eta)


class TestInvertLoss:
    def test_identity_at_unit_transmission(self):
        rho = DensityMatrix.fock(1, 4)
        assert np.allclose(invert_loss(rho, 1.0).entries, rho.entries)

    def test_zero_transmission_rejected(self):
        with pytest.raises(ValueError):
            invert_loss(DensityMatrix.vacuum(3), 0.0)

    def test_measured_diagonal_corrects_to_91_percent(self):
        # frozen from an independent triangular solve of the binomial system
        measured = DensityMatrix.from_diagonal([0.18, 0.786, 0.03, 0.004])
        raw = invert_loss(measured, 0.85)
        assert raw.diagonal() == pytest.approx(
            [0.04220639, 0.91268878, 0.03859149, 0.00651333], abs=1e-7
        )
        assert 0.89 <= fidelity_with_fock(raw, 1) <= 0.93
        assert np.trace(raw.entries).real == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::heraldkit.fock.LossInversionWarning")
    def test_roundtrip_on_random_states(self):
        rng = np.random.default_rng(37)
        for _ in range(20):
            small = random_state(rng, 5)  # support <= n_max - 2 after embedding
            big = np.zeros((7, 7), dtype=complex)
            big[:5, :5] = small.entries
            rho = DensityMatrix(big)
            back = apply_loss(invert_loss(rho, 0.7), 0.7)
            assert np.max(np.abs(back.entries - rho.entries)) < 1e-9

    @pytest.mark.filterwarnings("ignore::heraldkit.fock.LossInversionWarning")
    def test_matches_inverse_transmission_channel(self):
        # oracle: the algebraic inverse equals the loss map evaluated at 1/eta
        rng = np.random.default_rng(41)
        rho = random_state(rng, 5)
        eta = 0.8
        d = rho.dim
        out = np.zeros((d, d), dtype=complex)
        mu = 1.0 / eta
        from math import comb

        for k in range(d):
            n = np.arange(k, d)
            c = np.sqrt(np.array([comb(int(v), k) for v in n]) * mu ** (n - k))
            out[: d - k, : d - k] += (1 - mu) ** k * np.outer(c, c) * rho.entries[k:, k:]
        inv = invert_loss(rho, eta)
        assert np.max(np.abs(inv.entries - out)) < 1e-10

    def test_nonphysical_inverse_warns_not_raises(self):
        rho = DensityMatrix.from_diagonal([0.98, 0.01, 0.01])
        with pytest.warns(LossInversionWarning):
            raw = invert_loss(rho, 0.3)
        assert raw.min_eigenvalue() < -1e-9
        assert np.trace(raw.entries).real == pytest.approx(1.0, abs=1e-12)


class TestFidelity:
    def test_pure_states(self):
        assert fidelity_with_fock(DensityMatrix.fock(1, 4), 1) == 1.0
        assert fidelity_with_fock(DensityMatrix.vacuum(4), 1) == 0.0

    def test_reconstructed_value_is_diagonal_element(self):
        rho = DensityMatrix.from_diagonal([0.18, 0.786, 0.03, 0.004])
        assert fidelity_with_fock(rho, 1) == pytest.approx(0.786, abs=1e-15)

    def test_out_of_basis_rejected(self):
        with pytest.raises(ValueError):
            fidelity_with_fock(DensityMatrix.vacuum(3), 4)


class TestQuadratureSampleType:
    def test_canonical_folds_phase(self):
        s = QuadratureSample(1.5, 4.0).canonical()
        assert 0 <= s.theta < np.pi
        assert s.theta == pytest.approx(4.0 - np.pi)
        assert s.x == -1.5  # odd half-turn flips the quadrature sign

    def test_canonical_even_fold_keeps_sign(self):
        s = QuadratureSample(0.7, 2 * np.pi + 0.1).canonical()
        assert s.x == 0.7 and s.theta == pytest.approx(0.1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            QuadratureSample(np.nan, 0.0)
