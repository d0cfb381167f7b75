"""Tests for the slab eigenproblem solver.

Frozen eigenvalues and norms were produced beforehand by an independent
mpmath script (40 digits, bisection on the pole-free characteristic);
quadrature oracles use scipy.integrate.quad at runtime.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from mnplink import spectral as sp

L = 1e-5


def params(u, k, length=L):
    return sp.BoundaryParams(drift_param=u, adsorption_param=k, length=length)


class TestCriticalDrift:
    def test_zero_adsorption(self):
        assert sp.critical_drift(params(0, 0)) == 0.0

    def test_frozen(self):
        # sqrt(2e9 + 1e8), mpmath
        assert sp.critical_drift(params(0, 1e4)) == pytest.approx(45825.756949558398, rel=1e-14)
        assert sp.critical_drift(params(0, 12500)) == pytest.approx(51538.820320220757, rel=1e-14)

    def test_diverges(self):
        assert sp.critical_drift(params(0, 1e12)) > 1e11


class TestEigenvalues:
    # mpmath oracle values, L = 1e-5
    FROZEN = {
        (60000.0, 12500.0): ("hyperbolic", 29521.859193020491,
                             [321666.80394830733, 632236.96177086835,
                              945112.21601499723, 1258618.7976269488]),
        (30000.0, 12500.0): ("trigonometric", 40246.580666631521,
                             [321856.10640680378, 632263.19014033229,
                              945120.14666442905, 1258622.1675478483]),
        (0.0, 12500.0): ("trigonometric", 49485.09303688251,
                         [321921.24060840475, 632272.01011690963,
                          945122.80077390965, 1258623.2933947833]),
        (150000.0, 125000.0): ("trigonometric", 97878.37307103867,
                               [371196.24507004961, 663828.45973779001,
                                967585.69179332138, 1275906.4799991532]),
    }

    def test_frozen_spectra(self):
        for (u, k), (branch, g, higher) in self.FROZEN.items():
            sys = sp.solve_eigenvalues(params(u, k), 4)
            assert sys.ground.branch == branch
            assert sys.ground.value == pytest.approx(g, rel=1e-12)
            np.testing.assert_allclose(sys.higher_eigenvalues, higher, rtol=1e-12)

    def test_reflecting_spectrum_exact(self):
        sys = sp.solve_eigenvalues(params(3e4, 0.0), 10)
        n = np.arange(1, 11)
        np.testing.assert_allclose(sys.higher_eigenvalues, n * np.pi / L, rtol=0)
        assert sys.ground.branch == "hyperbolic"
        assert sys.ground.value == 3e4  # sigma = u when kappa = 0

    def test_reflecting_driftless_is_affine(self):
        sys = sp.solve_eigenvalues(params(0.0, 0.0), 3)
        assert sys.ground.branch == "affine"
        assert sys.norms[0] == pytest.approx(L, rel=1e-14)

    def test_strong_adsorption_limit(self):
        # kappa L = 1e7 shifts roots from (n+1) pi / L by about 2e-7 relative
        sys = sp.solve_eigenvalues(params(0.0, 1e12), 10)
        n = np.arange(1, 11)
        np.testing.assert_allclose(sys.higher_eigenvalues, (n + 1) * np.pi / L, rtol=1e-6)
        assert sys.ground.value == pytest.approx(np.pi / L, rel=1e-6)

    def test_bracketing_and_ordering(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            u, k = rng.uniform(0, 2e5, size=2)
            sys = sp.solve_eigenvalues(params(u, k), 10)
            s = sys.higher_eigenvalues
            assert np.all(np.diff(s) > 0)
            assert np.all(s >= np.pi / L)
            assert np.all(np.diff(s) < 2 * np.pi / L)
            if sys.ground.branch == "trigonometric":
                assert 0 < sys.ground.value < np.pi / L
            elif sys.ground.branch == "hyperbolic":
                assert 0 < sys.ground.value <= u

    def test_residuals(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            u, k = rng.uniform(0, 2e5, size=2)
            sys = sp.solve_eigenvalues(params(u, k), 6)
            a, b = k * L, u * L
            x = sys.higher_eigenvalues * L
            if sys.ground.branch == "trigonometric":
                x = np.append(x, sys.ground.value * L)
            res = np.sin(x) * (x * x - a * a + b * b) - 2 * a * x * np.cos(x)
            scale = x * x + a * a + b * b + 1.0
            assert np.all(np.abs(res) / scale < 1e-12)
            if sys.ground.branch == "hyperbolic":
                y = sys.ground.value * L
                resg = np.tanh(y) * (b * b - a * a - y * y) - 2 * a * y
                assert abs(resg) / (y * y + a * a + b * b + 1.0) < 1e-12

    def test_branch_continuity(self):
        k = 12500.0
        uc = sp.critical_drift(params(0, k))
        probes = [uc * (1 - 2e-6), uc * (1 - 1e-7), uc * (1 + 1e-7), uc * (1 + 2e-6)]
        vals = []
        for u in probes:
            sys = sp.solve_eigenvalues(params(u, k), 2)
            z = np.linspace(0, L, 7)
            vals.append(np.append(sp.eigenfunction(sys, 0, z), sys.norms[0] / L))
        for lo, hi in zip(vals[:-1], vals[1:]):
            np.testing.assert_allclose(lo, hi, rtol=0, atol=1e-6 * np.max(np.abs(vals[0])))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(9)
        u = rng.uniform(0, 2e5, size=40)
        k = rng.uniform(0, 2e5, size=40)
        k[::7] = 0.0
        batch = sp.solve_eigenvalues_batch(u, k, L, 5)
        for i in range(40):
            sys = sp.solve_eigenvalues(params(u[i], k[i]), 5)
            np.testing.assert_allclose(batch.higher[i], sys.higher_eigenvalues, rtol=1e-14)
            if sys.ground.branch != "affine":
                assert batch.ground[i] == pytest.approx(sys.ground.value, rel=1e-13)
            np.testing.assert_allclose(
                np.concatenate(([batch.norm_ground[i]], batch.norm_higher[i])),
                sys.norms, rtol=1e-12)

    def test_cache_returns_same_system(self):
        p = params(123.0, 456.0)
        assert sp.solve_eigenvalues(p, 4) is sp.solve_eigenvalues(p, 4)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            params(-1.0, 0.0)
        with pytest.raises(ValueError):
            params(0.0, 0.0, length=0.0)


class TestEigenfunctions:
    def test_unit_at_origin(self):
        for (u, k) in [(6e4, 12500.0), (3e4, 12500.0), (0.0, 0.0), (5e4, 0.0)]:
            sys = sp.solve_eigenvalues(params(u, k), 4)
            for n in range(5):
                assert sp.eigenfunction(sys, n, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_neumann_cosines(self):
        sys = sp.solve_eigenvalues(params(0.0, 0.0), 4)
        z = np.linspace(0, L, 33)
        for n in range(1, 5):
            np.testing.assert_allclose(sp.eigenfunction(sys, n, z),
                                       np.cos(n * np.pi * z / L), rtol=0, atol=1e-12)

    def test_second_derivative_eigenrelation(self):
        # central differences: Z'' = -s^2 Z at 50 interior points
        rng = np.random.default_rng(17)
        delta = 5e-9
        for (u, k) in [(6e4, 12500.0), (3e4, 12500.0), (1.5e5, 1.25e5)]:
            sys = sp.solve_eigenvalues(params(u, k), 3)
            z = rng.uniform(0.05 * L, 0.95 * L, size=50)
            for n in range(sys.truncation + 1):
                Z = sp.eigenfunction(sys, n, z)
                d2 = (sp.eigenfunction(sys, n, z + delta) - 2 * Z
                      + sp.eigenfunction(sys, n, z - delta)) / delta ** 2
                if n == 0 and sys.ground.branch == "hyperbolic":
                    s2 = -sys.ground.value ** 2
                elif n == 0:
                    s2 = sys.ground.value ** 2
                else:
                    s2 = sys.higher_eigenvalues[n - 1] ** 2
                np.testing.assert_allclose(d2, -s2 * Z, rtol=2e-6,
                                           atol=1e-6 * abs(s2))

    def test_boundary_conditions(self):
        # one-sided 4th order differences inside the domain
        c = np.array([-25.0 / 12, 4.0, -3.0, 4.0 / 3, -1.0 / 4])
        d = 2e-9
        for (u, k) in [(6e4, 12500.0), (3e4, 12500.0), (0.0, 5e4), (9e4, 0.0)]:
            sys = sp.solve_eigenvalues(params(u, k), 3)
            for n in range(sys.truncation + 1):
                z0 = np.arange(5) * d
                zL = L - np.arange(5) * d
                dz0 = np.dot(c, sp.eigenfunction(sys, n, z0)) / d
                dzL = -np.dot(c, sp.eigenfunction(sys, n, zL)) / d
                Z0 = sp.eigenfunction(sys, n, 0.0)
                ZL = sp.eigenfunction(sys, n, L)
                scale = max(abs(dz0), abs(dzL), (u + k + 1 / L))
                assert abs(dz0 - (k - u) * Z0) <= 2e-6 * scale
                assert abs(dzL - (-(k + u) * ZL)) <= 2e-6 * scale

    def test_index_bounds(self):
        sys = sp.solve_eigenvalues(params(0.0, 0.0), 2)
        with pytest.raises(IndexError):
            sp.eigenfunction(sys, 3, 0.0)
        with pytest.raises(ValueError):
            sp.eigenfunction(sys, 1, 2 * L)


class TestNorms:
    def test_frozen_quadrature_values(self):
        sys = sp.solve_eigenvalues(params(6e4, 12500.0), 1)
        # mpmath quadrature of Z_n^2 over [0, L]
        assert sys.norms[0] == pytest.approx(6.1713141556891226e-6, rel=1e-12)
        assert sys.norms[1] == pytest.approx(5.2201713553253101e-6, rel=1e-12)

    def test_driftless_reflecting(self):
        sys = sp.solve_eigenvalues(params(0.0, 0.0), 3)
        assert sys.norms[0] == pytest.approx(L, rel=1e-14)
        np.testing.assert_allclose(sys.norms[1:], L / 2, rtol=1e-12)

    def test_closed_form_vs_quadrature(self):
        rng = np.random.default_rng(23)
        for _ in range(8):
            u, k = rng.uniform(0, 2e5, size=2)
            sys = sp.solve_eigenvalues(params(u, k), 5)
            for n in range(6):
                val, err = quad(lambda z: sp.eigenfunction(sys, n, z) ** 2, 0, L,
                                limit=200, epsabs=0, epsrel=1e-12)
                assert sp.mode_norm(sys, n) == pytest.approx(val, rel=1e-9)

    def test_near_transition_norm_accuracy(self):
        # the hyperbolic/trigonometric closed forms cancel near u_crit;
        # they must still agree with quadrature there
        k = 12500.0
        uc = sp.critical_drift(params(0, k))
        for u in [uc * (1 - 5e-6), uc * (1 + 5e-6)]:
            sys = sp.solve_eigenvalues(params(u, k), 0)
            val, err = quad(lambda z: sp.eigenfunction(sys, 0, z) ** 2, 0, L,
                            limit=200, epsabs=0, epsrel=1e-12)
            assert sys.norms[0] == pytest.approx(val, rel=1e-8)


class TestCoefficients:
    def test_frozen(self):
        sys = sp.solve_eigenvalues(params(6e4, 12500.0), 1)
        a = sp.expansion_coefficients(sys, L)
        # mpmath: Z_0(L) = 0.5619645997288161, Z_1(L) = -0.98610732105526653
        assert a[0] == pytest.approx(0.5619645997288161 / 6.1713141556891226e-6, rel=1e-11)
        assert a[1] == pytest.approx(-0.98610732105526653 / 5.2201713553253101e-6, rel=1e-11)

    def test_uniform_mode(self):
        sys = sp.solve_eigenvalues(params(0.0, 0.0), 0)
        assert sp.expansion_coefficients(sys, 0.3 * L)[0] == pytest.approx(1 / L, rel=1e-14)

    def test_reflecting_closed_form(self):
        u, z0 = 7e4, 0.4 * L
        sys = sp.solve_eigenvalues(params(u, 0.0), 6)
        a = sp.expansion_coefficients(sys, z0)
        for n in range(1, 7):
            s = n * np.pi / L
            expect = (2 / L) * (np.cos(s * z0) - (u / s) * np.sin(s * z0)) / (1 + u * u / (s * s))
            assert a[n] == pytest.approx(expect, rel=1e-12)

    def test_delta_reconstruction(self):
        # truncated completeness: the 200-term series integrates to ~1
        # and concentrates at the source
        u, k, z0 = 4e4, 3e4, 0.37 * L
        sys = sp.solve_eigenvalues(params(u, k), 200)
        a = sp.expansion_coefficients(sys, z0)
        z = np.linspace(0, L, 4001)
        series = np.zeros_like(z)
        for n in range(201):
            series += a[n] * sp.eigenfunction(sys, n, z)
        from scipy.integrate import simpson
        total = simpson(series, x=z)
        assert abs(total - 1.0) < 0.02
        assert z[np.argmax(series)] == pytest.approx(z0, abs=L / 100)


class TestOrthogonality:
    def test_random_systems(self):
        rng = np.random.default_rng(31)
        for _ in range(3):
            u, k = rng.uniform(0, 2e5, size=2)
            sys = sp.solve_eigenvalues(params(u, k), 10)
            norms = np.sqrt(sys.norms)
            for n in range(0, 11, 3):
                for m in range(n + 1, 11, 2):
                    val, err = quad(lambda z: sp.eigenfunction(sys, n, z)
                                    * sp.eigenfunction(sys, m, z), 0, L,
                                    limit=400, epsabs=1e-18, epsrel=1e-12)
                    assert abs(val) / (norms[n] * norms[m]) < 1e-7


class TestLateralSystem:
    W = 1e-5

    def test_reflecting(self):
        sys = sp.y_eigensystem(self.W, 0.0, 4, source=0.0)
        assert sys.coefficients[0] == pytest.approx(1 / self.W, rel=1e-14)
        n = np.arange(1, 5)
        np.testing.assert_allclose(sys.higher_eigenvalues, n * np.pi / self.W, rtol=0)

    def test_adsorbing_residuals(self):
        k = 12500.0
        sys = sp.y_eigensystem(self.W, k, 6, source=0.2 * self.W)
        s = sys.higher_eigenvalues
        res = np.sin(s * self.W) * (s * s - k * k) - 2 * s * k * np.cos(s * self.W)
        assert np.all(np.abs(res) / (s * s + k * k) < 1e-12)
        assert sys.ground.branch == "trigonometric"

    def test_source_bounds(self):
        with pytest.raises(ValueError):
            sp.y_eigensystem(self.W, 0.0, 2, source=self.W)
