import csv
import io
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ep_spectra.evolution import (
    BlowupDetected,
    CFLViolation,
    SolverConfig,
    Trajectory,
    cauchy_diagnostic,
    grad_linf,
    h1_energy,
    picard_solve,
    rk4_step,
    solve,
)
from ep_spectra.littlewood_paley import NormKind, SpaceParams, besov_norm, build_partition, low_pass
from ep_spectra.spectral_core import PeriodicGrid, VectorField, dealias

from conftest import random_vector


def smooth_u0(grid):
    x = grid.axis_coordinates
    return VectorField(grid, (0.3 * np.cos(x) + 0.2 * np.sin(2 * x) + 0.1 * np.cos(3 * x + 0.4))[None])


def ch_galerkin_dop853(u0: np.ndarray, period: float, t_final: float) -> np.ndarray:
    """Camassa-Holm under 2/3 truncation, integrated with scipy's DOP853."""
    n = u0.size
    k = np.fft.rfftfreq(n, d=period / (2 * np.pi * n))
    kint = np.fft.rfftfreq(n, d=1.0 / n)
    mask = kint <= n / 3
    ik = np.where(kint == n // 2, 0.0, 1j * k)

    def rhs(_, uh):
        uh = uh[: k.size] + 1j * uh[k.size:]
        u = np.fft.irfft(uh, n)
        ux = np.fft.irfft(ik * uh, n)
        prod = lambda a: np.fft.rfft(a) * mask
        out = -prod(u * ux) - ik * prod(u**2 + 0.5 * ux**2) / (1 + k**2)
        return np.concatenate([out.real, out.imag])

    uh0 = np.fft.rfft(u0) * mask
    sol = solve_ivp(rhs, (0, t_final), np.concatenate([uh0.real, uh0.imag]),
                    method="DOP853", rtol=1e-13, atol=1e-14)
    y = sol.y[:, -1]
    return np.fft.irfft(y[: k.size] + 1j * y[k.size:], n)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(dt=0, t_final=1)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, t_final=-1)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, t_final=1, cfl_safety=2)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, t_final=1, blowup_threshold=0)
        with pytest.raises(ValueError):
            SolverConfig(dt=0.1, t_final=1, record_every=0)


class TestIntegrator:
    def test_zero_stays_zero(self, grid1):
        traj = solve(VectorField.zeros(grid1), SolverConfig(0.1, 1.0))
        assert all(np.abs(s.samples).max() == 0 for s in traj.states)
        assert traj.times[-1] == pytest.approx(1.0)

    def test_cfl_violation(self, grid1):
        u = VectorField(grid1, np.ones((1, 64)))
        with pytest.raises(CFLViolation) as info:
            rk4_step(u, 10.0)
        assert info.value.suggested_dt == 5.0
        rk4_step(u, 0.01)

    def test_matches_dop853(self):
        grid = PeriodicGrid(1, 64, 2 * math.pi)
        u0 = smooth_u0(grid)
        ours = solve(u0, SolverConfig(dt=0.005, t_final=1.0)).final.samples[0]
        ref = ch_galerkin_dop853(u0.samples[0], grid.period, 1.0)
        np.testing.assert_allclose(ours, ref, atol=1e-8)

    def test_fourth_order(self):
        grid = PeriodicGrid(1, 64, 2 * math.pi)
        u0 = smooth_u0(grid)
        ref = ch_galerkin_dop853(u0.samples[0], grid.period, 1.0)
        # steps below the CFL limit, so no automatic substepping interferes
        errs = [np.abs(solve(u0, SolverConfig(dt=dt, t_final=1.0, cfl_safety=1.0)).final.samples[0] - ref).max()
                for dt in (0.04, 0.02, 0.01)]
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 3.5)

    def test_initial_state_projected(self, rng):
        grid = PeriodicGrid(1, 64, 2 * math.pi)
        u0 = random_vector(grid, rng, 31, scale=0.1)
        traj = solve(u0, SolverConfig(0.01, 0.02))
        np.testing.assert_allclose(traj.states[0].samples, dealias(u0).samples, atol=1e-15)

    def test_energy_conserved(self):
        grid = PeriodicGrid(1, 128, 2 * math.pi)
        traj = solve(smooth_u0(grid), SolverConfig(0.01, 1.0))
        e = traj.diagnostics["energy"]
        assert np.abs(e / e[0] - 1).max() < 1e-6
        assert e[0] == pytest.approx(h1_energy(traj.states[0]))

    def test_constant_state_is_steady(self):
        grid = PeriodicGrid(1, 32, 2 * math.pi)
        u = VectorField(grid, np.full((1, 32), 0.4))
        out = solve(u, SolverConfig(0.1, 1.0)).final
        np.testing.assert_allclose(out.samples, 0.4, atol=1e-14)

    def test_2d_runs_and_conserves_mean_momentum(self, rng):
        grid = PeriodicGrid(2, 32, 2 * math.pi)
        u0 = random_vector(grid, rng, 5, scale=0.2)
        traj = solve(u0, SolverConfig(0.01, 0.2))
        # momentum m = (1 - Lap) u has conserved mean, which equals the mean of u
        np.testing.assert_allclose(traj.final.coefficients[:, 0, 0], traj.states[0].coefficients[:, 0, 0], atol=1e-14)

    def test_record_every(self, grid1):
        traj = solve(smooth_u0(grid1), SolverConfig(0.01, 0.1, record_every=3))
        np.testing.assert_allclose(traj.times, [0, 0.03, 0.06, 0.09, 0.1])

    def test_blowup_guard(self):
        grid = PeriodicGrid(1, 128, 2 * math.pi)
        u0 = VectorField(grid, 3 * smooth_u0(grid).samples)
        with pytest.raises(BlowupDetected) as info:
            solve(u0, SolverConfig(0.01, 5.0, blowup_threshold=2.5))
        e = info.value
        assert e.norm > 2.5 and e.time < 5.0
        assert e.trajectory.times[-1] <= e.time
        assert len(e.trajectory.states) >= 1

    def test_default_guard_is_relative(self):
        grid = PeriodicGrid(1, 128, 2 * math.pi)
        traj = solve(smooth_u0(grid), SolverConfig(0.01, 0.2))
        g = traj.diagnostics["grad_linf"]
        assert g.max() < 10 * g[0]
        assert g[0] == pytest.approx(grad_linf(traj.states[0]))


class TestTrajectory:
    def test_validation(self, grid1):
        z = VectorField.zeros(grid1)
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0], [z])
        with pytest.raises(ValueError):
            Trajectory([1.0, 0.0], [z, z])

    def test_csv(self, grid1):
        part = build_partition(grid1)
        traj = solve(smooth_u0(grid1), SolverConfig(0.05, 0.1), SpaceParams(2, 2, 2), part)
        rows = list(csv.reader(io.StringIO(traj.to_csv())))
        assert rows[0] == ["t", "f_norm", "besov_low_norm", "grad_linf", "energy"]
        assert len(rows) == 4
        assert all(math.isfinite(float(v)) for v in rows[1])

    def test_csv_without_space_has_nan(self, grid1):
        traj = solve(smooth_u0(grid1), SolverConfig(0.05, 0.1))
        rows = list(csv.reader(io.StringIO(traj.to_csv())))
        assert math.isnan(float(rows[1][1]))


class TestPicard:
    def setup_method(self):
        self.grid = PeriodicGrid(1, 128, 2 * math.pi)
        self.part = build_partition(self.grid)
        self.u0 = smooth_u0(self.grid)
        self.cfg = SolverConfig(0.01, 0.3)

    def test_first_iterate_is_frozen(self):
        its = picard_solve(self.u0, 3, self.cfg, self.part)
        assert len(its) == 4
        assert all(np.abs(s.samples).max() == 0 for s in its[0].states)
        start = low_pass(self.u0, 1, self.part).samples
        for s in its[1].states:
            np.testing.assert_allclose(s.samples, start, atol=1e-15)

    def test_iterates_approach_solution(self):
        its = picard_solve(self.u0, 8, self.cfg, self.part)
        ref = solve(self.u0, self.cfg).final
        low = SpaceParams(1, 2, math.inf, NormKind.BESOV)
        d = [besov_norm(it.final - ref, low, self.part) for it in its[2:]]
        assert d[-1] < 1e-3 * d[0]
        assert d[-1] < 1e-6

    def test_cauchy_diagnostic(self):
        its = picard_solve(self.u0, 6, self.cfg, self.part)
        low = SpaceParams(1, 2, math.inf, NormKind.BESOV)
        b = cauchy_diagnostic(its, 1, low, self.part)
        assert len(b) == 6
        assert b[0] == pytest.approx(besov_norm(its[1].final - its[0].final, low, self.part))
        with pytest.raises(ValueError):
            cauchy_diagnostic(its, 0, low, self.part)
        with pytest.raises(ValueError):
            cauchy_diagnostic(its[:2], 2, low, self.part)

    def test_needs_iterations(self):
        with pytest.raises(ValueError):
            picard_solve(self.u0, 0, self.cfg, self.part)
