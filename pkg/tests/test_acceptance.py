"""Acceptance gate: the ten delivery criteria, one test and one printed
PASS/FAIL line each (visible with `pytest -s` / `-rA`; under `pytest -v`
the test names themselves give the per-criterion verdict).

Every tolerance here is a delivery threshold, deliberately looser than
the unit suites, which pin the same quantities at their measured
rounding-level values."""

import re

import numpy as np
import pytest
from scipy.optimize import brentq

from dke.evolve import (IntegratorConfig, polarization_dt_bound,
                        run_distribution, run_polarization)
from dke.grid import GridSpec, closure_defect
from dke.kinetics import (CollisionModel, DistributionField,
                          PolarizationMatrix, PotentialProfile, collision_rhs,
                          detailed_balance_table, effective_hamiltonian,
                          hermiticity_defect, meanfield_rhs)
from dke.runner import limit_study, simulate, verify_basis_report
from dke.scenario import build_initial, build_profile, load_config
from dke.stencils import DriftStencil, LatticeField, dft_derivative_oracle, \
    drift_apply

_PRESET_CACHE = {}


def run_preset(presets_dir, name):
    if name not in _PRESET_CACHE:
        config = load_config(presets_dir / f"{name}.cfg")
        _PRESET_CACHE[name] = (config,
                               simulate(config, base_dir=str(presets_dir)))
    return _PRESET_CACHE[name]


def report(num, ok, text):
    print(f"CRITERION {num:02d} {'PASS' if ok else 'FAIL'}: {text}")
    assert ok, f"criterion {num:02d}: {text}"


def test_criterion_01_basis_completeness():
    worst_ortho, worst_recon = 0.0, 0.0
    for cells, nmax in ((4, 8), (8, 16)):
        result = verify_basis_report(cells, nmax)
        by_name = {c.name: c for c in result.checks}
        worst_ortho = max(
            worst_ortho,
            by_name["orthonormality analytic-vs-quadrature"].defect)
        worst_recon = max(worst_recon,
                          by_name["on-grid reconstruction"].defect)

    # closure against a fixed smooth Gaussian, sampled inside the cells
    # (cell-edge values jump, so edge points never converge pointwise)
    gauss = lambda x: np.exp(-x ** 2 / (2 * 0.5 ** 2))
    defects = []
    for nmax in (16, 32, 64):
        spec = GridSpec(d=1.0, num_cells=4, n_max=nmax)
        xs = np.concatenate([
            np.linspace(lo + 0.1 * spec.d, hi - 0.1 * spec.d, 101)
            for lo, hi in (spec.cell_edges(m) for m in range(4))])
        defects.append(closure_defect(spec, gauss, xs))
    monotone = defects[0] > defects[1] > defects[2]

    ok = worst_ortho < 1e-12 and worst_recon < 1e-10 and monotone
    report(1, ok,
           f"orthonormality to {worst_ortho:.1e} (tol 1e-12), "
           f"reconstruction to {worst_recon:.1e} (tol 1e-10), closure "
           f"defects {defects[0]:.2e} > {defects[1]:.2e} > {defects[2]:.2e}")


def test_criterion_02_expansion_prefactor():
    result = verify_basis_report(4, 8)
    check = {c.name: c for c in result.checks}["plane-wave expansion "
                                               "prefactor"]
    samples = int(re.search(r"(\d+) \(state, k\) samples",
                            check.detail).group(1))
    ok = check.defect < 1e-12 and samples >= 100
    report(2, ok,
           f"analytic coefficients match quadrature to {check.defect:.1e} "
           f"(tol 1e-12) over {samples} (state, k) samples")


def test_criterion_03_drift_spectral_equivalence():
    worst = 0.0
    points = []
    for n_max in (16, 32):
        spec = GridSpec(d=1.0, num_cells=2 * n_max + 2, n_max=n_max)
        K = spec.momenta()
        period = spec.num_k * spec.delta_k
        sigma = 3.0 * spec.delta_k
        vals = np.tile(np.exp(-K ** 2 / (2 * sigma ** 2)),
                       (spec.num_cells, 1))
        got = drift_apply(LatticeField(spec, vals), 1.0,
                          half_width=n_max).values
        want = -dft_derivative_oracle(vals, period, axis=1)
        worst = max(worst, float(np.max(np.abs(got - want))))
        points.append(spec.num_k)
    ok = worst < 1e-8
    report(3, ok,
           f"full-width drift stencil matches the DFT derivative to "
           f"{worst:.1e} (tol 1e-8) on {points[0]}- and {points[1]}-point "
           f"momentum grids")


def test_criterion_04_conservation(presets_dir, rng):
    drifts = []
    for name in ("free_streaming", "uniform_drift"):
        _, result = run_preset(presets_dir, name)
        first = result.trajectory[0][2].total_number
        last = result.trajectory[-1][2].total_number
        drifts.append(abs(last - first) / first)

    spec = GridSpec(d=1.0, num_cells=4, n_max=2)
    worst_sum = 0.0
    for _ in range(100):
        w = rng.uniform(0.0, 1.0, size=(spec.num_states, spec.num_states))
        np.fill_diagonal(w, 0.0)
        model = CollisionModel(spec, w, 1.0, "user_table")
        n = rng.uniform(0.0, 1.0, size=spec.num_states)
        rhs = collision_rhs(n, model)
        worst_sum = max(worst_sum,
                        abs(rhs.sum()) / (np.sum(np.abs(rhs)) + 1e-300))

    ok = max(drifts) < 1e-10 and worst_sum < 1e-12
    report(4, ok,
           f"1000-step transport presets conserve number to rel "
           f"{drifts[0]:.1e} and {drifts[1]:.1e} (tol 1e-10); collision "
           f"sums to {worst_sum:.1e} rel (tol 1e-12) over 100 random "
           f"(n, W) draws")


def test_criterion_05_hermiticity_and_trace(rng):
    spec = GridSpec(d=1.0, num_cells=6, n_max=2)  # 30 states
    prof = PotentialProfile.harmonic(spec, 0.8)
    H = effective_hamiltonian(spec, prof)

    worst_def, worst_tr = 0.0, 0.0
    p = None
    for _ in range(100):
        a = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
        p = (a + a.conj().T) / 2.0 * 0.05
        np.fill_diagonal(p, rng.uniform(0.2, 0.8, 30))
        rhs = meanfield_rhs(p, prof, hamiltonian=H)
        worst_def = max(worst_def, hermiticity_defect(rhs))
        worst_tr = max(worst_tr,
                       abs(np.trace(rhs)) / np.linalg.norm(p))

    bound = polarization_dt_bound(H)
    cfg = IntegratorConfig(dt=0.5 * bound, t_end=0.5 * bound * 1000,
                           snapshot_every=100)
    p0 = PolarizationMatrix(spec, p)
    traj = run_polarization(p0, prof, cfg)
    tr0 = float(np.trace(p0.values).real)
    drift = max(abs(np.trace(P.values).real - tr0) for _, P, _ in traj)

    ok = worst_def < 1e-12 and worst_tr < 1e-12 and drift < 1e-10
    report(5, ok,
           f"commutator RHS Hermitian to {worst_def:.1e} and traceless to "
           f"{worst_tr:.1e} rel (tol 1e-12) over 100 random P; trace "
           f"drift {drift:.1e} over 1000 RK4 steps (tol 1e-10)")


def test_criterion_06_equilibrium_stationarity(presets_dir):
    spec = GridSpec(d=2.0 * np.pi, num_cells=2, n_max=4)
    T = 2.0
    model = detailed_balance_table(spec, temperature=T, w0=0.7)
    fd = DistributionField.fermi_dirac(spec, mu=1.0, temperature=T)
    stationary = float(np.max(np.abs(collision_rhs(fd, model))))

    config, result = run_preset(presets_dir, "relaxation")
    final = result.trajectory[-1][1].values
    eps = config.grid.momenta() ** 2 / 2.0
    bath_t = config.collision.temperature
    number = final[0].sum()  # conserved, fixes the chemical potential
    mu = brentq(lambda m: (1.0 / (np.exp((eps - m) / bath_t) + 1.0)).sum()
                - number, -50.0, 50.0, xtol=1e-14)
    row = 1.0 / (np.exp((eps - mu) / bath_t) + 1.0)
    relax = float(np.max(np.abs(final - row[None, :])))

    ok = stationary < 1e-10 and relax < 1e-4
    report(6, ok,
           f"Fermi-Dirac stationary under balanced rates to "
           f"{stationary:.1e} (tol 1e-10); relaxation preset reaches "
           f"Fermi-Dirac (mu {mu:.4f}) to sup {relax:.1e} (tol 1e-4)")


def test_criterion_07_free_streaming_transport(presets_dir):
    config, result = run_preset(presets_dir, "free_streaming")
    spec = config.grid
    x = spec.positions()
    traj = result.trajectory
    com = []
    for entry in (traj[0], traj[-1]):
        rho = entry[1].values.sum(axis=1)
        com.append(float((x * rho).sum() / rho.sum()))
    shift = com[1] - com[0]
    expected = spec.momentum(config.initial.center_n) * traj[-1][0]
    err_cells = abs(shift - expected) / spec.d
    ok = err_cells < 0.01
    report(7, ok,
           f"packet center moved {shift:.6f} over a quarter traversal, "
           f"expected {expected:.6f}; error {err_cells:.2e} cell widths "
           f"(tol 0.01)")


def test_criterion_08_classical_limit(presets_dir):
    config = load_config(presets_dir / "limit_study_base.cfg")
    rows = limit_study(config, 3, base_dir=str(presets_dir)).rows
    defects = [row[3] for row in rows]
    ratios = [defects[0] / defects[1], defects[1] / defects[2]]
    ok = defects[0] > defects[1] > defects[2] and min(ratios) >= 2.0
    report(8, ok,
           f"difference-vs-classical defect {defects[0]:.3e} -> "
           f"{defects[1]:.3e} -> {defects[2]:.3e} under refinement, "
           f"ratios {ratios[0]:.2f}, {ratios[1]:.2f} (each >= 2)")


def test_criterion_09_rk4_order(presets_dir):
    config, _ = run_preset(presets_dir, "free_streaming")
    profile = build_profile(config, str(presets_dir))
    n0 = build_initial(config)
    dt0 = config.integrator.dt
    t_end = 100.0 * dt0
    finals = {}
    for div in (1, 2, 16):
        cfg = IntegratorConfig(dt=dt0 / div, t_end=t_end,
                               snapshot_every=10 ** 9)
        finals[div] = run_distribution(n0, profile, None, cfg)[-1][1].values
    e_coarse = float(np.max(np.abs(finals[1] - finals[16])))
    e_fine = float(np.max(np.abs(finals[2] - finals[16])))
    factor = e_coarse / e_fine
    ok = factor >= 12.0
    report(9, ok,
           f"halving dt shrinks the error {e_coarse:.2e} -> {e_fine:.2e} "
           f"against a dt/16 reference: factor {factor:.2f} (>= 12)")


def test_criterion_10_determinism(presets_dir):
    config = load_config(presets_dir / "relaxation.cfg")
    first = simulate(config, base_dir=str(presets_dir))
    second = simulate(config, base_dir=str(presets_dir))
    same = (first.snapshots_csv.encode() == second.snapshots_csv.encode()
            and first.diagnostics_csv.encode()
            == second.diagnostics_csv.encode()
            and first.run_meta.encode() == second.run_meta.encode())
    report(10, same,
           "repeated simulate runs on an identical config produce "
           "byte-identical snapshots, diagnostics, and run metadata")
