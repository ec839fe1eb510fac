"""Run-level drivers shared by the CLI and the HTTP service.

Everything here is pure computation plus string rendering: simulate() and
limit_study() return result objects carrying fully rendered CSV text, and
write_outputs() is the only function that touches the filesystem.  All
numbers are serialized with 17 significant digits, so identical configs
produce byte-identical files.
"""

import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from .evolve import run_distribution, stability_dt_bound, transport_dt_bound
from .grid import GridSpec, _gauss_panels, expand_plane_wave, reconstruct
from .kinetics import (DistributionField, classical_rhs_values,
                       dbe_rhs_values, gaussian_packet_values)
from .scenario import (ScenarioConfig, build_collision, build_initial,
                       build_profile, serialize_config)

MAX_VERIFY_STATES = 512


def fmt17(x):
    """17-significant-digit decimal text; round-trips IEEE doubles."""
    return "%.17g" % x


@dataclass
class BasisCheck:
    name: str
    defect: float
    tol: float
    detail: str = ""

    @property
    def passed(self):
        return self.defect < self.tol


@dataclass
class VerifyResult:
    passed: bool
    report: str
    checks: list


def verify_basis_report(num_cells, n_max, d=1.0, prefactor_scale=1.0):
    """Exhaustive analytic-vs-quadrature audit of the cell basis.

    prefactor_scale is an internal fault-injection hook: it multiplies the
    analytic plane-wave expansion coefficients so tests can confirm the
    report actually fails when the closed form is wrong.  Production paths
    leave it at 1.
    """
    spec = GridSpec(d=d, num_cells=num_cells, n_max=n_max)
    if spec.num_states > MAX_VERIFY_STATES:
        raise ValueError(
            f"verification grid has {spec.num_states} states; "
            f"limit is {MAX_VERIFY_STATES}")
    nk = spec.num_k
    momenta = spec.momenta()
    quad_points = 16 * (2 * spec.n_max + 4)
    checks = []

    # 1. same-cell quadrature Gram matrices against the identity; cross-cell
    # products vanish identically because cell supports are disjoint
    ortho = 0.0
    eye = np.eye(nk)
    for m in range(spec.num_cells):
        lo, hi = spec.cell_edges(m)
        xs, w = _gauss_panels(lo, hi, quad_points)
        waves = np.exp(1j * momenta[:, None] * xs[None, :]) / np.sqrt(spec.d)
        gram = (waves.conj() * w) @ waves.T
        ortho = max(ortho, float(np.max(np.abs(gram - eye))))
    checks.append(BasisCheck(
        "orthonormality analytic-vs-quadrature", ortho, 1e-12,
        f"{spec.num_cells * nk * nk} pairs (cross-cell exact zero)"))

    # 2. plane-wave expansion coefficients against direct quadrature
    fracs = (0.0, 0.217, 0.5, 0.833)
    n_samples = np.unique(np.round(
        np.linspace(-spec.n_max, spec.n_max, 7)).astype(int))
    k_values = [(n + f) * spec.delta_k for n in n_samples for f in fracs]
    pref = 0.0
    root_length = np.sqrt(spec.length)
    for k in k_values:
        analytic = prefactor_scale * expand_plane_wave(spec, k)
        quad = np.zeros((spec.num_cells, nk), dtype=complex)
        for m in range(spec.num_cells):
            lo, hi = spec.cell_edges(m)
            xs, w = _gauss_panels(lo, hi, quad_points)
            waves = np.exp(1j * momenta[:, None] * xs[None, :]) / np.sqrt(spec.d)
            target = np.exp(1j * k * xs) / root_length
            quad[m] = (waves.conj() * w) @ target
        pref = max(pref, float(np.max(np.abs(analytic - quad))))
    checks.append(BasisCheck(
        "plane-wave expansion prefactor", pref, 1e-12,
        f"{len(k_values) * spec.num_states} (state, k) samples"))

    # 3. on-grid plane waves reconstruct exactly from their coefficients
    xs = np.linspace(-spec.length / 2, spec.length / 2, 24 * spec.num_cells,
                     endpoint=False)
    recon = 0.0
    for n in range(-spec.n_max, spec.n_max + 1):
        k = spec.momentum(n)
        coeffs = prefactor_scale * expand_plane_wave(spec, k)
        rebuilt = reconstruct(spec, coeffs, xs)
        recon = max(recon, float(np.max(np.abs(
            rebuilt - np.exp(1j * k * xs) / root_length))))
    checks.append(BasisCheck("on-grid reconstruction", recon, 1e-10))

    # 4. on-grid coefficient columns carry unit total weight
    norm = 0.0
    for n in range(-spec.n_max, spec.n_max + 1):
        coeffs = prefactor_scale * expand_plane_wave(spec, spec.momentum(n))
        norm = max(norm, abs(float(np.sum(np.abs(coeffs) ** 2)) - 1.0))
    checks.append(BasisCheck("expansion column normalization", norm, 1e-12))

    passed = all(c.passed for c in checks)
    lines = [f"plane-wavelet basis check: {spec.num_cells} cells, "
             f"n_max {spec.n_max}, d {fmt17(spec.d)} "
             f"({spec.num_states} states)"]
    for c in checks:
        detail = f"  ({c.detail})" if c.detail else ""
        lines.append(
            f"  {c.name:<42s} max defect {c.defect:9.3e}  tol {c.tol:g}  "
            f"{'PASS' if c.passed else 'FAIL'}{detail}")
    lines.append(f"result: {'PASS' if passed else 'FAIL'}")
    return VerifyResult(passed, "\n".join(lines) + "\n", checks)


@dataclass
class SimulateResult:
    config: ScenarioConfig
    trajectory: list
    snapshots_csv: str
    diagnostics_csv: str
    run_meta: str
    output_dir: str


def render_snapshots_csv(spec, trajectory):
    lines = ["t,m,n,value"]
    offsets = range(-spec.n_max, spec.n_max + 1)
    for t, field, _ in trajectory:
        ts = fmt17(t)
        for m in range(spec.num_cells):
            row = field.values[m]
            for j, n in enumerate(offsets):
                lines.append(f"{ts},{m},{n},{fmt17(row[j])}")
    return "\n".join(lines) + "\n"


def render_diagnostics_csv(trajectory):
    lines = ["t,total_number,min_n,max_n,entropy"]
    for t, _, diag in trajectory:
        lines.append(",".join(fmt17(v) for v in (
            t, diag.total_number, diag.min_n, diag.max_n, diag.entropy)))
    return "\n".join(lines) + "\n"


def render_run_meta(config, model):
    spec = config.grid
    tbound = transport_dt_bound(spec)
    sbound = stability_dt_bound(spec, model)
    lines = [serialize_config(config).rstrip("\n"),
             "",
             "# derived quantities (informational, not config keys)",
             f"num_steps = {config.integrator.num_steps}",
             f"transport_dt_bound = {fmt17(tbound)}"]
    if model is not None:
        lines.append(f"collision_dt_bound = {fmt17(model.dt_bound())}")
    lines.append(f"stability_dt_bound = {fmt17(sbound)}")
    return "\n".join(lines) + "\n"


def simulate(config, base_dir=".", output_dir=None):
    """Run the configured scenario; returns rendered outputs (no file IO)."""
    resolved = dataclasses.replace(
        config, output_dir=output_dir or config.output_dir)
    profile = build_profile(resolved, base_dir)
    n0 = build_initial(resolved)
    model = build_collision(resolved, base_dir)
    trajectory = run_distribution(n0, profile, model, resolved.integrator)
    return SimulateResult(
        config=resolved,
        trajectory=trajectory,
        snapshots_csv=render_snapshots_csv(resolved.grid, trajectory),
        diagnostics_csv=render_diagnostics_csv(trajectory),
        run_meta=render_run_meta(resolved, model),
        output_dir=resolved.output_dir,
    )


def write_outputs(result):
    """Write the rendered simulate() artifacts; returns {name: path}."""
    outdir = result.output_dir
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    for name, text in (("snapshots.csv", result.snapshots_csv),
                       ("diagnostics.csv", result.diagnostics_csv),
                       ("run_meta", result.run_meta)):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths[name] = path
    return paths


@dataclass
class LimitStudyResult:
    rows: list
    csv_text: str
    output_dir: str


def refined_grid(spec, level):
    """Level 1 is the base grid; each level halves d and doubles n_max,
    keeping the physical length fixed (cell count doubles)."""
    factor = 2 ** (level - 1)
    return GridSpec(d=spec.d / factor, num_cells=spec.num_cells * factor,
                    n_max=spec.n_max * factor)


def _resample_initial(config, fine):
    """Evaluate the base Gaussian at fixed physical centers on a finer grid
    (the refined lattice generally does not contain the base lattice
    points, so the factory's index-based centering cannot be reused).
    The position-direction periodization matches the factory's because the
    physical length is held fixed across levels."""
    base = config.grid
    ini = config.initial
    return DistributionField(fine, gaussian_packet_values(
        fine, base.position(ini.center_m), base.momentum(ini.center_n),
        ini.sigma_r, ini.sigma_k, ini.amplitude))


def limit_study(config, levels, base_dir=".", output_dir=None):
    """Difference-vs-classical RHS gap at t = 0 across grid refinements.

    The drift stencil runs at full half-width, where it coincides with the
    spectral momentum derivative, so the recorded defect isolates the
    position-streaming discretization and shrinks about fourfold per level.
    """
    if not 2 <= levels <= 5:
        raise ValueError(f"levels must be in [2, 5], got {levels}")
    if config.initial.kind != "gaussian_rk":
        raise ValueError("limit study requires the gaussian_rk initial "
                         "(smooth data to re-sample)")
    if config.potential.kind == "custom_table":
        raise ValueError("limit study cannot refine a custom_table "
                         "potential (table is tied to the base grid)")
    if config.collision.kind == "user_table":
        raise ValueError("limit study cannot refine a user_table collision "
                         "model (rate matrix is tied to the base grid)")

    rows = []
    for level in range(1, levels + 1):
        fine = refined_grid(config.grid, level)
        scaled = dataclasses.replace(config, grid=fine)
        profile = build_profile(scaled, base_dir)
        model = build_collision(scaled, base_dir)
        values = _resample_initial(config, fine).values
        width = fine.n_max
        diff = dbe_rhs_values(fine, values, profile, model, half_width=width)
        ref = classical_rhs_values(fine, values, profile, model)
        defect = float(np.max(np.abs(diff - ref)))
        rows.append((level, fine.d, fine.n_max, defect))

    lines = ["level,d,n_max,defect"]
    for level, d, n_max, defect in rows:
        lines.append(f"{level},{fmt17(d)},{n_max},{fmt17(defect)}")
    csv_text = "\n".join(lines) + "\n"
    return LimitStudyResult(rows, csv_text,
                            output_dir or config.output_dir)


def write_limit_study(result):
    os.makedirs(result.output_dir, exist_ok=True)
    path = os.path.join(result.output_dir, "limit_study.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(result.csv_text)
    return {"limit_study.csv": path}
