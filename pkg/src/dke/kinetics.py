"""Transport and collision operators on the phase-space lattice.

Natural units throughout: hbar = m = q = 1, so the quasiparticle energy of
carrier momentum K is K^2/2 and the electric field equals minus the
potential gradient.  Flat state indices are position-major:
k = m * num_k + (n + n_max), matching GridSpec.flat_index.

Three right-hand sides are provided:

* dbe_rhs: difference kinetic equation for the diagonal distribution
  n(X, K) -- centered position difference weighted by K, the alternating
  momentum drift stencil, and the Pauli master collision term.
* classical_rhs: the classical kinetic equation on the same lattice with
  spectral (DFT) derivatives replacing the difference operators; the gap
  between the two shrinks under grid refinement.
* meanfield_rhs: evolution of the full polarization matrix, written as the
  commutator (i)[H_eff^T, P] with a Hermitian effective one-body matrix, so
  Hermiticity and trace are preserved to machine precision by construction.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .stencils import (DriftStencil, LatticeField, drift_apply,
                       dft_derivative_oracle, stream_d, stream_d_back)

OCCUPATION_BAND = (-1e-9, 1.0 + 1e-9)
BOSE_CLAMP = 1e-9


def centered_difference(values, d):
    """(f(m+1) - f(m-1)) / (2d) along the first axis, periodic."""
    return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * d)


def kinetic_energies(spec):
    """Flat array of quasiparticle energies K^2/2, position-major."""
    return np.tile(spec.momenta() ** 2 / 2.0, spec.num_cells)


def _periodized_gaussian(u, center, sigma, period, images=3):
    """exp(-(u-center)^2 / 2 sigma^2) summed over periodic images, so the
    profile is smooth across the domain seam (an unwrapped Gaussian leaves
    a jump there that difference stencils amplify into negative ringing)."""
    total = np.zeros_like(u, dtype=float)
    for j in range(-images, images + 1):
        total += np.exp(-((u - center + j * period) ** 2)
                        / (2.0 * sigma ** 2))
    return total


def gaussian_packet_values(spec, xc, kc, sigma_r, sigma_k, amplitude):
    """Separable periodized Gaussian occupations at physical centers.

    Peak value is amplitude up to the (exponentially small for narrow
    packets) image overlap; amplitudes very close to 1 combined with very
    wide packets can push the sum past unity, which the occupation-band
    check then rejects.
    """
    gx = _periodized_gaussian(spec.positions(), xc, sigma_r, spec.length)
    gk = _periodized_gaussian(spec.momenta(), kc, sigma_k,
                              spec.num_k * spec.delta_k)
    return amplitude * np.outer(gx, gk)


@dataclass
class PotentialProfile:
    """Static potential V(X) and field E(X) = -dV/dX on the cell lattice."""

    spec: object
    V: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        m = self.spec.num_cells
        if self.V.shape != (m,) or self.E.shape != (m,):
            raise ValueError(
                f"profile arrays must have shape ({m},), got V {self.V.shape} "
                f"E {self.E.shape}")

    @classmethod
    def zero(cls, spec):
        return cls(spec, np.zeros(spec.num_cells), np.zeros(spec.num_cells))

    @classmethod
    def uniform_field(cls, spec, e0):
        """Uniform field supplied directly; V is kept at zero (dipole gauge),
        so only the field couples to the dynamics."""
        return cls(spec, np.zeros(spec.num_cells),
                   np.full(spec.num_cells, float(e0)))

    @classmethod
    def from_potential(cls, spec, V):
        """Derive E by periodic centered differences of V."""
        V = np.asarray(V, dtype=float)
        if V.shape != (spec.num_cells,):
            raise ValueError(
                f"V must have shape ({spec.num_cells},), got {V.shape}")
        E = -centered_difference(V[:, None], spec.d)[:, 0]
        return cls(spec, V, E)

    @classmethod
    def harmonic(cls, spec, k_spring):
        if k_spring <= 0:
            raise ValueError(f"k_spring must be positive, got {k_spring}")
        return cls.from_potential(spec, 0.5 * k_spring * spec.positions() ** 2)

    @classmethod
    def from_arrays(cls, spec, V, E, check=True, tol=1e-8):
        """Construct from explicit arrays, verifying E = -dV/dX by the same
        centered difference used in from_potential."""
        prof = cls(spec, V, E)
        if check:
            expected = -centered_difference(prof.V[:, None], spec.d)[:, 0]
            defect = float(np.max(np.abs(prof.E - expected)))
            scale = max(1.0, float(np.max(np.abs(expected))))
            if defect > tol * scale:
                raise ValueError(
                    f"E inconsistent with -dV/dX: defect {defect:.3e}")
        return prof


@dataclass
class DistributionField:
    """Real occupations n(X, K) in [0, 1] on the lattice."""

    spec: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.spec.num_cells, self.spec.num_k)
        if self.values.shape != expected:
            raise ValueError(
                f"distribution shape {self.values.shape} != {expected}")
        lo, hi = OCCUPATION_BAND
        if self.values.min() < lo or self.values.max() > hi:
            raise ValueError(
                f"occupations outside [{lo}, {hi}]: "
                f"min {self.values.min():.3e} max {self.values.max():.3e}")

    def flat(self):
        """Position-major flat vector, aligned with GridSpec.flat_index."""
        return self.values.reshape(-1)

    def as_lattice_field(self):
        return LatticeField(self.spec, self.values)

    @classmethod
    def uniform(cls, spec, n0):
        return cls(spec, np.full((spec.num_cells, spec.num_k), float(n0)))

    @classmethod
    def gaussian_rk(cls, spec, center_m, center_n, sigma_r, sigma_k,
                    amplitude):
        """Separable Gaussian packet centered on lattice point
        (X(center_m), K(center_n))."""
        if not 0 < amplitude <= 1.0:
            raise ValueError(f"amplitude must be in (0, 1], got {amplitude}")
        if sigma_r <= 0 or sigma_k <= 0:
            raise ValueError("sigma_r and sigma_k must be positive")
        if not 0 <= center_m < spec.num_cells:
            raise ValueError(f"center_m {center_m} outside grid")
        if not -spec.n_max <= center_n <= spec.n_max:
            raise ValueError(f"center_n {center_n} outside grid")
        values = gaussian_packet_values(
            spec, spec.position(center_m), spec.momentum(center_n),
            sigma_r, sigma_k, amplitude)
        return cls(spec, values)

    @classmethod
    def fermi_dirac(cls, spec, mu, temperature):
        """Homogeneous Fermi-Dirac occupation of the carrier energies."""
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        eps = spec.momenta() ** 2 / 2.0
        row = 1.0 / (np.exp((eps - mu) / temperature) + 1.0)
        return cls(spec, np.tile(row, (spec.num_cells, 1)))


@dataclass
class PolarizationMatrix:
    """Hermitian microscopic polarization over flat state indices."""

    spec: object
    values: np.ndarray
    check: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.spec.num_states
        if self.values.shape != (n, n):
            raise ValueError(
                f"polarization shape {self.values.shape} != ({n}, {n})")
        if self.check:
            scale = max(1.0, float(np.max(np.abs(self.values))))
            defect = hermiticity_defect(self.values)
            if defect > 1e-12 * scale:
                raise ValueError(f"matrix not Hermitian: defect {defect:.3e}")
            diag = np.diagonal(self.values)
            lo, hi = OCCUPATION_BAND
            if np.max(np.abs(diag.imag)) > 1e-12 * scale:
                raise ValueError("diagonal occupations must be real")
            if diag.real.min() < lo or diag.real.max() > hi:
                raise ValueError(
                    f"diagonal occupations outside [{lo}, {hi}]")

    @classmethod
    def from_distribution(cls, dist):
        return cls(dist.spec, np.diag(dist.flat().astype(complex)))

    def diagonal_field(self):
        diag = np.diagonal(self.values).real
        return DistributionField(
            self.spec, diag.reshape(self.spec.num_cells, self.spec.num_k))


def hermiticity_defect(values):
    """max |P - P^dagger| entrywise."""
    return float(np.max(np.abs(values - values.conj().T)))


@dataclass
class CollisionModel:
    """Pauli master-equation transition rates over flat state indices.

    rates[k][k1] is the transition probability k1 -> k; it feeds the gain
    term W(k, k1) n_k1 (1 - n_k).
    """

    spec: object
    rates: np.ndarray
    temperature: float
    model_kind: str
    epsilon_static: float | None = None
    eta: float | None = None

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        n = self.spec.num_states
        if self.rates.shape != (n, n):
            raise ValueError(f"rates shape {self.rates.shape} != ({n}, {n})")
        if not np.all(np.isfinite(self.rates)):
            raise ValueError("rates must be finite")
        if self.rates.min() < 0:
            raise ValueError("rates must be nonnegative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.model_kind not in ("user_table", "static_screened_coulomb"):
            raise ValueError(f"unknown model_kind {self.model_kind!r}")

    def detailed_balance_defect(self):
        """Max relative defect of W(k,k')/W(k',k) = exp((eps_k' - eps_k)/T)
        over pairs where both directions have positive rate (log space, so
        large energy splittings do not overflow)."""
        eps = kinetic_energies(self.spec)
        w = self.rates
        mask = (w > 0) & (w.T > 0)
        if not np.any(mask):
            return 0.0
        target = (eps[None, :] - eps[:, None]) / self.temperature
        defect = np.abs(np.log(w[mask]) - np.log(w.T[mask]) - target[mask])
        return float(np.max(defect))

    def dt_bound(self):
        """Stability bound 0.5 / max_k sum_k1 (W(k,k1) + W(k1,k))."""
        total = np.max(self.rates.sum(axis=1) + self.rates.sum(axis=0))
        if total == 0:
            return np.inf
        return 0.5 / float(total)


def detailed_balance_table(spec, temperature, w0):
    """Cell-local rate table with exact detailed balance.

    W[(m,n),(m,n')] = w0 exp((eps_n' - eps_n)/(2T)) within each cell, zero
    across cells and on the diagonal, so Fermi-Dirac occupations are exactly
    stationary and homogeneity is preserved.
    """
    if w0 <= 0:
        raise ValueError("w0 must be positive")
    eps = spec.momenta() ** 2 / 2.0
    block = w0 * np.exp((eps[None, :] - eps[:, None]) / (2.0 * temperature))
    np.fill_diagonal(block, 0.0)
    n = spec.num_states
    rates = np.zeros((n, n))
    nk = spec.num_k
    for m in range(spec.num_cells):
        rates[m * nk:(m + 1) * nk, m * nk:(m + 1) * nk] = block
    return CollisionModel(spec, rates, float(temperature), "user_table")


def _bose_occupation(x, temperature):
    """n_B(x) for x > 0 via expm1 for accuracy near zero."""
    return 1.0 / np.expm1(x / temperature)


def build_screened_coulomb_rates(spec, temperature, epsilon_static=1.0,
                                 eta=0.05, q_max=None):
    """Statically screened Coulomb transition rates.

    W(k, k') = (2/eps_s) sum_q V_q |<k|e^{iqx}|k'>|^2 B(omega) L_eta(omega)
    over the plane-wave grid q = 2*pi*j/L, 0 < |j| <= q_max (default
    4 n_max), with V_q = 4*pi/(L q^2).  omega is the energy released in the
    k' -> k transition; B is the Bose emission factor n_B + 1 downhill and
    n_B uphill (detailed balance holds exactly), with |omega| clamped to
    1e-9 before the Bose pole.  L_eta is the unit-normalized Lorentzian of
    width eta standing in for the energy-conserving delta.  Rates connect
    same-cell states only and the inert diagonal is zeroed.
    """
    if epsilon_static <= 0:
        raise ValueError("epsilon_static must be positive")
    if eta <= 0:
        raise ValueError("eta must be positive")
    if q_max is None:
        q_max = 4 * spec.n_max
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    K = spec.momenta()
    j = np.concatenate([np.arange(-q_max, 0), np.arange(1, q_max + 1)])
    q = j * spec.delta_q

    # |<k|e^{iqx}|k'>|^2 = sinc^2(d (K_row + q - K_col)/2), cell-diagonal
    arg = spec.d * (K[:, None, None] + q[None, None, :] - K[None, :, None]) / 2.0
    sinc2 = np.sinc(arg / np.pi) ** 2
    vq = 4.0 * np.pi / (spec.length * q ** 2)
    coupling = np.tensordot(sinc2, vq, axes=([2], [0]))

    released = (K[None, :] ** 2 - K[:, None] ** 2) / 2.0
    mag = np.maximum(np.abs(released), BOSE_CLAMP)
    bose = _bose_occupation(mag, temperature) + (released >= 0)
    lorentz = (eta / np.pi) / (released ** 2 + eta ** 2)

    block = (2.0 / epsilon_static) * coupling * bose * lorentz
    np.fill_diagonal(block, 0.0)

    n = spec.num_states
    nk = spec.num_k
    rates = np.zeros((n, n))
    for m in range(spec.num_cells):
        rates[m * nk:(m + 1) * nk, m * nk:(m + 1) * nk] = block
    return CollisionModel(spec, rates, float(temperature),
                          "static_screened_coulomb",
                          epsilon_static=float(epsilon_static),
                          eta=float(eta))


def _collision_flux(n, rates):
    # unchecked core; integrator stages may sit slightly outside [0, 1]
    gain = rates * np.outer(1.0 - n, n)
    flux = gain - gain.T
    return flux.sum(axis=1)


def collision_rhs(n, model):
    """Pauli master-equation collision term on flat occupations.

    rhs_k = sum_k1 [W(k,k1) n_k1 (1-n_k) - W(k1,k) (1-n_k1) n_k], assembled
    from an exactly antisymmetric pair-flux matrix so the total particle
    number is conserved to rounding.  Accepts a DistributionField or any
    array; occupations must lie in [-1e-12, 1 + 1e-12].
    """
    if isinstance(n, DistributionField):
        n = n.values
    n = np.asarray(n, dtype=float).reshape(-1)
    if n.shape[0] != model.rates.shape[0]:
        raise ValueError(
            f"occupation length {n.shape[0]} != rate dimension "
            f"{model.rates.shape[0]}")
    if n.min() < -1e-12 or n.max() > 1.0 + 1e-12:
        raise ValueError(
            f"occupations outside [-1e-12, 1 + 1e-12]: "
            f"min {n.min():.3e} max {n.max():.3e}")
    return _collision_flux(n, model.rates)


def dbe_rhs_values(spec, values, profile, model=None, half_width=None):
    """dbe_rhs on a raw (num_cells, num_k) array; no occupation-band check,
    so integrators may call it on intermediate stages."""
    lat = LatticeField(spec, values)
    K = spec.momenta()[None, :]
    centered = stream_d_back(lat).values - stream_d(lat).values
    rhs = -K * centered
    rhs = rhs + drift_apply(lat, profile.E, half_width=half_width).values
    if model is not None:
        rhs = rhs + _collision_flux(values.reshape(-1),
                                    model.rates).reshape(rhs.shape)
    return rhs


def dbe_rhs(dist, profile, model=None, half_width=None):
    """Difference kinetic equation right-hand side for the distribution.

    Streaming: -K times the centered position difference (the assembled
    forward/backward pair at equal momenta); drift: the alternating momentum
    stencil already carrying -E; collisions: Pauli master term (skipped when
    model is None).
    """
    return dbe_rhs_values(dist.spec, dist.values, profile, model, half_width)


def classical_rhs_values(spec, values, profile, model=None):
    """classical_rhs on a raw (num_cells, num_k) array."""
    K = spec.momenta()[None, :]
    dn_dx = dft_derivative_oracle(values, spec.length, axis=0)
    dn_dk = dft_derivative_oracle(values, spec.num_k * spec.delta_k, axis=1)
    rhs = -K * dn_dx - profile.E[:, None] * dn_dk
    if model is not None:
        rhs = rhs + _collision_flux(values.reshape(-1),
                                    model.rates).reshape(rhs.shape)
    return rhs


def classical_rhs(dist, profile, model=None):
    """Classical kinetic equation with spectral derivatives.

    -K dn/dX - E dn/dK + collisions, both gradients taken by the DFT
    derivative on the periodic lattice.  Serves as the continuum-limit
    reference for dbe_rhs.
    """
    return classical_rhs_values(dist.spec, dist.values, profile, model)


def effective_hamiltonian(spec, profile, half_width=None):
    """Hermitian one-body matrix generating the polarization flow.

    Three pieces over flat indices (position-major):
      * diag(V(X) + K^2/2),
      * the in-cell dipole drift stencil +- i c_n E(X) at momentum offsets
        -+ n (periodic wrap), with the periodized alternating weights of
        DriftStencil,
      * per-momentum position hopping -Lap/2 - i K C (periodic), the
        discrete envelope of -(1/2)(d/dx + iK)^2, whose packet group
        velocity is +K at long wavelength.
    """
    M, nk = spec.num_cells, spec.num_k
    n_states = spec.num_states
    K = spec.momenta()
    d = spec.d
    idx = np.arange(n_states).reshape(M, nk)
    H = np.zeros((n_states, n_states), dtype=complex)

    diag = np.arange(n_states)
    H[diag, diag] += np.repeat(profile.V, nk) + np.tile(K ** 2 / 2.0, M)

    up = np.roll(np.arange(M), -1)
    down = np.roll(np.arange(M), 1)
    for jj in range(nk):
        rows = idx[:, jj]
        H[rows, rows] += 1.0 / d ** 2
        H[rows, idx[up, jj]] += -1.0 / (2.0 * d ** 2) - 1j * K[jj] / (2.0 * d)
        H[rows, idx[down, jj]] += -1.0 / (2.0 * d ** 2) + 1j * K[jj] / (2.0 * d)

    stencil = DriftStencil.for_grid(spec, half_width)
    cols = np.arange(nk)
    e_vals = np.broadcast_to(profile.E[:, None], (M, nk))
    for i, c in enumerate(stencil.coefficients):
        n = i + 1
        rows_lo = idx[:, (cols - n) % nk]
        rows_hi = idx[:, (cols + n) % nk]
        H[rows_lo.ravel(), idx.ravel()] += 1j * c * e_vals.ravel()
        H[rows_hi.ravel(), idx.ravel()] += -1j * c * e_vals.ravel()
    return H


def meanfield_rhs(P, profile, hamiltonian=None):
    """Polarization-matrix right-hand side (i)[H_eff^T, P].

    The commutator form makes the output Hermitian whenever P is and keeps
    the trace constant to rounding.  A prebuilt effective Hamiltonian may be
    passed to amortize setup across integration steps.  Inputs with a
    Hermiticity defect above 1e-10 (relative above unit scale) are rejected.
    """
    values = P.values if isinstance(P, PolarizationMatrix) else np.asarray(P)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    defect = hermiticity_defect(values)
    if defect > 1e-10 * scale:
        raise ValueError(f"P not Hermitian: defect {defect:.3e}")
    if hamiltonian is None:
        spec = P.spec if isinstance(P, PolarizationMatrix) else profile.spec
        hamiltonian = effective_hamiltonian(spec, profile)
    ht = hamiltonian.T
    return 1j * (ht @ values - values @ ht)
