"""Plane-wavelet basis on a quantized position/momentum lattice.

The basis functions live on cells of width d: each state carries a cell
center X and a carrier momentum K, with X on the lattice
X(m) = (m - (M-1)/2) d for m = 0..M-1 and K on the lattice K(n) = n * 2*pi/d
for n = -n_max..n_max.  A state is exp(iKx)/sqrt(d) restricted to
[X - d/2, X + d/2), closed on the left and open on the right, so the cells
tile the domain [-L/2, L/2) exactly once (L = M d).

Inner products between states in the same cell reduce to
sinc(d (K - K')/2), which is exactly the Kronecker delta on the momentum
lattice.  Plane waves exp(ikx)/sqrt(L) expand with coefficients
sqrt(d/L) exp(i(k - K) X) sinc(d (k - K)/2) per cell.
"""

from dataclasses import dataclass, InitVar

import numpy as np

TWO_PI = 2.0 * np.pi


def sinc(z):
    """sin(z)/z with the removable singularity filled in (sinc(0) = 1)."""
    return np.sinc(np.asarray(z) / np.pi)


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the quantized phase-space lattice.

    Attributes:
        d: cell width (> 0).
        num_cells: number of cells M (even, >= 2).
        n_max: momentum cutoff; carrier momenta run over n = -n_max..n_max.
    """

    d: float
    num_cells: int
    n_max: int

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"cell width d must be positive, got {self.d}")
        if self.num_cells < 2 or self.num_cells % 2 != 0:
            raise ValueError(
                f"num_cells must be even and >= 2, got {self.num_cells}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def length(self):
        """Total domain length L = M d."""
        return self.num_cells * self.d

    @property
    def num_k(self):
        """Number of carrier momenta, 2 n_max + 1."""
        return 2 * self.n_max + 1

    @property
    def delta_k(self):
        """Carrier momentum lattice step 2*pi/d."""
        return TWO_PI / self.d

    @property
    def delta_q(self):
        """Plane-wave momentum step 2*pi/L."""
        return TWO_PI / self.length

    def position(self, m):
        """Cell center X(m) = (m - (M-1)/2) d."""
        return (np.asarray(m) - (self.num_cells - 1) / 2.0) * self.d

    def momentum(self, n):
        """Carrier momentum K(n) = n * 2*pi/d."""
        return np.asarray(n) * self.delta_k

    def positions(self):
        return self.position(np.arange(self.num_cells))

    def momenta(self):
        return self.momentum(np.arange(-self.n_max, self.n_max + 1))

    def momentum_index(self, n):
        """Array index of carrier momentum number n (n = -n_max maps to 0)."""
        return n + self.n_max

    def cell_edges(self, m):
        """Left and right edge of cell m; the cell is [left, right)."""
        x = self.position(m)
        return x - self.d / 2.0, x + self.d / 2.0

    def cell_of(self, x):
        """Cell index containing x, or -1 outside [-L/2, L/2).

        The closed-left/open-right convention is enforced exactly against the
        cell edges, guarding against floor() roundoff at the boundaries.
        """
        x = np.asarray(x, dtype=float)
        m = np.floor(x / self.d).astype(int) + self.num_cells // 2
        # floor roundoff can misplace boundary points by one cell either way;
        # membership is decided by the edge inequalities, not by floor
        mc = np.clip(m, 0, self.num_cells - 1)
        left, right = self.cell_edges(mc)
        m = np.where(x < left, mc - 1, np.where(x >= right, mc + 1, mc))
        inside = (m >= 0) & (m < self.num_cells)
        mc = np.clip(m, 0, self.num_cells - 1)
        left, right = self.cell_edges(mc)
        inside &= (x >= left) & (x < right)
        return np.where(inside, m, -1)

    def flat_index(self, m, n):
        """Flat state index, position-major: m * num_k + (n + n_max)."""
        return np.asarray(m) * self.num_k + (np.asarray(n) + self.n_max)

    @property
    def num_states(self):
        return self.num_cells * self.num_k


@dataclass(frozen=True)
class WaveletIndex:
    """One basis state, validated against a GridSpec on construction."""

    spec: InitVar[GridSpec]
    m: int
    n: int

    def __post_init__(self, spec):
        if not 0 <= self.m < spec.num_cells:
            raise ValueError(
                f"cell index m={self.m} outside 0..{spec.num_cells - 1}")
        if not -spec.n_max <= self.n <= spec.n_max:
            raise ValueError(
                f"momentum number n={self.n} outside +-{spec.n_max}")


def wavelet_eval(spec, idx, x):
    """Evaluate the basis state (m, n) at positions x.

    exp(iKx)/sqrt(d) inside [X - d/2, X + d/2), zero outside; the support is
    closed on the left and open on the right.
    """
    x = np.asarray(x, dtype=float)
    left, right = spec.cell_edges(idx.m)
    inside = (x >= left) & (x < right)
    k = spec.momentum(idx.n)
    return np.where(inside, np.exp(1j * k * x) / np.sqrt(spec.d), 0.0 + 0.0j)


def inner_product(spec, idx1, idx2):
    """Closed-form overlap delta_{m,m'} sinc(d (K - K')/2).

    On the momentum lattice the sinc argument is pi (n - n'), so the result
    is exactly 1.0 for identical indices and exactly 0.0 otherwise.
    """
    if idx1.m != idx2.m:
        return 0.0
    return 1.0 if idx1.n == idx2.n else 0.0


def _gauss_panels(a, b, total_points, order=16):
    """Composite Gauss-Legendre nodes/weights on [a, b].

    Splits into ceil(total_points/order) panels of the given order; the
    actual node count is rounded up to a whole number of panels.
    """
    panels = max(1, -(-int(total_points) // order))
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


def inner_product_quadrature(spec, idx1, idx2, quad_points=256):
    """Overlap integral evaluated numerically from the wavelet functions.

    Disjoint cells give exactly 0; within a cell a composite Gauss-Legendre
    rule integrates conj(psi1) psi2.  quad_points should be at least
    16 * |n1 - n2| so each oscillation period is resolved by a full panel.
    """
    if idx1.m != idx2.m:
        return 0.0 + 0.0j
    left, right = spec.cell_edges(idx1.m)
    xs, ws = _gauss_panels(left, right, quad_points)
    vals = np.conj(wavelet_eval(spec, idx1, xs)) * wavelet_eval(spec, idx2, xs)
    return complex(np.sum(vals * ws))


def expand_plane_wave(spec, k):
    """Expansion coefficients of exp(ikx)/sqrt(L) over the basis.

    a[m, j] = sqrt(d/L) exp(i (k - K_j) X_m) sinc(d (k - K_j) / 2), shaped
    (num_cells, num_k).  For k on the momentum lattice the sinc collapses to
    a single momentum column and sum |a|^2 = 1.
    """
    X = spec.positions()[:, None]
    K = spec.momenta()[None, :]
    dk = k - K
    return (np.sqrt(spec.d / spec.length)
            * np.exp(1j * dk * X) * sinc(spec.d * dk / 2.0))


def reconstruct(spec, coeffs, xs):
    """Sum coeffs[m, j] * wavelet(m, j) at positions xs.

    Only the cell containing each x contributes; points outside the domain
    return 0.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (spec.num_cells, spec.num_k):
        raise ValueError(
            f"coefficient shape {coeffs.shape} does not match grid "
            f"({spec.num_cells}, {spec.num_k})")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    cells = spec.cell_of(xs)
    out = np.zeros(xs.shape, dtype=complex)
    inside = cells >= 0
    if np.any(inside):
        K = spec.momenta()
        phases = np.exp(1j * np.outer(xs[inside], K)) / np.sqrt(spec.d)
        out[inside] = np.sum(coeffs[cells[inside], :] * phases, axis=1)
    return out


def phase_matrix_element(spec, q, idx1, idx2):
    """Matrix element of exp(iqx) between same-cell basis states.

    Returns exp(iqX) delta_{m,m'} sinc(d (K1 + q - K2)/2) with
    K1 = K(idx1.n), K2 = K(idx2.n).  The phase is referenced to the cell
    center, so it carries exp(iqX) only; the raw integral
    int conj(psi2) exp(iqx) psi1 dx differs by the gauge factor
    exp(i(K1 - K2)X).  Moduli (all transition-rate inputs) agree either way.

    At q = 0 this reduces to the orthogonality delta; at q = K2 - K1 it has
    modulus 1.
    """
    if idx1.m != idx2.m:
        return 0.0 + 0.0j
    X = spec.position(idx1.m)
    kappa = spec.momentum(idx1.n) + q - spec.momentum(idx2.n)
    return complex(np.exp(1j * q * X) * sinc(spec.d * kappa / 2.0))


def project_function(spec, fn, quad_points=512):
    """Per-cell projections (1/sqrt(d)) int exp(-i K_j x) f(x) dx.

    Returns the coefficient array shaped (num_cells, num_k).  quad_points
    controls the composite Gauss-Legendre rule per cell and should resolve
    the fastest carrier (about 16 points per oscillation of K_{n_max}).
    """
    K = spec.momenta()
    coeffs = np.zeros((spec.num_cells, spec.num_k), dtype=complex)
    for m in range(spec.num_cells):
        left, right = spec.cell_edges(m)
        xs, ws = _gauss_panels(left, right, quad_points)
        f_vals = np.asarray(fn(xs), dtype=complex)
        phases = np.exp(-1j * np.outer(K, xs))
        coeffs[m, :] = (phases @ (f_vals * ws)) / np.sqrt(spec.d)
    return coeffs


def closure_defect(spec, test_fn, sample_xs, quad_points=None):
    """Max pointwise error of project-then-reconstruct against test_fn.

    Projects test_fn onto the basis by quadrature, reconstructs at
    sample_xs, and returns max |reconstruction - test_fn(sample_xs)|.
    Decreasing defects under n_max refinement demonstrate closure.
    """
    if quad_points is None:
        quad_points = max(512, 16 * spec.num_k)
    coeffs = project_function(spec, test_fn, quad_points=quad_points)
    xs = np.atleast_1d(np.asarray(sample_xs, dtype=float))
    recon = reconstruct(spec, coeffs, xs)
    return float(np.max(np.abs(recon - np.asarray(test_fn(xs), dtype=complex))))
