"""Difference operators on phase-space lattice fields.

Fields are arrays shaped (num_cells, num_k): one row per cell, one column
per carrier momentum.  Both axes are treated as periodic, so every stencil
is a combination of circular shifts.  The momentum-direction drift stencil
uses alternating coefficients that approach (-1)^n / (n dK) for small n;
on the finite periodic momentum ring they are periodized to
(-1)^n (pi/P) / sin(pi n / num_k) with P = num_k * dK, which at full
half-width makes the stencil exactly the spectral differentiation matrix
(the naive 1/(n dK) weights floor near 1e-4 against the DFT derivative).
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class LatticeField:
    """Values on the (position, momentum) lattice tied to a GridSpec."""

    spec: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        expected = (self.spec.num_cells, self.spec.num_k)
        if self.values.shape != expected:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {expected}")

    def with_values(self, values):
        return LatticeField(self.spec, values)


@dataclass(frozen=True)
class DriftStencil:
    """Alternating momentum-difference stencil on the periodic K ring."""

    coefficients: np.ndarray
    half_width: int

    @classmethod
    def for_grid(cls, spec, half_width=None):
        """Default half-width is min(M/2, n_max); at half_width = n_max the
        stencil covers every offset of the odd momentum ring and equals the
        spectral differentiation matrix exactly."""
        if half_width is None:
            half_width = min(spec.num_cells // 2, spec.n_max)
        if not 1 <= half_width <= spec.n_max:
            raise ValueError(
                f"half_width {half_width} outside 1..{spec.n_max}")
        num_k = spec.num_k
        period = num_k * spec.delta_k
        n = np.arange(1, half_width + 1)
        coeffs = (-1.0) ** n * (np.pi / period) / np.sin(np.pi * n / num_k)
        return cls(coefficients=coeffs, half_width=int(half_width))


def shift_k(field, steps):
    """Circularly shift the momentum axis by `steps` grid points.

    A positive step moves content toward higher momentum indices: a delta at
    n = 0 shifted by +1 lands at n = +1.
    """
    return field.with_values(np.roll(field.values, steps, axis=1))


def shift_x(field, steps):
    """Circularly shift the position axis by `steps` cells."""
    return field.with_values(np.roll(field.values, steps, axis=0))


def drift_apply(field, e_field, half_width=None):
    """Field-drift term -E(X) * sum_n c_n [f(K - n dK) - f(K + n dK)].

    The stencil sum approximates +df/dK, so the result approximates
    -E df/dK.  e_field is a scalar or a length-M array of the electric field
    per cell; shifts wrap periodically in momentum.
    """
    stencil = DriftStencil.for_grid(field.spec, half_width)
    v = field.values
    acc = np.zeros_like(v)
    for i, c in enumerate(stencil.coefficients):
        n = i + 1
        # value at K - n dK sits n momentum indices below the output point
        acc = acc + c * (np.roll(v, n, axis=1) - np.roll(v, -n, axis=1))
    e_col = np.asarray(e_field)
    if e_col.ndim == 1:
        e_col = e_col[:, None]
    return field.with_values(-e_col * acc)


def stream_d(field):
    """Forward position difference (1/(2d)) (f(m) - f(m+1)), periodic."""
    v = field.values
    return field.with_values((v - np.roll(v, -1, axis=0)) / (2.0 * field.spec.d))


def stream_d_back(field):
    """Mirrored position difference (1/(2d)) (f(m) - f(m-1)), periodic."""
    v = field.values
    return field.with_values((v - np.roll(v, 1, axis=0)) / (2.0 * field.spec.d))


def stream_d2(field):
    """Second position difference (1/d^2) (f(m+1) + f(m-1) - 2 f(m))."""
    v = field.values
    d2 = field.spec.d ** 2
    return field.with_values(
        (np.roll(v, -1, axis=0) + np.roll(v, 1, axis=0) - 2.0 * v) / d2)


def dft_derivative_oracle(samples, period, axis=-1):
    """Spectral first derivative of periodic samples via the DFT.

    Multiplies mode j by i * 2*pi*j/period with symmetric mode numbering;
    for even sample counts the unpaired Nyquist mode is dropped (its first
    derivative has no symmetric representation).  Real input gives real
    output.  Needs at least 4 samples.
    """
    samples = np.asarray(samples)
    n = samples.shape[axis]
    if n < 4:
        raise ValueError(f"need at least 4 samples, got {n}")
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=period / n)
    ik = 1j * k
    if n % 2 == 0:
        ik[n // 2] = 0.0
    shape = [1] * samples.ndim
    shape[axis] = n
    deriv = np.fft.ifft(np.fft.fft(samples, axis=axis) * ik.reshape(shape),
                        axis=axis)
    if np.isrealobj(samples):
        return deriv.real
    return deriv
