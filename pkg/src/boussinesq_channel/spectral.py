"""Mixed sine/cosine x Fourier spectral layer on the periodic channel.

The domain is the channel (-1, 1) x T with T = R/2piZ, carrying the
normalized measure (total mass 1).  Scalars live on a uniform collocation
grid (midpoints in x1, equispaced in x2) and carry an x1-parity tag:

* ``odd``  -> sine basis  sin(k1 pi (x1+1)/2), k1 = 1..nx1   (Dirichlet walls)
* ``even`` -> cosine basis cos(k1 pi (x1+1)/2), k1 = 0..nx1-1 (Neumann walls)

both tensorized with exp(i k2 x2) in x2.  The Laplacian is diagonal in this
basis and x1-differentiation flips the parity tag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

ODD = "odd"
EVEN = "even"

_PARITIES = (ODD, EVEN)


class SpectralError(ValueError):
    """Raised for inconsistent grids, parities, or sizes."""


@dataclass(frozen=True)
class Grid:
    """Collocation grid: nx1 midpoints across (-1,1), nx2 Fourier points on T."""

    nx1: int
    nx2: int

    def __post_init__(self):
        if self.nx1 < 8 or self.nx2 < 8:
            raise SpectralError(f"grid too small: nx1={self.nx1}, nx2={self.nx2} (need >= 8)")
        if self.nx2 % 2 != 0:
            raise SpectralError(f"nx2 must be even, got {self.nx2}")

    @property
    def x1(self) -> np.ndarray:
        j = np.arange(self.nx1)
        return -1.0 + 2.0 * (j + 0.5) / self.nx1

    @property
    def x2(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.nx2) / self.nx2

    @property
    def weight(self) -> float:
        # uniform quadrature weight for the normalized measure; sums to 1
        return 1.0 / (self.nx1 * self.nx2)

    @property
    def k2(self) -> np.ndarray:
        """Fourier wavenumbers in standard FFT ordering."""
        return np.fft.fftfreq(self.nx2, d=1.0 / self.nx2)

    def k1(self, parity: str) -> np.ndarray:
        """x1 mode numbers along axis 0 for the given parity."""
        if parity == ODD:
            return np.arange(1, self.nx1 + 1, dtype=float)
        if parity == EVEN:
            return np.arange(self.nx1, dtype=float)
        raise SpectralError(f"unknown parity {parity!r}")

    def mu1(self, parity: str) -> np.ndarray:
        """x1 derivative multipliers k1*pi/2."""
        return self.k1(parity) * (np.pi / 2.0)


@dataclass
class ScalarField:
    """Grid samples of a scalar with an x1-parity tag."""

    grid: Grid
    values: np.ndarray
    parity: str

    def __post_init__(self):
        if self.parity not in _PARITIES:
            raise SpectralError(f"unknown parity {self.parity!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx1, self.grid.nx2):
            raise SpectralError(
                f"values shape {self.values.shape} != grid ({self.grid.nx1}, {self.grid.nx2})"
            )

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.parity)

    def __add__(self, other):
        _check_same(self, other)
        return ScalarField(self.grid, self.values + other.values, self.parity)

    def __sub__(self, other):
        _check_same(self, other)
        return ScalarField(self.grid, self.values - other.values, self.parity)

    def __mul__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(scalar), self.parity)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values, self.parity)


@dataclass
class SpectralCoeffs:
    """Coefficient array in (k1-index, Fourier k2); axis-0 meaning depends on parity."""

    grid: Grid
    coeffs: np.ndarray
    parity: str

    def __post_init__(self):
        if self.parity not in _PARITIES:
            raise SpectralError(f"unknown parity {self.parity!r}")
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.grid.nx1, self.grid.nx2):
            raise SpectralError(
                f"coeffs shape {self.coeffs.shape} != grid ({self.grid.nx1}, {self.grid.nx2})"
            )

    def copy(self) -> "SpectralCoeffs":
        return SpectralCoeffs(self.grid, self.coeffs.copy(), self.parity)


def _check_same(a, b):
    if a.grid != b.grid:
        raise SpectralError("grid mismatch")
    if a.parity != b.parity:
        raise SpectralError(f"parity mismatch: {a.parity} vs {b.parity}")


def zeros(grid: Grid, parity: str) -> ScalarField:
    return ScalarField(grid, np.zeros((grid.nx1, grid.nx2)), parity)


def constant(grid: Grid, value: float) -> ScalarField:
    return ScalarField(grid, np.full((grid.nx1, grid.nx2), float(value)), EVEN)


def transform_forward(f: ScalarField) -> SpectralCoeffs:
    """Physical samples -> basis coefficients (coefficients multiply the raw basis)."""
    n1 = f.grid.nx1
    c = sfft.fft(f.values.astype(complex), axis=1) / f.grid.nx2
    if f.parity == EVEN:
        a = sfft.dct(c, type=2, axis=0)
        a[0, :] /= 2.0 * n1
        a[1:, :] /= n1
    else:
        a = sfft.dst(c, type=2, axis=0)
        a[:-1, :] /= n1
        a[-1, :] /= 2.0 * n1
    return SpectralCoeffs(f.grid, a, f.parity)


def transform_inverse(c: SpectralCoeffs) -> ScalarField:
    """Basis coefficients -> physical samples (real part; imag is roundoff)."""
    n1 = c.grid.nx1
    a = c.coeffs.copy()
    if c.parity == EVEN:
        a[0, :] *= 2.0 * n1
        a[1:, :] *= n1
        v = sfft.idct(a, type=2, axis=0)
    else:
        a[:-1, :] *= n1
        a[-1, :] *= 2.0 * n1
        v = sfft.idst(a, type=2, axis=0)
    v = sfft.ifft(v, axis=1) * c.grid.nx2
    return ScalarField(c.grid, np.real(v), c.parity)


def field_from_modes(grid: Grid, parity: str, modes) -> ScalarField:
    """Assemble a field from (k1, k2, amplitude) triples.

    Amplitude multiplies sin/cos(k1 pi (x1+1)/2) * trig(k2 x2), where trig is
    cos for k2 >= 0 and sin for k2 < 0 (so real fields need one entry per mode).
    """
    x1 = grid.x1[:, None]
    x2 = grid.x2[None, :]
    vals = np.zeros((grid.nx1, grid.nx2))
    for k1, k2, amp in modes:
        k1 = int(k1)
        k2 = int(k2)
        if parity == ODD:
            if not (1 <= k1 <= grid.nx1):
                raise SpectralError(f"odd-parity k1 out of range: {k1}")
            f1 = np.sin(k1 * np.pi * (x1 + 1) / 2)
        else:
            if not (0 <= k1 < grid.nx1):
                raise SpectralError(f"even-parity k1 out of range: {k1}")
            f1 = np.cos(k1 * np.pi * (x1 + 1) / 2)
        f2 = np.cos(k2 * x2) if k2 >= 0 else np.sin(-k2 * x2)
        vals += float(amp) * f1 * f2
    return ScalarField(grid, vals, parity)


def differentiate(f: ScalarField, axis: str, order: int = 1) -> ScalarField:
    """Spectral derivative; x1-differentiation flips parity per order."""
    if order < 1:
        raise SpectralError(f"order must be >= 1, got {order}")
    if axis not in ("x1", "x2"):
        raise SpectralError(f"axis must be 'x1' or 'x2', got {axis!r}")
    c = transform_forward(f)
    if axis == "x2":
        c.coeffs *= (1j * c.grid.k2[None, :]) ** order
        if order % 2 == 1:
            # the real-signal Nyquist mode has no consistent odd-order derivative
            c.coeffs[:, c.grid.nx2 // 2] = 0.0
        return transform_inverse(c)
    for _ in range(order):
        c = _d1_coeffs(c)
    return transform_inverse(c)


def _d1_coeffs(c: SpectralCoeffs) -> SpectralCoeffs:
    """One x1 derivative in coefficient space (sine <-> cosine)."""
    g = c.grid
    out = np.zeros_like(c.coeffs)
    if c.parity == ODD:
        # d/dx1 sin(k u) = (k pi/2) cos(k u); top sine mode k=nx1 is dropped
        mu = g.mu1(ODD)
        out[1:, :] = mu[: g.nx1 - 1, None] * c.coeffs[: g.nx1 - 1, :]
        return SpectralCoeffs(g, out, EVEN)
    # d/dx1 cos(k u) = -(k pi/2) sin(k u); constant row maps to zero
    mu = g.mu1(EVEN)
    out[: g.nx1 - 1, :] = -mu[1:, None] * c.coeffs[1:, :]
    return SpectralCoeffs(g, out, ODD)


def laplacian_symbol(grid: Grid, parity: str) -> np.ndarray:
    """Eigenvalues of -Laplace on the basis: (k1 pi/2)^2 + k2^2."""
    mu = grid.mu1(parity)
    return mu[:, None] ** 2 + grid.k2[None, :] ** 2


def laplacian(f: ScalarField) -> ScalarField:
    c = transform_forward(f)
    c.coeffs *= -laplacian_symbol(f.grid, f.parity)
    return transform_inverse(c)


def integrate_domain(f: ScalarField) -> float:
    """Integral over the channel with the normalized measure (quadrature weights)."""
    return float(np.mean(f.values))


def project_mean_free(f: ScalarField) -> ScalarField:
    mean = integrate_domain(f)
    return ScalarField(f.grid, f.values - mean, f.parity)


def _l2_weights(grid: Grid, parity: str) -> np.ndarray:
    """Squared L2 norm of each basis function under the normalized measure."""
    w = np.full(grid.nx1, 0.5)
    if parity == EVEN:
        w[0] = 1.0
    return w


def sobolev_norm(f: ScalarField, m: int) -> float:
    """H^m norm: sqrt of sum over |alpha| <= m of ||d^alpha f||_0^2 (Parseval)."""
    if m < 0:
        raise SpectralError(f"Sobolev order must be >= 0, got {m}")
    c = transform_forward(f)
    g = f.grid
    mag2 = np.abs(c.coeffs) ** 2 * _l2_weights(g, f.parity)[:, None]
    m1 = g.mu1(f.parity)[:, None] ** 2
    m2 = g.k2[None, :] ** 2
    total = 0.0
    for a1 in range(m + 1):
        for a2 in range(m + 1 - a1):
            total += np.sum(mag2 * m1**a1 * m2**a2)
    return float(np.sqrt(total))


def l2_norm(f: ScalarField) -> float:
    return sobolev_norm(f, 0)


def dealias_cutoffs(grid: Grid) -> tuple[int, int]:
    """Largest retained k1 / |k2| under the 2/3 rule."""
    return (2 * grid.nx1 - 1) // 3, (2 * (grid.nx2 // 2) - 1) // 3


def dealias(c: SpectralCoeffs) -> SpectralCoeffs:
    cut1, cut2 = dealias_cutoffs(c.grid)
    k1 = c.grid.k1(c.parity)
    mask1 = k1 <= cut1
    mask2 = np.abs(c.grid.k2) <= cut2
    out = c.copy()
    out.coeffs *= mask1[:, None]
    out.coeffs *= mask2[None, :]
    return out


def dealias_field(f: ScalarField) -> ScalarField:
    return transform_inverse(dealias(transform_forward(f)))


def multiply_dealiased(a: ScalarField, b: ScalarField, parity: str) -> ScalarField:
    """Pointwise product in physical space, re-expanded with the given parity and dealiased."""
    if a.grid != b.grid:
        raise SpectralError("grid mismatch")
    prod = ScalarField(a.grid, a.values * b.values, parity)
    return transform_inverse(dealias(transform_forward(prod)))


def translate_x2(f: ScalarField, shift: float) -> ScalarField:
    """f(x1, x2 + shift) via Fourier phase shift (trigonometric interpolation)."""
    if shift == 0.0:
        return f.copy()
    c = sfft.fft(f.values.astype(complex), axis=1)
    c *= np.exp(1j * f.grid.k2[None, :] * shift)
    return ScalarField(f.grid, np.real(sfft.ifft(c, axis=1)), f.parity)


def wall_trace(f: ScalarField, side: int, d1_order: int = 0) -> np.ndarray:
    """(d/dx1)^order f at the wall x1 = side (+1 or -1), as values over x2.

    Odd-order x1 derivatives of even fields (and even-order ones of odd fields)
    vanish structurally; this evaluates the series honestly either way.
    """
    if side not in (1, -1):
        raise SpectralError("side must be +1 or -1")
    c = transform_forward(f).coeffs
    if d1_order > 0:
        cc = transform_forward(f)
        for _ in range(d1_order):
            cc = _d1_coeffs(cc)
        c = cc.coeffs
        parity = cc.parity
    else:
        parity = f.parity
    g = f.grid
    if parity == ODD:
        # sin(k pi (x+1)/2) vanishes at both walls
        profile = np.zeros(g.nx1)
    else:
        k = g.k1(EVEN)
        profile = np.ones(g.nx1) if side == -1 else np.cos(k * np.pi)
    line = profile @ c
    vals = sfft.ifft(line) * g.nx2
    return np.real(vals)


def random_band_limited(grid: Grid, parity: str, rng: np.random.Generator,
                        kmax1: int | None = None, kmax2: int | None = None,
                        mean_free: bool = False, amplitude: float = 1.0) -> ScalarField:
    """Random smooth field with spectrum inside the dealias band (test battery helper)."""
    cut1, cut2 = dealias_cutoffs(grid)
    kmax1 = min(kmax1 or cut1, cut1)
    kmax2 = min(kmax2 or cut2, cut2)
    coeffs = np.zeros((grid.nx1, grid.nx2), dtype=complex)
    k1 = grid.k1(parity)
    k2 = grid.k2
    rows = np.nonzero(k1 <= kmax1)[0]
    cols = np.nonzero((k2 >= 0) & (k2 <= kmax2))[0]
    for i in rows:
        for j in cols:
            amp = rng.standard_normal() + 1j * rng.standard_normal()
            decay = np.exp(-0.3 * (k1[i] + abs(k2[j])))
            coeffs[i, j] = amp * decay
            if k2[j] > 0:
                coeffs[i, -j] = np.conj(coeffs[i, j])
            else:
                coeffs[i, j] = coeffs[i, j].real
    if mean_free and parity == EVEN:
        coeffs[0, 0] = 0.0
    f = transform_inverse(SpectralCoeffs(grid, coeffs, parity))
    scale = np.max(np.abs(f.values))
    if scale > 0:
        f.values *= amplitude / scale
    return f
