"""Error bounds for mid-point piecewise-constant approximation of a smooth
2D field, plus a high-resolution quadrature oracle that measures the true
error.

The bound for a partition into B rectangular cells with maximum side
lengths l_x, l_y is ``B/24 * (max|f_xx| l_x^3 l_y + max|f_yy| l_x l_y^3)``;
on square cells of edge l it tightens to ``B l^4/24 (max|f_xx| +
max|f_yy|)``. Derivative maxima are estimated by dense grid sampling, so
fields only need point evaluators, not symbolic derivatives.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SmoothField:
    """A twice continuously differentiable scalar field f(x, y).

    ``f``, ``fxx`` and ``fyy`` must accept broadcasting array arguments.
    """

    name: str
    f: callable
    fxx: callable
    fyy: callable


def quadratic_field() -> SmoothField:
    """x^2 + y^2; constant second derivatives make the bound exact."""
    return SmoothField(
        "quadratic",
        f=lambda x, y: x ** 2 + y ** 2,
        fxx=lambda x, y: np.full(np.broadcast(x, y).shape, 2.0),
        fyy=lambda x, y: np.full(np.broadcast(x, y).shape, 2.0),
    )


def linear_field() -> SmoothField:
    """3x - 2y + 1; vanishing curvature, so the bound is zero."""
    return SmoothField(
        "linear",
        f=lambda x, y: 3.0 * x - 2.0 * y + 1.0,
        fxx=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        fyy=lambda x, y: np.zeros(np.broadcast(x, y).shape),
    )


def sinsin_field() -> SmoothField:
    """sin(x) sin(y)."""
    return SmoothField(
        "sinsin",
        f=lambda x, y: np.sin(x) * np.sin(y),
        fxx=lambda x, y: -np.sin(x) * np.sin(y),
        fyy=lambda x, y: -np.sin(x) * np.sin(y),
    )


def gaussian_spot_field(sigma=1.16, i0=1.0, i_bg=0.0, center=(0.0, 0.0)) -> SmoothField:
    """The Gaussian spot appearance model as a smooth test field."""
    x0, y0 = center
    s2 = sigma ** 2

    def core(x, y):
        return i0 * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2.0 * s2))

    return SmoothField(
        "gaussian",
        f=lambda x, y: core(x, y) + i_bg,
        fxx=lambda x, y: core(x, y) * ((x - x0) ** 2 / s2 - 1.0) / s2,
        fyy=lambda x, y: core(x, y) * ((y - y0) ** 2 / s2 - 1.0) / s2,
    )


def builtin_fields() -> dict:
    return {f.name: f for f in (quadratic_field(), gaussian_spot_field(),
                                sinsin_field())}


@dataclass(frozen=True)
class DomainPartition:
    """Rectangular domain split into non-overlapping cells by edge arrays."""

    x_edges: np.ndarray
    y_edges: np.ndarray

    def __post_init__(self):
        for edges in (self.x_edges, self.y_edges):
            if len(edges) < 2 or np.any(np.diff(edges) <= 0):
                raise ValueError("edges must be strictly increasing, length >= 2")

    @classmethod
    def uniform(cls, domain, n_cols, n_rows):
        """Equal cells over domain = (x_lo, x_hi, y_lo, y_hi)."""
        x_lo, x_hi, y_lo, y_hi = domain
        return cls(np.linspace(x_lo, x_hi, n_cols + 1),
                   np.linspace(y_lo, y_hi, n_rows + 1))

    @property
    def n_cells(self):
        return (len(self.x_edges) - 1) * (len(self.y_edges) - 1)

    @property
    def cell_widths(self):
        return np.diff(self.x_edges)

    @property
    def cell_heights(self):
        return np.diff(self.y_edges)

    @property
    def domain(self):
        return (self.x_edges[0], self.x_edges[-1],
                self.y_edges[0], self.y_edges[-1])


def derivative_maxima(field: SmoothField, part: DomainPartition, refine=10):
    """(max|f_xx|, max|f_yy|) over the closed domain by dense sampling.

    The sampling grid is ``refine`` times finer than the smallest cell in
    each dimension and includes the domain boundary.
    """
    x_lo, x_hi, y_lo, y_hi = part.domain
    nx = int(math.ceil((x_hi - x_lo) / part.cell_widths.min())) * refine + 1
    ny = int(math.ceil((y_hi - y_lo) / part.cell_heights.min())) * refine + 1
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    grid_x = xs[None, :]
    grid_y = ys[:, None]
    return (float(np.abs(field.fxx(grid_x, grid_y)).max()),
            float(np.abs(field.fyy(grid_x, grid_y)).max()))


def rect_bound(field: SmoothField, part: DomainPartition, refine=10) -> float:
    """Upper bound on the total mid-point approximation error over the
    partition, using the maximum cell side lengths in each dimension."""
    m_xx, m_yy = derivative_maxima(field, part, refine)
    l_x = float(part.cell_widths.max())
    l_y = float(part.cell_heights.max())
    per_cell = (m_xx * l_x ** 3 * l_y + m_yy * l_x * l_y ** 3) / 24.0
    return part.n_cells * per_cell


def square_bound(field: SmoothField, l, domain, refine=10) -> float:
    """Tighter total bound for equal square cells of edge ``l``."""
    x_lo, x_hi, y_lo, y_hi = domain
    n_cols = (x_hi - x_lo) / l
    n_rows = (y_hi - y_lo) / l
    if abs(n_cols - round(n_cols)) > 1e-9 or abs(n_rows - round(n_rows)) > 1e-9:
        raise ValueError("cell edge must tile the domain exactly")
    part = DomainPartition.uniform(domain, int(round(n_cols)), int(round(n_rows)))
    m_xx, m_yy = derivative_maxima(field, part, refine)
    return part.n_cells * l ** 4 / 24.0 * (m_xx + m_yy)


def midpoint_error(field: SmoothField, part: DomainPartition, quad_points=64) -> float:
    """True total error of the mid-point piecewise-constant approximation:
    the sum over cells of |integral of (f - f(cell midpoint))|, computed by
    tensor Gauss-Legendre quadrature with ``quad_points`` nodes per axis."""
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    widths = part.cell_widths
    heights = part.cell_heights
    # Quadrature points and weights per column / per row of cells.
    px = part.x_edges[:-1, None] + (nodes[None, :] + 1.0) * (widths[:, None] / 2.0)
    py = part.y_edges[:-1, None] + (nodes[None, :] + 1.0) * (heights[:, None] / 2.0)
    wx = weights[None, :] * (widths[:, None] / 2.0)
    wy = weights[None, :] * (heights[:, None] / 2.0)
    values = field.f(px.ravel()[None, :], py.ravel()[:, None])
    n_cols, n_rows = len(widths), len(heights)
    blocks = values.reshape(n_rows, quad_points, n_cols, quad_points)
    mid_x = (part.x_edges[:-1] + part.x_edges[1:]) / 2.0
    mid_y = (part.y_edges[:-1] + part.y_edges[1:]) / 2.0
    mid_values = field.f(mid_x[None, :], mid_y[:, None])
    # Integrate f - f(midpoint) per cell; subtracting before the quadrature
    # keeps constant fields exactly at zero error.
    residuals = blocks - mid_values[:, None, :, None]
    cell_errors = np.einsum("jbia,ia,jb->ji", residuals, wx, wy)
    return float(np.abs(cell_errors).sum())
