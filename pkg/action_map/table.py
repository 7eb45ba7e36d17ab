"""
Boundary Table Module
The sampled boundary function as a look-up table: trilinear interpolation of
rho_hat over (v, delta, theta), the polar-clipping action map and the binary
table file.

Table file layout (little-endian):

    magic "AMBT" | version u32 | params hash 32 bytes
    | counts u32 x 3 | ranges f64 x 6 | mu_max f64
    | check horizon u32 | check dt f64
    | rho_bar f64, row-major [i][j][k]
"""

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from utils.atomic import write_bytes_atomic
from utils.errors import TableFormatError, TableMismatchWarning, UsageError, ValidationError
from vehicle.dynamics import DEFAULT_DT, DEFAULT_HORIZON_STEPS, wrap_angle

from .boundary import BISECTION_TOL, GridSpec, rho_square, sample_boundary

MAGIC = b"AMBT"
FORMAT_VERSION = 2
HEADER = struct.Struct("<4sI32s3I6ddId")
CONSERVATIVE_MARGIN = 0.02


@dataclass(eq=False)
class BoundaryTable:
    """
    Dense table rho_bar[i, j, k] of admissible control lengths.

    The interpolator is built lazily over a theta axis padded with a -pi node
    (a copy of the pi node) so the periodic wrap is handled by the grid itself.
    """

    grid: GridSpec
    rho: np.ndarray
    mu_max: float
    params_hash: bytes
    horizon_steps: int = DEFAULT_HORIZON_STEPS
    dt: float = DEFAULT_DT
    version: int = FORMAT_VERSION
    _interp: object = field(default=None, init=False, repr=False)
    _padded: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        rho = np.ascontiguousarray(self.rho, dtype=float)
        if rho.shape != self.grid.counts:
            raise ValidationError(f"table shape {rho.shape} does not match grid {self.grid.counts}")
        if not np.all(np.isfinite(rho)):
            raise ValidationError("boundary table contains non-finite values")
        cap = rho_square(self.grid.theta_nodes)
        if np.any(rho < 0.0) or np.any(rho > cap[None, None, :] * (1.0 + 1e-12)):
            raise ValidationError("boundary table values must lie in [0, rho_square(theta)]")
        if len(self.params_hash) != 32:
            raise ValidationError("parameter hash must be 32 bytes")
        if self.horizon_steps < 1 or not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValidationError(f"friction-check horizon {self.horizon_steps} x {self.dt} s is invalid")
        self.rho = rho

    def _padded_grid(self):
        if self._padded is None:
            theta = np.concatenate([[-math.pi], self.grid.theta_nodes])
            rho = np.concatenate([self.rho[:, :, -1:], self.rho], axis=2)
            capped = rho >= rho_square(theta)[None, None, :]
            self._padded = (theta, rho, capped)
        return self._padded

    def interpolator(self):
        if self._interp is None:
            theta, rho, _ = self._padded_grid()
            self._interp = RegularGridInterpolator(
                (self.grid.v_nodes, self.grid.delta_nodes, theta), rho, method="linear"
            )
        return self._interp

    def matches(self, params):
        return self.params_hash == params.hash()


def build_table(params, grid=None, horizon_steps=DEFAULT_HORIZON_STEPS, dt=DEFAULT_DT, workers=1, progress=True,
                tol=BISECTION_TOL):
    """
    Sample the boundary function on a grid and wrap it in a BoundaryTable.

    Returns:
    --------
    tuple
        (BoundaryTable, build wall time in seconds)
    """
    grid = grid or GridSpec.for_vehicle(params)
    rho, elapsed = sample_boundary(params, grid, horizon_steps=horizon_steps, dt=dt, tol=tol,
                                   workers=workers, progress=progress)
    table = BoundaryTable(grid=grid, rho=rho, mu_max=params.mu_max, params_hash=params.hash(),
                          horizon_steps=horizon_steps, dt=dt)
    return table, elapsed


def table_stats(table):
    return {
        "min": float(table.rho.min()),
        "mean": float(table.rho.mean()),
        "max": float(table.rho.max()),
    }


def symmetry_residual(table):
    """Largest |rho(v, delta, theta) - rho(v, -delta, -theta)| over all nodes."""
    n_theta = table.grid.n_theta
    # -theta_k sits at index n - k - 2 (mod n); pi maps onto itself
    mirror = (n_theta - np.arange(n_theta) - 2) % n_theta
    flipped = table.rho[:, ::-1, :][:, :, mirror]
    return float(np.max(np.abs(table.rho - flipped)))


def _query_points(table, v, delta, theta):
    grid = table.grid
    v, delta, theta = np.broadcast_arrays(
        np.asarray(v, dtype=float), np.asarray(delta, dtype=float), np.asarray(theta, dtype=float)
    )
    v = np.clip(v, grid.v_min, grid.v_max)
    delta = np.clip(delta, grid.delta_min, grid.delta_max)
    theta = np.asarray(wrap_angle(theta), dtype=float)
    return v, delta, theta


def _cell_index(nodes, values):
    return np.clip(np.searchsorted(nodes, values, side="right") - 1, 0, len(nodes) - 2)


def lookup(table, v, delta, theta, conservative=False, margin=CONSERVATIVE_MARGIN):
    """
    Interpolated boundary length rho_hat at (v, delta, theta).

    v and delta are clamped into the grid range and theta is wrapped. Plain
    mode blends the 8 enclosing nodes trilinearly; conservative mode takes
    their minimum shrunk by `margin`, except inside cells whose nodes all sit
    on the unit-square cap where the cap at theta itself is returned. Either
    way the result never exceeds rho_square(theta).
    """
    v, delta, theta = _query_points(table, v, delta, theta)
    cap = rho_square(theta)
    if not conservative:
        points = np.stack([v.ravel(), delta.ravel(), theta.ravel()], axis=-1)
        rho_hat = table.interpolator()(points).reshape(v.shape)
    else:
        theta_nodes, rho, capped = table._padded_grid()
        i = _cell_index(table.grid.v_nodes, v)
        j = _cell_index(table.grid.delta_nodes, delta)
        k = _cell_index(theta_nodes, theta)
        corners = [(i + di, j + dj, k + dk) for di in (0, 1) for dj in (0, 1) for dk in (0, 1)]
        lowest = np.min([rho[corner] for corner in corners], axis=0)
        all_capped = np.all([capped[corner] for corner in corners], axis=0)
        rho_hat = np.where(all_capped, cap, lowest * (1.0 - margin))
    rho_hat = np.minimum(rho_hat, cap)
    return float(rho_hat) if rho_hat.ndim == 0 else rho_hat


def to_polar(a):
    a = np.asarray(a, dtype=float)
    return np.hypot(a[..., 0], a[..., 1]), np.arctan2(a[..., 1], a[..., 0])


def from_polar(rho, theta):
    rho, theta = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(theta, dtype=float))
    return np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)


def map_action(table, v, delta, a, conservative=True, margin=CONSERVATIVE_MARGIN):
    """
    Clip a virtual action to the admissible control set at state (v, delta).

    The action's polar length is limited to rho_hat in its own direction:
    actions inside the boundary pass through unchanged, longer ones are
    scaled down along the same ray. The origin maps to the origin.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (2,):
        raise UsageError(f"actions must have a trailing dimension of 2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise UsageError(f"cannot map non-finite action {a}")
    length, direction = to_polar(a)
    rho_hat = lookup(table, v, delta, direction, conservative=conservative, margin=margin)
    inside = length <= rho_hat
    scale = np.where(inside, 1.0, rho_hat / np.where(inside, 1.0, length))
    return np.clip(a * np.asarray(scale)[..., None], -1.0, 1.0)


def boundary_slice(table, v, deltas, conservative=False):
    """
    Boundary rows (delta, theta, rho_hat, u_x, u_y) at speed v for each
    steering angle in `deltas` and every theta node of the table.
    """
    grid = table.grid
    if not (grid.v_min <= v <= grid.v_max):
        warnings.warn(
            f"slice speed {v} outside the table range [{grid.v_min}, {grid.v_max}]; clamped",
            TableMismatchWarning,
            stacklevel=2,
        )
    deltas = np.asarray(deltas, dtype=float).ravel()
    theta = grid.theta_nodes
    dd, tt = np.meshgrid(deltas, theta, indexing="ij")
    rho_hat = lookup(table, v, dd, tt, conservative=conservative) if deltas.size else np.zeros(dd.shape)
    rho_hat = np.asarray(rho_hat, dtype=float)
    return pd.DataFrame({
        "delta": dd.ravel(),
        "theta": tt.ravel(),
        "rho_hat": rho_hat.ravel(),
        "u_x": (rho_hat * np.cos(tt)).ravel(),
        "u_y": (rho_hat * np.sin(tt)).ravel(),
    })


def dump_table(table):
    grid = table.grid
    header = HEADER.pack(
        MAGIC,
        table.version,
        table.params_hash,
        grid.n_v, grid.n_delta, grid.n_theta,
        grid.v_min, grid.v_max, grid.delta_min, grid.delta_max, grid.theta_min, grid.theta_max,
        float(table.mu_max),
        table.horizon_steps, float(table.dt),
    )
    return header + table.rho.astype("<f8").tobytes(order="C")


def save_table(table, path):
    write_bytes_atomic(path, dump_table(table))


def parse_table(payload, params=None, strict=False, source="<bytes>"):
    """
    Decode a table file.

    Parameters:
    -----------
    payload : bytes
    params : VehicleParams, optional
        When given, the stored parameter hash is compared against it
    strict : bool
        Raise TableFormatError on a hash mismatch instead of warning

    Raises:
    -------
    TableFormatError
        On bad magic, unsupported version, truncated data or a corrupted grid
    """
    if len(payload) < HEADER.size:
        raise TableFormatError(f"table file {source} is truncated ({len(payload)} bytes)")
    (magic, version, params_hash, n_v, n_delta, n_theta,
     v_min, v_max, d_min, d_max, t_min, t_max, mu_max, horizon_steps, dt) = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise TableFormatError(f"{source} is not a boundary table (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise TableFormatError(f"unsupported table format version {version} in {source}")

    expected = 8 * n_v * n_delta * n_theta
    body = payload[HEADER.size:]
    if len(body) != expected:
        raise TableFormatError(
            f"table data length mismatch in {source}: header announces {n_v}x{n_delta}x{n_theta} "
            f"({expected} bytes), file holds {len(body)}"
        )
    try:
        grid = GridSpec(n_v, n_delta, n_theta, v_min, v_max, d_min, d_max, t_min, t_max)
    except ValidationError as e:
        raise TableFormatError(f"corrupted grid in {source}: {e}") from None

    rho = np.frombuffer(body, dtype="<f8").reshape(grid.counts).astype(float)
    try:
        table = BoundaryTable(grid=grid, rho=rho, mu_max=mu_max, params_hash=params_hash,
                              horizon_steps=horizon_steps, dt=dt, version=version)
    except ValidationError as e:
        raise TableFormatError(f"invalid table data in {source}: {e}") from None

    if params is not None and not table.matches(params):
        message = (
            f"table {source} was built for different vehicle parameters "
            f"(table mu_max={mu_max}, vehicle mu_max={params.mu_max})"
        )
        if strict:
            raise TableFormatError(message)
        warnings.warn(message, TableMismatchWarning, stacklevel=3)
    return table


def load_table(path, params=None, strict=False):
    try:
        with open(path, "rb") as handle:
            payload = handle.read()
    except OSError as e:
        raise ValidationError(f"cannot read table file {path}: {e}") from e
    return parse_table(payload, params=params, strict=strict, source=str(path))
