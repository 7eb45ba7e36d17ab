"""
Track Geometry Module
Race tracks as centerline polylines with a constant width: projection of the
car onto the centerline, relative heading, forward-observation vectors, lap
accounting and termination predicates.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import LineString

from utils.errors import ValidationError
from vehicle.dynamics import wrap_angle

DEFAULT_FO_DISTANCES = (10.0, 20.0, 30.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 160.0, 180.0, 200.0)

# projection search window around the hinted station (m)
HINT_WINDOW = 50.0
STRAIGHT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TrackPose:
    """Projection of the car onto the centerline."""

    s: float
    d_raw: float
    d_c: float
    tangent: float
    segment: int
    phi: float = None

    def with_heading(self, phi):
        return TrackPose(self.s, self.d_raw, self.d_c, self.tangent, self.segment, float(phi))


@dataclass(frozen=True)
class ForwardObservation:
    vectors: np.ndarray      # shape (N_FO, 2), body frame
    distances: tuple

    def flatten(self):
        return self.vectors.reshape(-1)


@dataclass(frozen=True)
class LapEvent:
    crossed_finish: bool
    direction: str = None    # "forward", "backward" or None


@dataclass(frozen=True)
class TerminalFlags:
    off_track: bool
    wrong_way: bool

    @property
    def any(self):
        return self.off_track or self.wrong_way


@dataclass(eq=False)
class Track:
    """
    Centerline polyline with a constant width.

    A closed track repeats its first vertex as its last one. Arc length s
    increases in the nominal running direction; the finish line sits at
    finish_s.
    """

    vertices: np.ndarray
    width: float
    closed: bool = True
    finish_s: float = 0.0
    name: str = "track"
    cum_s: np.ndarray = field(init=False, repr=False)
    seg_len: np.ndarray = field(init=False, repr=False)
    seg_dir: np.ndarray = field(init=False, repr=False)
    seg_heading: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValidationError(f"track vertices must have shape (N, 2), got {vertices.shape}")
        if len(vertices) < 3:
            raise ValidationError(f"a track needs at least 3 vertices, got {len(vertices)}")
        if not np.all(np.isfinite(vertices)):
            raise ValidationError("track vertices must be finite")
        if not (math.isfinite(self.width) and self.width > 0.0):
            raise ValidationError(f"track width must be > 0, got {self.width!r}")

        seg = np.diff(vertices, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            first = int(np.argmax(seg_len <= 0.0))
            raise ValidationError(f"zero-length segment at vertex {first + 1} (duplicate consecutive vertex)")
        if self.closed and not np.array_equal(vertices[0], vertices[-1]):
            raise ValidationError("track flagged closed but its last vertex differs from its first")

        self.vertices = vertices
        self.seg_len = seg_len
        self.seg_dir = seg / seg_len[:, None]
        self.seg_heading = np.arctan2(seg[:, 1], seg[:, 0])
        self.cum_s = np.concatenate([[0.0], np.cumsum(seg_len)])
        if not (0.0 <= self.finish_s < self.length):
            raise ValidationError(f"finish_s must lie in [0, {self.length}), got {self.finish_s!r}")
        self._line = LineString(vertices)

    @property
    def length(self):
        return float(self.cum_s[-1])

    @property
    def half_width(self):
        return 0.5 * self.width

    @property
    def n_segments(self):
        return len(self.seg_len)

    def wrap_s(self, s):
        if self.closed:
            return np.mod(s, self.length)
        return np.clip(s, 0.0, self.length)

    def segment_at(self, s):
        s = self.wrap_s(s)
        index = np.searchsorted(self.cum_s, s, side="right") - 1
        return np.clip(index, 0, self.n_segments - 1)

    def point_at(self, s):
        """Centerline point(s) at arc length s, shape (..., 2)."""
        s = np.asarray(self.wrap_s(s), dtype=float)
        points = shapely.line_interpolate_point(self._line, s)
        return shapely.get_coordinates(points).reshape(s.shape + (2,))

    def tangent_at(self, s):
        return float(self.seg_heading[self.segment_at(s)])

    def straight_intervals(self):
        """Arc-length intervals [(s0, s1), ...] of the straight parts."""
        heading = self.seg_heading
        if self.closed:
            prev_h, next_h = np.roll(heading, 1), np.roll(heading, -1)
        else:
            prev_h = np.concatenate([[heading[0]], heading[:-1]])
            next_h = np.concatenate([heading[1:], [heading[-1]]])
        straight = (np.abs(wrap_angle(heading - prev_h)) < STRAIGHT_TOLERANCE) & (
            np.abs(wrap_angle(next_h - heading)) < STRAIGHT_TOLERANCE
        )
        intervals = []
        start = None
        for i, flag in enumerate(straight):
            if flag and start is None:
                start = i
            if not flag and start is not None:
                intervals.append((float(self.cum_s[start]), float(self.cum_s[i])))
                start = None
        if start is not None:
            intervals.append((float(self.cum_s[start]), float(self.cum_s[-1])))
        return intervals

    def curvature_profile(self):
        """Signed heading change per unit length at each interior vertex (1/m)."""
        turn = wrap_angle(np.diff(self.seg_heading))
        ds = 0.5 * (self.seg_len[:-1] + self.seg_len[1:])
        return turn / ds

    def is_simple(self):
        return bool(self._line.is_simple) if not self.closed else bool(shapely.LinearRing(self.vertices).is_valid)


def _project_segments(track, point, indices):
    a = track.vertices[indices]
    d = track.seg_dir[indices]
    rel = point - a
    t = np.clip(np.einsum("ij,ij->i", rel, d), 0.0, track.seg_len[indices])
    foot = a + t[:, None] * d
    dist2 = np.sum((point - foot) ** 2, axis=1)
    return t, foot, dist2


def project(track, position, hint=None):
    """
    Orthogonal projection of a position onto the centerline.

    Parameters:
    -----------
    track : Track
    position : tuple
        (X, Y) in meters
    hint : float, optional
        Arc length of the previous projection. The search starts from the
        segments around it so the projection cannot jump to a nearby part of
        the track; without a hint every segment is scanned.

    Returns:
    --------
    TrackPose
        Pose without relative heading (phi is None). d_raw is positive to the
        left of the running direction. Ties resolve to the smaller s.
    """
    point = np.asarray(position, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValidationError(f"cannot project non-finite position {position}")

    all_indices = np.arange(track.n_segments)
    indices = all_indices
    if hint is not None and track.length > 2.0 * HINT_WINDOW:
        indices = _window(track, float(hint))

    t, foot, dist2 = _project_segments(track, point, indices)
    best = int(np.argmin(dist2))
    if indices is not all_indices and best in (0, len(indices) - 1):
        # the nearest point sits on the window edge: fall back to a full scan
        indices = all_indices
        t, foot, dist2 = _project_segments(track, point, indices)
        best = int(np.argmin(dist2))

    seg = int(indices[best])
    s = float(track.cum_s[seg] + t[best])
    if track.closed and s >= track.length:
        s -= track.length
    direction = track.seg_dir[seg]
    rel = point - foot[best]
    # full distance to the foot point (not only its normal component, which
    # differs on the outside of a kink), signed by side
    cross = float(direction[0] * rel[1] - direction[1] * rel[0])
    d_raw = math.copysign(math.hypot(rel[0], rel[1]), cross)
    return TrackPose(
        s=s,
        d_raw=d_raw,
        d_c=d_raw / track.half_width,
        tangent=float(track.seg_heading[seg]),
        segment=seg,
    )


def _window(track, hint):
    # segments whose span intersects [hint - W, hint + W], in increasing s order
    lo, hi = hint - HINT_WINDOW, hint + HINT_WINDOW
    starts, ends = track.cum_s[:-1], track.cum_s[1:]
    if not track.closed:
        mask = (ends >= lo) & (starts <= hi)
        return np.flatnonzero(mask)
    L = track.length
    mask = (ends >= lo) & (starts <= hi)
    mask |= (ends >= lo + L) & (starts <= hi + L)
    mask |= (ends >= lo - L) & (starts <= hi - L)
    indices = np.flatnonzero(mask)
    # keep the window contiguous across the wrap so its edges are the true edges
    if len(indices) and indices[0] == 0 and indices[-1] == track.n_segments - 1 and len(indices) < track.n_segments:
        gap = np.flatnonzero(np.diff(indices) > 1)
        if len(gap):
            cut = gap[0] + 1
            indices = np.concatenate([indices[cut:], indices[:cut]])
    return indices


def relative_heading(track, s, psi):
    """Heading relative to the centerline tangent at s, wrapped to (-pi, pi]."""
    return float(wrap_angle(psi - track.tangent_at(s)))


def track_pose(track, position, psi, hint=None):
    pose = project(track, position, hint)
    return pose.with_heading(wrap_angle(psi - pose.tangent))


def forward_observation(track, s, position, psi, distances=DEFAULT_FO_DISTANCES):
    """
    Body-frame vectors from the car to centerline points ahead.

    The point for distance d_i sits at arc length (s + d_i) mod L; its
    earth-frame offset from the car is rotated by R_e^b(psi).
    """
    distances = tuple(float(d) for d in distances)
    d = np.asarray(distances)
    if np.any(d <= 0.0) or np.any(np.diff(d) <= 0.0):
        raise ValidationError(f"forward-observation distances must be positive and increasing: {distances}")
    targets = track.point_at(s + d)
    offset = targets - np.asarray(position, dtype=float)
    c, si = math.cos(psi), math.sin(psi)
    body = np.column_stack([c * offset[:, 0] + si * offset[:, 1], -si * offset[:, 0] + c * offset[:, 1]])
    return ForwardObservation(vectors=body, distances=distances)


def lap_events(track, s_prev, s_new):
    """
    Detect a finish-line crossing between two consecutive stations.

    A crossing is a jump of more than half a lap in the finish-relative
    station, i.e. the modular wraparound at the finish line.
    """
    L = track.length
    u_prev = (s_prev - track.finish_s) % L
    u_new = (s_new - track.finish_s) % L
    if u_prev - u_new > 0.5 * L:
        return LapEvent(True, "forward")
    if u_new - u_prev > 0.5 * L:
        return LapEvent(True, "backward")
    return LapEvent(False, None)


def terminal_predicates(pose):
    return TerminalFlags(
        off_track=abs(pose.d_c) > 1.0,
        wrong_way=pose.phi is not None and abs(pose.phi) > 0.5 * math.pi,
    )
