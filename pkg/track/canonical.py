"""
Canonical Tracks
Tracks defined in code so tests and desk-scale training do not depend on
files: the short oval, a five-corner circuit with the summary statistics of
the reference test track (about 860 m long, 20 m wide), and simple straight
and circular fixtures.
"""

import math

import numpy as np

from utils.errors import ValidationError

from .geometry import Track

STRAIGHT_SPACING = 1.0
ARC_SPACING = 0.5


class _CenterlineBuilder:
    """Chains straights and constant-radius left/right arcs from a start pose."""

    def __init__(self, x=0.0, y=0.0, heading=0.0):
        self.points = [(x, y)]
        self.x, self.y, self.heading = x, y, heading

    def straight(self, length, spacing=STRAIGHT_SPACING):
        n = max(1, math.ceil(length / spacing))
        x0, y0 = self.x, self.y
        c, s = math.cos(self.heading), math.sin(self.heading)
        for i in range(1, n + 1):
            d = length * i / n
            self.points.append((x0 + d * c, y0 + d * s))
        self.x, self.y = self.points[-1]
        return self

    def arc(self, radius, angle, spacing=ARC_SPACING):
        """Arc of the given radius; positive angle turns left."""
        n = max(2, math.ceil(radius * abs(angle) / spacing))
        side = 1.0 if angle > 0 else -1.0
        h0 = self.heading
        cx = self.x - side * radius * math.sin(h0)
        cy = self.y + side * radius * math.cos(h0)
        for i in range(1, n + 1):
            h = h0 + angle * i / n
            self.points.append((cx + side * radius * math.sin(h), cy - side * radius * math.cos(h)))
        self.heading = h0 + angle
        self.x, self.y = self.points[-1]
        return self

    def close(self, tolerance=1e-6):
        first = np.array(self.points[0])
        last = np.array(self.points[-1])
        if np.hypot(*(last - first)) > tolerance:
            raise ValidationError(f"centerline does not close: end {last} vs start {first}")
        # snap the closing vertex onto the start exactly
        self.points[-1] = self.points[0]
        return np.array(self.points)

    def open(self):
        return np.array(self.points)


def oval_short(width=20.0):
    """Two 200 m straights joined by two r = 50 m half circles (L ~ 714.16 m)."""
    vertices = (
        _CenterlineBuilder()
        .straight(200.0)
        .arc(50.0, math.pi)
        .straight(200.0)
        .arc(50.0, math.pi)
        .close()
    )
    return Track(vertices=vertices, width=width, closed=True, finish_s=0.0, name="oval-short")


def track_a_like(width=20.0, radius=30.0):
    """
    Five left-hand corners (90, 45, 45, 90, 90 deg) joined by straights.

    The straight lengths follow from closure; the total is about 860 m.
    """
    a, b, c = 216.0, 90.0, 60.0
    diagonal = c / math.sqrt(2.0)
    d = a - diagonal
    e = b + diagonal
    vertices = (
        _CenterlineBuilder()
        .straight(a)
        .arc(radius, 0.5 * math.pi)
        .straight(b)
        .arc(radius, 0.25 * math.pi)
        .straight(c)
        .arc(radius, 0.25 * math.pi)
        .straight(d)
        .arc(radius, 0.5 * math.pi)
        .straight(e)
        .arc(radius, 0.5 * math.pi)
        .close()
    )
    return Track(vertices=vertices, width=width, closed=True, finish_s=0.0, name="track-a-like")


def straight_track(length=1000.0, width=20.0, spacing=10.0):
    vertices = _CenterlineBuilder().straight(length, spacing).open()
    return Track(vertices=vertices, width=width, closed=False, finish_s=0.0, name="straight")


def circle_track(radius=50.0, width=20.0, spacing=0.1):
    """Counter-clockwise circle starting at (0, 0) heading east."""
    vertices = _CenterlineBuilder().arc(radius, 2.0 * math.pi, spacing).close()
    return Track(vertices=vertices, width=width, closed=True, finish_s=0.0, name="circle")


CANONICAL_TRACKS = {
    "oval-short": oval_short,
    "track-a-like": track_a_like,
}


def canonical_track(name):
    try:
        return CANONICAL_TRACKS[name]()
    except KeyError:
        raise ValidationError(
            f"unknown canonical track {name!r}; choose from {', '.join(CANONICAL_TRACKS)}"
        ) from None
