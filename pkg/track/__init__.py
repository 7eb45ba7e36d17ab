"""
Track package for the race-driving toolkit
"""

from .geometry import (
    DEFAULT_FO_DISTANCES,
    ForwardObservation,
    LapEvent,
    TerminalFlags,
    Track,
    TrackPose,
    forward_observation,
    lap_events,
    project,
    relative_heading,
    terminal_predicates,
    track_pose,
)
from .io import dump_track, load_track, save_track
from .canonical import canonical_track, circle_track, oval_short, straight_track, track_a_like

__all__ = [
    'DEFAULT_FO_DISTANCES',
    'ForwardObservation',
    'LapEvent',
    'TerminalFlags',
    'Track',
    'TrackPose',
    'forward_observation',
    'lap_events',
    'project',
    'relative_heading',
    'terminal_predicates',
    'track_pose',
    'dump_track',
    'load_track',
    'save_track',
    'canonical_track',
    'circle_track',
    'oval_short',
    'straight_track',
    'track_a_like',
]
