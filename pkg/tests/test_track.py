import math

import numpy as np
import pytest

from track.canonical import canonical_track, track_a_like
from track.geometry import (
    Track,
    TrackPose,
    forward_observation,
    lap_events,
    project,
    relative_heading,
    terminal_predicates,
    track_pose,
)
from utils.errors import ValidationError


class TestCanonicalTracks:
    def test_oval_length(self, oval):
        assert oval.length == pytest.approx(400.0 + 100.0 * math.pi, abs=0.01)
        assert oval.closed
        assert oval.is_simple()

    def test_track_a_like_length(self):
        track = track_a_like()
        assert track.length == pytest.approx(860.5, abs=1.0)
        assert track.width == 20.0

    def test_oval_has_two_straights(self, oval):
        intervals = oval.straight_intervals()
        assert len(intervals) == 2
        assert all(s1 - s0 > 190.0 for s0, s1 in intervals)

    def test_circle_has_no_straight(self, circle):
        assert circle.straight_intervals() == []

    def test_oval_curvature_matches_arc_radius(self, oval):
        curvature = np.abs(oval.curvature_profile())
        assert np.max(curvature) == pytest.approx(1.0 / 50.0, rel=0.01)
        assert np.min(curvature) == pytest.approx(0.0, abs=1e-9)

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            canonical_track("monza")


class TestTrackValidation:
    def test_closed_flag_needs_matching_ends(self):
        with pytest.raises(ValidationError):
            Track(vertices=[[0, 0], [10, 0], [10, 10]], width=10.0, closed=True)

    def test_duplicate_vertex(self):
        with pytest.raises(ValidationError):
            Track(vertices=[[0, 0], [10, 0], [10, 0], [20, 0]], width=10.0, closed=False)

    def test_finish_must_lie_on_track(self):
        with pytest.raises(ValidationError):
            Track(vertices=[[0, 0], [10, 0], [20, 0]], width=10.0, closed=False, finish_s=25.0)

    def test_width_must_be_positive(self):
        with pytest.raises(ValidationError):
            Track(vertices=[[0, 0], [10, 0], [20, 0]], width=0.0, closed=False)


class TestProjection:
    def test_left_is_positive(self, straight):
        pose = project(straight, (50.0, 3.0))
        assert pose.s == pytest.approx(50.0)
        assert pose.d_raw == pytest.approx(3.0)
        assert pose.d_c == pytest.approx(0.3)

    def test_right_is_negative(self, straight):
        assert project(straight, (123.0, -4.0)).d_raw == pytest.approx(-4.0)

    def test_inside_of_a_left_circle(self, circle):
        # the circle is centered at (0, 30) and run counter-clockwise
        pose = project(circle, (0.0, 5.0))
        assert pose.d_raw == pytest.approx(5.0, abs=1e-3)
        pose = project(circle, (0.0, -5.0))
        assert pose.d_raw == pytest.approx(-5.0, abs=1e-3)

    def test_hint_agrees_with_full_scan(self, oval):
        for s in np.linspace(1.0, oval.length - 1.0, 37):
            point = oval.point_at(s)
            full = project(oval, point)
            hinted = project(oval, point, hint=s)
            assert hinted.s == pytest.approx(full.s, abs=1e-9)

    def test_hint_keeps_projection_on_the_near_branch(self, oval):
        # half way between the two straights; the hint decides which one
        point = (100.0, 50.0)
        assert project(oval, point, hint=100.0).s == pytest.approx(100.0, abs=1e-6)
        far = project(oval, point, hint=357.08 + 100.0)
        assert far.s == pytest.approx(357.08 + 100.0, abs=0.1)

    def test_non_finite_position(self, straight):
        with pytest.raises(ValidationError):
            project(straight, (math.nan, 0.0))

    def test_station_wraps_on_closed_track(self, oval):
        pose = project(oval, oval.point_at(oval.length - 1e-3))
        assert 0.0 <= pose.s < oval.length

    @pytest.mark.parametrize("s, offset", [(5.0, 3.0), (150.0, -7.5), (260.0, 6.0), (530.0, -2.0), (700.0, 8.0)])
    def test_projection_is_idempotent(self, oval, s, offset):
        heading = oval.tangent_at(s)
        position = np.asarray(oval.point_at(s)) + offset * np.array([-math.sin(heading), math.cos(heading)])
        first = project(oval, position)
        again = project(oval, oval.point_at(first.s))
        gap = abs(again.s - first.s) % oval.length
        assert min(gap, oval.length - gap) < 1e-6
        assert abs(again.d_raw) < 1e-6


class TestHeading:
    def test_relative_heading(self, straight):
        assert relative_heading(straight, 10.0, 0.3) == pytest.approx(0.3)
        assert relative_heading(straight, 10.0, -0.3) == pytest.approx(-0.3)

    def test_pose_carries_heading(self, oval):
        pose = track_pose(oval, (50.0, 0.0), math.pi)
        assert abs(pose.phi) == pytest.approx(math.pi)
        assert terminal_predicates(pose).wrong_way


class TestForwardObservation:
    def test_aligned_car_sees_points_straight_ahead(self, straight):
        fo = forward_observation(straight, 0.0, (0.0, 0.0), 0.0)
        expected = np.column_stack([fo.distances, np.zeros(len(fo.distances))])
        np.testing.assert_allclose(fo.vectors, expected, atol=1e-9)
        assert fo.flatten().shape == (24,)

    def test_rotated_car(self, straight):
        fo = forward_observation(straight, 0.0, (0.0, 0.0), 0.5 * math.pi, distances=(10.0,))
        np.testing.assert_allclose(fo.vectors, [[0.0, -10.0]], atol=1e-9)

    def test_points_wrap_past_the_finish(self, oval):
        position = oval.point_at(oval.length - 5.0)
        fo = forward_observation(oval, oval.length - 5.0, position, 0.0, distances=(10.0,))
        np.testing.assert_allclose(fo.vectors, [oval.point_at(5.0) - position], atol=1e-9)
        np.testing.assert_allclose(oval.point_at(5.0), [5.0, 0.0], atol=1e-9)

    def test_distances_must_increase(self, straight):
        with pytest.raises(ValidationError):
            forward_observation(straight, 0.0, (0.0, 0.0), 0.0, distances=(20.0, 10.0))

    def test_circle_matches_chord_geometry(self, circle):
        r = 30.0
        distances = (5.0, 10.0, 20.0, 40.0)
        fo = forward_observation(circle, 0.0, (0.0, 0.0), 0.0, distances)
        d = np.asarray(distances)
        expected = np.column_stack([r * np.sin(d / r), r * (1.0 - np.cos(d / r))])
        np.testing.assert_allclose(fo.vectors, expected, atol=1e-3)

    def test_rigid_rotation_of_the_scene(self, oval):
        angle, shift = 0.7, np.array([12.0, -5.0])
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        turned = Track(vertices=oval.vertices @ rotation.T + shift, width=oval.width, closed=True,
                       finish_s=0.0, name="turned")
        position, psi, s = np.array([120.0, 4.0]), 0.3, 120.0
        original = forward_observation(oval, s, position, psi)
        moved = forward_observation(turned, s, rotation @ position + shift, psi + angle)
        np.testing.assert_allclose(moved.vectors, original.vectors, atol=1e-6)


class TestLapsAndTermination:
    def test_forward_crossing(self, oval):
        event = lap_events(oval, oval.length - 1.0, 1.0)
        assert event.crossed_finish and event.direction == "forward"

    def test_backward_crossing(self, oval):
        event = lap_events(oval, 1.0, oval.length - 1.0)
        assert event.crossed_finish and event.direction == "backward"

    def test_no_crossing(self, oval):
        assert not lap_events(oval, 100.0, 101.0).crossed_finish

    @pytest.mark.parametrize("d_c, phi, off, wrong", [
        (0.99, 0.0, False, False),
        (1.01, 0.0, True, False),
        (-1.01, 0.0, True, False),
        (0.0, 1.6, False, True),
        (0.0, -1.6, False, True),
        (0.0, 1.5, False, False),
    ])
    def test_terminal_predicates(self, d_c, phi, off, wrong):
        flags = terminal_predicates(TrackPose(s=0.0, d_raw=10.0 * d_c, d_c=d_c, tangent=0.0, segment=0, phi=phi))
        assert flags.off_track is off
        assert flags.wrong_way is wrong
        assert flags.any is (off or wrong)
