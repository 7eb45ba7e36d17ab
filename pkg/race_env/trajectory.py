"""
Trajectory Recording
One row per simulation step (plus the initial state) with the virtual action
next to the control actually applied, exported as CSV.
"""

import pandas as pd

from utils.atomic import atomic_write

TRAJECTORY_COLUMNS = [
    "t", "X", "Y", "psi", "v_x", "v_y", "omega", "delta",
    "a_x_virtual", "a_y_virtual", "u_x", "u_y",
    "F_xy", "reward", "s", "d_c", "phi",
]


class Trajectory:
    """Accumulates step rows of a single episode."""

    def __init__(self):
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def record(self, t, state, action, control, f_xy, reward, pose):
        self.rows.append({
            "t": t,
            "X": state.x,
            "Y": state.y,
            "psi": state.psi,
            "v_x": state.v_x,
            "v_y": state.v_y,
            "omega": state.omega,
            "delta": state.delta,
            "a_x_virtual": float(action[0]),
            "a_y_virtual": float(action[1]),
            "u_x": float(control[0]),
            "u_y": float(control[1]),
            "F_xy": float(f_xy),
            "reward": float(reward),
            "s": pose.s,
            "d_c": pose.d_c,
            "phi": pose.phi,
        })

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=TRAJECTORY_COLUMNS)


def save_trajectory(trajectory, path):
    """Write a Trajectory (or a DataFrame with the same columns) to CSV."""
    df = trajectory.to_frame() if isinstance(trajectory, Trajectory) else trajectory
    with atomic_write(path, "w") as handle:
        df.to_csv(handle, index=False, lineterminator="\n")
