"""
Write the canonical race tracks to track files.

This module:
1. Builds the short oval and the five-corner test circuit
2. Checks that each centerline is a simple closed ring
3. Outputs: data/tracks/<name>.csv (header + x,y vertices)
"""

import os
import sys

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from track.canonical import CANONICAL_TRACKS
from track.io import save_track


def describe(track):
    """Summary row for one track."""
    straights = track.straight_intervals()
    return {
        "name": track.name,
        "length_m": round(track.length, 2),
        "width_m": track.width,
        "vertices": len(track.vertices),
        "straight_m": round(sum(s1 - s0 for s0, s1 in straights), 2),
        "min_radius_m": round(1.0 / float(np.max(np.abs(track.curvature_profile()))), 1),
        "simple": track.is_simple(),
    }


def main(output_dir="data/tracks"):
    """Main execution function."""
    print("=" * 60)
    print("Write canonical race tracks")
    print("=" * 60)

    os.makedirs(output_dir, exist_ok=True)

    rows = []
    for name, factory in CANONICAL_TRACKS.items():
        track = factory()
        if not track.is_simple():
            print(f"Warning: {name} centerline self-intersects")
        output_file = os.path.join(output_dir, f"{name}.csv")
        save_track(track, output_file)
        print(f"✓ Saved to: {output_file}")
        rows.append(describe(track))

    print("\nTracks:")
    print(pd.DataFrame(rows).to_string(index=False))

    print("\n" + "=" * 60)
    print("TRACKS COMPLETE")
    print("=" * 60)


if __name__ == "__main__":
    main(*sys.argv[1:2])
