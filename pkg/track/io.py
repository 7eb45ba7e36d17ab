"""
Track File Module
Reads and writes track files: a `# key = value` sidecar header followed by an
`x,y` CSV of centerline vertices.

    # width = 20.0
    # closed = true
    # finish_s = 0.0
    x,y
    0.0,0.0
    ...
"""

import io

import pandas as pd

from utils.atomic import write_text_atomic
from utils.errors import ValidationError

from .geometry import Track

HEADER_KEYS = ("width", "closed", "finish_s")


def load_track(path, name=None):
    """
    Load and validate a track file.

    Parameters:
    -----------
    path : str
        Path to the UTF-8 track file
    name : str, optional
        Display name (defaults to the file stem)

    Returns:
    --------
    Track
        Validated track with computed arc lengths

    Raises:
    -------
    ValidationError
        On malformed rows, missing header keys or Track invariant breaches
    """
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ValidationError(f"cannot read track file {path}: {e}") from e

    header = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            continue
        key, sep, value = line[1:].partition("=")
        if not sep:
            raise ValidationError(f"malformed header line in {path}: {line!r}")
        header[key.strip()] = value.strip()

    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise ValidationError(f"track file {path} is missing header key(s): {', '.join(missing)}")
    unknown = sorted(set(header) - set(HEADER_KEYS))
    if unknown:
        raise ValidationError(f"unknown track header key(s) in {path}: {', '.join(unknown)}")

    closed_text = header["closed"].lower()
    if closed_text not in ("true", "false"):
        raise ValidationError(f"closed must be true or false in {path}, got {header['closed']!r}")
    try:
        width = float(header["width"])
        finish_s = float(header["finish_s"])
    except ValueError as e:
        raise ValidationError(f"non-numeric track header value in {path}: {e}") from None

    try:
        df = pd.read_csv(io.StringIO(text), comment="#", float_precision="round_trip", dtype=float)
    except (ValueError, pd.errors.ParserError) as e:
        raise ValidationError(f"malformed vertex row in {path}: {e}") from None
    if list(df.columns) != ["x", "y"]:
        raise ValidationError(f"track file {path} must have header x,y, got {','.join(map(str, df.columns))}")
    if df.isna().any().any():
        raise ValidationError(f"malformed vertex row in {path}: missing coordinate")

    return Track(
        vertices=df[["x", "y"]].to_numpy(),
        width=width,
        closed=closed_text == "true",
        finish_s=finish_s,
        name=name or _stem(path),
    )


def dump_track(track):
    """Serialize a track to the file format (text)."""
    df = pd.DataFrame(track.vertices, columns=["x", "y"])
    header = (
        f"# width = {float(track.width)!r}\n"
        f"# closed = {'true' if track.closed else 'false'}\n"
        f"# finish_s = {float(track.finish_s)!r}\n"
    )
    return header + df.to_csv(index=False, lineterminator="\n", float_format=_format_float)


def save_track(track, path):
    write_text_atomic(path, dump_track(track))


def _stem(path):
    base = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return base.rsplit(".", 1)[0]


def _format_float(value):
    # shortest repr that parses back to the identical double
    return repr(float(value))
