"""
Atomic File Writes
Every artifact (tables, checkpoints, CSVs, reports) is written to a temporary
file in the destination directory and renamed over the final name, so an
interrupted run never leaves a truncated file behind.
"""

import os
import tempfile
from contextlib import contextmanager

from .errors import RuntimeFault


@contextmanager
def atomic_write(path, mode="wb"):
    """
    Open a temporary file next to ``path`` and move it into place on success.

    Parameters:
    -----------
    path : str or os.PathLike
        Final destination of the file
    mode : str
        "wb" for binary payloads, "w" for text (UTF-8, newline="")

    Yields:
    -------
    file object
        Handle to the temporary file
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as e:
        raise RuntimeFault(f"cannot write {path}: {e}") from e

    kwargs = {} if "b" in mode else {"encoding": "utf-8", "newline": ""}
    try:
        with os.fdopen(fd, mode, **kwargs) as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_path, path)
    except OSError as e:
        _discard(tmp_path)
        raise RuntimeFault(f"cannot write {path}: {e}") from e
    except BaseException:
        _discard(tmp_path)
        raise


def write_bytes_atomic(path, payload):
    with atomic_write(path, "wb") as handle:
        handle.write(payload)


def write_text_atomic(path, text):
    with atomic_write(path, "w") as handle:
        handle.write(text)


def _discard(tmp_path):
    try:
        os.remove(tmp_path)
    except OSError:
        pass
