"""Reading and writing photon streams and histograms."""

import json
from pathlib import Path

import numpy as np

from ..errors import SpectrumParseError
from .simulate import PhotonStream

_DTYPE = np.dtype("<i8")


def write_timestamps(stream, path, channel=None):
    """Write timestamps as little-endian int64 picoseconds.

    A JSON sidecar (``path`` + ".json") stores duration, seed and channel.
    """
    path = Path(path)
    ts = stream.timestamps if channel is None else stream.channel(channel)
    ts.astype(_DTYPE).tofile(path)
    meta = {"duration": stream.duration, "seed": stream.seed, "channel": channel,
            "count": int(ts.size)}
    path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_timestamps(path, duration=None, channel=0):
    """Read a binary int64 picosecond file into a single-channel stream.

    ``duration`` (s) defaults to the sidecar value, else the last timestamp.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % _DTYPE.itemsize:
        raise SpectrumParseError(f"file size {len(raw)} is not a multiple of 8 bytes", path=str(path))
    ts = np.frombuffer(raw, dtype=_DTYPE).astype(np.int64)
    sidecar = path.with_name(path.name + ".json")
    seed = None
    if duration is None and sidecar.exists():
        meta = json.loads(sidecar.read_text())
        duration, seed = meta.get("duration"), meta.get("seed")
    if duration is None:
        duration = (int(ts[-1]) + 1) * 1e-12 if ts.size else 1e-12
    return PhotonStream(ts, float(duration), seed, np.full(ts.size, channel, dtype=np.int8))


def read_timestamps_text(path, duration=None):
    """Read a text file of ``timestamp_ps [channel]`` rows ('#' comments)."""
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            t = int(parts[0])
            ch = int(parts[1]) if len(parts) > 1 else 0
        except ValueError:
            raise SpectrumParseError(f"cannot parse {line!r}", line=lineno, path=str(path)) from None
        rows.append((t, ch))
    if not rows:
        raise SpectrumParseError("no timestamps found", path=str(path))
    arr = np.array(rows, dtype=np.int64)
    order = np.argsort(arr[:, 0], kind="stable")
    arr = arr[order]
    if duration is None:
        duration = (int(arr[-1, 0]) + 1) * 1e-12
    return PhotonStream(arr[:, 0], float(duration), None, arr[:, 1].astype(np.int8))


def write_table(path, header, columns, fmt="%.10g"):
    """Comma separated table with one '#'-free header line."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=fmt)
