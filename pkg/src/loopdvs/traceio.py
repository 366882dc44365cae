"""IQT binary trace files and CSV result emission.

An IQT file is a 40-byte little-endian header followed by float32 samples
interleaved per time step as (Ix, Qx, Iy, Qy)::

    offset  size  field
    0       8     magic b"DVSIQT01"
    8       4     version (uint32, = 1)
    12      8     sample_rate_hz (float64)
    20      8     t0_s (float64)
    28      4     n_channels (uint32, = 4)
    32      8     n_samples (uint64)
"""
from __future__ import annotations

import csv
import os
import struct
import tempfile

import numpy as np

from .errors import NotIQTError, TraceFormatError, TruncatedTraceError, UnsupportedVersionError
from .link import IQTrace

MAGIC = b"DVSIQT01"
VERSION = 1
N_CHANNELS = 4
HEADER = struct.Struct("<8sIddIQ")
HEADER_SIZE = HEADER.size  # 40
SAMPLE_DTYPE = np.dtype("<f4")
_MAX_SAMPLES = (2**64 - 1) // (N_CHANNELS * SAMPLE_DTYPE.itemsize)


def encode_header(sample_rate_hz, t0_s, n_samples):
    return HEADER.pack(MAGIC, VERSION, float(sample_rate_hz), float(t0_s), N_CHANNELS, n_samples)


def trace_file_size(n_samples):
    return HEADER_SIZE + n_samples * N_CHANNELS * SAMPLE_DTYPE.itemsize


def write_trace(trace: IQTrace, path):
    """Write ``trace`` atomically (temp file in the target directory, then rename)."""
    n = trace.n_samples
    if n > _MAX_SAMPLES:
        raise OverflowError(f"{n} samples do not fit an IQT payload")
    payload = np.ascontiguousarray(trace.channels.T, dtype=SAMPLE_DTYPE)
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".iqt-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(encode_header(trace.sample_rate_hz, trace.t0_s, n))
            fh.write(payload.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def decode(data: bytes) -> IQTrace:
    if len(data) < HEADER_SIZE or data[:8] != MAGIC:
        raise NotIQTError("not an IQT file")
    magic, version, fs, t0, n_ch, n = HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported IQT version {version}")
    if n_ch != N_CHANNELS:
        raise TraceFormatError(f"expected {N_CHANNELS} channels, header says {n_ch}")
    row = N_CHANNELS * SAMPLE_DTYPE.itemsize
    body = len(data) - HEADER_SIZE
    if body != n * row:
        raise TruncatedTraceError(n, body // row)
    samples = np.frombuffer(data, dtype=SAMPLE_DTYPE, offset=HEADER_SIZE).reshape(n, N_CHANNELS)
    return IQTrace(sample_rate_hz=fs, t0_s=t0, channels=samples.T.astype(np.float32))


def read_trace(path) -> IQTrace:
    with open(path, "rb") as fh:
        return decode(fh.read())


LOCALIZATION_COLUMNS = ("trial", "freq_hz", "delay_s", "separation_m", "cable_position_m", "peak_correlation")


def write_csv(path, columns, rows):
    """Write ``rows`` (mappings or sequences) under a header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(c, "") for c in columns]
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "n/a"
    return v


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
