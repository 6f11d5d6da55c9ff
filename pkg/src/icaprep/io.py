"""Signal files (CSV and raw binary) and JSON reports.

Raw layout: a 16-byte header ``b"ICAP"``, ``u16 N``, ``u16 M``,
``u8 word_length``, ``u8 frac_bits`` and six zero bytes, followed by
``N * M`` interleaved ``(re, im)`` pairs of little-endian ``int16`` raw
values in row-major order.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError
from .fixedpoint import FixFormat, quantize_array
from .matrices import FixMatrix, SignalMatrix

MAGIC = b"ICAP"
HEADER = struct.Struct("<4sHHBB6s")
CSV_HEADER = ["N", "M", "frac_bits", "word_length"]
FORMATS = ("csv", "raw")


def infer_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in FORMATS:
        return suffix
    if suffix in ("bin", "icap"):
        return "raw"
    raise ConfigurationError(f"cannot infer signal format from {str(path)!r}; pass csv or raw")


def _fmt_from_header(word_length: int, frac_bits: int, where: str) -> FixFormat:
    try:
        return FixFormat(word_length, frac_bits)
    except ConfigurationError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _check_dims(n: int, m: int, where: str) -> None:
    if n < 2 or n % 2:
        raise ParseError(f"{where}: N must be even and at least 2, got {n}")
    if m < 2 or m & (m - 1):
        raise ParseError(f"{where}: M must be a power of two, got {m}")


# --- raw ------------------------------------------------------------------------

def encode_raw(Y: SignalMatrix) -> bytes:
    fmt = Y.fmt
    if fmt.word_length > 16:
        raise ConfigurationError(f"raw format stores int16 samples; word_length {fmt.word_length} does not fit")
    header = HEADER.pack(MAGIC, Y.N, Y.M, fmt.word_length, fmt.frac_bits, bytes(6))
    body = np.empty((Y.N, Y.M, 2), dtype="<i2")
    body[..., 0] = Y.re
    body[..., 1] = Y.im
    return header + body.tobytes()


def decode_raw(data: bytes) -> SignalMatrix:
    if len(data) < HEADER.size:
        raise ParseError(f"byte 0: truncated header, expected {HEADER.size} bytes, got {len(data)}")
    magic, n, m, wl, fb, reserved = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"byte 0: bad magic {magic!r}, expected {MAGIC!r}")
    if reserved != bytes(6):
        raise ParseError("byte 10: reserved header bytes must be zero")
    _check_dims(n, m, "byte 4")
    fmt = _fmt_from_header(wl, fb, "byte 8")
    if wl > 16:
        raise ParseError(f"byte 8: word_length {wl} does not fit int16 samples")
    expected = HEADER.size + 4 * n * m
    if len(data) != expected:
        raise ParseError(f"byte {min(len(data), expected)}: expected {expected} bytes for N={n}, M={m}, got {len(data)}")
    body = np.frombuffer(data, dtype="<i2", offset=HEADER.size).reshape(n, m, 2).astype(np.int64)
    re, im = body[..., 0], body[..., 1]
    bad = np.argwhere((body < fmt.raw_min) | (body > fmt.raw_max))
    if len(bad):
        i, j, c = bad[0]
        offset = HEADER.size + 4 * (i * m + j) + 2 * c
        raise ParseError(f"byte {offset}: raw value {body[i, j, c]} outside {fmt}")
    return SignalMatrix(FixMatrix(re, im, fmt))


# --- csv ------------------------------------------------------------------------

def encode_csv(Y: SignalMatrix) -> str:
    lines = [",".join(CSV_HEADER), f"{Y.N},{Y.M},{Y.fmt.frac_bits},{Y.fmt.word_length}"]
    z = Y.to_complex()
    for row in z:
        lines.append(",".join(f"{float(v.real)!r}:{float(v.imag)!r}" for v in row))
    return "\n".join(lines) + "\n"


def decode_csv(text: str) -> SignalMatrix:
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise ParseError(f"line 1: expected header {','.join(CSV_HEADER)}")
    if len(rows) < 2 or len(rows[1]) != 4:
        raise ParseError("line 2: expected four integers N,M,frac_bits,word_length")
    try:
        n, m, fb, wl = (int(c) for c in rows[1])
    except ValueError:
        raise ParseError(f"line 2: non-integer dimension field in {rows[1]!r}") from None
    _check_dims(n, m, "line 2")
    fmt = _fmt_from_header(wl, fb, "line 2")
    data = [r for r in rows[2:] if r]
    if len(data) != n:
        raise ParseError(f"line {len(rows) + 1}: expected {n} signal rows, got {len(data)}")
    z = np.empty((n, m), dtype=complex)
    for i, row in enumerate(data):
        line = i + 3
        if len(row) != m:
            raise ParseError(f"line {line}: expected {m} samples, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                re_s, im_s = cell.split(":")
                z[i, j] = complex(float(re_s), float(im_s))
            except ValueError:
                raise ParseError(f"line {line}, field {j + 1}: cannot parse {cell!r} as re:im") from None
    if not np.all(np.isfinite(z)):
        raise ParseError("non-finite sample value")
    return SignalMatrix(FixMatrix(quantize_array(z.real, fmt), quantize_array(z.imag, fmt), fmt))


# --- files ----------------------------------------------------------------------

def load_signals(path: str | Path, format: str | None = None) -> SignalMatrix:
    fmt = format or infer_format(path)
    if fmt not in FORMATS:
        raise ConfigurationError(f"unknown signal format {fmt!r}; expected one of {FORMATS}")
    p = Path(path)
    try:
        if fmt == "raw":
            return decode_raw(p.read_bytes())
        return decode_csv(p.read_text())
    except OSError as exc:
        raise ParseError(f"{p}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{p}: byte {exc.start}: not valid text") from None


def save_signals(Y: SignalMatrix, path: str | Path, format: str | None = None) -> None:
    fmt = format or infer_format(path)
    if fmt == "raw":
        Path(path).write_bytes(encode_raw(Y))
    elif fmt == "csv":
        Path(path).write_text(encode_csv(Y))
    else:
        raise ConfigurationError(f"unknown signal format {fmt!r}; expected one of {FORMATS}")


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def save_report(report, path: str | Path) -> None:
    body = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(report_json(body))
