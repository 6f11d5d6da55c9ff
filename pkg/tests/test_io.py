import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icaprep.errors import ConfigurationError, ParseError
from icaprep.fixedpoint import Q
from icaprep.io import (
    HEADER,
    decode_csv,
    decode_raw,
    encode_csv,
    encode_raw,
    infer_format,
    load_signals,
    report_json,
    save_report,
    save_signals,
)
from icaprep.matrices import SignalMatrix
from icaprep.oracle import generate_bss

F = Q(10, 8)


@pytest.fixture
def signals():
    return SignalMatrix.from_complex(generate_bss(8, 64, 1).Y, F)


def test_raw_round_trip(signals, tmp_path):
    path = tmp_path / "y.raw"
    save_signals(signals, path)
    assert load_signals(path) == signals


def test_csv_round_trip(signals, tmp_path):
    path = tmp_path / "y.csv"
    save_signals(signals, path)
    assert load_signals(path) == signals


def test_raw_header_layout(signals):
    data = encode_raw(signals)
    assert len(data) == 16 + 4 * 8 * 64
    assert data[:4] == b"ICAP" and HEADER.unpack_from(data)[1:5] == (8, 64, 10, 8)
    first = np.frombuffer(data[16:20], "<i2")
    assert first.tolist() == [signals.re[0, 0], signals.im[0, 0]]


@settings(max_examples=30)
@given(st.sampled_from([2, 4, 6]), st.sampled_from([2, 8, 32]), st.integers(2, 16), st.data())
def test_raw_round_trip_any_format(n, m, wl, data):
    fmt = Q(wl, data.draw(st.integers(0, wl - 1)))
    vals = st.lists(st.integers(fmt.raw_min, fmt.raw_max), min_size=n * m, max_size=n * m)
    Y = SignalMatrix.from_raw(np.reshape(data.draw(vals), (n, m)), np.reshape(data.draw(vals), (n, m)), fmt)
    assert decode_raw(encode_raw(Y)) == Y


def test_truncated_raw(signals):
    data = encode_raw(signals)[:-7]
    with pytest.raises(ParseError, match=r"expected 2064 bytes .* got 2057"):
        decode_raw(data)


def test_truncated_header():
    with pytest.raises(ParseError, match="byte 0"):
        decode_raw(b"ICAP\x08")


def test_bad_magic(signals):
    with pytest.raises(ParseError, match="magic"):
        decode_raw(b"XXXX" + encode_raw(signals)[4:])


def test_raw_value_out_of_range(signals):
    data = bytearray(encode_raw(signals))
    data[20:22] = (1000).to_bytes(2, "little", signed=True)
    with pytest.raises(ParseError, match="byte 20"):
        decode_raw(bytes(data))


def test_csv_odd_n():
    text = "N,M,frac_bits,word_length\n3,4,8,10\n" + "0:0,0:0,0:0,0:0\n" * 3
    with pytest.raises(ParseError, match="line 2: N must be even"):
        decode_csv(text)


def test_csv_bad_cell(signals):
    lines = encode_csv(signals).splitlines()
    lines[4] = "oops," + lines[4].split(",", 1)[1]
    with pytest.raises(ParseError, match="line 5, field 1"):
        decode_csv("\n".join(lines))


def test_csv_short_row(signals):
    lines = encode_csv(signals).splitlines()
    lines[2] = lines[2].rsplit(",", 1)[0]
    with pytest.raises(ParseError, match="line 3: expected 64 samples, got 63"):
        decode_csv("\n".join(lines))


def test_csv_header():
    with pytest.raises(ParseError, match="line 1"):
        decode_csv("M,N\n")


def test_infer_format():
    assert infer_format("a.CSV") == "csv" and infer_format("a.bin") == "raw"
    with pytest.raises(ConfigurationError):
        infer_format("a.txt")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_signals(tmp_path / "nope.raw")


def test_report_json_is_canonical(tmp_path):
    path = tmp_path / "r.json"
    save_report({"b": 1, "a": [1, 2]}, path)
    assert path.read_text() == report_json({"a": [1, 2], "b": 1}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
