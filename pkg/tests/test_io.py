import hashlib
import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from jmgt import io as jio
from jmgt.exceptions import ConfigurationError

GOLDEN = Path(__file__).parent / "data" / "golden_field.jmgt"
GOLDEN_SHA256 = "8d2b7e1430942222b1697102589b718de62eb279554a5aa344ba5e2c874e2176"


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=1, max_dims=3, max_side=6),
                  elements=st.floats(allow_nan=True, allow_infinity=True)),
       st.floats(1e-6, 1e6))
def test_round_trip_is_bit_exact(f, L):
    out = jio.deserialize_field(jio.serialize_field(f, L))
    assert out.L == L and out.data.shape == f.shape
    assert out.data.tobytes() == np.ascontiguousarray(f).tobytes()


def test_header_layout():
    blob = jio.serialize_field(np.zeros((2, 3)), 1.5)
    assert blob[:4] == b"JMGT"
    assert struct.unpack("<IIIId", blob[4:28]) == (1, 2, 2, 3, 1.5)
    assert len(blob) == 28 + 6 * 8


def test_golden_file():
    blob = GOLDEN.read_bytes()
    assert hashlib.sha256(blob).hexdigest() == GOLDEN_SHA256
    rec = jio.read_field(GOLDEN)
    i = np.arange(64, dtype=float).reshape(4, 4, 4)
    assert rec.L == 2 * math.pi and rec.dim == 3 and rec.n == (4, 4, 4)
    assert np.array_equal(rec.data, np.sin(i) / 3 - i * 2.0 ** -10)
    assert jio.serialize_field(rec.data, rec.L) == blob


def test_corrupt_blobs_are_rejected():
    blob = jio.serialize_field(np.ones((4, 4)), 1.0)
    for bad in (blob[:-1], blob + b"\0", blob[:10], b"XXXX" + blob[4:],
                blob[:4] + struct.pack("<I", 2) + blob[8:]):
        with pytest.raises(ValueError):
            jio.deserialize_field(bad)
    with pytest.raises(ConfigurationError):
        jio.serialize_field(np.ones(3, dtype=complex), 1.0)
    with pytest.raises(FileNotFoundError):
        jio.read_field("/nonexistent/field.jmgt")


@given(st.floats(allow_nan=False))
def test_csv_floats_round_trip(x):
    assert float(jio.format_value(x)) == x


def test_csv_layout(tmp_path):
    from fractions import Fraction
    path = tmp_path / "t.csv"
    jio.write_csv(path, ["a", "b", "c"], [[1, 0.1, True], [Fraction(3, 2), float("inf"), "x,y"]], "m.json")
    assert path.read_text() == '# manifest=m.json\na,b,c\n1,0.10000000000000001,true\n3/2,inf,"x,y"\n'
    manifest, header, rows = jio.read_csv(path)
    assert manifest == "m.json" and header == ["a", "b", "c"] and rows[1][2] == "x,y"
    with pytest.raises(ConfigurationError):
        jio.write_csv(path, ["a"], [[1, 2]], "m.json")


def test_config_parsing():
    cfg = jio.parse_config("schema = 1\n# comment\ntau = 0.25  # trailing\nnonlinear = yes\n"
                           "t_window = 100, 1000\nprofile_params = xi1:2, xi2:6\n")
    assert cfg == {"schema": 1, "tau": 0.25, "nonlinear": True, "t_window": (100.0, 1000.0),
                   "profile_params": (("xi1", 2.0), ("xi2", 6.0))}
    assert jio.parse_config(jio.format_config(cfg)) == cfg


@pytest.mark.parametrize("text,key", [("tau = 1\nbogus = 2\n", "bogus"), ("n = 3.5\n", "n"),
                                      ("tau = x\n", "tau"), ("schema = 2\n", "schema"),
                                      ("tau = 1\ntau = 2\n", "tau"), ("nonlinear = maybe\n", "nonlinear"),
                                      ("just words\n", "just words")])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigurationError) as info:
        jio.parse_config(text)
    assert info.value.key == key
    assert repr(key) in str(info.value) or key in str(info.value)


@given(st.dictionaries(st.sampled_from(["tau", "beta", "L", "dt", "gamma"]),
                       st.floats(-1e9, 1e9, allow_nan=False)))
def test_config_round_trip(d):
    assert {k: v for k, v in jio.parse_config(jio.format_config(d)).items() if k != "schema"} == d


def test_manifest_round_trip(tmp_path):
    m = jio.RunManifest("0.1.0", "modes", {"tau": 0.5}, {"n": 8}, 3, timings={"total_s": 1.0})
    jio.write_manifest(tmp_path / "m.json", m)
    assert jio.read_manifest(tmp_path / "m.json") == m
