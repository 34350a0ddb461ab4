"""Serialization, CSV/manifest writing and the flat key-value config format.

Binary field layout (all little-endian)::

    b"JMGT"            4 bytes
    version            u32 (currently 1)
    dim                u32
    n per axis         dim x u32
    L                  f64
    values             row-major f64, prod(n) of them

CSV files start with a ``# manifest=<file>`` comment line, then a header row.
Floats are written with 17 significant digits so they read back exactly.
"""
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError

__all__ = ["MAGIC", "FORMAT_VERSION", "RealField", "serialize_field", "deserialize_field",
           "write_field", "read_field", "format_value", "write_csv", "read_csv",
           "RunManifest", "write_manifest", "read_manifest", "SCHEMA_VERSION",
           "CONFIG_KEYS", "parse_config", "read_config", "format_config"]

MAGIC = b"JMGT"
FORMAT_VERSION = 1


@dataclass
class RealField:
    """A real field sampled on ``n**dim`` points of a box of side ``L``."""
    data: np.ndarray
    L: float

    @property
    def dim(self):
        return self.data.ndim

    @property
    def n(self):
        return self.data.shape


def serialize_field(f, L):
    """Bytes for the real array ``f`` on a box of side ``L``."""
    f = np.asarray(f)
    if np.iscomplexobj(f):
        raise ConfigurationError("only real fields can be serialized")
    if f.ndim < 1:
        raise ConfigurationError("field must have at least one axis")
    head = struct.pack(f"<4sII{f.ndim}Id", MAGIC, FORMAT_VERSION, f.ndim, *f.shape, float(L))
    return head + np.ascontiguousarray(f, dtype="<f8").tobytes()


def deserialize_field(blob):
    """Inverse of :func:`serialize_field`; raises ``ValueError`` on any mismatch."""
    blob = bytes(blob)
    if len(blob) < 12:
        raise ValueError("truncated field blob: header incomplete")
    magic, version, dim = struct.unpack_from("<4sII", blob, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}; expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported field format version {version}")
    if not 1 <= dim <= 8:
        raise ValueError(f"implausible dimension {dim} in field header")
    head = struct.calcsize(f"<4sII{dim}Id")
    if len(blob) < head:
        raise ValueError("truncated field blob: header incomplete")
    shape = struct.unpack_from(f"<{dim}I", blob, 12)
    (L,) = struct.unpack_from("<d", blob, 12 + 4 * dim)
    count = int(np.prod(shape))
    if len(blob) != head + 8 * count:
        raise ValueError(f"field blob holds {len(blob) - head} data bytes, "
                         f"expected {8 * count} for shape {shape}")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=head).reshape(shape)
    return RealField(data.astype(float), L)


def write_field(path, f, L):
    Path(path).write_bytes(serialize_field(f, L))


def read_field(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"field file {path} not found")
    return deserialize_field(path.read_bytes())


# ---------------------------------------------------------------- CSV

def format_value(x):
    """Text for one CSV cell; floats at 17 significant digits, fractions exact."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    s = str(x)
    if any(c in s for c in ",\"\n"):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_csv(path, header, rows, manifest):
    """Write ``rows`` under ``header``; the first line names the manifest file."""
    lines = [f"# manifest={manifest}", ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ConfigurationError(f"row of length {len(row)} under a {len(header)}-column header")
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """``(manifest, header, rows)`` with cells left as strings."""
    import csv
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file {path} not found")
    with path.open(newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# manifest="):
            raise ValueError(f"{path}: first line must name the manifest")
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return first[len("# manifest="):], header, rows


# ---------------------------------------------------------------- manifests

@dataclass
class RunManifest:
    """Provenance of one CLI run.  Timings live here and nowhere else."""
    tool_version: str
    command: str
    config: dict
    grid: dict
    seed: int
    status: str = "pass"
    outputs: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)


def write_manifest(path, manifest):
    Path(path).write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True, default=str) + "\n")


def read_manifest(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest {path} not found")
    return RunManifest(**json.loads(path.read_text()))


# ---------------------------------------------------------------- config

SCHEMA_VERSION = 1


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _pairs(s):
    """``name:value`` items separated by commas, e.g. ``xi1:2, xi2:6``."""
    out = []
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        k, sep, v = item.partition(":")
        if not sep or not k.strip():
            raise ValueError(f"expected name:value, got {item!r}")
        out.append((k.strip(), float(v)))
    return tuple(out)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


CONFIG_KEYS = {
    "schema": _int,
    "scenario": str,
    # physics
    "tau": float, "beta": float, "B_over_A": float, "alpha": float, "c": float,
    # grid and stepping
    "dim": _int, "n": _int, "L": float, "scheme": str, "T": float, "dt": float, "stride": _int,
    # data
    "profile": str, "profile_params": _pairs, "amplitude": float, "amplitudes": _floats,
    "seed": _int, "runs": _int, "nonlinear": _bool,
    # analysis
    "gamma": float, "R": float, "s": _int, "k": _int, "m": _int,
    "t_window": _floats, "high_window": _floats, "n_times": _int,
    "xi_min": float, "xi_max": float, "n_xi": _int, "map_n": _int,
    "suite": str, "c_max": float, "growth_max": float,
}


def parse_config(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Raises ``ConfigurationError`` naming the offending key for unknown keys,
    unparsable values, duplicates or a schema version other than 1.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"{source}:{lineno}: malformed line {raw.strip()!r}; "
                                     "expected key = value", key=key or raw.strip())
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}", key=key)
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}", key=key)
        try:
            out[key] = CONFIG_KEYS[key](value.strip())
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key!r}: {exc}", key=key)
    if out.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigurationError(f"{source}: schema {out['schema']} unsupported; "
                                 f"expected {SCHEMA_VERSION}", key="schema")
    return out


def read_config(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path))


def format_config(cfg):
    """Inverse of :func:`parse_config` for the supported value types."""
    lines = [f"schema = {SCHEMA_VERSION}"]
    for key in sorted(cfg):
        if key == "schema":
            continue
        v = cfg[key]
        if isinstance(v, tuple) and v and isinstance(v[0], tuple):
            v = ", ".join(f"{a}:{format_value(b)}" for a, b in v)
        elif isinstance(v, tuple):
            v = ", ".join(format_value(x) for x in v)
        else:
            v = format_value(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
