"""Plain-text artifacts: delimited data tables and key = value summaries.

Everything is written deterministically (%.17g, no timestamps) so repeated
runs produce byte-identical files.
"""

from __future__ import annotations

import configparser
import io as _io
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

FMT = "%.17g"


def write_table(path, columns: dict, comments: list | None = None):
    """Write named columns as whitespace-delimited text with a header row."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ConfigurationError("all columns must have equal length")
    with path.open("w") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        fh.write(" ".join(names) + "\n")
        for i in range(n):
            fh.write(" ".join(FMT % a[i] for a in arrays) + "\n")
    return path


def read_table(path):
    """Inverse of write_table: returns (columns dict, comment lines)."""
    comments, names, rows = [], None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif names is None:
            names = line.split()
        elif line.strip():
            rows.append([float(v) for v in line.split()])
    data = np.array(rows) if rows else np.zeros((0, len(names or [])))
    return {k: data[:, i] for i, k in enumerate(names or [])}, comments


def write_summary(path, entries: dict, comments: list | None = None):
    """key = value lines; nested dicts become dotted keys."""
    flat = {}

    def walk(prefix, obj):
        for k, v in obj.items():
            key = f"{prefix}{k}"
            if isinstance(v, dict):
                walk(key + ".", v)
            elif isinstance(v, float):
                flat[key] = FMT % v
            elif isinstance(v, (list, tuple, np.ndarray)):
                flat[key] = " ".join(FMT % float(x) for x in np.asarray(v).ravel())
            else:
                flat[key] = str(v)

    walk("", entries)
    with Path(path).open("w") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        for k, v in flat.items():
            fh.write(f"{k} = {v}\n")
    return path


def read_summary(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or "=" not in line:
            continue
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_field(path, field, comments: list | None = None):
    """Serialize a doubly indexed Fourier field as (n, m, Re, Im) rows."""
    ns, ms, re, im = [], [], [], []
    for n in range(field.nmax + 1):
        for m in field.ms:
            v = field[n, int(m)]
            if v != 0:
                ns.append(n)
                ms.append(int(m))
                re.append(v.real)
                im.append(v.imag)
    return write_table(path, {"n": ns, "m": ms, "re": re, "im": im}, comments)


def read_field(path, weight=None, sigma: float = 0.0):
    from .seqspace import Field, Weight

    data, _ = read_table(path)
    if data["n"].size == 0:
        return Field.zero(0, 0, weight or Weight("unit"), sigma)
    nmax = int(data["n"].max())
    mmax = int(np.max(np.abs(data["m"])))
    f = Field.zero(nmax, mmax, weight or Weight("unit"), sigma)
    for n, m, re, im in zip(data["n"], data["m"], data["re"], data["im"]):
        f.values[int(n), int(m) + mmax] = re + 1j * im
    return f


# ---------------------------------------------------------------------------
# experiment config round-trip (flat INI)


def render_config(sections: dict) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for sec, kv in sections.items():
        cp[sec] = {}
        for k, v in kv.items():
            if isinstance(v, float):
                cp[sec][k] = FMT % v
            elif isinstance(v, (list, tuple)):
                cp[sec][k] = " ".join(str(x) for x in v)
            else:
                cp[sec][k] = str(v)
    buf = _io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_config(text: str) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    return {sec: dict(cp[sec]) for sec in cp.sections()}
