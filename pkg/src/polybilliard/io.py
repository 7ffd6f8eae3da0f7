"""Trajectory CSV and report files.

Floats are written with 17 significant digits so a read-back is bit-exact.
All writes go through a temp file and ``os.replace``.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import SchemaMismatch


def fmt(x) -> str:
    return format(float(x), ".17g")


def atomic_write(path, data) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_header(n_params: int, dim: int, n_integrals: int) -> list:
    return (["step"] + [f"param{i + 1}" for i in range(n_params)]
            + [f"x{i + 1}" for i in range(dim)] + [f"v{i + 1}" for i in range(dim)]
            + [f"F_{i + 1}" for i in range(n_integrals)])


def trajectory_csv(orbit, specs) -> str:
    xs, vs = orbit.positions, orbit.velocities
    n_params = 1 if orbit.kind == "planar" else 2
    dim = xs.shape[1] if len(xs) else 0
    fvals = [np.atleast_1d(s(xs, vs)) if len(xs) else [] for s in specs]
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trajectory_header(n_params, dim, len(specs)))
    for k in range(len(xs)):
        params = list(orbit.params[k])[:n_params]
        params += [float("nan")] * (n_params - len(params))
        w.writerow([k] + [fmt(p) for p in params] + [fmt(a) for a in xs[k]]
                   + [fmt(a) for a in vs[k]] + [fmt(f[k]) for f in fvals])
    return buf.getvalue()


def write_trajectory(path, orbit, specs) -> None:
    atomic_write(path, trajectory_csv(orbit, specs))


@dataclass
class Trajectory:
    steps: np.ndarray
    params: np.ndarray
    x: np.ndarray
    v: np.ndarray
    F: np.ndarray

    @property
    def dim(self) -> int:
        return self.x.shape[1]


_COL = re.compile(r"^(param|x|v|F_)(\d+)$")


def read_trajectory(path) -> Trajectory:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaMismatch(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise SchemaMismatch("empty file: no header")
    header = rows[0]
    if not header or header[0] != "step":
        raise SchemaMismatch("first column must be 'step'")
    groups = {"param": [], "x": [], "v": [], "F_": []}
    order = []
    for name in header[1:]:
        m = _COL.match(name)
        if not m:
            raise SchemaMismatch(f"unexpected column {name!r}")
        groups[m.group(1)].append(int(m.group(2)))
        order.append(m.group(1))
    n = len(groups["x"])
    np_, nf = len(groups["param"]), len(groups["F_"])
    expected = trajectory_header(np_, n, nf)
    if header != expected or n < 2 or len(groups["v"]) != n or np_ not in (1, 2):
        raise SchemaMismatch(f"header {header} does not match the trajectory schema")
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaMismatch(f"row {i}: {len(row)} fields, expected {len(header)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise SchemaMismatch(f"row {i}: non-numeric field") from None
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    c = 1
    params = arr[:, c:c + np_]
    c += np_
    x = arr[:, c:c + n]
    c += n
    v = arr[:, c:c + n]
    c += n
    return Trajectory(arr[:, 0].astype(int), params, x, v, arr[:, c:c + nf])


def write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is None or os.fspath(path) == "-":
        print(text, end="")
    else:
        atomic_write(path, text)


def rows_csv(header: list, rows: list) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(c) if isinstance(c, float) else c for c in r])
    return buf.getvalue()
