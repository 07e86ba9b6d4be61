"""Run records and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("cd_count", "re_sx", "re_sz", "im_sx", "im_sz", "mean_photons")


def fmt(value) -> str:
    """Full-precision, locale-free text form of a CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


def observables_row(cd_count: int, rho: np.ndarray, stabs: dict) -> dict:
    if rho.ndim == 1:
        sx = np.vdot(rho, stabs["S_X"] @ rho)
        sz = np.vdot(rho, stabs["S_Z"] @ rho)
        nbar = float(np.sum(np.arange(rho.shape[0]) * np.abs(rho) ** 2))
    else:
        sx = np.einsum("ij,ji->", stabs["S_X"], rho)
        sz = np.einsum("ij,ji->", stabs["S_Z"], rho)
        nbar = float(np.real(np.diag(rho)) @ np.arange(rho.shape[0]))
    return {
        "cd_count": int(cd_count),
        "re_sx": float(sx.real),
        "re_sz": float(sz.real),
        "im_sx": float(sx.imag),
        "im_sz": float(sz.imag),
        "mean_photons": nbar,
    }


@dataclass
class RunRecord:
    rows: list[dict]
    meta: dict = field(default_factory=dict)
    state: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            cols.extend(k for k in row if k not in cols)
        return cols

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def to_csv_text(self, columns=None) -> str:
        columns = list(columns or self.columns)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in self.rows:
            w.writerow([fmt(row.get(c, "")) for c in columns])
        return buf.getvalue()

    def write_csv(self, path, columns=None) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text(columns), encoding="utf-8")
        return path

    @staticmethod
    def read_csv(path) -> list[dict]:
        with open(path, newline="", encoding="utf-8") as fh:
            return [{k: parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclass
class GridRecord:
    """A sampled function on a (q, p) grid; ``values[i, j]`` is at ``(q[j], p[i])``.

    CSV layout: the header row holds the q values, the first column the p values.
    """

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p\\q"] + [fmt(float(x)) for x in self.q])
        for pv, row in zip(self.p, self.values):
            w.writerow([fmt(float(pv))] + [fmt(float(x)) for x in row])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text(), encoding="utf-8")
        return path

    @classmethod
    def read_csv(cls, path) -> "GridRecord":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        q = np.array([float(x) for x in rows[0][1:]])
        p = np.array([float(r[0]) for r in rows[1:]])
        vals = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
        return cls(q, p, vals)
