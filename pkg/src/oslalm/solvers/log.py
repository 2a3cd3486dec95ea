"""Per-update convergence records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

__all__ = ["LogRow", "ConvergenceLog", "COLUMNS"]


@dataclass(frozen=True)
class LogRow:
    epoch: int
    inner: int
    rho: float
    restarted: int
    objective: float
    rmsd: float
    seconds: float


COLUMNS = tuple(f.name for f in fields(LogRow))
_TYPES = tuple(f.type for f in fields(LogRow))


class ConvergenceLog:
    """Rows in update order; row 0 describes the initial image (epoch 0, inner 0)."""

    def __init__(self, rows=None, name=""):
        self.rows = list(rows or [])
        self.name = name

    def append(self, *args, **kw):
        row = LogRow(*args, **kw)
        if self.rows and row.seconds < self.rows[-1].seconds:
            raise ValueError("time column must be non-decreasing")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    def per_epoch(self):
        """The initial row plus the last row of every epoch."""
        out = []
        for i, r in enumerate(self.rows):
            last = i + 1 == len(self.rows) or self.rows[i + 1].epoch != r.epoch
            if r.epoch == 0 or last:
                if not out or out[-1].epoch != r.epoch:
                    out.append(r)
        return out

    def rmsd_by_epoch(self):
        return np.array([r.rmsd for r in self.per_epoch()])

    def epochs_to(self, threshold):
        """First epoch whose end-of-epoch rmsd is <= threshold, or None."""
        for r in self.per_epoch():
            if r.rmsd <= threshold:
                return r.epoch
        return None

    def restart_positions(self):
        """Update counts (rows after the initial one) at which a restart fired."""
        return [i for i, r in enumerate(self.rows) if i > 0 and r.restarted]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in astuple(r)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, name=""):
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected CSV header {header}")
            rows = [LogRow(*(int(v) if t == "int" else float(v) for v, t in zip(rec, _TYPES))) for rec in rd]
        return cls(rows, name=name)
