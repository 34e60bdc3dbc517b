"""Daily price/volume CSV ingestion.

Input rows are ``date,close,volume`` with ISO dates. Row ``i`` gives the
close and the traded volume of day ``i``; the return of day ``i`` is
``log(close_i / close_{i-1})`` and the day's volume is taken as the
end-of-interval observation ``tau_i``. So n + 1 rows give n returns and
n + 1 volumes, the first volume being the initial level ``tau_0``.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simulate import PathSample

DEFAULT_VOLUME_UNIT = 1e6


class DataError(ValueError):
    pass


@dataclass
class MarketDataset:
    dates: list[dt.date]
    close: np.ndarray
    volume: np.ndarray
    volume_unit: float = DEFAULT_VOLUME_UNIT

    @property
    def returns(self) -> np.ndarray:
        return np.diff(np.log(self.close))

    @property
    def tau(self) -> np.ndarray:
        return self.volume / self.volume_unit

    def to_sample(self, delta: float) -> PathSample:
        return PathSample(x=self.returns, tau=self.tau, delta=delta)


def load_csv(path, volume_unit: float = DEFAULT_VOLUME_UNIT) -> MarketDataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header != ["date", "close", "volume"]:
            raise DataError(f"{path}: expected header 'date,close,volume', got {','.join(header)!r}")
        dates, close, volume, bad_close = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line_no}: expected 3 fields, got {len(row)}")
            try:
                d = dt.date.fromisoformat(row[0].strip())
                c, v = float(row[1]), float(row[2])
            except ValueError as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from None
            if not np.isfinite(c) or c <= 0:
                bad_close.append(line_no)
            if not np.isfinite(v) or v < 0:
                raise DataError(f"{path}:{line_no}: volume must be a nonnegative number, got {row[2]}")
            dates.append(d)
            close.append(c)
            volume.append(v)
    if bad_close:
        raise DataError(f"{path}: non-positive close price on line(s) {', '.join(map(str, bad_close))}")
    if len(dates) < 2:
        raise DataError(f"{path}: need at least two rows")
    for i in range(1, len(dates)):
        if dates[i] <= dates[i - 1]:
            kind = "duplicate" if dates[i] == dates[i - 1] else "out-of-order"
            raise DataError(f"{path}:{i + 2}: {kind} date {dates[i].isoformat()}")
    return MarketDataset(dates, np.array(close), np.array(volume), volume_unit)
