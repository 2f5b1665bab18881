from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation


class DomainTag(str, enum.Enum):
    REALS = "reals"
    UNIT_BOX = "unit_box"
    NONNEGATIVE = "nonnegative"

    def check(self, x, where: str = "") -> np.ndarray:
        """Hard check that every component of ``x`` lies in the domain."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainViolation(f"non-finite component{where}")
        if self is DomainTag.UNIT_BOX:
            bad = (x < 0.0) | (x > 1.0)
        elif self is DomainTag.NONNEGATIVE:
            bad = x < 0.0
        else:
            return x
        if np.any(bad):
            idx = int(np.flatnonzero(np.atleast_1d(bad).ravel())[0])
            raise DomainViolation(f"component {idx} = {np.atleast_1d(x).ravel()[idx]!r} outside {self.value}{where}")
        return x


@dataclass(frozen=True)
class DataPoint:
    values: np.ndarray
    domain: DomainTag = DomainTag.REALS

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "domain", DomainTag(self.domain))
        self.domain.check(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.shape[0]
