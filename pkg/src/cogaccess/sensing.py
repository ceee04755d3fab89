"""Energy-detector operating points indexed by accumulated sensing quanta.

``p_md`` is the probability of *missing* an active primary user, so the
probability of correctly declaring it busy is ``1 - p_md``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Detector operating points after k = 1..10 quanta; false alarm equals miss.
TABLE_I = (0.2, 0.19, 0.17, 0.15, 0.13, 0.12, 0.08, 0.05, 0.01, 0.001)


@dataclass(frozen=True)
class Violation:
    k: int
    kind: str  # "range", "monotonicity" or "index"
    message: str

    def __str__(self):
        return f"k={self.k}: {self.kind}: {self.message}"


class ProfileError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class SensingProfile:
    """ROC table; row ``k - 1`` holds the operating point after ``k`` quanta."""

    p_fa: tuple[float, ...]
    p_md: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p_fa", tuple(float(v) for v in self.p_fa))
        object.__setattr__(self, "p_md", tuple(float(v) for v in self.p_md))
        if len(self.p_fa) != len(self.p_md) or not self.p_fa:
            raise ValueError("p_fa and p_md must be non-empty and of equal length")

    @classmethod
    def from_rows(cls, rows) -> "SensingProfile":
        """Build from ``(k, p_fa, p_md)`` rows; ``k`` must run 1..M in order."""
        rows = list(rows)
        bad = [Violation(i + 1, "index", f"expected k={i + 1}, got {r[0]}")
               for i, r in enumerate(rows) if int(r[0]) != i + 1]
        if bad:
            raise ProfileError(bad)
        return cls(tuple(r[1] for r in rows), tuple(r[2] for r in rows))

    @property
    def m(self) -> int:
        return len(self.p_fa)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(k + 1, fa, md) for k, (fa, md) in enumerate(zip(self.p_fa, self.p_md))]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.p_fa), np.array(self.p_md)


def roc_at(profile: SensingProfile, k: int) -> tuple[float, float]:
    if not 1 <= k <= profile.m:
        raise IndexError(f"quantum index {k} outside 1..{profile.m}")
    return profile.p_fa[k - 1], profile.p_md[k - 1]


def default_profile(m: int = 10) -> SensingProfile:
    if m != len(TABLE_I):
        raise ValueError(f"built-in ROC table only covers M={len(TABLE_I)}; supply a custom profile for M={m}")
    return SensingProfile(TABLE_I, TABLE_I)


def validate(profile: SensingProfile) -> list[Violation]:
    """Return every invariant violation; an empty list means the profile is usable."""
    found = []
    for name, values in (("p_fa", profile.p_fa), ("p_md", profile.p_md)):
        for k, v in enumerate(values, start=1):
            if not 0.0 <= v <= 1.0:
                found.append(Violation(k, "range", f"{name}={v} outside [0, 1]"))
        for k in range(2, len(values) + 1):
            if values[k - 1] > values[k - 2]:
                found.append(Violation(
                    k, "monotonicity", f"{name} increases from {values[k - 2]} to {values[k - 1]}"))
    return found
