"""Centralised numerical tolerances and size limits."""

import os
from dataclasses import dataclass, replace

DEFAULT_DIM_CAP = 1024


@dataclass(frozen=True)
class Tolerances:
    abs: float = 1e-10
    rel: float = 1e-9
    root_cluster: float = 1e-7

    def close(self, x, y):
        return abs(x - y) <= self.abs + self.rel * max(abs(x), abs(y))

    def with_overrides(self, abs=None, rel=None, root_cluster=None):
        changes = {k: v for k, v in
                   (("abs", abs), ("rel", rel), ("root_cluster", root_cluster))
                   if v is not None}
        return replace(self, **changes)


DEFAULT_TOL = Tolerances()


def dim_cap():
    """Largest allowed Hilbert-space dimension (env ``SGSOV_DIM_CAP``)."""
    raw = os.environ.get("SGSOV_DIM_CAP")
    return int(raw) if raw else DEFAULT_DIM_CAP
