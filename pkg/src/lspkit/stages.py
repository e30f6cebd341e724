"""Stage-set providers: sequences j -> (set model, radius) used by the
covering selections and the nested construction.

A provider exposes ``model(j)``, ``upsilon(j)``, and ``j_max``.  The bundled
providers are deterministic: a single low-discrepancy point per stage, or
dyadic grid clouds (the point count doubles at powers of two) with a
piecewise radius schedule whose plateaus put the stage radii at the scales a
construction needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .sets import PointSet


def van_der_corput(indices):
    """Base-2 radical inverse of the given positive integers (vectorized)."""
    idx = np.asarray(indices, dtype=np.uint64)
    v = idx.copy()
    v = ((v & np.uint64(0x5555555555555555)) << np.uint64(1)) | (
        (v & np.uint64(0xAAAAAAAAAAAAAAAA)) >> np.uint64(1)
    )
    v = ((v & np.uint64(0x3333333333333333)) << np.uint64(2)) | (
        (v & np.uint64(0xCCCCCCCCCCCCCCCC)) >> np.uint64(2)
    )
    v = ((v & np.uint64(0x0F0F0F0F0F0F0F0F)) << np.uint64(4)) | (
        (v & np.uint64(0xF0F0F0F0F0F0F0F0)) >> np.uint64(4)
    )
    v = ((v & np.uint64(0x00FF00FF00FF00FF)) << np.uint64(8)) | (
        (v & np.uint64(0xFF00FF00FF00FF00)) >> np.uint64(8)
    )
    v = ((v & np.uint64(0x0000FFFF0000FFFF)) << np.uint64(16)) | (
        (v & np.uint64(0xFFFF0000FFFF0000)) >> np.uint64(16)
    )
    v = (v << np.uint64(32)) | (v >> np.uint64(32))
    return v.astype(np.float64) * 2.0**-64


@dataclass
class VdcPointStages:
    """One van der Corput point per stage, radii from a callable."""

    radius_fn: callable
    lo: float = 0.0
    hi: float = 1.0
    j_max: int = 10**6

    def upsilon(self, j):
        return float(self.radius_fn(j))

    def model(self, j):
        x = self.lo + (self.hi - self.lo) * float(van_der_corput([j])[0])
        return PointSet(np.array([[x]]))

    def __call__(self, j):
        return self.model(j), self.upsilon(j)


@dataclass
class GridCloudStages:
    """Dyadic grid clouds over [lo, hi] with a plateau radius schedule.

    ``model(j)`` is the regular grid of ``2**floor(log2 j)`` cell midpoints;
    ``upsilon(j)`` follows ``a_k * (j_k / j)**gamma`` on the plateau starting
    at ``j_k``, so radii decay slowly within a plateau and drop at the
    configured breakpoints.
    """

    lo: float
    hi: float
    plateaus: tuple  # ((j_start, upsilon_start), ...) with j_start ascending
    gamma: float = 0.04
    j_max: int = 2**24
    _clouds: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.plateaus = tuple((int(j), float(u)) for j, u in self.plateaus)
        if not self.plateaus or any(
            self.plateaus[k][0] >= self.plateaus[k + 1][0] for k in range(len(self.plateaus) - 1)
        ):
            raise ArgumentError("plateau break indices must be ascending")
        # the schedule must be globally non-increasing across breakpoints
        for k in range(len(self.plateaus) - 1):
            jb, ub = self.plateaus[k + 1]
            if ub > self._plateau_value(k, jb):
                raise ArgumentError("plateau values must not increase at a breakpoint")

    def _plateau_value(self, k, j):
        j0, u0 = self.plateaus[k]
        return u0 * (j0 / j) ** self.gamma

    @property
    def j_min(self):
        return self.plateaus[0][0]

    def upsilon(self, j):
        if j < self.plateaus[0][0]:
            raise ArgumentError(f"stage index {j} below schedule start {self.plateaus[0][0]}")
        k = 0
        for t, (j0, _) in enumerate(self.plateaus):
            if j >= j0:
                k = t
        return self._plateau_value(k, j)

    def cloud_size(self, j):
        return 1 << int(math.floor(math.log2(max(j, 1))))

    def sorted_points(self, j):
        size = self.cloud_size(j)
        if size not in self._clouds:
            grid = self.lo + (self.hi - self.lo) * (np.arange(size) + 0.5) / size
            self._clouds[size] = grid
        return self._clouds[size]

    def model(self, j):
        return PointSet(self.sorted_points(j)[:, None])

    def __call__(self, j):
        return self.model(j), self.upsilon(j)
