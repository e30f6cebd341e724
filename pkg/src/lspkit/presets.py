"""Bundled parameter sets for the nested construction and simulators.

Two construction presets are provided.  Both use the square-root/identity
gauge pair on a 1-D domain with dyadic grid-cloud stages:

* ``audit_construction``: two sublevels at the root (so the inter-sublevel
  halving property is exercised), sized for fast full audits.
* ``holder_construction``: one or two sublevels depending on the strength
  parameter eta; per-sublevel mass targets scale with eta so the measure
  bound's implied constant stays eta-independent.

The plateau radius schedules put stage radii exactly at the scales the
sublevel ladder needs (each sublevel's selection radius must fit under a
third of the smallest previous target radius).
"""

from __future__ import annotations

import numpy as np

from .cantor import ConstructionParams
from .covering import Ball
from .dimfun import Gauge, GaugePair
from .stages import GridCloudStages

SQRT_PAIR = GaugePair(Gauge.power(0.5, "sqrt"), Gauge.power(1.0, "length"), 0.0)

# plateau starts are chosen so the stage clouds are already denser than the
# selection spacing when each scale becomes admissible: selections then pack
# tightly and the measure bound is probed by genuinely adjacent balls
_PLATEAUS = ((512, 0.02), (4096, 2.2e-4), (2**21, 2.7e-9))


def audit_construction(eta=2.0) -> ConstructionParams:
    stages = GridCloudStages(lo=-20.0, hi=20.0, plateaus=_PLATEAUS, gamma=0.04, j_max=2**24)
    return ConstructionParams(
        domain=Ball(np.array([0.0]), 20.0),
        gauges=SQRT_PAIR,
        eta=eta,
        stages=stages,
        depth=2,
        g_floor=64,
        c5=1.2,
        d2=2.0,
    )


def holder_construction(eta) -> ConstructionParams:
    stages = GridCloudStages(lo=-85.0, hi=85.0, plateaus=_PLATEAUS, gamma=0.04, j_max=2**24)
    return ConstructionParams(
        domain=Ball(np.array([0.0]), 85.0),
        gauges=SQRT_PAIR,
        eta=eta,
        stages=stages,
        depth=2,
        g_floor=64,
        c5=9.0 / 170.0 * 20.0,
        d2=2.0,
    )


def oversized_construction() -> ConstructionParams:
    """A small-domain parameterization whose P3 floor exceeds the packing
    capacity of the domain; building it fails loudly by design."""
    stages = GridCloudStages(lo=0.0, hi=1.0, plateaus=((8, 5e-4), (4096, 1e-8)), j_max=2**22)
    return ConstructionParams(
        domain=Ball(np.array([0.5]), 0.5),
        gauges=SQRT_PAIR,
        eta=2.0,
        stages=stages,
        depth=2,
        g_floor=8,
        c5=5.0,
        d2=2.0,
    )
