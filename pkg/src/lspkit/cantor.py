"""Finite-depth nested ball construction with mass assignment and audits.

Builds, inside a domain ball, local levels of selection balls (radius = the
transformed stage radius) subdivided into target balls (radius = the stage
radius), sublevel by sublevel, under the separation/mass properties P0-P5;
assigns the telescoping probability mass; and checks the resulting measure
against the gauge of random balls.

Desk-scale notes baked into this module:

* The ambient gauge g must be the power law matching the ambient dimension
  (the Lebesgue volume of balls is then exactly ``2**n * g(r)``); the
  construction is implemented for 1-D domains with point-cloud stage
  providers, which is what the bundled configurations use.
* Sublevel radii collapse at least 18-fold per sublevel (separation times
  the one-third fit), so the per-sublevel ball count multiplies accordingly;
  feasible configurations keep the sublevel count at or below ~3.  The mass
  that deeper sublevels would carry in an untruncated construction is
  instead front-loaded through per-sublevel mass targets proportional to the
  strength parameter eta, preserving the eta-scaling of the measure
  denominator that the mass bound needs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .covering import Ball, build_kgb, greedy_net
from .dimfun import GaugePair, eval_gauge, mtp_radius, ratio_direction_at, verify_gauge_pair
from .errors import (
    ArgumentError,
    ConstructionError,
    CoverageShortfall,
    TruncationError,
    UnsupportedCombination,
)
from .measure import _merge_length, ball_volume

AUDIT_RTOL = 1e-9


@dataclass
class ConstructionParams:
    domain: Ball
    gauges: GaugePair
    eta: float
    stages: object  # provider with model(j), upsilon(j), sorted_points(j), j_max
    depth: int = 2
    g_floor: int = 1
    j_max: int | None = None
    c5: float = 1.0
    d2: float = 2.0
    pump_total: float | None = None
    holder_mass_factor: float = 2.5
    metric: str = "sup"
    max_nodes: int = 2_000_000
    max_sublevels: int = 64

    def __post_init__(self):
        if not (self.eta > 1):
            raise ArgumentError("eta must exceed 1")
        if self.j_max is None:
            self.j_max = getattr(self.stages, "j_max", 2**24)


@dataclass
class LocalLevel:
    parent_level: int
    parent_index: int
    l_b: int
    eps_b: float
    g_primes: list
    sub_targets: list
    sub_masses: list
    a_center: np.ndarray
    a_radius: np.ndarray
    a_j: np.ndarray
    a_sublevel: np.ndarray
    c_center: np.ndarray
    c_radius: np.ndarray
    c_j: np.ndarray
    c_sublevel: np.ndarray
    c_aidx: np.ndarray


@dataclass
class CantorTree:
    root: Ball
    metric: str
    constants: dict
    levels: list  # levels[k] = list of LocalLevel producing the (k+2)-level balls
    case: str = "a"

    def leaf_level(self):
        return self.levels[-1]

    def leaves(self):
        """Deepest-level ball arrays (centers, radii) across local levels."""
        locs = self.leaf_level()
        centers = np.concatenate([l.c_center for l in locs], axis=0)
        radii = np.concatenate([l.c_radius for l in locs])
        return centers, radii


@dataclass
class MassAssignment:
    mu: list  # per tree level: array aligned with the level's c-balls
    exact: list | None = None  # optional Fractions mirroring mu


@dataclass
class PropertyAudit:
    name: str
    passed: bool
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


@dataclass
class AuditReport:
    properties: dict

    @property
    def ok(self):
        return all(p.passed for p in self.properties.values())


@dataclass
class HolderReport:
    eta: float
    max_ratio: float
    worst_ball: Ball | None
    implied_hf_lower_bound: float
    radius_cap: float
    qualifying_trials: int
    single_ball_trials: int
    single_ball_max_ratio: float
    full_range_max_ratio: float
    trials: int


# ---------------------------------------------------------------------------
# constants and stage-index scanning


def _ambient_constants(params: ConstructionParams):
    g = params.gauges.g
    n = params.domain.ambient_dim
    if not (g.kind == "power" and math.isclose(g.s, n)):
        raise UnsupportedCombination(
            "the construction requires the ambient gauge g = r**n so ball "
            "volumes are exactly 2**n * g(r)"
        )
    c1 = c2 = 2.0**n
    lam = 2.0**n
    c7 = 5.0**n
    c6 = (1.0 / (2.0 * lam)) * (c1 / c2) ** 2 * (params.c5 / c7)
    hg_b0 = ball_volume(n, params.domain.radius, params.metric)
    return {
        "c1": c1,
        "c2": c2,
        "lambda": lam,
        "c5": params.c5,
        "c6": c6,
        "c7": c7,
        "d2": params.d2,
        "hg_b0": hg_b0,
        "eta": params.eta,
    }


def _classify_case(pair: GaugePair):
    probe = 1e-6
    direction = ratio_direction_at(pair, probe)
    if direction == "increasing":
        return "a"
    if direction == "decreasing":
        return "b"
    return "c"


def root_sublevel_count(consts, eta):
    return int(math.floor(consts["c2"] * eta / (consts["c6"] * consts["hg_b0"]))) + 1


def child_sublevel_count(consts, pair: GaugePair, radius):
    vf = eval_gauge(pair.f, radius)
    vg = eval_gauge(pair.g, radius)
    return int(math.floor(vf / (consts["c6"] * vg))) + 1


def epsilon_b(consts, pair: GaugePair, radius, l_b):
    if l_b <= 1:
        return math.inf
    gr = eval_gauge(pair.g, radius)
    fr = eval_gauge(pair.f, radius)
    denom = (consts["c2"] ** 2 * consts["lambda"] ** 2 * consts["d2"] / consts["c1"]) * (
        gr / fr
    ) * (l_b - 1)
    return consts["c1"] / (4.0 * consts["lambda"]) / denom


def _stage_ok(params, consts, j, b_radius, eps, d_min=None, min_f=None, min_h=None):
    pair = params.gauges
    u = params.stages.upsilon(j)
    fu = eval_gauge(pair.f, u)
    gu = eval_gauge(pair.g, u)
    hu = fu / gu**pair.kappa
    tilde = mtp_radius(pair, u)
    if not (6.0 * u < tilde):
        return False
    if not (3.0 * gu ** (1.0 - pair.kappa) < hu):  # G1
        return False
    if math.isfinite(eps):  # G2
        if not (gu / fu < eps * eval_gauge(pair.g, b_radius) / eval_gauge(pair.f, b_radius)):
            return False
    if not (math.floor(fu / (consts["c6"] * gu)) >= 1):  # G3
        return False
    if not (3.0 * tilde <= b_radius):
        return False
    if d_min is not None and not (3.0 * tilde < d_min):
        return False
    if min_f is not None and not (fu <= 0.5 * min_f and hu <= 0.5 * min_h):
        return False
    return True


def _scan_first_ok(params, consts, lo, b_radius, eps, **kw):
    """First stage index satisfying the entry conditions (they only become
    easier as the stage radii shrink)."""
    j = max(lo, getattr(params.stages, "j_min", 1), 1)
    j_max = params.j_max
    if _stage_ok(params, consts, j, b_radius, eps, **kw):
        return j
    hi = j
    while True:
        hi = min(hi * 2, j_max)
        if _stage_ok(params, consts, hi, b_radius, eps, **kw):
            break
        if hi >= j_max:
            raise TruncationError(
                f"no stage index in [{lo}, {j_max}] satisfies the entry conditions"
            )
    lo_s = max(j, hi // 2)
    while lo_s + 1 < hi:
        mid = (lo_s + hi) // 2
        if _stage_ok(params, consts, mid, b_radius, eps, **kw):
            hi = mid
        else:
            lo_s = mid
    return hi


# ---------------------------------------------------------------------------
# local-level assembly (1-D point-cloud stage providers)


def _require_supported(params):
    if params.domain.ambient_dim != 1:
        raise UnsupportedCombination("the builder is implemented for 1-D domains")
    if not hasattr(params.stages, "sorted_points"):
        raise UnsupportedCombination("the builder needs a point-cloud stage provider")


def _cloud_candidates(params, B: Ball, j, tilde):
    """Stage points x with B(x, 3*tilde) inside B (sorted)."""
    cloud = params.stages.sorted_points(j)
    lo = B.center[0] - B.radius + 3.0 * tilde
    hi = B.center[0] + B.radius - 3.0 * tilde
    if lo > hi:
        return np.empty((0, 1))
    i0, i1 = np.searchsorted(cloud, [lo, hi])
    return cloud[i0:i1][:, None]


def _caj_nets(params, a_centers, a_radii, j, upsilon):
    """Net points of the stage cloud inside half of each selection ball."""
    cloud = params.stages.sorted_points(j)
    lo = a_centers - 0.5 * a_radii
    hi = a_centers + 0.5 * a_radii
    i0 = np.searchsorted(cloud, lo)
    i1 = np.searchsorted(cloud, hi)
    counts = i1 - i0
    out = []
    for k in range(len(a_centers)):
        if counts[k] <= 1:
            pts = cloud[i0[k] : i1[k]]
            out.append(pts[:, None] if len(pts) else np.array([[a_centers[k]]]))
        else:
            pts = greedy_net(cloud[i0[k] : i1[k]][:, None], 6.0 * upsilon, metric=params.metric)
            out.append(pts)
    return out


def _build_local_level(params, consts, B: Ball, parent_level, parent_index, is_root, rng):
    pair = params.gauges
    n = B.ambient_dim
    vg_b = eval_gauge(pair.g, B.radius)
    vol_b = ball_volume(n, B.radius, params.metric)
    if is_root:
        l_b = root_sublevel_count(consts, params.eta)
    else:
        l_b = child_sublevel_count(consts, pair, B.radius)
    if l_b > params.max_sublevels:
        raise ConstructionError(
            f"P5 sublevel count {l_b} exceeds the budget {params.max_sublevels}; "
            "the radius ladder makes such levels infeasible at desk scale",
            node=(parent_level, parent_index),
        )
    eps = epsilon_b(consts, pair, B.radius, l_b)
    floor_mass = consts["c6"] * vg_b
    # packing capacity in gauge units: disjoint 3-dilates inside the region
    # bound sum g(radius) by vol(region)/6^n, discounted to greedy jamming
    cap_first = 0.75 * vol_b / 6.0**n
    cap_deep = 0.75 * ball_volume(n, B.radius / 2.0, params.metric) / 6.0**n
    if floor_mass * 1.02 > cap_first:
        raise ConstructionError(
            f"P3 per-sublevel mass {floor_mass:.3g} exceeds the packing capacity "
            f"{cap_first:.3g} of the parent ball; no disjoint selection can satisfy it",
            node=(parent_level, parent_index),
        )
    pump = params.pump_total if params.pump_total is not None else params.holder_mass_factor * params.eta

    a_center, a_radius, a_j, a_sub = [], [], [], []
    c_center, c_radius, c_j, c_sub, c_aidx = [], [], [], [], []
    g_primes, sub_targets, sub_masses = [], [], []
    total_mass = 0.0
    d_min = math.inf

    for i in range(1, l_b + 1):
        floors_ahead = (l_b - i) * floor_mass * 1.02
        want = max(floor_mass * 1.02, pump - total_mass - floors_ahead)
        cap = cap_first if i == 1 else cap_deep
        if floor_mass * 1.02 > cap:
            raise ConstructionError(
                f"sublevel {i}: P3 floor {floor_mass:.3g} exceeds capacity {cap:.3g}",
                node=(parent_level, parent_index),
                sublevel=i,
            )
        target = min(want, cap)
        sub_targets.append(target)
        sub_start = len(a_center)

        if i == 1:
            try:
                g_start = _scan_first_ok(params, consts, params.g_floor, B.radius, eps)
            except TruncationError as exc:
                raise TruncationError(
                    str(exc), node=(parent_level, parent_index), sublevel=1
                ) from exc
            g_primes.append(g_start)
            seq = lambda j: (params.stages.model(j), mtp_radius(pair, params.stages.upsilon(j)))
            cand = lambda model, j: _cloud_candidates(
                params, B, j, mtp_radius(pair, params.stages.upsilon(j))
            )
            frac = min(1.0, (2.0**n * target) / (params.c5 * vol_b))
            try:
                kgb = build_kgb(
                    B,
                    g_start,
                    seq,
                    params.j_max,
                    frac,
                    rng=rng,
                    c5=params.c5,
                    metric=params.metric,
                    candidate_fn=cand,
                )
            except CoverageShortfall as exc:
                raise ConstructionError(
                    f"sublevel 1 selection covered only fraction "
                    f"{exc.achieved_fraction:.3g} of its target",
                    node=(parent_level, parent_index),
                    sublevel=1,
                ) from exc
            mass_i = 0.0
            for ib in kgb.selected:
                a_center.append(ib.ball.center[0])
                a_radius.append(ib.ball.radius)
                a_j.append(ib.j)
                a_sub.append(i)
                mass_i += eval_gauge(pair.g, ib.ball.radius)
        else:
            min_f = eval_gauge(pair.f, d_min)
            min_h = min_f / eval_gauge(pair.g, d_min) ** pair.kappa
            try:
                g_prime = _scan_first_ok(
                    params, consts, g_primes[-1], B.radius, eps,
                    d_min=d_min, min_f=min_f, min_h=min_h,
                )
            except TruncationError as exc:
                raise TruncationError(
                    str(exc), node=(parent_level, parent_index), sublevel=i
                ) from exc
            g_primes.append(g_prime)
            mass_i = _deep_sublevel(
                params,
                consts,
                B,
                i,
                g_prime,
                d_min,
                target,
                rng,
                a_center,
                a_radius,
                a_j,
                a_sub,
                c_center,
                c_radius,
                parent_level,
                parent_index,
            )
        if mass_i < floor_mass:
            raise ConstructionError(
                f"sublevel {i} mass {mass_i:.3g} fell below the P3 floor {floor_mass:.3g}",
                node=(parent_level, parent_index),
                sublevel=i,
            )
        total_mass += mass_i
        sub_masses.append(mass_i)

        # expand each new selection ball into its target-radius balls
        by_j = {}
        for k in range(sub_start, len(a_center)):
            by_j.setdefault(a_j[k], []).append(k)
        for j, idxs in by_j.items():
            u = params.stages.upsilon(j)
            nets = _caj_nets(
                params,
                np.array([a_center[k] for k in idxs]),
                np.array([a_radius[k] for k in idxs]),
                j,
                u,
            )
            for k, pts in zip(idxs, nets):
                for p in np.asarray(pts).reshape(-1):
                    c_center.append(p)
                    c_radius.append(u)
                    c_j.append(j)
                    c_sub.append(i)
                    c_aidx.append(k)
                    d_min = min(d_min, u)
        if len(c_center) > params.max_nodes:
            raise ConstructionError(
                f"node budget {params.max_nodes} exceeded at sublevel {i}",
                node=(parent_level, parent_index),
                sublevel=i,
            )

    return LocalLevel(
        parent_level=parent_level,
        parent_index=parent_index,
        l_b=l_b,
        eps_b=eps,
        g_primes=g_primes,
        sub_targets=sub_targets,
        sub_masses=sub_masses,
        a_center=np.array(a_center)[:, None],
        a_radius=np.array(a_radius),
        a_j=np.array(a_j, dtype=np.int64),
        a_sublevel=np.array(a_sub, dtype=np.int64),
        c_center=np.array(c_center)[:, None],
        c_radius=np.array(c_radius),
        c_j=np.array(c_j, dtype=np.int64),
        c_sublevel=np.array(c_sub, dtype=np.int64),
        c_aidx=np.array(c_aidx, dtype=np.int64),
    )


def _deep_sublevel(
    params,
    consts,
    B,
    i,
    g_prime,
    d_min,
    target,
    rng,
    a_center,
    a_radius,
    a_j,
    a_sub,
    leaf_center,
    leaf_radius,
    parent_level,
    parent_index,
):
    """Cover the leftover region with d_min-radius balls and pick one
    transformed-radius ball on the stage cloud inside each, until the
    sublevel mass target is met."""
    pair = params.gauges
    half_lo = B.center[0] - 0.5 * B.radius
    half_hi = B.center[0] + 0.5 * B.radius
    # leftover region: half of B minus the 4-dilates of every target ball
    # placed so far; cover centers outside 4L with radius <= r(L) cannot
    # touch 3L, which preserves P1 across sublevels
    lc = np.asarray(leaf_center, dtype=float)
    lr = np.asarray(leaf_radius, dtype=float)
    blocked = np.stack([lc - 4.0 * lr, lc + 4.0 * lr], axis=1)
    order = np.argsort(blocked[:, 0])
    blocked = blocked[order]
    b_lo, b_hi = blocked[:, 0], np.maximum.accumulate(blocked[:, 1])

    step = d_min / 2.0
    pool = np.arange(half_lo + d_min, half_hi - d_min + step / 4, step)
    if len(pool):
        idx = np.searchsorted(b_lo, pool, side="right") - 1
        inside = (idx >= 0) & (pool <= np.where(idx >= 0, b_hi[np.maximum(idx, 0)], -np.inf))
        pool = pool[~inside]
    # greedy same-radius disjoint cover of the leftover (sorted order: sweep)
    keep = np.zeros(len(pool), dtype=bool)
    last = -math.inf
    for t, x in enumerate(pool):
        if x - last >= 2.0 * d_min * (1 - 1e-12):
            keep[t] = True
            last = x
    covers = pool[keep]
    if len(covers) == 0:
        raise ConstructionError(
            f"sublevel {i}: leftover region produced no cover balls",
            node=(parent_level, parent_index),
            sublevel=i,
        )

    mass = 0.0
    j = g_prime
    unhosted = covers
    while mass < target and j <= params.j_max and len(unhosted):
        u = params.stages.upsilon(j)
        tilde = mtp_radius(pair, u)
        room = d_min - 3.0 * tilde
        if room > 0:
            cloud = params.stages.sorted_points(j)
            pos = np.searchsorted(cloud, unhosted)
            left = cloud[np.clip(pos - 1, 0, len(cloud) - 1)]
            right = cloud[np.clip(pos, 0, len(cloud) - 1)]
            host = np.where(np.abs(unhosted - left) <= np.abs(unhosted - right), left, right)
            ok = np.abs(host - unhosted) <= room
            hosts = host[ok]
            need = int(math.ceil((target - mass) / eval_gauge(pair.g, tilde)))
            take = hosts[:need]
            for x in take:
                a_center.append(float(x))
                a_radius.append(tilde)
                a_j.append(j)
                a_sub.append(i)
            mass += len(take) * eval_gauge(pair.g, tilde)
            if mass >= target:
                return mass
            unhosted = unhosted[~ok]
        # advance to the next dyadic block; radii shrink, clouds densify
        j = max(1 << (int(math.floor(math.log2(max(j, 1)))) + 1), j + 1)
    if mass < target:
        raise TruncationError(
            f"sublevel {i}: mass {mass:.3g} below target {target:.3g} "
            f"({len(unhosted)} cover balls unhosted by stage {j})",
            node=(parent_level, parent_index),
            sublevel=i,
        )
    return mass


def build_cantor(params: ConstructionParams, rng=None) -> CantorTree:
    """Build the nested tree to the requested depth, enforcing P0-P5."""
    if rng is None:
        rng = np.random.default_rng(0)
    _require_supported(params)
    pair = params.gauges
    report = verify_gauge_pair(pair)
    if not (report.monotone_ok and report.f_over_g_kappa_ok):
        raise ArgumentError(f"gauge pair failed verification: {report.violations}")
    case = _classify_case(pair)
    if case != "a":
        raise ConstructionError(
            f"construction applies to the ratio-growing case only; this pair is case ({case})"
            + (" where the two measures are proportional" if case == "c" else "")
        )
    consts = _ambient_constants(params)
    levels = []
    if params.depth >= 2:
        root_local = _build_local_level(params, consts, params.domain, 1, 0, True, rng)
        levels.append([root_local])
    for depth in range(3, params.depth + 1):
        prev = levels[-1]
        locs = []
        offset = 0
        for loc in prev:
            for idx in range(len(loc.c_center)):
                B = Ball(loc.c_center[idx], float(loc.c_radius[idx]))
                locs.append(_build_local_level(params, consts, B, depth - 1, offset + idx, False, rng))
            offset += len(loc.c_center)
        levels.append(locs)
    return CantorTree(
        root=params.domain,
        metric=params.metric,
        constants=consts,
        levels=levels,
        case=case,
    )


def tree_fingerprint(tree: CantorTree) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(tree.constants, sort_keys=True).encode())
    for locs in tree.levels:
        for loc in locs:
            for arr in (loc.a_center, loc.a_radius, loc.a_j, loc.c_center, loc.c_radius, loc.c_j):
                h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# mass assignment


def assign_mass(tree: CantorTree, params: ConstructionParams, exact=False) -> MassAssignment:
    """Telescoping mass: the root carries 1; each target ball splits its
    selection ball's share, with selection shares proportional to
    h(stage radius)**(1/(1-kappa)) within the local level."""
    pair = params.gauges
    kappa = pair.kappa
    mu_levels = []
    exact_levels = [] if exact else None
    parent_mass = {(1, 0): 1.0}
    parent_exact = {(1, 0): Fraction(1)} if exact else None
    for lev_idx, locs in enumerate(tree.levels):
        level_no = lev_idx + 2
        mus = []
        exacts = []
        offset = 0
        for loc in locs:
            # weight h(upsilon)^(1/(1-kappa)) evaluated from the stage radii
            stage_u = np.array([params.stages.upsilon(int(j)) for j in loc.a_j])
            fu = eval_gauge(pair.f, stage_u)
            gu = eval_gauge(pair.g, stage_u)
            w = (fu / gu**kappa) ** (1.0 / (1.0 - kappa))
            denom = float(np.sum(w))
            counts = np.bincount(loc.c_aidx, minlength=len(loc.a_radius))
            pm = parent_mass[(loc.parent_level, loc.parent_index)]
            mu = pm * w[loc.c_aidx] / (denom * counts[loc.c_aidx])
            mus.append(mu)
            if exact:
                wf = [Fraction(float(x)) for x in w]
                df = sum(wf, Fraction(0))
                pf = parent_exact[(loc.parent_level, loc.parent_index)]
                exacts.append(
                    [pf * wf[a] / (df * int(counts[a])) for a in loc.c_aidx]
                )
            offset += len(loc.c_center)
        mu_arr = np.concatenate(mus) if mus else np.empty(0)
        mu_levels.append(mu_arr)
        if exact:
            flat = [x for chunk in exacts for x in chunk]
            exact_levels.append(flat)
        # register as parents for the next level
        pos = 0
        for loc in locs:
            for idx in range(len(loc.c_center)):
                parent_mass[(level_no, pos + idx)] = float(mu_arr[pos + idx])
                if exact:
                    parent_exact[(level_no, pos + idx)] = exact_levels[-1][pos + idx]
            pos += len(loc.c_center)
    return MassAssignment(mu=mu_levels, exact=exact_levels)


def ball_mass_upper(tree: CantorTree, mass: MassAssignment, D: Ball, metric=None) -> float:
    """Upper bound for the limit measure of D: total mass of deepest-level
    balls meeting D."""
    metric = metric or tree.metric
    centers, radii = tree.leaves()
    d = centers - D.center
    dist = np.linalg.norm(d, axis=1) if metric == "euclidean" else np.max(np.abs(d), axis=1)
    hit = dist < radii + D.radius
    return float(np.sum(mass.mu[-1][hit]))


# ---------------------------------------------------------------------------
# audits


def _neighborhood_in_window(cloud, u, centers, half_widths, gap):
    """Lengths of (cloud-point u-neighborhood) intersected with the windows
    [c - w, c + w], vectorized; exact when the point intervals are disjoint
    (2u below the cloud gap), else falls back to interval merging."""
    lo = centers - half_widths
    hi = centers + half_widths
    i0 = np.searchsorted(cloud, lo - u)
    i1 = np.searchsorted(cloud, hi + u)
    out = np.empty(len(centers))
    if 2.0 * u < gap:
        counts = i1 - i0
        flat_idx = np.concatenate(
            [np.arange(a, b) for a, b in zip(i0, i1)]
        ) if np.any(counts) else np.empty(0, dtype=int)
        owner = np.repeat(np.arange(len(centers)), counts)
        if len(flat_idx):
            p = cloud[flat_idx]
            # work relative to each point so the tiny interval length does
            # not cancel against the ambient coordinate magnitude
            seg = np.clip(
                np.minimum(u, hi[owner] - p) - np.maximum(-u, lo[owner] - p), 0.0, None
            )
            out = np.bincount(owner, weights=seg, minlength=len(centers))
        else:
            out[:] = 0.0
        return out
    for t in range(len(centers)):
        spans = np.stack([cloud[i0[t] : i1[t]] - u, cloud[i0[t] : i1[t]] + u], axis=1)
        out[t] = _merge_length(spans, lo=lo[t], hi=hi[t])
    return out


def _points_on_stage(params, j, centers, tol):
    cloud = params.stages.sorted_points(int(j))
    pos = np.searchsorted(cloud, centers)
    best = np.full(len(centers), np.inf)
    for off in (-1, 0):
        k = np.clip(pos + off, 0, len(cloud) - 1)
        best = np.minimum(best, np.abs(cloud[k] - centers))
    return best <= tol


def verify_levels(tree: CantorTree, params: ConstructionParams) -> AuditReport:
    """Audit P0-P5 with independent geometric predicates.

    P0/P1/P2(geometry)/P4/P5 are exact checks; P3 and the P2 measure clause
    are numeric with the module tolerance.
    """
    pair = params.gauges
    consts = tree.constants
    props = {}
    props["P0"] = PropertyAudit("P0", bool(tree.root.radius > 0), details={"root": True})

    p1_viol, p2_viol, p3_viol, p4_viol, p5_viol = [], [], [], [], []
    p2_details = {"d1_hat": math.inf, "d2_hat": 0.0, "iv_max_ratio": 0.0}

    for lev_idx, locs in enumerate(tree.levels):
        for li, loc in enumerate(locs):
            parent = (
                tree.root
                if loc.parent_level == 1
                else _ball_of(tree, loc.parent_level, loc.parent_index)
            )
            tag = f"L{lev_idx + 2}/{li}"
            c = loc.c_center[:, 0]
            r = loc.c_radius
            # P1: 3-dilates pairwise disjoint (1-D neighbor sweep) and inside parent
            order = np.argsort(c)
            cc, rr = c[order], r[order]
            gaps = cc[1:] - cc[:-1]
            bad = gaps < 3.0 * (rr[1:] + rr[:-1]) * (1 - AUDIT_RTOL)
            for k in np.nonzero(bad)[0]:
                p1_viol.append((tag, "overlap", float(cc[k])))
            outside = np.abs(c - parent.center[0]) + 3.0 * r > parent.radius * (1 + AUDIT_RTOL)
            for k in np.nonzero(outside)[0]:
                p1_viol.append((tag, "outside-parent", float(c[k])))

            # P2 per selection ball
            ua = np.array([params.stages.upsilon(int(j)) for j in loc.a_j])
            counts = np.bincount(loc.c_aidx, minlength=len(loc.a_radius))
            if np.any(counts == 0):
                for k in np.nonzero(counts == 0)[0]:
                    p2_viol.append((tag, "empty-selection", int(k)))
            # (i) radii match the stage radius; centers on the stage set
            if not np.allclose(r, ua[loc.c_aidx], rtol=1e-12, atol=0):
                p2_viol.append((tag, "radius-mismatch", None))
            for j in np.unique(loc.c_j):
                sel = loc.c_j == j
                tol = max(1e-12, 1e-9 * params.stages.upsilon(int(j)))
                on = _points_on_stage(params, j, loc.c_center[sel, 0], tol)
                if not np.all(on):
                    p2_viol.append((tag, "center-off-stage", int(j)))
            # (ii) 3L inside A; (iii) handled by P1 within A via construction,
            # checked here per selection ball
            ac = loc.a_center[loc.c_aidx, 0]
            ar = loc.a_radius[loc.c_aidx]
            if np.any(np.abs(c - ac) + 3.0 * r > ar * (1 + AUDIT_RTOL)):
                p2_viol.append((tag, "3L-outside-A", None))
            # 3A disjoint within each sublevel + inside parent
            for i in np.unique(loc.a_sublevel):
                sel = loc.a_sublevel == i
                ac_i = loc.a_center[sel, 0]
                ar_i = loc.a_radius[sel]
                o = np.argsort(ac_i)
                aa, bb = ac_i[o], ar_i[o]
                if np.any(aa[1:] - aa[:-1] < 3.0 * (bb[1:] + bb[:-1]) * (1 - AUDIT_RTOL)):
                    p2_viol.append((tag, "3A-overlap", int(i)))
                if np.any(
                    np.abs(ac_i - parent.center[0]) + 3.0 * ar_i
                    > parent.radius * (1 + AUDIT_RTOL)
                ):
                    p2_viol.append((tag, "3A-outside-parent", int(i)))
            # (v) cardinality envelope relative to (f/g)^(kappa/(1-kappa))
            fu = eval_gauge(pair.f, ua)
            gu = eval_gauge(pair.g, ua)
            envelope = (fu / gu) ** (pair.kappa / (1.0 - pair.kappa))
            with np.errstate(divide="ignore"):
                ratios = counts / envelope
            p2_details["d1_hat"] = min(p2_details["d1_hat"], float(np.min(ratios)))
            p2_details["d2_hat"] = max(p2_details["d2_hat"], float(np.max(ratios)))
            # (iv) measure sandwich, exact 1-D intervals against the stage cloud
            iv_bound = 2.0 * 7.0 * (consts["c2"] / consts["c1"])
            vol_l_per_a = np.bincount(
                loc.c_aidx, weights=2.0 * r, minlength=len(loc.a_radius)
            )
            for j in np.unique(loc.a_j):
                sel = np.nonzero(loc.a_j == j)[0]
                u = params.stages.upsilon(int(j))
                cloud = params.stages.sorted_points(int(j))
                gap = np.min(np.diff(cloud)) if len(cloud) > 1 else math.inf
                ca = loc.a_center[sel, 0]
                ra = loc.a_radius[sel]
                vol_a = _neighborhood_in_window(cloud, u, ca, ra, gap)
                vol_half = _neighborhood_in_window(cloud, u, ca, ra / 2.0, gap)
                vol_l = vol_l_per_a[sel]
                for t in np.nonzero(vol_l > vol_a * (1 + 1e-9))[0]:
                    p2_viol.append((tag, "iv-upper", int(sel[t])))
                for t in np.nonzero(vol_half > iv_bound * vol_l)[0]:
                    p2_viol.append((tag, "iv-lower", int(sel[t])))
                pos = vol_l > 0
                if np.any(pos):
                    p2_details["iv_max_ratio"] = max(
                        p2_details["iv_max_ratio"], float(np.max(vol_half[pos] / vol_l[pos]))
                    )

            # P3 per sublevel
            vg_b = eval_gauge(pair.g, parent.radius)
            for i in np.unique(loc.a_sublevel):
                sel = loc.a_sublevel == i
                mass = float(np.sum(eval_gauge(pair.g, loc.a_radius[sel])))
                if mass < consts["c6"] * vg_b * (1 - AUDIT_RTOL):
                    p3_viol.append((tag, int(i), mass, consts["c6"] * vg_b))

            # P4 between consecutive sublevels
            subs = sorted(np.unique(loc.c_sublevel))
            for a, b in zip(subs[:-1], subs[1:]):
                fa = eval_gauge(pair.f, loc.c_radius[loc.c_sublevel == a])
                fb = eval_gauge(pair.f, loc.c_radius[loc.c_sublevel == b])
                ga = eval_gauge(pair.g, loc.c_radius[loc.c_sublevel == a])
                gb = eval_gauge(pair.g, loc.c_radius[loc.c_sublevel == b])
                ha = fa / ga**pair.kappa
                hb = fb / gb**pair.kappa
                if np.max(fb) > 0.5 * np.min(fa) * (1 + AUDIT_RTOL):
                    p4_viol.append((tag, int(a), int(b), "f"))
                if np.max(hb) > 0.5 * np.min(ha) * (1 + AUDIT_RTOL):
                    p4_viol.append((tag, int(a), int(b), "h"))

            # P5: recorded sublevel count equals formula; leaf formula >= 2
            if loc.parent_level == 1:
                formula = root_sublevel_count(consts, params.eta)
            else:
                formula = child_sublevel_count(consts, pair, parent.radius)
            built = len(np.unique(loc.a_sublevel))
            if loc.l_b != formula or built != formula:
                p5_viol.append((tag, loc.l_b, formula, built))
            leaf_counts = np.array(
                [child_sublevel_count(consts, pair, float(rr)) for rr in np.unique(loc.c_radius)]
            )
            if np.any(leaf_counts < 2):
                p5_viol.append((tag, "leaf-l_b<2", int(np.min(leaf_counts))))

    props["P1"] = PropertyAudit("P1", not p1_viol, p1_viol)
    props["P2"] = PropertyAudit("P2", not p2_viol, p2_viol, p2_details)
    props["P3"] = PropertyAudit("P3", not p3_viol, p3_viol)
    props["P4"] = PropertyAudit("P4", not p4_viol, p4_viol)
    props["P5"] = PropertyAudit("P5", not p5_viol, p5_viol)
    return AuditReport(properties=props)


def _ball_of(tree: CantorTree, level, index):
    locs = tree.levels[level - 2]
    pos = 0
    for loc in locs:
        if index < pos + len(loc.c_center):
            k = index - pos
            return Ball(loc.c_center[k], float(loc.c_radius[k]))
        pos += len(loc.c_center)
    raise ArgumentError(f"no ball {index} at level {level}")


# ---------------------------------------------------------------------------
# mass bound check


def holder_check(
    tree: CantorTree,
    mass: MassAssignment,
    params: ConstructionParams,
    trials=10_000,
    rng=None,
    radius_cap=None,
) -> HolderReport:
    """Max over random balls D of mass(D) * eta / f(r(D)).

    The reported maximum is restricted to trials resolving the construction:
    balls meeting at least two deepest-level balls with radius at most
    ``radius_cap`` (default: four times the coarsest selection radius).
    Above that radius the truncated tree saturates (an untruncated
    construction would keep subdividing); those trials and single-ball
    trials are recorded separately.
    """
    if trials < 1000:
        raise ArgumentError("trials must be >= 1000")
    if rng is None:
        rng = np.random.default_rng(0)
    pair = params.gauges
    eta = params.eta
    centers, radii = tree.leaves()
    mu = mass.mu[-1]
    order = np.argsort(centers[:, 0])
    c = centers[order, 0]
    r = radii[order]
    m = mu[order]
    rmax_leaf = float(np.max(r))
    if radius_cap is None:
        # the coarsest resolved structure: selection balls pack at six times
        # their radius, so pairs of them are first jointly visible here
        radius_cap = 8.0 * float(np.max(np.concatenate([l.a_radius for l in tree.levels[0]])))
    r_lo = float(np.min(r))
    r_hi = tree.root.radius
    log_lo, log_hi = math.log(r_lo), math.log(r_hi)
    log_cap = math.log(min(radius_cap, r_hi))

    max_ratio = 0.0
    worst = None
    full_max = 0.0
    single_max = 0.0
    n_single = 0
    n_qual = 0
    for t in range(trials):
        # half the radii probe the resolved band below the cap
        if t % 2 == 0:
            rad = math.exp(rng.uniform(log_lo, log_hi))
        else:
            rad = math.exp(rng.uniform(log_lo, log_cap))
        if t % 4 < 2:
            x = rng.uniform(tree.root.center[0] - tree.root.radius, tree.root.center[0] + tree.root.radius)
        else:
            k = rng.integers(0, len(c))
            x = c[k] + rng.uniform(-2.0 * rad, 2.0 * rad)
        i0, i1 = np.searchsorted(c, [x - rad - rmax_leaf, x + rad + rmax_leaf])
        seg = slice(i0, i1)
        hit = np.abs(c[seg] - x) < r[seg] + rad
        k_hit = int(np.count_nonzero(hit))
        if k_hit == 0:
            continue
        ratio = eta * float(np.sum(m[seg][hit])) / eval_gauge(pair.f, rad)
        full_max = max(full_max, ratio)
        if k_hit == 1:
            n_single += 1
            single_max = max(single_max, ratio)
            continue
        if rad <= radius_cap:
            n_qual += 1
            if ratio > max_ratio:
                max_ratio = ratio
                worst = Ball(np.array([x]), rad)
    bound = eta / max_ratio if max_ratio > 0 else math.inf
    return HolderReport(
        eta=eta,
        max_ratio=max_ratio,
        worst_ball=worst,
        implied_hf_lower_bound=bound,
        radius_cap=radius_cap,
        qualifying_trials=n_qual,
        single_ball_trials=n_single,
        single_ball_max_ratio=single_max,
        full_range_max_ratio=full_max,
        trials=trials,
    )


def format_tree(tree: CantorTree, mass: MassAssignment | None = None, max_leaves=60) -> str:
    """Plain-text rendering of a small tree (root, selection balls, leaves)."""
    lines = [
        f"root B(center={tree.root.center.tolist()}, radius={tree.root.radius:g})",
        f"constants: c6={tree.constants['c6']:.4g} c5={tree.constants['c5']:.4g} "
        f"eta={tree.constants['eta']:g}",
    ]
    for lev_idx, locs in enumerate(tree.levels):
        level_no = lev_idx + 2
        loc_offset = 0
        for loc in locs:
            lines.append(
                f"level {level_no} local level (parent L{loc.parent_level}#{loc.parent_index}): "
                f"l_B={loc.l_b} sublevel masses={[round(m, 4) for m in loc.sub_masses]}"
            )
            if len(loc.c_center) > max_leaves:
                lines.append(
                    f"  {len(loc.a_center)} selection balls, {len(loc.c_center)} leaves "
                    "(too many to print)"
                )
                loc_offset += len(loc.c_center)
                continue
            for k in range(len(loc.a_center)):
                leaf_idx = np.nonzero(loc.c_aidx == k)[0]
                lines.append(
                    f"  (A;{int(loc.a_j[k])}) sub{int(loc.a_sublevel[k])} "
                    f"c={loc.a_center[k, 0]:.6g} r={loc.a_radius[k]:.4g} "
                    f"#C={len(leaf_idx)}"
                )
                for i in leaf_idx:
                    mu = ""
                    if mass is not None:
                        mu = f" mu={mass.mu[lev_idx][loc_offset + i]:.4g}"
                    lines.append(
                        f"    L c={loc.c_center[i, 0]:.6g} r={loc.c_radius[i]:.4g}{mu}"
                    )
            loc_offset += len(loc.c_center)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# serialization


def tree_to_json(tree: CantorTree) -> dict:
    return {
        "root": {"center": tree.root.center.tolist(), "radius": tree.root.radius},
        "metric": tree.metric,
        "constants": tree.constants,
        "case": tree.case,
        "levels": [
            [
                {
                    "parent_level": loc.parent_level,
                    "parent_index": loc.parent_index,
                    "l_b": loc.l_b,
                    "eps_b": loc.eps_b,
                    "g_primes": list(map(int, loc.g_primes)),
                    "sub_targets": loc.sub_targets,
                    "sub_masses": loc.sub_masses,
                    "a": {
                        "center": loc.a_center[:, 0].tolist(),
                        "radius": loc.a_radius.tolist(),
                        "j": loc.a_j.tolist(),
                        "sublevel": loc.a_sublevel.tolist(),
                    },
                    "c": {
                        "center": loc.c_center[:, 0].tolist(),
                        "radius": loc.c_radius.tolist(),
                        "j": loc.c_j.tolist(),
                        "sublevel": loc.c_sublevel.tolist(),
                        "aidx": loc.c_aidx.tolist(),
                    },
                }
                for loc in locs
            ]
            for locs in tree.levels
        ],
    }


def tree_from_json(obj) -> CantorTree:
    levels = []
    for locs in obj["levels"]:
        out = []
        for e in locs:
            out.append(
                LocalLevel(
                    parent_level=e["parent_level"],
                    parent_index=e["parent_index"],
                    l_b=e["l_b"],
                    eps_b=e["eps_b"],
                    g_primes=list(e["g_primes"]),
                    sub_targets=list(e["sub_targets"]),
                    sub_masses=list(e["sub_masses"]),
                    a_center=np.array(e["a"]["center"])[:, None],
                    a_radius=np.array(e["a"]["radius"]),
                    a_j=np.array(e["a"]["j"], dtype=np.int64),
                    a_sublevel=np.array(e["a"]["sublevel"], dtype=np.int64),
                    c_center=np.array(e["c"]["center"])[:, None],
                    c_radius=np.array(e["c"]["radius"]),
                    c_j=np.array(e["c"]["j"], dtype=np.int64),
                    c_sublevel=np.array(e["c"]["sublevel"], dtype=np.int64),
                    c_aidx=np.array(e["c"]["aidx"], dtype=np.int64),
                )
            )
        levels.append(out)
    return CantorTree(
        root=Ball(np.array(obj["root"]["center"]), obj["root"]["radius"]),
        metric=obj["metric"],
        constants=obj["constants"],
        levels=levels,
        case=obj.get("case", "a"),
    )
