"""Assembly of the ray graph, basic regions, counting contours and reports.

The graph of landed rays and their landing points cuts the plane into basic
regions.  Only ray pairs (two rays with a common landing point) actually
separate; membership is decided by crossing parity of a test segment against
each pair's curve, so truncation of the rays at a finite box does not split
regions.  The global counting contour encloses a full and complete
collection of fundamental domains and carries the expected fixed-point
count, which the argument principle must reproduce exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import (
    ParamCurve,
    argument_principle_count,
    concat,
    ensure_vectorized,
    signed_area,
    winding_number,
)
from .errors import (
    ConnectorBlocked,
    EpsTooLarge,
    ExpansionNotValidated,
    NotFullComplete,
    ResolutionTooCoarse,
    SideCheckFailed,
    UnlandedRay,
)
from .fixedpoints import (
    FixedPointRecord,
    find_periodic_points,
    petal_directions,
    probe_virtual_points,
)
from .maps import BranchLabel, MapSpec
from .rays import Address, Ray, RayPair, detect_ray_pairs, fixed_rays, landing_point, trace_ray
from .structure import Rect, StructuralSetup, validate_expansion_radius

LANDING_DEDUP_TOL = 1e-6
PROBE_CLEARANCE = 1e-6


# -- ray graph -----------------------------------------------------------------------


@dataclass
class RayGraph:
    rays: list[Ray]
    landing_points: list[complex]
    pairs: list[RayPair]
    period: int

    def landing_of(self, z: complex, tol: float = LANDING_DEDUP_TOL) -> complex | None:
        for p in self.landing_points:
            if abs(p - z) < tol:
                return p
        return None


def build_ray_graph(rays: list[Ray], period: int) -> RayGraph:
    """Deduplicate landing points and detect pairs among landed rays."""
    for r in rays:
        if r.status.kind != "lands_at":
            raise UnlandedRay(r.address)
    points: list[complex] = []
    for r in rays:
        z = r.landing
        if not any(abs(z - p) < LANDING_DEDUP_TOL for p in points):
            points.append(z)
    points.sort(key=lambda z: (z.real, z.imag))
    pairs = detect_ray_pairs(rays, LANDING_DEDUP_TOL) if rays else []
    return RayGraph(list(rays), points, pairs, period)


# -- region geometry by crossing parity ------------------------------------------------


def pair_polyline(pair: RayPair, reach: float) -> np.ndarray:
    """The separating curve of a pair: ray, landing point, other ray.

    Both rays are extended horizontally beyond their largest-potential
    sample out to real part `reach` (rays of the supported family are
    asymptotically horizontal).
    """
    r1, r2 = pair.rays
    z0 = pair.common_landing

    def one_side(ray: Ray) -> np.ndarray:
        order = np.argsort(-ray.t)  # far to near
        z = ray.z[order]
        ext = complex(max(reach, z[0].real + 1.0), z[0].imag)
        return np.concatenate([[ext], z])

    a = one_side(r1)
    b = one_side(r2)[::-1]
    return np.concatenate([a, [z0], b])


class RegionGeometry:
    """Signature machinery: which side of each ray pair a point is on."""

    def __init__(self, pairs: list[RayPair], bbox: Rect):
        self.bbox = bbox
        reach = bbox.x1 + 3.0 * bbox.diagonal
        self.polylines = [pair_polyline(p, reach) for p in pairs]
        self.pairs = pairs
        d = bbox.diagonal
        self._far = complex(bbox.x0 - 3.71 * d, bbox.y0 - 2.39 * d)

    def signature(self, z: complex) -> tuple[int, ...]:
        for attempt in range(12):
            far = self._far * (1.0 + 0.0173 * attempt) - 1j * attempt * 0.31
            bits = []
            ok = True
            for poly in self.polylines:
                c = _crossing_parity(z, far, poly)
                if c is None:
                    ok = False
                    break
                bits.append(c & 1)
            if ok:
                return tuple(bits)
        raise ResolutionTooCoarse(f"cannot resolve the region of {z}")

    def min_distance(self, z: complex) -> float:
        best = math.inf
        for poly in self.polylines:
            a, b = poly[:-1], poly[1:]
            best = min(best, float(np.min(_seg_dist(z, a, b))))
        return best


def _seg_dist(p: complex, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = (d * d.conjugate()).real
    L2 = np.where(L2 == 0.0, 1.0, L2)
    s = np.clip(((p - a) * d.conjugate()).real / L2, 0.0, 1.0)
    return np.abs(p - (a + s * d))


def _crossing_parity(z: complex, far: complex, poly: np.ndarray) -> int | None:
    """Number of proper crossings of segment [z, far] with the polyline.

    Returns None when a crossing is too close to degenerate (vertex grazing
    or near-parallel overlap), so the caller can jitter the far point.
    """
    a, b = poly[:-1], poly[1:]
    d1 = far - z
    d2 = b - a
    denom = (d1 * d2.conjugate()).imag
    q = a - z
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (q * d2.conjugate()).imag / denom
        u = (q * d1.conjugate()).imag / denom
    scale = np.abs(d1) * np.abs(d2)
    parallel = np.abs(denom) < 1e-14 * np.maximum(scale, 1e-300)
    eps = 1e-9
    inside = (~parallel) & (s > eps) & (s < 1 - eps) & (u > eps) & (u < 1 - eps)
    grazing = (~parallel) & (
        ((np.abs(s) <= eps) | (np.abs(s - 1) <= eps)) & (u > -eps) & (u < 1 + eps)
        | ((np.abs(u) <= eps) | (np.abs(u - 1) <= eps)) & (s > -eps) & (s < 1 + eps)
    )
    if np.any(grazing):
        return None
    return int(np.count_nonzero(inside))


# -- basic regions ----------------------------------------------------------------------


@dataclass
class RegionContents:
    interior_points: list[FixedPointRecord] = field(default_factory=list)
    virtual_points: list[tuple[complex, complex]] = field(default_factory=list)
    landing_points_on_boundary: list[complex] = field(default_factory=list)


@dataclass
class BasicRegion:
    id: int
    signature: tuple[int, ...]
    boundary_rays: list[Ray]
    sample_interior_point: complex
    contents: RegionContents = field(default_factory=RegionContents)

    def contains(self, z: complex, geometry: RegionGeometry) -> bool:
        return geometry.signature(z) == self.signature


def basic_regions(graph: RayGraph, bbox: Rect | tuple, resolution: float = 0.5,
                  check_stability: bool = True) -> tuple[list[BasicRegion], RegionGeometry]:
    """Basic regions meeting the box, discovered by signature probing.

    Probes a grid plus offsets on both sides of every pair curve; two points
    belong to the same region iff no pair separates them.  Halving the probe
    resolution must reproduce the same region count.
    """
    if not isinstance(bbox, Rect):
        bbox = Rect(*bbox)
    geometry = RegionGeometry(graph.pairs, bbox)
    regions = _regions_at(graph, bbox, resolution, geometry)
    if check_stability:
        finer = _regions_at(graph, bbox, resolution / 2.0, geometry)
        if len(finer) != len(regions):
            raise ResolutionTooCoarse(
                f"{len(regions)} regions at resolution {resolution} but "
                f"{len(finer)} at half resolution")
    return regions, geometry


def _regions_at(graph: RayGraph, bbox: Rect, resolution: float,
                geometry: RegionGeometry) -> list[BasicRegion]:
    probes = _probe_points(graph, bbox, resolution, geometry)
    best: dict[tuple[int, ...], tuple[float, complex]] = {}
    for z in probes:
        clearance = geometry.min_distance(z)
        if clearance < max(PROBE_CLEARANCE, resolution * 1e-3):
            continue
        sig = geometry.signature(z)
        cur = best.get(sig)
        if cur is None or clearance > cur[0]:
            best[sig] = (clearance, z)
    regions = []
    for i, sig in enumerate(sorted(best)):
        _, sample = best[sig]
        boundary = []
        for k, pair in enumerate(geometry.pairs):
            neighbor = tuple(b ^ 1 if idx == k else b for idx, b in enumerate(sig))
            if neighbor in best:
                boundary.extend(pair.rays)
        regions.append(BasicRegion(i, sig, boundary, sample))
    return regions


def _probe_points(graph: RayGraph, bbox: Rect, resolution: float,
                  geometry: RegionGeometry) -> list[complex]:
    nx = max(int((bbox.x1 - bbox.x0) / resolution), 4)
    ny = max(int((bbox.y1 - bbox.y0) / resolution), 4)
    xs = np.linspace(bbox.x0 + resolution / 2, bbox.x1 - resolution / 2, nx)
    ys = np.linspace(bbox.y0 + resolution / 2, bbox.y1 - resolution / 2, ny)
    pts = [complex(x, y) for x in xs for y in ys]
    # straddle every pair curve so thin regions next to rays are found
    for poly in geometry.polylines:
        seg = poly[1:] - poly[:-1]
        mids = 0.5 * (poly[1:] + poly[:-1])
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = 1j * seg / np.abs(seg)
        for off in (0.35 * resolution, 0.05 * resolution):
            for m, nrm in zip(mids, normals):
                if np.isfinite(nrm):
                    for side in (+1, -1):
                        p = m + side * off * nrm
                        if bbox.contains(p):
                            pts.append(complex(p))
    return pts


# -- counting contour -------------------------------------------------------------------


@dataclass
class CountingContour:
    pieces: list[tuple[str, ParamCurve]]
    closed_curve: ParamCurve
    expected_count: int
    domains: list[BranchLabel]
    radius: float


def check_full_complete(spec: MapSpec, setup: StructuralSetup,
                        labels: list[BranchLabel]) -> None:
    """Raise NotFullComplete with a witness when the collection fails.

    Full: band indices contiguous per tract.  Complete: contains every
    domain meeting the disk, and adjacent domains' fixed rays land alone at
    repelling points (checked on the traced evidence).
    """
    from .fixedpoints import _domain_min_modulus  # local import, shared helper

    js = sorted(lb.j for lb in labels)
    if not js:
        raise NotFullComplete("empty collection")
    if js != list(range(js[0], js[-1] + 1)):
        raise NotFullComplete(f"gap in bands {js}")
    for dom in setup.domains:
        if _domain_min_modulus(setup, dom) <= setup.disk.radius + 1e-9:
            if dom.label.j not in js:
                raise NotFullComplete(
                    f"domain {dom.label.j} meets the disk but is missing")
    # adjacent rays must land alone at repelling points
    inside = {}
    for j in js + [js[0] - 1, js[-1] + 1]:
        try:
            ray = landing_point(spec, trace_ray(spec, setup, Address.constant(j)))
        except ExpansionNotValidated as exc:
            raise NotFullComplete(f"cannot validate band {j}: {exc}") from exc
        if ray.status.kind != "lands_at":
            raise NotFullComplete(f"fixed ray of band {j} did not land")
        inside[j] = ray.landing
    for j in (js[0] - 1, js[-1] + 1):
        for k, z in inside.items():
            if k != j and abs(inside[j] - z) < LANDING_DEDUP_TOL:
                raise NotFullComplete(
                    f"adjacent band {j} ray lands with band {k} ray")


def counting_contour(spec: MapSpec, setup: StructuralSetup, domains,
                     R: float | None = None) -> CountingContour:
    """The closed contour around a full complete collection of domains.

    Pieces: the preimage arc of the circle of radius R covering it N times,
    the two pullback arcs of the cut, and a connector threading outside the
    tract; the enclosed fixed-point count must be N + 1.
    """
    labels = sorted((d if isinstance(d, BranchLabel) else d.label for d in domains),
                    key=lambda l: l.j)
    if R is None:
        R = setup.expansion_radius
    report = validate_expansion_radius(spec, setup, labels, R)
    if not report.ok:
        raise ExpansionNotValidated(
            f"expansion radius {R} not valid for the collection "
            f"(margin {report.margin:.3g})")
    check_full_complete(spec, setup, labels)

    factor = spec.outer
    cut = setup.branch_context.outer_cut
    j_lo, j_hi = labels[0].j, labels[-1].j
    N = len(labels)
    r_disk = setup.disk.radius
    delta0 = complex(setup.delta.z[0])
    theta_delta = math.atan2(delta0.imag, delta0.real)

    def cut_point(s: float, m: int) -> complex:
        v = (s * complex(math.cos(theta_delta), math.sin(theta_delta)) - factor.b) / factor.a
        return complex(math.log(abs(v)), float(cut.phi(abs(v))) + 2.0 * math.pi * m)

    # preimage arc of C_R covering it N times, bottom cut to top cut
    n_arc = 192 * N + 1
    u = np.linspace(theta_delta, theta_delta + 2.0 * math.pi * N, n_arc)
    v = (R * np.exp(1j * u) - factor.b) / factor.a
    base = float(cut.phi(abs(v[0])))
    args = np.unwrap(np.angle(v))
    args += (base - args[0])
    z_arc = np.log(np.abs(v)) + 1j * (args + 2.0 * math.pi * (j_lo - 1))
    p_minus = cut_point(R, j_lo - 1)
    p_plus = cut_point(R, j_hi)
    z_arc[0] = p_minus
    z_arc[-1] = p_plus
    r_piece = ParamCurve(np.linspace(0.0, 1.0, n_arc), z_arc)

    # cut pieces between the circle preimage and the tract boundary
    s_vals = np.geomspace(r_disk, R, 160)
    top = np.array([cut_point(s, j_hi) for s in s_vals[::-1]])
    bottom = np.array([cut_point(s, j_lo - 1) for s in s_vals])
    top[0] = p_plus
    bottom[-1] = p_minus
    t_plus = ParamCurve(np.linspace(0.0, 1.0, len(top)), top)
    t_minus = ParamCurve(np.linspace(0.0, 1.0, len(bottom)), bottom)

    # connector outside the tract, crossing the cut ray once beyond radius R
    inner_top = complex(top[-1])
    inner_bottom = complex(bottom[0])
    h_top = inner_top.imag + min(1.0, math.pi / 3)
    h_bot = inner_bottom.imag - min(1.0, math.pi / 3)
    if not (h_bot < 0.0 < h_top):
        raise NotFullComplete(
            "collection does not straddle the cut direction; the connector "
            "cannot cross it exactly once")
    body = max(abs(factor.b), 0.0)
    x_turn = min(inner_top.real, inner_bottom.real) - 1.0
    if r_disk > body:
        x_turn = min(x_turn, math.log((r_disk - body) / abs(factor.a)) - 1.0)
    x_left = -(1.3 * max(R, setup.bbox.corner_radius()) + 1.0)
    waypoints = [inner_top,
                 complex(x_turn, h_top),
                 complex(x_left, h_top),
                 complex(x_left, h_bot),
                 complex(x_turn, h_bot),
                 inner_bottom]
    gamma_pts = []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        seg = a + (b - a) * np.linspace(0.0, 1.0, 48, endpoint=False)
        gamma_pts.append(seg)
    gamma_pts = np.concatenate(gamma_pts + [np.array([inner_bottom])])
    gamma = ParamCurve(np.arange(len(gamma_pts), dtype=float), gamma_pts)

    closed = concat(concat(concat(r_piece, t_plus), gamma), t_minus, close=True)
    if signed_area(closed) <= 0:
        raise ConnectorBlocked("assembled contour is not counterclockwise")

    # the image of the preimage arc must cover the circle N times
    fn = ensure_vectorized(lambda z: spec.evaluate_array(z, 1))
    image_turns = winding_number(
        ParamCurve(r_piece.t, fn(r_piece.z)), 0.0).value
    if abs(image_turns - N) > 1e-6:
        raise NotFullComplete(
            f"preimage arc covers the circle {image_turns:.6f} times, not {N}")

    pieces = [(f"r_alpha(N={N})", r_piece),
              ("Gamma_alpha:delta_plus", t_plus),
              ("Gamma_alpha:gamma", gamma),
              ("Gamma_alpha:delta_minus", t_minus)]
    return CountingContour(pieces, closed, N + 1, labels, R)


def global_count_check(spec: MapSpec, contour: CountingContour) -> tuple[int, int, bool]:
    """(expected, measured, match) for the counting contour."""
    measured = argument_principle_count(spec, contour.closed_curve,
                                        "fixed_points", 1)
    return contour.expected_count, measured, measured == contour.expected_count


# -- boundary modification near fixed points ----------------------------------------------


@dataclass
class SimpleRegion:
    """Minimal region stand-in: a membership test plus two boundary rays."""

    membership: object          # callable complex -> bool
    boundary_rays: list[ParamCurve]

    def contains(self, z: complex) -> bool:
        return bool(self.membership(z))


@dataclass
class ModifiedRegion:
    kind: str                   # "repelling" | "parabolic"
    zeta: ParamCurve
    f_zeta: ParamCurve
    margin: float
    base: object
    center: complex
    eps: float
    sector: tuple[complex, float] | None = None   # (direction, half-angle)

    def contains(self, z: complex) -> bool:
        if self.kind == "repelling":
            return self.base.contains(z) or abs(z - self.center) < self.eps
        if abs(z - self.center) < self.eps and self.sector is not None:
            d, half = self.sector
            if abs(_angle_between(z - self.center, d)) < half:
                return False
        return self.base.contains(z)


def _angle_between(v: complex, d: complex) -> float:
    return math.atan2((d.conjugate() * v).imag, (d.conjugate() * v).real)


def _first_crossing(ray: ParamCurve, center: complex, eps: float) -> complex:
    """First entry of the ray into the eps-disk, coming from the far end."""
    z = ray.z
    gaps = np.abs(z - center)
    zs = z[::-1] if gaps[0] < gaps[-1] else z
    gaps = np.abs(zs - center)
    inside = np.nonzero(gaps <= eps)[0]
    if not len(inside) or inside[0] == 0:
        raise ValueError("ray does not cross the eps-circle from outside")
    i = inside[0]
    a, b = zs[i - 1], zs[i]
    ga, gb = gaps[i - 1], gaps[i]
    s = (ga - eps) / (ga - gb)
    return complex(a + s * (b - a))


def modify_boundary_near_fixed_point(mapobj, region, record: FixedPointRecord,
                                     eps: float, *, other_fixed_points=(),
                                     n_samples: int = 256) -> ModifiedRegion:
    """Replace the boundary arc at a fixed point per the local dynamics.

    Repelling: the region is enlarged by the eps-disk and the new arc maps
    strictly outside the enlarged region.  Parabolic: a repelling-petal
    sector is removed and the new arc maps into the closure of the shrunk
    region.  The containment is verified numerically sample by sample.
    """
    z0 = complex(record.location)
    for other in other_fixed_points:
        if abs(complex(other) - z0) <= 2.0 * eps and abs(complex(other) - z0) > 1e-12:
            raise EpsTooLarge(
                f"fixed point {other} inside the modification zone of {z0}")
    fn = ensure_vectorized(mapobj if not isinstance(mapobj, MapSpec)
                           else (lambda z: mapobj.evaluate_array(z, record.period)))
    crossings = [_first_crossing(ray, z0, eps) for ray in region.boundary_rays]
    if len(crossings) != 2:
        raise ValueError("exactly two boundary rays are required")
    ang = sorted(math.atan2((c - z0).imag, (c - z0).real) for c in crossings)

    if record.classification == "repelling":
        # candidate arcs between the crossing angles; take the one outside V
        for lo, hi in ((ang[0], ang[1]), (ang[1], ang[0] + 2.0 * math.pi)):
            theta = np.linspace(lo, hi, n_samples + 2)[1:-1]
            pts = z0 + eps * np.exp(1j * theta)
            mid = pts[len(pts) // 2]
            if not region.contains(complex(mid)):
                break
        zeta = ParamCurve(np.linspace(0.0, 1.0, len(pts)), pts)
        modified = ModifiedRegion("repelling", zeta, None, 0.0, region, z0, eps)
        image = fn(zeta.z)
        margin = _side_margin(image, modified, want_inside=False)
        modified.f_zeta = ParamCurve(zeta.t, image)
        modified.margin = margin
        if margin <= 0:
            raise SideCheckFailed(margin)
        return modified

    if record.classification != "parabolic":
        raise ValueError("modification handles repelling or parabolic points")
    fan = petal_directions(mapobj, z0, record.period)
    half = math.pi / (2.0 * fan.m)
    # repelling direction closest to the incoming rays
    def score(d):
        return max(abs(_angle_between(c - z0, d)) for c in crossings)
    direction = min(fan.repelling_dirs, key=score)
    theta_d = math.atan2(direction.imag, direction.real)
    theta = np.linspace(theta_d - half, theta_d + half, n_samples)
    arc = z0 + eps * np.exp(1j * theta)
    edge_lo = z0 + eps * np.exp(1j * (theta_d - half)) * \
        np.linspace(1.0 / 64, 1.0, n_samples // 4, endpoint=False)
    edge_hi = z0 + eps * np.exp(1j * (theta_d + half)) * \
        np.linspace(1.0 / 64, 1.0, n_samples // 4, endpoint=False)
    boundary_pts = np.concatenate([edge_lo[::-1], arc, edge_hi])
    keep = np.array([region.contains(complex(p)) and abs(p - z0) > 1e-12
                     for p in boundary_pts])
    pts = boundary_pts[keep]
    if len(pts) < 4:
        raise SideCheckFailed(0.0)
    # deterministic path order around the sector corner
    angles = np.angle(pts - z0)
    radii = np.abs(pts - z0)
    order = np.lexsort((radii, angles))
    pts = pts[order]
    zeta = ParamCurve(np.arange(len(pts), dtype=float), pts)
    modified = ModifiedRegion("parabolic", zeta, None, 0.0, region, z0, eps,
                              sector=(direction, half))
    image = fn(zeta.z)
    margin = _side_margin(image, modified, want_inside=True)
    modified.f_zeta = ParamCurve(zeta.t, image)
    modified.margin = margin
    if margin <= 0:
        raise SideCheckFailed(margin)
    return modified


def _side_margin(image: np.ndarray, region: ModifiedRegion,
                 want_inside: bool) -> float:
    """Largest perturbation under which all image samples keep their side."""
    offsets = np.array([1.0, -1.0, 1j, -1j])
    for h in (1e-2, 1e-3, 1e-4, 1e-6, 1e-9):
        ok = True
        for w in image:
            w = complex(w)
            states = [region.contains(w + complex(o) * h) for o in offsets]
            states.append(region.contains(w))
            if want_inside and not all(states):
                ok = False
                break
            if not want_inside and any(states):
                ok = False
                break
        if ok:
            return h
    # sign of failure: check the unperturbed samples
    bad = sum(1 for w in image
              if region.contains(complex(w)) != want_inside)
    return -float(bad) if bad else 0.0


# -- separation report ------------------------------------------------------------------------


@dataclass
class RegionVerdict:
    region_id: int
    verdict: str                # exactly_one_interior | exactly_one_virtual | VIOLATION(...)
    interior: list[complex]
    virtual: list[complex]
    boundary_landings: list[complex]


@dataclass
class SeparationReport:
    period: int
    regions: list[BasicRegion]
    verdicts: list[RegionVerdict]
    global_counts: tuple[int, int, bool] | None
    incomplete: list[str]
    records: list[FixedPointRecord]
    graph: RayGraph

    @property
    def has_violation(self) -> bool:
        return any(v.verdict.startswith("VIOLATION") for v in self.verdicts)

    @property
    def is_incomplete(self) -> bool:
        return bool(self.incomplete)


def separation_report(spec: MapSpec, setup: StructuralSetup, period: int = 1,
                      bbox: Rect | tuple | None = None,
                      resolution: float = 0.5,
                      ray_depth: int = 80) -> SeparationReport:
    """Verify that each basic region holds exactly one interior or virtual point.

    Traces all period-p rays over the domains of the setup, builds the ray
    graph and basic regions, classifies every period-p point in the box as
    boundary (a landing point), interior, or parabolic with virtual basins,
    and emits one verdict per region.
    """
    if bbox is None:
        bbox = setup.bbox
    if not isinstance(bbox, Rect):
        bbox = Rect(*bbox)

    incomplete: list[str] = []
    rays = fixed_rays(spec, setup, setup.domains, period, depth=ray_depth)
    landed = [r for r in rays if r.status.kind == "lands_at"]
    for r in rays:
        if r.status.kind != "lands_at":
            incomplete.append(f"ray {r.address} {r.status.kind}")

    records = find_periodic_points(
        spec, bbox, period, setup=setup,
        extra_seeds=[r.landing for r in landed])

    # rays landing at found points via addresses inferred from orbit bands
    landed = _augment_with_inferred_rays(spec, setup, period, records, landed,
                                         incomplete)
    graph = build_ray_graph(landed, period)
    regions, geometry = basic_regions(graph, bbox, resolution)

    verdict_data: dict[tuple[int, ...], RegionVerdict] = {}
    region_by_sig = {r.signature: r for r in regions}

    def region_of(z: complex) -> BasicRegion | None:
        sig = geometry.signature(z)
        if sig not in region_by_sig:
            # a point may sit in a region none of the probes reached
            nid = len(regions)
            reg = BasicRegion(nid, sig, [], z)
            regions.append(reg)
            region_by_sig[sig] = reg
        return region_by_sig[sig]

    for rec in records:
        z = rec.location
        landing = graph.landing_of(z)
        if landing is not None:
            rec.incident_ray_addresses = [
                r.address for r in graph.rays
                if abs(r.landing - z) < LANDING_DEDUP_TOL]
        if rec.classification == "parabolic" and abs(rec.multiplier - 1.0) < 1e-6:
            # each confirmed attracting basin is one virtual point, assigned
            # to the region its probe orbit sits in
            fan = petal_directions(spec, z, period)
            for direction in probe_virtual_points(spec, fan, period):
                probe = z + 0.1 * direction
                shrink = 0
                while geometry.min_distance(probe) < PROBE_CLEARANCE and shrink < 20:
                    probe = z + abs(probe - z) * 0.7 * direction
                    shrink += 1
                reg = region_of(probe)
                reg.contents.virtual_points.append((z, direction))
        if landing is None and not (rec.classification == "parabolic"
                                    and abs(rec.multiplier - 1.0) < 1e-6):
            reg = region_of(z)
            reg.contents.interior_points.append(rec)

    # boundary landing bookkeeping: attach to regions adjacent to the landing
    for z in graph.landing_points:
        for reg in regions:
            near = z + (reg.sample_interior_point - z) * 1e-3
            if geometry.min_distance(near) > 0 and \
               geometry.signature(near) == reg.signature:
                reg.contents.landing_points_on_boundary.append(z)

    verdicts = []
    for reg in regions:
        n_int = len(reg.contents.interior_points)
        n_vir = len(reg.contents.virtual_points)
        if n_int == 1 and n_vir == 0:
            verdict = "exactly_one_interior"
        elif n_int == 0 and n_vir == 1:
            verdict = "exactly_one_virtual"
        else:
            verdict = (f"VIOLATION(interior={n_int}, virtual={n_vir})")
        verdicts.append(RegionVerdict(
            reg.id, verdict,
            [r.location for r in reg.contents.interior_points],
            [v[0] for v in reg.contents.virtual_points],
            list(reg.contents.landing_points_on_boundary)))

    global_counts = None
    if period == 1:
        try:
            contour = counting_contour(spec, setup, setup.domain_labels())
            expected, measured, match = global_count_check(spec, contour)
            global_counts = (len(setup.domains), measured, match)
        except (NotFullComplete, ExpansionNotValidated, ConnectorBlocked):
            global_counts = None
    return SeparationReport(period, regions, verdicts, global_counts,
                            incomplete, records, graph)


def _augment_with_inferred_rays(spec: MapSpec, setup: StructuralSetup,
                                period: int, records, landed, incomplete):
    """Trace rays for repelling points not matched by any landed ray.

    Candidate addresses come from the band indices of the orbit, which is
    how landing points relate to itineraries; failures are recorded, not
    fatal.
    """
    landed = list(landed)

    def matched(z):
        return any(abs(r.landing - z) < LANDING_DEDUP_TOL for r in landed)

    existing = {str(r.address) for r in landed}
    for rec in records:
        if rec.classification != "repelling" or matched(rec.location):
            continue
        orbit = [rec.location]
        try:
            for _ in range(period - 1):
                w, _d = spec.evaluate(orbit[-1], 1)
                orbit.append(w)
        except Exception:
            continue
        bands = [setup.band_index(z) for z in orbit]
        address = Address.cycle(bands)
        if str(address) in existing:
            continue
        existing.add(str(address))
        try:
            ray = landing_point(spec, trace_ray(spec, setup, address))
        except ExpansionNotValidated:
            incomplete.append(f"inferred ray {address} not validated")
            continue
        if ray.status.kind == "lands_at" and \
           abs(ray.landing - rec.location) < LANDING_DEDUP_TOL:
            landed.append(ray)
    return landed
