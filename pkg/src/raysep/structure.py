"""Disk, cut curve, tracts and fundamental domains for a supported map.

The construction: pick a round disk D about 0 containing the singular values,
0 and f(0); the preimage of the complement of D is the tract set; a radial
cut curve delta from D to infinity, pulled back through the inverse branches,
slices each tract into fundamental domains labeled by log-bands.  The grid
extractor works for any member of the family, while the fundamental-domain
cutting uses the closed-form inverse branches of a single factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .curves import ParamCurve
from .errors import (
    DeltaBlocked,
    OrbitLeftTracts,
    OutsideTract,
    Overflow,
    UnsupportedMap,
)
from .maps import BranchContext, BranchLabel, CutGeometry, ExpAffine, MapSpec, branch_log

DISK_SCALE = 1.25
BOUNDARY_TOL = 1e-8
EXPANSION_CAP = 1e6


@dataclass(frozen=True)
class Rect:
    """Axis-aligned box x0 <= Re z <= x1, y0 <= Im z <= y1."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("degenerate box")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (self.x0 + margin <= z.real <= self.x1 - margin
                and self.y0 + margin <= z.imag <= self.y1 - margin)

    def corner_radius(self) -> float:
        return max(abs(complex(x, y))
                   for x in (self.x0, self.x1) for y in (self.y0, self.y1))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.x1, self.y0, self.y1)


@dataclass(frozen=True)
class DomainDisk:
    center: complex
    radius: float


@dataclass
class Tract:
    alpha: int
    boundary: ParamCurve
    anchor: complex
    touches_box: bool


@dataclass
class FundamentalDomain:
    label: BranchLabel
    tract: int
    side_curves: tuple[ParamCurve, ParamCurve]
    anchor: complex
    order_key: int


@dataclass
class StructuralSetup:
    spec: MapSpec
    disk: DomainDisk
    delta: ParamCurve
    tracts: list[Tract]
    domains: list[FundamentalDomain]
    expansion_radius: float
    bbox: Rect
    resolution: float
    branch_context: BranchContext
    strip_cut: CutGeometry
    validated_radii: dict[float, tuple[int, ...]] = field(default_factory=dict)

    def domain_labels(self) -> list[BranchLabel]:
        return [d.label for d in self.domains]

    def domain_by_band(self, j: int, alpha: int = 0) -> FundamentalDomain:
        for d in self.domains:
            if d.label.j == j and d.label.alpha == alpha:
                return d
        raise KeyError(f"no fundamental domain with band {j} in the setup")

    def pull_back(self, w, label: BranchLabel, strict: bool = False):
        return self.branch_context.pull_back(w, label, strict)

    # -- membership helpers ------------------------------------------------

    def image_modulus(self, z: complex) -> float:
        """|f(z)| with overflow mapped to infinity."""
        try:
            w, _ = self.spec.evaluate(z, 1)
        except Overflow:
            return math.inf
        return abs(w)

    def in_tract(self, z: complex) -> bool:
        return self.image_modulus(z) > self.disk.radius

    def band_index(self, z: complex) -> int:
        """Band j of the fundamental domain whose closure contains z.

        Uses that exp(z) equals (f(z) - b)/a for the outer factor, so Im z is
        a continuous argument of that quantity of modulus e^(Re z).
        """
        rho = math.exp(min(z.real, 700.0))
        phi = float(self.branch_context.outer_cut.phi(rho))
        return math.ceil((z.imag - phi) / (2.0 * math.pi) - 1e-12)

    def in_domain(self, z: complex, label: BranchLabel) -> bool:
        return self.in_tract(z) and self.band_index(z) == label.j


# -- grid tract extraction -----------------------------------------------------


def _modulus_mask(spec: MapSpec, xs: np.ndarray, ys: np.ndarray, radius: float):
    zz = xs[None, :] + 1j * ys[:, None]
    w = spec.evaluate_array(zz, 1)
    mod = np.abs(w)
    mod = np.where(np.isfinite(mod), mod, np.inf)
    return mod > radius, mod


def _trace_level_segments(xs, ys, h):
    """Marching-squares segments of the level set h = 0 (h sampled on grid)."""
    segs = []
    ny, nx = h.shape
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            corners = [h[iy, ix], h[iy, ix + 1], h[iy + 1, ix + 1], h[iy + 1, ix]]
            pts = []
            edges = [
                (complex(xs[ix], ys[iy]), complex(xs[ix + 1], ys[iy]), corners[0], corners[1]),
                (complex(xs[ix + 1], ys[iy]), complex(xs[ix + 1], ys[iy + 1]), corners[1], corners[2]),
                (complex(xs[ix + 1], ys[iy + 1]), complex(xs[ix], ys[iy + 1]), corners[2], corners[3]),
                (complex(xs[ix], ys[iy + 1]), complex(xs[ix], ys[iy]), corners[3], corners[0]),
            ]
            for a, b, ha, hb in edges:
                if (ha > 0) != (hb > 0):
                    s = ha / (ha - hb)
                    pts.append(a + s * (b - a))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
                if len(pts) == 4:
                    segs.append((pts[2], pts[3]))
    return segs


def _chain_segments(segs, tol):
    """Join segments into polylines by endpoint proximity."""
    if not segs:
        return []
    # quantized endpoint index
    def key(p):
        return (round(p.real / tol), round(p.imag / tol))

    adj: dict[tuple[int, int], list[int]] = {}
    for i, (a, b) in enumerate(segs):
        adj.setdefault(key(a), []).append(i)
        adj.setdefault(key(b), []).append(i)
    used = [False] * len(segs)
    polylines = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        a, b = segs[start]
        chain = [a, b]
        for _ in range(2):  # extend forward then backward
            extended = True
            while extended:
                extended = False
                tail = chain[-1]
                for i in adj.get(key(tail), []):
                    if used[i]:
                        continue
                    c, d = segs[i]
                    if abs(c - tail) < tol:
                        chain.append(d)
                    elif abs(d - tail) < tol:
                        chain.append(c)
                    else:
                        continue
                    used[i] = True
                    extended = True
                    break
            chain.reverse()
        polylines.append(chain)
    return polylines


def _refine_boundary(spec: MapSpec, points, radius: float, step: float):
    """Move each vertex onto |f| = radius by bisection along the gradient."""
    out = []
    for z in points:
        g = _mod_minus_r(spec, z, radius)
        # pick a short probe direction along which the sign flips
        direction = None
        for d in (1, -1, 1j, -1j, 1 + 1j, -1 - 1j):
            zz = z + 0.75 * step * d / abs(d)
            if _mod_minus_r(spec, zz, radius) * g < 0:
                direction = zz
                break
        if direction is None:
            out.append(z)
            continue
        lo, hi = z, direction
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _mod_minus_r(spec, mid, radius) * g >= 0:
                lo = mid
            else:
                hi = mid
            if abs(hi - lo) < BOUNDARY_TOL * 0.01:
                break
        out.append(0.5 * (lo + hi))
    return out


def _mod_minus_r(spec: MapSpec, z: complex, radius: float) -> float:
    try:
        w, _ = spec.evaluate(z, 1)
    except Overflow:
        return math.inf
    return abs(w) - radius


def extract_tracts(spec: MapSpec, bbox: Rect, resolution: float,
                   radius: float) -> list[Tract]:
    """Connected components of {|f| > radius} in the box, with boundaries."""
    nx = max(int(round((bbox.x1 - bbox.x0) / resolution)) + 1, 8)
    ny = max(int(round((bbox.y1 - bbox.y0) / resolution)) + 1, 8)
    xs = np.linspace(bbox.x0, bbox.x1, nx)
    ys = np.linspace(bbox.y0, bbox.y1, ny)
    mask, mod = _modulus_mask(spec, xs, ys, radius)
    labels, count = ndimage.label(mask)
    with np.errstate(divide="ignore"):
        h = np.log(np.clip(mod, 1e-300, 1e300)) - math.log(radius)
    h = np.clip(h, -50.0, 50.0)

    tracts = []
    order = []
    for lab in range(1, count + 1):
        comp = labels == lab
        iy, ix = np.nonzero(comp)
        touches = bool(np.any(ix == 0) or np.any(ix == nx - 1)
                       or np.any(iy == 0) or np.any(iy == ny - 1))
        # anchor: rightmost grid point of the component (deep in the tract)
        k = int(np.argmax(xs[ix] + 1e-9 * np.abs(ys[iy])))
        anchor = complex(xs[ix[k]], ys[iy[k]])
        hmasked = np.where(comp | ~mask, h, -1.0)  # suppress other components
        segs = _trace_level_segments(xs, ys, hmasked)
        polys = _chain_segments(segs, tol=resolution * 1e-3)
        if polys:
            pts = max(polys, key=len)
            pts = _refine_boundary(spec, pts, radius, resolution)
            boundary = ParamCurve.from_points(pts)
        else:
            boundary = ParamCurve.segment(anchor, anchor + resolution, n=2)
        order.append((np.median(ys[iy]), lab))
        tracts.append(Tract(alpha=0, boundary=boundary, anchor=anchor,
                            touches_box=touches))
    # label tracts by vertical order of their grid mass
    for alpha, (_, lab) in enumerate(sorted(order)):
        tracts[lab - 1].alpha = alpha
    tracts.sort(key=lambda t: t.alpha)
    return tracts


# -- delta selection ------------------------------------------------------------


def choose_delta(spec: MapSpec, bbox: Rect, resolution: float, radius: float,
                 tracts: list[Tract], n_angles: int = 360) -> ParamCurve:
    """Radial cut from the disk boundary to the box edge, clearance-maximized."""
    boundaries = [t.boundary for t in tracts]
    offsets = np.arange(n_angles) * (2.0 * np.pi / n_angles)
    # scan angles by distance from pi so ties prefer the negative real direction
    thetas = sorted((math.pi + o for o in offsets),
                    key=lambda th: abs(_wrap_pi(th - math.pi)))
    best_theta, best_clear = None, -1.0
    for theta in thetas:
        reach = _box_exit_radius(bbox, theta)
        if reach <= radius * 1.05:
            continue
        s = np.linspace(radius, reach, max(int((reach - radius) / (resolution / 2)), 16))
        pts = s * np.exp(1j * (theta % (2 * np.pi)))
        mods = np.abs(spec.evaluate_array(pts, 1))
        if np.any(mods > radius):
            clear = 0.0
        elif not boundaries:
            clear = math.inf
        else:
            clear = min(
                float(np.min([b.distance_to_point(p) for b in boundaries]))
                for p in pts[:: max(len(pts) // 64, 1)])
        if clear > best_clear + 1e-12:
            best_clear, best_theta = clear, theta
    if best_theta is None or best_clear < resolution:
        raise DeltaBlocked(
            f"best clearance {best_clear:.3g} below resolution {resolution}")
    reach = _box_exit_radius(bbox, best_theta)
    s = np.linspace(radius, reach, max(int((reach - radius) / (resolution / 2)), 16))
    z = s * np.exp(1j * (best_theta % (2 * np.pi)))
    return ParamCurve(s, z)


def _wrap_pi(theta: float) -> float:
    return math.remainder(theta, 2.0 * math.pi)


def _box_exit_radius(bbox: Rect, theta: float) -> float:
    """Distance from 0 to the box edge along direction theta."""
    dx, dy = math.cos(theta), math.sin(theta)
    hits = []
    for bound, d, other0, other1, od in (
        (bbox.x0, dx, bbox.y0, bbox.y1, dy),
        (bbox.x1, dx, bbox.y0, bbox.y1, dy),
        (bbox.y0, dy, bbox.x0, bbox.x1, dx),
        (bbox.y1, dy, bbox.x0, bbox.x1, dx),
    ):
        if abs(d) > 1e-15:
            s = bound / d
            if s > 0 and other0 - 1e-12 <= s * od <= other1 + 1e-12:
                hits.append(s)
    if not hits:
        raise DeltaBlocked("box does not surround the origin")
    return min(hits)


def extended_delta(delta: ParamCurve, reach: float, n_extra: int = 64) -> ParamCurve:
    """Continue a radial delta outward to the given modulus (band bookkeeping)."""
    tip = complex(delta.z[-1])
    if abs(tip) >= reach:
        return delta
    direction = tip / abs(tip)
    s = np.geomspace(abs(tip), reach, n_extra + 1)[1:]
    t = np.concatenate([delta.t, s])
    z = np.concatenate([delta.z, direction * s])
    return ParamCurve(t, z)


# -- the main construction -------------------------------------------------------


def auto_disk(spec: MapSpec, radius: float | None = None) -> DomainDisk:
    if radius is None:
        pts = list(spec.singular_values()) + [0.0 + 0.0j]
        try:
            pts.append(spec.evaluate(0.0, 1)[0])
        except Overflow:
            pass
        radius = DISK_SCALE * max(abs(p) for p in pts)
        if radius == 0.0:
            radius = 0.01
    return DomainDisk(0.0 + 0.0j, float(radius))


def structural_setup(spec: MapSpec, bbox: Rect | tuple, resolution: float,
                     disk_radius: float | None = None,
                     expansion_radius: float | str = "auto") -> StructuralSetup:
    """Build disk, delta, tracts and fundamental domains inside the box.

    Fundamental-domain cutting relies on the closed-form inverse branch of a
    single exponential-affine factor; compositions are rejected here (their
    evaluation and inverse branches still work at the map level).
    """
    if not isinstance(bbox, Rect):
        bbox = Rect(*bbox)
    if len(spec.factors) != 1:
        raise UnsupportedMap(
            "structural decomposition is implemented for single-factor maps")
    if resolution > 0.05 * bbox.diagonal:
        raise ValueError("resolution must be at most 5% of the box diagonal")
    disk = auto_disk(spec, disk_radius)
    if not bbox.contains(complex(disk.radius, disk.radius)) or \
       not bbox.contains(complex(-disk.radius, -disk.radius)):
        raise ValueError("box must contain the disk with margin")

    tracts = extract_tracts(spec, bbox, resolution, disk.radius)
    delta = choose_delta(spec, bbox, resolution, disk.radius, tracts)

    factor = spec.outer
    reach = abs(factor.a) * math.exp(bbox.x1 + 2.0) + disk.radius
    delta_ext = extended_delta(delta, reach)
    ctx = BranchContext(spec, delta_ext, disk.radius)
    strip_cut = CutGeometry.from_delta(delta_ext, ExpAffine(1.0, 0.0))

    domains = _build_domains(spec, bbox, disk, delta_ext, ctx)
    setup = StructuralSetup(
        spec=spec, disk=disk, delta=delta, tracts=tracts, domains=domains,
        expansion_radius=0.0, bbox=bbox, resolution=resolution,
        branch_context=ctx, strip_cut=strip_cut,
    )
    if expansion_radius == "auto":
        setup.expansion_radius = select_expansion_radius(
            spec, setup, setup.domain_labels())
    else:
        setup.expansion_radius = float(expansion_radius)
        report = validate_expansion_radius(spec, setup, setup.domain_labels(),
                                           setup.expansion_radius)
        if report.ok:
            setup.validated_radii[setup.expansion_radius] = tuple(
                sorted(d.j for d in setup.domain_labels()))
    return setup


def _build_domains(spec: MapSpec, bbox: Rect, disk: DomainDisk,
                   delta_ext: ParamCurve, ctx: BranchContext) -> list[FundamentalDomain]:
    factor = spec.outer
    cut = ctx.outer_cut
    theta_inf = cut.tail_angle
    x_tract = math.log(disk.radius / abs(factor.a))  # asymptotic tract edge
    if x_tract > bbox.x1:
        return []
    # bands whose asymptotic strip meets the box vertically
    j_lo = math.floor((bbox.y0 - theta_inf) / (2.0 * math.pi)) + 1
    j_hi = math.ceil((bbox.y1 - theta_inf) / (2.0 * math.pi))
    domains = []
    for j in range(j_lo, j_hi + 1):
        lower = _cut_curve(factor, delta_ext, cut, j - 1)
        upper = _cut_curve(factor, delta_ext, cut, j)
        anchor_re = max(x_tract + 1.0, min(bbox.x1 - 1.0, x_tract + 3.0))
        anchor = complex(anchor_re, theta_inf + 2.0 * math.pi * j - math.pi)
        domains.append(FundamentalDomain(
            label=BranchLabel(alpha=0, j=j), tract=0,
            side_curves=(lower, upper), anchor=anchor, order_key=j,
        ))
    return domains


def _cut_curve(factor: ExpAffine, delta_ext: ParamCurve, cut: CutGeometry,
               m: int) -> ParamCurve:
    """Pullback of the cut curve at band offset m: one side curve of a domain."""
    v = (delta_ext.z - factor.b) / factor.a
    rho = np.abs(v)
    order = np.argsort(rho)
    rho = rho[order]
    args = cut.phi(rho)
    z = np.log(rho) + 1j * (args + 2.0 * np.pi * m)
    return ParamCurve(np.log(rho), z)


# -- expansion radius ---------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionReport:
    ok: bool
    margin: float
    worst_preimage: complex | None
    worst_band: int | None


def validate_expansion_radius(spec: MapSpec, setup: StructuralSetup,
                              domains, R: float,
                              n_samples: int = 4096) -> ExpansionReport:
    """Check that the pullback of the circle |w| = R stays inside it.

    Samples the circle adaptively, pulls each sample through every domain's
    inverse branch and compares moduli; the margin is R minus the largest
    preimage modulus.
    """
    labels = [d if isinstance(d, BranchLabel) else d.label for d in domains]
    if not labels:
        return ExpansionReport(True, R, None, None)
    if R <= setup.disk.radius:
        raise ValueError("R must exceed the disk radius")
    worst = -math.inf
    worst_z = None
    worst_band = None
    for label in labels:
        u = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        for _ in range(6):  # local refinement around the largest preimage
            w = R * np.exp(1j * u)
            z = setup.pull_back(w, label)
            mods = np.abs(z)
            k = int(np.argmax(mods))
            if mods[k] > worst:
                worst = float(mods[k])
                worst_z = complex(z[k])
                worst_band = label.j
            du = u[1] - u[0] if len(u) > 1 else 2.0 * np.pi / n_samples
            if du * R < 1e-6:
                break
            u = np.linspace(u[k] - du, u[k] + du, 65)
    margin = R - worst
    ok = bool(margin > 0.0)
    if ok:
        setup.validated_radii[R] = tuple(sorted(lb.j for lb in labels))
    return ExpansionReport(ok, margin, worst_z, worst_band)


def select_expansion_radius(spec: MapSpec, setup: StructuralSetup,
                            domains) -> float:
    """Double R from twice the disk radius until the expansion check passes."""
    R = max(2.0 * setup.disk.radius, 1.0)
    while R <= EXPANSION_CAP:
        report = validate_expansion_radius(spec, setup, domains, R)
        if report.ok:
            return R
        R *= 2.0
    raise DeltaBlocked(f"no valid expansion radius up to {EXPANSION_CAP}")


# -- lift and addresses ----------------------------------------------------------


def lift_evaluate(spec: MapSpec, w_log: complex, label: BranchLabel,
                  setup: StructuralSetup) -> complex:
    """2*pi*i-periodic lift value at a log-plane point over the tract.

    Satisfies exp(lift(w)) == f(exp(w)); the strip of the result is the band
    index of the projected point, which makes the lift literally periodic,
    lift(w + 2*pi*i) == lift(w).
    """
    z = np.exp(complex(w_log))
    try:
        w, _ = spec.evaluate(z, 1)
    except Overflow as exc:
        raise OutsideTract("projection escapes evaluation range") from exc
    if abs(w) <= setup.disk.radius:
        raise OutsideTract(f"exp({w_log}) is not in a tract")
    j = setup.band_index(complex(z))
    return complex(branch_log(w, j, setup.strip_cut))


def address_of_orbit(spec: MapSpec, setup: StructuralSetup, z: complex,
                     n: int) -> list[BranchLabel]:
    """Length-n address prefix of the orbit of z through fundamental domains."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    cur = complex(z)
    for k in range(n):
        if setup.image_modulus(cur) <= setup.disk.radius:
            raise OrbitLeftTracts(k + 1)
        out.append(BranchLabel(alpha=0, j=setup.band_index(cur)))
        if k + 1 < n:
            cur, _ = spec.evaluate(cur, 1)
    return out
