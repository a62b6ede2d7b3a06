"""Relative-phase and time-delay maps over the pair-emission cone.

The source is two thin crystal plates in optical contact with orthogonal
optic-axis planes.  A pair born in the first plate crosses the second one
on the extraordinary branch; the pair born in the second plate instead had
its pump cross the first plate on the ordinary branch.  The phase and the
arrival-time difference between those two birth histories, as functions of
where (and at what frequency) the photons land on a distant detection
plane, are what this module evaluates, pointwise and on grids.

Pointwise operations take one EmissionCoord and raise on invalid
kinematics.  Grid sweeps vectorize whole rows, mark bad cells NaN, and are
bitwise deterministic for any worker count: every array expression
combines components explicitly, and the extraordinary-index fixed point
freezes each cell independently, so splitting rows across threads cannot
change a single bit of the result.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import crystal, phasematch, vecgeom
from .crystal import C_NM_FS
from .errors import ConfigError, FitError, RefractionError
from .phasematch import EmissionCoord, Z_NORMAL

DETECTION_MODE = "detection_plane_xy"
ANGULAR_MODE = "angular_theta_phi"

GROUP_ALONG_RAY = "ray"
GROUP_ALONG_WAVEVECTOR = "wavevector"


@dataclass(frozen=True)
class SourceConfig:
    """Full two-crystal source description.

    mu is the fractional pair-birth depth used by the interval formulas
    (the delay itself is mu-free).  group_convention selects how the
    extraordinary group transit through the second crystal is reckoned:
    "ray" evaluates the group index at the walkoff-ray angle and projects
    it onto the wavevector, "wavevector" uses the wavevector angle
    directly.  The two differ by well under a percent in transit time but
    the difference matters when hunting the self-compensating tilt.
    """

    crystal1: crystal.CrystalSpec
    crystal2: crystal.CrystalSpec
    pump: phasematch.PumpConfig
    detection_distance_mm: float = 1200.0
    include_z_offset_phase: bool = False
    mu: float = 0.5
    group_convention: str = GROUP_ALONG_RAY
    base_axes: tuple = None  # nominal (untilted) axis angles, set on constraint

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigError(f"mu must lie in [0, 1], got {self.mu!r}", key="mu")
        if self.detection_distance_mm <= 0.0:
            raise ConfigError("detection distance must be positive",
                              key="detection_distance_mm")
        if self.group_convention not in (GROUP_ALONG_RAY, GROUP_ALONG_WAVEVECTOR):
            raise ConfigError(
                f"group_convention must be {GROUP_ALONG_RAY!r} or "
                f"{GROUP_ALONG_WAVEVECTOR!r}, got {self.group_convention!r}",
                key="group_convention")

    def nominal_axes(self):
        """Axis angles before any pump-tracking rotation was applied."""
        if self.base_axes is not None:
            return self.base_axes
        return ((self.crystal1.axis_theta, self.crystal1.axis_phi),
                (self.crystal2.axis_theta, self.crystal2.axis_phi))


def source_snapshot(source):
    """Plain-dict snapshot of a SourceConfig (degrees/nm/mm, JSON-ready)."""
    def crys(c):
        return {"material": c.material.name,
                "length_mm": c.length_mm,
                "axis_theta_deg": math.degrees(c.axis_theta),
                "axis_phi_deg": math.degrees(c.axis_phi)}
    p = source.pump
    return {
        "pump": {"wavelength_nm": p.wavelength_nm,
                 "theta_p_deg": math.degrees(p.theta_p),
                 "phi_p_deg": math.degrees(p.phi_p),
                 "phase_offset_deg": math.degrees(p.phase_offset)},
        "crystal1": crys(source.crystal1),
        "crystal2": crys(source.crystal2),
        "detection_distance_mm": source.detection_distance_mm,
        "mu": source.mu,
        "include_z_offset_phase": source.include_z_offset_phase,
        "group_convention": source.group_convention,
    }


# ------------------------------------------------------------ array kernels

class _Transit:
    """Extraordinary transit of one photon species through crystal 2,
    for stacked air-side transverse direction components."""

    __slots__ = ("n", "ca_k", "ca_ray", "cos_rho", "rx", "ry", "rz", "valid")

    def __init__(self, spec, omega, sx, sy):
        sx = np.asarray(sx, dtype=float)
        sy = np.asarray(sy, dtype=float)
        s2 = sx * sx + sy * sy
        sz = np.sqrt(np.where(s2 < 1.0, 1.0 - s2, np.nan))
        k_air = np.stack(np.broadcast_arrays(sx, sy, sz), axis=-1)
        K, n = vecgeom.refract_into_extraordinary(
            k_air, Z_NORMAL, 1.0, omega, spec)
        axis = spec.axis_direction()
        ray = crystal.walkoff_ray(K, spec, omega)
        ca = vecgeom.dot3(K, axis)
        rho = crystal.walkoff_angle(spec.material, omega, ca)
        # the ray is K turned by rho away from the axis in their common
        # plane, so its axis cosine is cos(alpha + rho); the closed form
        # keeps the group term insensitive to sub-ulp residue in the ray
        self.n = n
        self.ca_k = ca
        self.cos_rho = np.cos(rho)
        self.ca_ray = (ca * self.cos_rho
                       - np.sqrt(np.maximum(1.0 - ca * ca, 0.0)) * np.sin(rho))
        self.rx = ray[..., 0]
        self.ry = ray[..., 1]
        self.rz = ray[..., 2]
        self.valid = np.isfinite(n) & (self.rz > 0.0)


def _conjugate_components(pump, w_s, sx, sy):
    """Partner frequency and transverse direction components (arrays)."""
    w_p = pump.omega
    w_i = w_p - w_s
    qpx, qpy = pump.transverse_q()
    scale = w_s / C_NM_FS
    six = (qpx - scale * np.asarray(sx, dtype=float)) * C_NM_FS / w_i
    siy = (qpy - scale * np.asarray(sy, dtype=float)) * C_NM_FS / w_i
    return w_i, six, siy


def _phase_values(source, w_s, sx, sy):
    """Relative phase (radians) for arrays of signal transverse components."""
    spec2 = source.crystal2
    d2 = spec2.length_mm
    w_i, six, siy = _conjugate_components(source.pump, w_s, sx, sy)
    evan = six * six + siy * siy >= 1.0
    total = 0.0
    for w, ax, ay in ((w_s, sx, sy), (w_i, six, siy)):
        t = _Transit(spec2, w, np.where(evan, np.nan, ax),
                     np.where(evan, np.nan, ay))
        term = t.n * t.cos_rho + t.rx * np.asarray(ax, float) + t.ry * np.asarray(ay, float)
        contrib = (w * d2 * 1e6 / (C_NM_FS * t.rz)) * term
        contrib = np.where(t.valid, contrib, np.nan)
        total = total + contrib
    if source.include_z_offset_phase:
        d1 = source.crystal1.length_mm
        offset = d1 + source.mu * (d2 - d1)
        total = total + (w_s + w_i) * (offset * 1e6 / C_NM_FS)
    return total + source.pump.phase_offset


def _group_e_effective(source, w, transit):
    """Group index governing the extraordinary transit, per convention."""
    mat = source.crystal2.material
    if source.group_convention == GROUP_ALONG_RAY:
        ng = crystal.group_index(mat, w, "e", cos_alpha=transit.ca_ray)
        return ng * transit.cos_rho
    return crystal.group_index(mat, w, "e", cos_alpha=transit.ca_k)


def _delay_values(source, w, sx, sy):
    """Time delay (fs) for the photon species at frequency w located at the
    given transverse direction components; arrays in, array out."""
    t = _Transit(source.crystal2, w, sx, sy)
    ng_eff = _group_e_effective(source, w, t)
    ng_po = crystal.group_index(source.crystal1.material, source.pump.omega, "o")
    d1 = source.crystal1.length_mm
    d2 = source.crystal2.length_mm
    # two scaled terms, subtracted last: the pointwise interval code builds
    # the same pair so that t1 - t2 reproduces this value bitwise
    dt = (1e6 / C_NM_FS) * (d2 * ng_eff / t.rz) \
        - (1e6 / C_NM_FS) * (d1 * ng_po)
    return np.where(t.valid, dt, np.nan)


def _signal_components(signal):
    s = math.sin(signal.theta)
    return s * math.cos(signal.phi), s * math.sin(signal.phi)


# ---------------------------------------------------------- pointwise ops

def relative_phase(source, signal):
    """Relative phase (radians) between the two pair-birth histories for a
    signal photon at the given air-side coordinate.

    The value is continuous in the coordinate (the formula has no branch
    cuts), so no modular wrapping or unwrapping is involved; reduce it
    mod 2 pi yourself if you need the principal value.  Raises
    KinematicsError for impossible partners and RefractionError when a
    transit fails.
    """
    phasematch.conjugate(signal, source.pump)  # proper error reporting
    sx, sy = _signal_components(signal)
    val = _phase_values(source, signal.omega,
                        np.array([sx]), np.array([sy]))
    v = float(val[0])
    if not math.isfinite(v):
        raise RefractionError(
            "no forward extraordinary transit at this coordinate")
    return v


def _intervals_one(source, coord):
    """(t1, t2) in fs for the photon species whose air-side coordinate and
    frequency are given by coord."""
    w = coord.omega
    sx, sy = _signal_components(coord)
    t = _Transit(source.crystal2, w, np.array([sx]), np.array([sy]))
    if not bool(t.valid[0]):
        raise RefractionError(
            "no forward extraordinary transit at this coordinate")
    ng_eff = float(_group_e_effective(source, w, t)[0])
    rz = float(t.rz[0])

    c1, c2 = source.crystal1, source.crystal2
    mu = source.mu
    d1, d2 = c1.length_mm, c2.length_mm

    # pump extraordinary group transit, per crystal
    st1 = phasematch.pump_internal_state(source.pump, c1)
    st2 = phasematch.pump_internal_state(source.pump, c2)
    w_p = source.pump.omega
    ng_pe1 = crystal.group_index(c1.material, w_p, "e",
                                 cos_alpha=math.cos(st1.alpha))
    ng_pe2 = crystal.group_index(c2.material, w_p, "e",
                                 cos_alpha=math.cos(st2.alpha))
    ng_po1 = crystal.group_index(c1.material, w_p, "o")

    # ordinary transit of the photon through its birth crystal
    s2 = sx * sx + sy * sy
    kz_o = []
    for c in (c1, c2):
        n_o = c.material.index_o(coord.wavelength_nm)
        kz2 = n_o * n_o - s2
        if kz2 <= 0.0:
            raise RefractionError("ordinary wave evanescent in crystal")
        kz_o.append(math.sqrt(kz2) / n_o)
    ng_o1 = crystal.group_index(c1.material, coord.omega, "o")
    ng_o2 = crystal.group_index(c2.material, coord.omega, "o")

    k = 1e6 / C_NM_FS
    seg_pe1 = k * (mu * d1 * ng_pe1)
    seg_o1 = k * ((1.0 - mu) * d1 * ng_o1 / kz_o[0])
    seg_pe2 = k * (mu * d2 * ng_pe2)
    seg_o2 = k * ((1.0 - mu) * d2 * ng_o2 / kz_o[1])
    seg_e = k * (d2 * ng_eff / rz)
    seg_po = k * (d1 * ng_po1)
    if seg_pe1 == seg_pe2 and seg_o1 == seg_o2:
        # identical plates: share the common segment sum so t1 - t2
        # telescopes onto the delay value at working precision
        t2 = (seg_pe1 + seg_o1) + seg_po
        t1 = t2 + (seg_e - seg_po)
    else:
        t1 = seg_pe1 + seg_o1 + seg_e
        t2 = seg_po + seg_pe2 + seg_o2
    return t1, t2


def _coord_for_photon(source, signal, photon):
    if photon == "s":
        return signal
    if photon == "i":
        return phasematch.conjugate(signal, source.pump)
    raise ValueError(f"photon must be 's' or 'i', got {photon!r}")


def time_intervals(source, signal, photon="s"):
    """Birth-to-exit transit times (t1, t2) in fs for the two possible birth
    crystals of the selected photon ('s' = the signal itself, 'i' = its
    conjugate partner).  t1 traces a pair born at depth mu*d in the first
    crystal, t2 a pair born at the equivalent depth in the second."""
    return _intervals_one(source, _coord_for_photon(source, signal, photon))


def time_delay(source, signal, photon="s"):
    """Arrival-time difference (fs) between the two birth histories for the
    selected photon; independent of mu, and equal to t1 - t2 when the two
    plates have equal length."""
    coord = _coord_for_photon(source, signal, photon)
    sx, sy = _signal_components(coord)
    val = _delay_values(source, coord.omega, np.array([sx]), np.array([sy]))
    v = float(val[0])
    if not math.isfinite(v):
        raise RefractionError(
            "no forward extraordinary transit at this coordinate")
    return v


# ------------------------------------------------------------- grid sweeps

@dataclass(frozen=True)
class GridSpec:
    """Rectangular sweep grid.  Coordinates are mm on the detection plane
    in detection_plane_xy mode, degrees (polar, azimuth) in
    angular_theta_phi mode.  Cell (i, j) sits at (coord2[i], coord1[j]);
    storage is row-major over coord2 rows."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    mode: str = DETECTION_MODE

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("grid must have at least one cell per axis",
                              key="grid")
        if self.mode not in (DETECTION_MODE, ANGULAR_MODE):
            raise ConfigError(f"unknown grid mode {self.mode!r}", key="grid.mode")

    def axes(self):
        return (np.linspace(self.x_min, self.x_max, self.nx),
                np.linspace(self.y_min, self.y_max, self.ny))


@dataclass
class MapGrid:
    """Computed map: axis vectors, one or two value planes (ny, nx), and a
    reproducible metadata snapshot.  Invalid cells are NaN; exporters spell
    them `NA`.  Phase planes are stored directly in degrees so that text
    round-trips reproduce the array bitwise."""

    kind: str               # "phase" | "delay"
    mode: str
    coord1: np.ndarray
    coord2: np.ndarray
    coord_names: tuple
    value_names: tuple
    values: tuple           # of (ny, nx) float arrays
    metadata: dict = field(default_factory=dict)

    def wrapped(self):
        """Phase plane folded to [0, 360) degrees (phase maps only)."""
        if self.kind != "phase":
            raise ValueError("wrapped() applies to phase maps")
        return np.mod(self.values[0], 360.0)

    def same_data(self, other):
        def eq(a, b):
            return a.shape == b.shape and np.array_equal(a, b, equal_nan=True)
        return (self.kind == other.kind and self.mode == other.mode
                and self.coord_names == other.coord_names
                and self.value_names == other.value_names
                and eq(self.coord1, other.coord1) and eq(self.coord2, other.coord2)
                and len(self.values) == len(other.values)
                and all(eq(a, b) for a, b in zip(self.values, other.values)))


def _grid_transverse(source, grid_spec, xs, row_y):
    """Transverse direction components for one grid row."""
    if grid_spec.mode == DETECTION_MODE:
        ang = vecgeom.detection_point_to_angles(
            xs, row_y, source.detection_distance_mm)
        theta, phi = ang.theta, ang.phi
    else:
        theta = np.deg2rad(xs)
        phi = np.full_like(xs, math.radians(row_y))
    s = np.sin(theta)
    return s * np.cos(phi), s * np.sin(phi)


def _default_workers():
    import os
    return min(4, os.cpu_count() or 1)


def _sweep(source, grid_spec, filter_center_nm, workers, row_func, n_planes):
    xs, ys = grid_spec.axes()
    planes = [np.empty((grid_spec.ny, grid_spec.nx)) for _ in range(n_planes)]

    def do_rows(i0, i1):
        for i in range(i0, i1):
            sx, sy = _grid_transverse(source, grid_spec, xs, ys[i])
            for plane, vals in zip(planes, row_func(sx, sy)):
                plane[i, :] = vals

    nw = workers if workers else _default_workers()
    if nw <= 1 or grid_spec.ny == 1:
        do_rows(0, grid_spec.ny)
    else:
        block = max(1, -(-grid_spec.ny // (4 * nw)))
        bounds = list(range(0, grid_spec.ny, block)) + [grid_spec.ny]
        with ThreadPoolExecutor(max_workers=nw) as pool:
            futs = [pool.submit(do_rows, a, b)
                    for a, b in zip(bounds[:-1], bounds[1:])]
            for f in futs:
                f.result()
    return xs, ys, planes


def _coord_names(mode):
    if mode == DETECTION_MODE:
        return ("x_mm", "y_mm")
    return ("theta_deg", "phi_deg")


def sweep_phase_map(source, grid_spec, filter_center_nm=None, workers=None):
    """Relative-phase map over a grid, in degrees.

    filter_center_nm selects the signal wavelength at every cell; None
    means degenerate (twice the pump wavelength).  Results are bit-identical
    for any worker count.
    """
    w_s = (crystal.omega_from_nm(filter_center_nm) if filter_center_nm
           else 0.5 * source.pump.omega)

    def rows(sx, sy):
        return (np.degrees(_phase_values(source, w_s, sx, sy)),)

    xs, ys, planes = _sweep(source, grid_spec, filter_center_nm, workers,
                            rows, 1)
    meta = {"source": source_snapshot(source),
            "filter_nm": (filter_center_nm if filter_center_nm
                          else 2.0 * source.pump.wavelength_nm)}
    return MapGrid(kind="phase", mode=grid_spec.mode, coord1=xs, coord2=ys,
                   coord_names=_coord_names(grid_spec.mode),
                   value_names=("phase_deg",), values=tuple(planes),
                   metadata=meta)


def sweep_delay_map(source, grid_spec, filter_center_nm=None, workers=None):
    """Time-delay map: per cell, the delay of the photon detected there
    behind the filter (dt_s_fs) and the delay of its conjugate partner
    (dt_i_fs)."""
    w_s = (crystal.omega_from_nm(filter_center_nm) if filter_center_nm
           else 0.5 * source.pump.omega)

    def rows(sx, sy):
        dts = _delay_values(source, w_s, sx, sy)
        w_i, six, siy = _conjugate_components(source.pump, w_s, sx, sy)
        evan = six * six + siy * siy >= 1.0
        dti = _delay_values(source, w_i,
                            np.where(evan, np.nan, six),
                            np.where(evan, np.nan, siy))
        return dts, dti

    xs, ys, planes = _sweep(source, grid_spec, filter_center_nm, workers,
                            rows, 2)
    meta = {"source": source_snapshot(source),
            "filter_nm": (filter_center_nm if filter_center_nm
                          else 2.0 * source.pump.wavelength_nm)}
    return MapGrid(kind="delay", mode=grid_spec.mode, coord1=xs, coord2=ys,
                   coord_names=_coord_names(grid_spec.mode),
                   value_names=("dt_s_fs", "dt_i_fs"), values=tuple(planes),
                   metadata=meta)


# ---------------------------------------------------------------- analysis

@dataclass(frozen=True)
class QuadraticFit:
    """Least-squares quadratic value = c0 + c1 t + c2 t^2 along a map line,
    with t the signed polar angle in radians."""

    c0: float
    c1: float
    c2: float
    rms_residual: float
    thetas: np.ndarray
    samples: np.ndarray

    def evaluate(self, theta):
        return self.c0 + self.c1 * theta + self.c2 * theta * theta

    def slope(self, theta):
        """Derivative of the fitted parabola: the angular phase slope."""
        return self.c1 + 2.0 * self.c2 * theta

    @property
    def span(self):
        return float(np.nanmax(self.samples) - np.nanmin(self.samples))


def profile_line(grid, line):
    """Extract (signed polar angle rad, values) along a map line.

    line is "y=0" or "x=0" for detection-plane maps, "phi=<degrees>" for
    angular maps; the nearest grid row/column is used.
    """
    if grid.mode == DETECTION_MODE:
        L = grid.metadata.get("source", {}).get("detection_distance_mm")
        if L is None:
            raise FitError("grid metadata lacks the detection distance")
        if line == "y=0":
            i = int(np.argmin(np.abs(grid.coord2)))
            vals = grid.values[0][i, :]
            thetas = np.arctan(grid.coord1 / L)
        elif line == "x=0":
            j = int(np.argmin(np.abs(grid.coord1)))
            vals = grid.values[0][:, j]
            thetas = np.arctan(grid.coord2 / L)
        else:
            raise FitError(f"unknown line spec {line!r} for a detection-plane map")
    else:
        if not line.startswith("phi="):
            raise FitError(f"unknown line spec {line!r} for an angular map")
        try:
            target = float(line[4:])
        except ValueError:
            raise FitError(f"bad azimuth in line spec {line!r}") from None
        i = int(np.argmin(np.abs(grid.coord2 - target)))
        vals = grid.values[0][i, :]
        thetas = np.deg2rad(grid.coord1)
    return thetas, vals


def fit_quadratic_profile(grid, line="y=0"):
    """Quadratic fit of a map profile in the signed polar angle.

    Invalid (NaN) cells are dropped; fewer than five valid samples raises
    FitError.  Returns the coefficients, the rms residual (same unit as the
    map values), and the profile itself for plotting.
    """
    thetas, vals = profile_line(grid, line)
    keep = np.isfinite(vals)
    if int(np.count_nonzero(keep)) < 5:
        raise FitError(f"profile {line!r} has fewer than 5 valid samples")
    t = thetas[keep]
    v = vals[keep]
    c2, c1, c0 = np.polyfit(t, v, 2)
    resid = v - (c0 + c1 * t + c2 * t * t)
    rms = float(np.sqrt(np.mean(resid * resid)))
    return QuadraticFit(c0=float(c0), c1=float(c1), c2=float(c2),
                        rms_residual=rms, thetas=t, samples=v)
