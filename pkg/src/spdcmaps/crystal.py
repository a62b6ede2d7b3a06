"""Material dispersion and uniaxial crystal optics.

Sellmeier coefficient sets live in data/materials.yaml and are loaded once
into an immutable registry.  On top of them: ordinary / extraordinary /
angle-dependent refractive indices, group indices by Richardson-refined
central differences, and the walkoff (Poynting) ray construction.

Unit conventions, used across the whole package:
    lengths mm, wavelengths nm, time fs, angular frequency rad/fs,
    c = 299.792458 nm/fs.
A transit time in fs over a length d in mm is d * 1e6 * n_g / c.

Index functions accept scalars or ndarrays.  A scalar wavelength outside a
material's validity window raises RangeError; array input gets NaN in the
offending slots instead so grid sweeps can mark cells invalid and carry on.
"""

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
import yaml

from .errors import ConfigError, RangeError

C_NM_FS = 299.792458  # vacuum speed of light, nm per fs

# central-difference step for group-index derivatives, nm


def omega_from_nm(lam_nm):
    """Angular frequency (rad/fs) of a vacuum wavelength (nm)."""
    return 2.0 * np.pi * C_NM_FS / lam_nm


def nm_from_omega(omega):
    return 2.0 * np.pi * C_NM_FS / omega


@dataclass(frozen=True)
class SellmeierFit:
    """One n^2(lambda) fit: a + sum b*(L or 1)/(L - c) + d_lam2*L, L = um^2."""

    a: float
    poles: tuple  # of (b, c, lam2_numerator)
    d_lam2: float = 0.0

    def index(self, lam_nm):
        lam_um = np.asarray(lam_nm, dtype=float) * 1e-3
        L = lam_um * lam_um
        n2 = self.a + self.d_lam2 * L
        for b, c, lam2_num in self.poles:
            n2 = n2 + (b * L if lam2_num else b) / (L - c)
        return np.sqrt(n2)


@dataclass(frozen=True)
class Material:
    name: str
    ordinary: SellmeierFit
    extraordinary: SellmeierFit
    valid_nm: tuple  # (low, high) inclusive

    def _checked(self, fit, lam_nm):
        lam = np.asarray(lam_nm, dtype=float)
        bad = (lam < self.valid_nm[0]) | (lam > self.valid_nm[1])
        if lam.ndim == 0:
            if bad:
                raise RangeError(
                    f"{self.name}: wavelength {float(lam):g} nm outside validity "
                    f"range [{self.valid_nm[0]:g}, {self.valid_nm[1]:g}] nm")
            return float(fit.index(float(lam)))
        n = fit.index(lam)
        if np.any(bad):
            n = np.where(bad, np.nan, n)
        return n

    def index_o(self, lam_nm):
        """Ordinary refractive index."""
        return self._checked(self.ordinary, lam_nm)

    def index_e_principal(self, lam_nm):
        """Principal extraordinary index (propagation perpendicular to axis)."""
        return self._checked(self.extraordinary, lam_nm)

    def index_e(self, lam_nm, cos_alpha):
        """Extraordinary index at angle alpha to the optic axis (ellipsoid
        section), parameterized by cos(alpha) which is what callers have."""
        n_o = self.index_o(lam_nm)
        n_ep = self.index_e_principal(lam_nm)
        ca2 = np.asarray(cos_alpha) * np.asarray(cos_alpha)
        return 1.0 / np.sqrt(ca2 / (n_o * n_o) + (1.0 - ca2) / (n_ep * n_ep))


def _load_registry_dict(raw):
    def fit(d):
        poles = tuple(
            (float(p["b"]), float(p["c"]), bool(p.get("lam2_numerator", False)))
            for p in d.get("poles", ()))
        return SellmeierFit(a=float(d["a"]), poles=poles,
                            d_lam2=float(d.get("d_lam2", 0.0)))

    out = {}
    for name, m in raw["materials"].items():
        out[name] = Material(
            name=name,
            ordinary=fit(m["n_o"]),
            extraordinary=fit(m["n_e"]),
            valid_nm=(float(m["valid_nm"][0]), float(m["valid_nm"][1])))
    return out


@lru_cache(maxsize=1)
def _registry():
    text = resources.files("spdcmaps").joinpath("data/materials.yaml").read_text()
    return _load_registry_dict(yaml.safe_load(text))


def available_materials():
    return sorted(_registry())


def get_material(name):
    reg = _registry()
    if name in reg:
        return reg[name]
    folded = {k.lower(): v for k, v in reg.items()}
    try:
        return folded[str(name).lower()]
    except KeyError:
        raise ConfigError(
            f"unknown material {name!r}; available: {available_materials()}",
            key="material") from None


# ---------------------------------------------------------------- op layer
# Module-level functions take (material, omega in rad/fs); Material methods
# take wavelengths.  Both views are used: the solvers think in frequency,
# the dispersion data in wavelength.

def n_o(material, omega):
    return material.index_o(nm_from_omega(omega))


def n_e_principal(material, omega):
    return material.index_e_principal(nm_from_omega(omega))


def n_e_angle(material, omega, alpha):
    return material.index_e(nm_from_omega(omega), np.cos(alpha))


def _fit_slope(fit, lam_nm):
    """d(index)/d(lambda) in 1/nm, differentiated in closed form. The fit
    is rational in L = lambda^2 um^2, so the derivative is exact; no
    finite-difference noise floor enters downstream group delays."""
    lam = np.asarray(lam_nm, dtype=float)
    L = (lam * lam) * 1e-6
    dn2_dL = np.full_like(lam, fit.d_lam2)
    for b, c, lam2_num in fit.poles:
        den = L - c
        dn2_dL = dn2_dL - (b * c if lam2_num else b) / (den * den)
    # dL/dlam = 2 lam 1e-6, and dn/dlam = (dn2/dlam) / (2 n)
    slope = dn2_dL * lam * 1e-6 / fit.index(lam)
    return slope if lam.ndim else float(slope)


def group_index(material, omega, polarization="o", cos_alpha=None):
    """Group index n_g = n - lambda dn/dlambda (equivalently n + w dn/dw).

    polarization "o" uses the ordinary fit; "e" uses the ellipsoid index at
    fixed geometric angle alpha (cos_alpha given; None means the principal
    plane, alpha = 90 deg).  Derivatives come from the closed-form fit
    slope, so the result is as smooth in the inputs as the index itself.
    """
    lam = nm_from_omega(omega)
    if polarization == "o":
        return material.index_o(lam) - lam * _fit_slope(material.ordinary, lam)
    if polarization != "e":
        raise ValueError(f"polarization must be 'o' or 'e', got {polarization!r}")
    if cos_alpha is None:
        return (material.index_e_principal(lam)
                - lam * _fit_slope(material.extraordinary, lam))
    nn_o = material.index_o(lam)
    nn_ep = material.index_e_principal(lam)
    ca2 = np.asarray(cos_alpha) * np.asarray(cos_alpha)
    n = 1.0 / np.sqrt(ca2 / (nn_o * nn_o) + (1.0 - ca2) / (nn_ep * nn_ep))
    slope = (n * n * n) * (
        ca2 * _fit_slope(material.ordinary, lam) / (nn_o * nn_o * nn_o)
        + (1.0 - ca2) * _fit_slope(material.extraordinary, lam)
        / (nn_ep * nn_ep * nn_ep))
    return n - lam * slope


def walkoff_angle(material, omega, cos_alpha):
    """Walkoff angle rho between extraordinary wavevector and ray.

    rho = arctan[(n(alpha)^2 / 2) (1/n_e^2 - 1/n_o^2) sin 2alpha], positive
    for negative uniaxial crystals at 0 < alpha < 90 deg, meaning the ray
    leans away from the optic axis.
    """
    lam = nm_from_omega(omega)
    nn_o = material.index_o(lam)
    nn_e = material.index_e_principal(lam)
    n = material.index_e(lam, cos_alpha)
    ca = np.asarray(cos_alpha, dtype=float)
    sin2a = 2.0 * ca * np.sqrt(np.maximum(1.0 - ca * ca, 0.0))
    return np.arctan(
        0.5 * n * n * (1.0 / (nn_e * nn_e) - 1.0 / (nn_o * nn_o)) * sin2a)


_AXIS_EPS = 1e-15


def walkoff_ray(k_e, crystal_spec, omega):
    """Unit Poynting (ray) direction for an extraordinary wave.

    Rotates k_e by the walkoff angle within the (k_e, optic axis) plane,
    away from the axis.  Works on (..., 3) stacks; along the axis (or
    perpendicular to it) the walkoff vanishes and the ray equals k_e.
    """
    k = np.asarray(k_e, dtype=float)
    axis = crystal_spec.axis_direction()
    ca = np.asarray(
        k[..., 0] * axis[0] + k[..., 1] * axis[1] + k[..., 2] * axis[2])
    rho = np.asarray(walkoff_angle(crystal_spec.material, omega, ca))
    # in-plane unit vector pointing from k toward the axis
    perp = axis - ca[..., np.newaxis] * k
    pn = np.sqrt(perp[..., 0] ** 2 + perp[..., 1] ** 2 + perp[..., 2] ** 2)
    safe = pn > _AXIS_EPS
    u = perp / np.where(safe, pn, 1.0)[..., np.newaxis]
    ray = np.cos(rho)[..., np.newaxis] * k - np.sin(rho)[..., np.newaxis] * u
    if np.ndim(safe) == 0:
        return ray if safe else k.copy()
    return np.where(safe[..., np.newaxis], ray, k)


@dataclass(frozen=True)
class CrystalSpec:
    """A cut uniaxial crystal plate: material, thickness, optic-axis
    orientation (polar angle from the face normal +z, azimuth in x-y)."""

    material: Material
    length_mm: float
    axis_theta: float
    axis_phi: float

    def __post_init__(self):
        if self.length_mm <= 0:
            raise ConfigError("crystal length must be positive", key="length_mm")

    def axis_direction(self):
        st = np.sin(self.axis_theta)
        v = np.array([st * np.cos(self.axis_phi),
                      st * np.sin(self.axis_phi),
                      np.cos(self.axis_theta)])
        # sub-ulp residue of cardinal-angle trig (cos(pi/2) and friends);
        # zeroing it keeps crossed-plate mirror planes exact
        v[np.abs(v) < _AXIS_EPS] = 0.0
        return v

    def with_axis(self, axis_theta, axis_phi):
        return CrystalSpec(self.material, self.length_mm, axis_theta, axis_phi)
