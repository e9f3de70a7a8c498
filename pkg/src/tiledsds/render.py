"""A small sphere tracer used to exercise diffuse shading and the SDF density-blob bias.

World frame is y-up. A camera at polar angle ``theta`` (from +y) and azimuth
``phi`` (from +z towards +x) sits at
``radius * (sin(theta) sin(phi), cos(theta), sin(theta) cos(phi))`` and looks
at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

MODES = ("shaded", "textureless", "normal")
MAX_STEPS = 128
SURFACE_TOL = 1e-4
FAR = 100.0
NEWTON_ITERS = 4
GRAD_EPS = 1e-6

SDF = Callable[[np.ndarray], np.ndarray]


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def _check_unit_interval(name: str, v: np.ndarray) -> None:
    if ((v < 0) | (v > 1)).any():
        raise ValueError(f"{name} components must lie in [0, 1], got {v}")


@dataclass(frozen=True, eq=False)
class PointLight:
    position: np.ndarray
    color: np.ndarray = (1.0, 1.0, 1.0)
    ambient: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("position", "color", "ambient"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        _check_unit_interval("color", self.color)
        _check_unit_interval("ambient", self.ambient)


@dataclass(frozen=True, eq=False)
class SurfaceSample:
    position: np.ndarray
    normal: np.ndarray
    albedo: np.ndarray

    def __post_init__(self):
        for name in ("position", "normal", "albedo"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-9:
            raise ValueError(f"normal must be unit length, got norm {np.linalg.norm(self.normal)}")
        _check_unit_interval("albedo", self.albedo)


@dataclass(frozen=True)
class CameraPose:
    radius: float
    polar: float = math.pi / 2
    azimuth: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"camera radius must be positive, got {self.radius}")
        if not 0 < self.polar < math.pi:
            raise ValueError(f"polar angle must lie in (0, pi), got {self.polar}")
        if not 0 <= self.azimuth < 2 * math.pi:
            raise ValueError(f"azimuth must lie in [0, 2pi), got {self.azimuth}")

    @property
    def position(self) -> np.ndarray:
        return self.radius * spherical_direction(self.polar, self.azimuth)

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up, forward) unit vectors; forward points at the origin."""
        forward = -spherical_direction(self.polar, self.azimuth)
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
        right /= np.linalg.norm(right)
        up = np.cross(right, forward)
        return right, up, forward


@dataclass(frozen=True)
class BlobParams:
    lambda_tau: float = 1.0
    r: float = 0.0

    def __post_init__(self):
        if self.lambda_tau < 0 or self.r < 0:
            raise ValueError("lambda_tau and r must be non-negative")


def spherical_direction(polar: float, azimuth: float) -> np.ndarray:
    s = math.sin(polar)
    return np.array([s * math.sin(azimuth), math.cos(polar), s * math.cos(azimuth)])


def shade_arrays(position, normal, albedo, light: PointLight) -> np.ndarray:
    """Vectorized diffuse shading over ``(..., 3)`` arrays, clamped to [0, 1]."""
    to_light = light.position - np.asarray(position, dtype=np.float64)
    dist = np.linalg.norm(to_light, axis=-1, keepdims=True)
    if (dist == 0).any():
        raise ValueError("light coincides with a shaded point")
    cosine = np.maximum(0.0, np.sum(np.asarray(normal) * to_light, axis=-1, keepdims=True) / dist)
    c = np.asarray(albedo) * (light.color * cosine + light.ambient)
    return np.clip(c, 0.0, 1.0)


def shade(sample: SurfaceSample, light: PointLight) -> np.ndarray:
    return shade_arrays(sample.position, sample.normal, sample.albedo, light)


def shade_textureless(sample: SurfaceSample, light: PointLight) -> np.ndarray:
    return shade_arrays(sample.position, sample.normal, np.ones(3), light)


def density_blob_bias(mu_norm: float, params: BlobParams = BlobParams()) -> float:
    """Shape bias ``lambda_tau * (|mu| - r)^2`` added to a predicted SDF value."""
    if mu_norm < 0:
        raise ValueError(f"mu_norm is a norm and must be >= 0, got {mu_norm}")
    d = mu_norm - params.r
    return params.lambda_tau * d * d


def sphere_sdf(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SDF:
    c = np.asarray(center, dtype=np.float64)

    def sdf(p: np.ndarray) -> np.ndarray:
        return np.linalg.norm(p - c, axis=-1) - radius

    return sdf


def sdf_gradient(sdf: SDF, p: np.ndarray, eps: float = GRAD_EPS) -> np.ndarray:
    """Central-difference gradient of ``sdf`` at ``(..., 3)`` points."""
    g = np.empty_like(p)
    for axis in range(3):
        d = np.zeros(3)
        d[axis] = eps
        g[..., axis] = (sdf(p + d) - sdf(p - d)) / (2 * eps)
    return g


def camera_rays(camera: CameraPose, resolution: int, fov_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Origin and ``(res, res, 3)`` unit directions through pixel centers; row 0 is the top."""
    right, up, forward = camera.basis()
    half = math.tan(math.radians(fov_deg) / 2)
    coords = ((np.arange(resolution) + 0.5) / resolution * 2 - 1) * half
    x = coords[None, :, None]
    y = -coords[:, None, None]
    dirs = forward + x * right + y * up
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return camera.position, dirs


def sphere_trace(sdf: SDF, origin: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ray distances and hit mask for rays ``origin + t * dirs``.

    A ray hits once ``|sdf| < SURFACE_TOL`` within ``MAX_STEPS`` steps; hit
    distances are then polished with a few Newton steps along the ray.
    """
    flat = dirs.reshape(-1, 3)
    t = np.zeros(flat.shape[0])
    hit = np.zeros(flat.shape[0], dtype=bool)
    active = np.ones(flat.shape[0], dtype=bool)
    for _ in range(MAX_STEPS):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        d = sdf(origin + t[idx, None] * flat[idx])
        done = np.abs(d) < SURFACE_TOL
        hit[idx[done]] = True
        t[idx[~done]] += d[~done]
        active[idx[done]] = False
        active[idx[t[idx] > FAR]] = False

    idx = np.flatnonzero(hit)
    for _ in range(NEWTON_ITERS):
        p = origin + t[idx, None] * flat[idx]
        slope = np.sum(sdf_gradient(sdf, p) * flat[idx], axis=-1)
        ok = np.abs(slope) > 1e-3
        t[idx[ok]] -= sdf(p[ok]) / slope[ok]
    return t.reshape(dirs.shape[:-1]), hit.reshape(dirs.shape[:-1])


def render_sdf(
    sdf: SDF,
    camera: CameraPose,
    light: PointLight,
    mode: str = "shaded",
    resolution: int = 64,
    *,
    fov_deg: float = 40.0,
    albedo: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Render an ``(res, res, 3)`` float image in [0, 1]; misses stay black.

    ``albedo`` maps ``(N, 3)`` hit points to ``(N, 3)`` colors (default white).
    ``normal`` mode encodes unit normals as ``(n + 1) / 2``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown render mode {mode!r}; expected one of {MODES}")
    if not 1 <= resolution <= 256:
        raise ValueError(f"resolution must lie in [1, 256], got {resolution}")
    origin, dirs = camera_rays(camera, resolution, fov_deg)
    t, hit = sphere_trace(sdf, origin, dirs)
    image = np.zeros((resolution, resolution, 3))
    if not hit.any():
        return image
    points = origin + t[hit][:, None] * dirs[hit]
    normals = sdf_gradient(sdf, points)
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    if mode == "normal":
        image[hit] = (normals + 1.0) / 2.0
    elif mode == "textureless":
        image[hit] = shade_arrays(points, normals, np.ones(3), light)
    else:
        rho = np.ones_like(points) if albedo is None else albedo(points)
        image[hit] = shade_arrays(points, normals, rho, light)
    return image


def projected_disc_area(sphere_radius: float, camera_distance: float, resolution: int, fov_deg: float) -> float:
    """Pixel area of a centered sphere's silhouette under the pinhole model of :func:`camera_rays`."""
    half_angle = math.asin(sphere_radius / camera_distance)
    pixel = 2 * math.tan(math.radians(fov_deg) / 2) / resolution
    return math.pi * (math.tan(half_angle) / pixel) ** 2
