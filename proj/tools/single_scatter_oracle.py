#!/usr/bin/env python3
# Copyright 2026 The vptdn Authors
# SPDX-License-Identifier: Apache-2.0
"""Ray-marching quadrature for a single-scattering sphere.

Writes the scene description and the expected filtered pixel values to
tests/data/single_scatter.json. The renderer test loads the same file, so the
scene lives in one place. Nothing here imports the engine.

The pixel value is the filter-weighted film integral

    I_j = sum_src int w(u - c_j) L(u) du / sum_src int w(u - c_j) du

over in-bounds source pixels, with w a separable Gaussian (sigma 0.5,
truncated at one pixel). L along each ray is

    L = int T(t) mu(t) a(t) I / (4 pi r^2) T_light(t) dt + T(D) E.
"""

import argparse
import json
import math
import pathlib
import time

import numpy as np

SCENE = {
    "width": 16,
    "height": 16,
    "camera": {"position": [0.0, 0.25, 2.2], "target": [0.0, 0.0, 0.0], "up": [0.0, 1.0, 0.0], "fov_deg": 40.0},
    "volume": {"dims": [16, 16, 16], "spacing": 1.0 / 16.0, "radius": 0.4},
    "tf": {
        "density_scale": 4.0,
        "points": [
            {"x": 0.0, "albedo": [0.6, 0.6, 0.6], "opacity": 0.0},
            {"x": 1.0, "albedo": [0.9, 0.7, 0.5], "opacity": 1.0},
        ],
    },
    "light": {"position": [1.4, 1.1, 0.9], "intensity": [6.0, 5.0, 4.0]},
    "environment": [0.05, 0.06, 0.08],
    "max_bounces": 1,
}

SIGMA = 0.5


def sphere_grid(vol):
    n = vol["dims"][0]
    h = vol["spacing"]
    centers = (np.arange(n) + 0.5) * h - 0.5 * n * h
    z, y, x = np.meshgrid(centers, centers, centers, indexing="ij")
    r = np.sqrt(x * x + y * y + z * z) / (n * h)
    return (r <= vol["radius"]).astype(np.float64)  # indexed [z, y, x]


class Field:
    def __init__(self, scene):
        vol = scene["volume"]
        self.grid = sphere_grid(vol)
        self.n = vol["dims"][0]
        self.h = vol["spacing"]
        self.half = 0.5 * self.n * self.h
        tf = scene["tf"]
        self.scale = tf["density_scale"]
        p0, p1 = tf["points"]
        self.op0, self.op1 = p0["opacity"], p1["opacity"]
        self.a0, self.a1 = np.array(p0["albedo"]), np.array(p1["albedo"])

    def scalar(self, p):
        inside = np.all(np.abs(p) <= self.half, axis=-1)
        g = (p + self.half) / self.h - 0.5
        fl = np.floor(g)
        f = g - fl
        i0 = np.clip(fl.astype(np.int64), 0, self.n - 1)
        i1 = np.clip(fl.astype(np.int64) + 1, 0, self.n - 1)
        out = np.zeros(p.shape[:-1])
        for cz in (0, 1):
            wz = f[..., 2] if cz else 1.0 - f[..., 2]
            iz = i1[..., 2] if cz else i0[..., 2]
            for cy in (0, 1):
                wy = f[..., 1] if cy else 1.0 - f[..., 1]
                iy = i1[..., 1] if cy else i0[..., 1]
                for cx in (0, 1):
                    wx = f[..., 0] if cx else 1.0 - f[..., 0]
                    ix = i1[..., 0] if cx else i0[..., 0]
                    out += wz * wy * wx * self.grid[iz, iy, ix]
        return np.where(inside, out, 0.0)

    def mu(self, s):
        return self.scale * (self.op0 + s * (self.op1 - self.op0))

    def albedo(self, s):
        return self.a0 + s[..., None] * (self.a1 - self.a0)


def box_span(o, d, half):
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t0 = (-half - o) * inv
        t1 = (half - o) * inv
    tn = np.nanmax(np.minimum(t0, t1), axis=-1)
    tf = np.nanmin(np.maximum(t0, t1), axis=-1)
    return np.maximum(tn, 0.0), tf


def light_transmittance(field, light, pts, step):
    """Midpoint-rule optical depth from each point to the light."""
    to_light = light - pts
    dist = np.linalg.norm(to_light, axis=1)
    d = to_light / dist[:, None]
    tn, tf = box_span(pts, d, field.half)
    length = np.maximum(np.minimum(tf, dist) - tn, 0.0)
    # Same number of steps for every point; each step is at most `step`.
    k = max(1, int(math.ceil(np.max(length) / step)))
    dt = length / k
    t = tn[:, None] + (np.arange(k)[None, :] + 0.5) * dt[:, None]
    s = field.scalar(pts[:, None, :] + t[..., None] * d[:, None, :])
    return np.exp(-np.sum(field.mu(s), axis=1) * dt)


def radiance(field, scene, o, d, step):
    light = np.array(scene["light"]["position"])
    intensity = np.array(scene["light"]["intensity"])
    env = np.array(scene["environment"])
    tn, tf = box_span(o, d, field.half)
    if not tf > tn:
        return env.copy()
    k = max(1, int(math.ceil((tf - tn) / step)))
    dt = (tf - tn) / k
    t = tn + (np.arange(k) + 0.5) * dt
    pts = o + t[:, None] * d
    s = field.scalar(pts)
    mu = field.mu(s)
    tau = np.concatenate([[0.0], np.cumsum(mu * dt)])
    # Transmittance to the midpoint of each step.
    t_cam = np.exp(-(tau[:-1] + 0.5 * mu * dt))
    live = mu > 0.0
    result = env * math.exp(-tau[-1])
    if np.any(live):
        p = pts[live]
        r2 = np.sum((light - p) ** 2, axis=1)
        tl = light_transmittance(field, light, p, step)
        w = t_cam[live] * mu[live] * tl / (4.0 * math.pi * r2) * dt
        result = result + np.sum(w[:, None] * field.albedo(s[live]) * intensity, axis=0)
    return result


def camera_basis(cam):
    pos = np.array(cam["position"])
    fwd = np.array(cam["target"]) - pos
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, np.array(cam["up"]))
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)
    return pos, fwd, right, up


def filter_1d(offset):
    return np.where(np.abs(offset) <= 1.0, np.exp(-offset * offset / (2 * SIGMA * SIGMA)), 0.0)


def render(scene, order, step):
    w, h = scene["width"], scene["height"]
    field = Field(scene)
    pos, fwd, right, up = camera_basis(scene["camera"])
    tan_half = math.tan(math.radians(scene["camera"]["fov_deg"]) / 2.0)
    aspect = w / h
    # Gauss-Legendre nodes on each half pixel, so the filter cut-offs at
    # source pixel centers fall on cell edges.
    xg, wg = np.polynomial.legendre.leggauss(order)
    local = np.concatenate([0.25 + 0.25 * xg, 0.75 + 0.25 * xg])
    lw = np.concatenate([0.25 * wg, 0.25 * wg])
    fx = (np.arange(w)[:, None] + local[None, :]).ravel()
    fy = (np.arange(h)[:, None] + local[None, :]).ravel()
    wxs = np.tile(lw, w)
    wys = np.tile(lw, h)

    film = np.zeros((len(fy), len(fx), 3))
    for iy, v in enumerate(fy):
        for ix, u in enumerate(fx):
            sx = (2.0 * u / w - 1.0) * tan_half * aspect
            sy = (1.0 - 2.0 * v / h) * tan_half
            d = fwd + sx * right + sy * up
            film[iy, ix] = radiance(field, scene, pos, d / np.linalg.norm(d), step)

    img = np.zeros((h, w, 3))
    for py in range(h):
        ky = filter_1d(fy - (py + 0.5)) * wys
        for px in range(w):
            kx = filter_1d(fx - (px + 0.5)) * wxs
            k = ky[:, None] * kx[None, :]
            img[py, px] = np.tensordot(k, film, axes=([0, 1], [0, 1])) / np.sum(k)
    return img


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path,
                    default=pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "single_scatter.json")
    ap.add_argument("--order", type=int, default=3, help="Gauss-Legendre nodes per half pixel and axis")
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--check", action="store_true", help="also run a coarser pass and report the difference")
    args = ap.parse_args()

    t0 = time.time()
    img = render(SCENE, args.order, args.step)
    print(f"rendered in {time.time() - t0:.1f}s")
    if args.check:
        coarse = render(SCENE, args.order - 1, 2 * args.step)
        rel = np.max(np.abs(coarse - img) / img)
        print(f"max relative change vs order {args.order - 1}, step {2 * args.step:g}: {rel:.2e}")

    doc = {"scene": SCENE, "order": args.order, "step": args.step,
           "pixels": [[[float(c) for c in img[y, x]] for x in range(img.shape[1])] for y in range(img.shape[0])]}
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
