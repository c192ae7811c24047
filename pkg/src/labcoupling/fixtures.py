"""Canonical fixture algebras, manifolds, bundles, and connections.

Everything here is generated from closed-form data so that fixtures can be
rebuilt at refined grid resolutions for convergence studies.
"""

from __future__ import annotations

import numpy as np

from .algebra import LieAlgebra, ad, unit_vector
from .bundles import Trivialization
from .errors import InputError
from .manifolds import ChartedManifold, build_manifold


def _antisymmetrized(dim: int, entries: dict[tuple[int, int, int], float]) -> np.ndarray:
    c = np.zeros((dim, dim, dim))
    for (i, j, k), v in entries.items():
        c[i, j, k] += v
        c[j, i, k] -= v
    return c


def algebra(name: str) -> LieAlgebra:
    """Named fixture algebras: abelian2, so3, heis3, aff1."""
    if name == "abelian2":
        return LieAlgebra("abelian2", 2, np.zeros((2, 2, 2)))
    if name == "so3":
        # [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2
        return LieAlgebra("so3", 3, _antisymmetrized(3, {(0, 1, 2): 1.0, (1, 2, 0): 1.0, (2, 0, 1): 1.0}))
    if name == "heis3":
        # [e1,e2]=e3
        return LieAlgebra("heis3", 3, _antisymmetrized(3, {(0, 1, 2): 1.0}))
    if name == "aff1":
        # [e1,e2]=e2
        return LieAlgebra("aff1", 2, _antisymmetrized(2, {(0, 1, 1): 1.0}))
    raise InputError(f"unknown algebra fixture {name!r}")


ALGEBRA_NAMES = ("abelian2", "so3", "heis3", "aff1")


def _res(base: int, refine: int) -> int:
    return (base - 1) * refine + 1


def _interval_chart(lo: float, hi: float, res: int) -> dict:
    return {"box": [[lo, hi]], "resolution": [res], "center": [(res - 1) // 2]}


def _circle_cover(n_charts: int, res: int) -> dict:
    """Charts of equal width covering the unit-circumference circle t ~ t+1.

    Consecutive charts overlap; the wrap-around overlap is the translation
    t -> t - 1.  Widths are chosen so overlap edges land exactly on grid
    nodes (the per-chart spacing divides the overlap width).
    """
    if n_charts == 2:
        width, starts = 2.0 / 3.0, [0.0, 0.5]
    elif n_charts == 4:
        width, starts = 1.0 / 3.0, [0.0, 0.25, 0.5, 0.75]
    else:
        raise InputError("circle covers are built for 2 or 4 charts")
    charts = [_interval_chart(s, s + width, res) for s in starts]
    overlaps = []
    for k, s in enumerate(starts):
        nxt = (k + 1) % n_charts
        lo = starts[nxt] + (1.0 if nxt == 0 else 0.0)
        hi = s + width
        shift = 0.0 if nxt else -1.0  # into the next chart's coordinates
        overlaps.append(
            {"alpha": k, "beta": nxt, "region": [[lo, hi]], "map": {"matrix": [[1.0]], "offset": [shift]}}
        )
        overlaps.append(
            {
                "alpha": nxt,
                "beta": k,
                "region": [[lo + shift, hi + shift]],
                "map": {"matrix": [[1.0]], "offset": [-shift]},
            }
        )
    return {"dim": 1, "charts": charts, "overlaps": overlaps}


def manifold(name: str, refine: int = 1) -> ChartedManifold:
    """Named fixture manifolds: interval1, circle2, circle4, disk2d, cyl2."""
    res = _res(33, refine)
    if name == "interval1":
        return build_manifold({"dim": 1, "charts": [_interval_chart(0.0, 1.0, res)], "overlaps": []}, name)
    if name == "circle2":
        return build_manifold(_circle_cover(2, res), name)
    if name == "circle4":
        return build_manifold(_circle_cover(4, res), name)
    if name == "disk2d":
        chart = {"box": [[-1.0, 1.0], [-1.0, 1.0]], "resolution": [res, res], "center": [(res - 1) // 2] * 2}
        return build_manifold({"dim": 2, "charts": [chart], "overlaps": []}, name)
    if name == "cyl2":
        flat = _circle_cover(2, res)
        charts = []
        for c in flat["charts"]:
            charts.append(
                {
                    "box": [c["box"][0], [0.0, 1.0]],
                    "resolution": [res, res],
                    "center": [c["center"][0], (res - 1) // 2],
                }
            )
        overlaps = []
        for o in flat["overlaps"]:
            overlaps.append(
                {
                    "alpha": o["alpha"],
                    "beta": o["beta"],
                    "region": [o["region"][0], [0.0, 1.0]],
                    "map": {
                        "matrix": [[1.0, 0.0], [0.0, 1.0]],
                        "offset": [o["map"]["offset"][0], 0.0],
                    },
                }
            )
        return build_manifold({"dim": 2, "charts": charts, "overlaps": overlaps}, name)
    raise InputError(f"unknown manifold fixture {name!r}")


MANIFOLD_NAMES = ("interval1", "circle2", "circle4", "disk2d", "cyl2")


# --- bundle fixtures ----------------------------------------------------------

TWIST_ANGLE = 0.8


def smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: 0 for u <= 0, 1 for u >= 1, C^2 junctions."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return u**3 * (6.0 * u**2 - 15.0 * u + 10.0)


def _rotation_generator() -> np.ndarray:
    return ad(algebra("so3"), unit_vector(3, 2))


def _matrix_exp_family(points: np.ndarray, generator: np.ndarray, exponent) -> np.ndarray:
    """exp(exponent(points) * generator) evaluated via eigendecomposition-free
    series (generators here satisfy K^3 = -K or K^2 = 0, but expm is cheap
    enough to batch directly)."""
    import scipy.linalg

    exps = np.asarray(exponent, dtype=float)
    flat = exps.reshape(-1)
    mats = np.stack([scipy.linalg.expm(e * generator) for e in flat])
    return mats.reshape(exps.shape + generator.shape)


def bundle(name: str, refine: int = 1) -> Trivialization:
    """Named fixture bundles (local-trivialization structures)."""
    if name == "circle2_so3_twisted":
        # inner frames with linear exponent; transitions are constant inner
        # automorphisms on each overlap component
        g = algebra("so3")
        m = manifold("circle2", refine)
        k = _rotation_generator()
        frames = []
        for chart in m.charts:
            t = chart.grid_points()[..., 0]
            center = chart.node_point(chart.center)[0]
            frames.append(_matrix_exp_family(t, k, -(t - center) * TWIST_ANGLE))
        return Trivialization(g, m, tuple(frames))
    if name == "cyl2_so3_twisted":
        g = algebra("so3")
        m = manifold("cyl2", refine)
        k = _rotation_generator()
        frames = []
        for chart in m.charts:
            t = chart.grid_points()[..., 0]
            center = chart.node_point(chart.center)[0]
            frames.append(_matrix_exp_family(t, k, -(t - center) * TWIST_ANGLE))
        return Trivialization(g, m, tuple(frames))
    if name == "circle2_abelian2_twisted":
        # outer-twisted structure: the wrap transition is the constant
        # diag(1/2, 1); still delta-continuous (constant per component)
        g = algebra("abelian2")
        m = manifold("circle2", refine)
        t1 = m.charts[1].grid_points()[..., 0]
        s = smoothstep((t1 - 2.0 / 3.0) * 3.0)
        phi1 = np.zeros(t1.shape + (2, 2))
        phi1[..., 0, 0] = 2.0 ** (-s)
        phi1[..., 1, 1] = 1.0
        eye = np.broadcast_to(np.eye(2), m.charts[0].resolution + (2, 2)).copy()
        return Trivialization(g, m, (eye, phi1))
    if name == "circle2_abelian2_varying":
        # outer class drifts smoothly across the overlaps: delta check fails
        g = algebra("abelian2")
        m = manifold("circle2", refine)
        frames = []
        for chart in m.charts:
            t = chart.grid_points()[..., 0]
            phi = np.zeros(t.shape + (2, 2))
            phi[..., 0, 0] = 1.0 + 0.3 * np.sin(2.0 * np.pi * t)
            phi[..., 1, 1] = 1.0
            frames.append(phi)
        frames[0] = np.broadcast_to(np.eye(2), m.charts[0].resolution + (2, 2)).copy()
        return Trivialization(g, m, tuple(frames))
    if name == "disk2d_so3_bilinear":
        g = algebra("so3")
        m = manifold("disk2d", refine)
        k = _rotation_generator()
        pts = m.charts[0].grid_points()
        frames = _matrix_exp_family(pts[..., 0], k, 0.25 * pts[..., 0] * pts[..., 1])
        return Trivialization(g, m, (frames,))
    raise InputError(f"unknown bundle fixture {name!r}")


BUNDLE_NAMES = (
    "circle2_so3_twisted",
    "cyl2_so3_twisted",
    "circle2_abelian2_twisted",
    "circle2_abelian2_varying",
    "disk2d_so3_bilinear",
)


# --- connection fixtures --------------------------------------------------------

DISK_SLOPE = 0.5


def connection(name: str, refine: int = 1) -> "ConnectionForm":
    """Named fixture connections, all over identity-frame bundles."""
    from .bundles import reference_trivialization
    from .connections import ConnectionForm, zero_connection

    if name == "interval1_so3_flat":
        return zero_connection(reference_trivialization(algebra("so3"), manifold("interval1", refine)))
    if name == "circle2_so3_twisted":
        # constant omega = angle * ad(e3) dt: flat with holonomy exp(-angle ad(e3))
        g = algebra("so3")
        m = manifold("circle2", refine)
        k = _rotation_generator()
        omega = tuple(
            np.broadcast_to(TWIST_ANGLE * k, chart.resolution + (1, 3, 3)).copy()
            for chart in m.charts
        )
        return ConnectionForm(reference_trivialization(g, m), omega)
    if name == "cyl2_so3_twisted":
        g = algebra("so3")
        m = manifold("cyl2", refine)
        k = _rotation_generator()
        omega = []
        for chart in m.charts:
            w = np.zeros(chart.resolution + (2, 3, 3))
            w[..., 0, :, :] = TWIST_ANGLE * k
            omega.append(w)
        return ConnectionForm(reference_trivialization(g, m), tuple(omega))
    if name == "disk2d_so3_nonflat":
        # omega_y = slope * x * ad(e3): R_xy = slope * ad(e3) by construction
        g = algebra("so3")
        m = manifold("disk2d", refine)
        k = _rotation_generator()
        pts = m.charts[0].grid_points()
        w = np.zeros(m.charts[0].resolution + (2, 3, 3))
        w[..., 1, :, :] = DISK_SLOPE * pts[..., 0, None, None] * k
        return ConnectionForm(reference_trivialization(g, m), (w,))
    if name == "disk2d_abelian2_nonflat":
        # nonzero curvature with ad = 0: accordance must fail with residual ||R||
        g = algebra("abelian2")
        m = manifold("disk2d", refine)
        d = np.array([[1.0, 0.0], [0.0, 0.0]])
        pts = m.charts[0].grid_points()
        w = np.zeros(m.charts[0].resolution + (2, 2, 2))
        w[..., 1, :, :] = pts[..., 0, None, None] * d
        return ConnectionForm(reference_trivialization(g, m), (w,))
    if name == "circle2_abelian2_flat":
        # constant non-inner omega: transports twist by a non-inner automorphism
        g = algebra("abelian2")
        m = manifold("circle2", refine)
        d = np.diag([0.25, -0.4])
        omega = tuple(
            np.broadcast_to(d, chart.resolution + (1, 2, 2)).copy() for chart in m.charts
        )
        return ConnectionForm(reference_trivialization(g, m), omega)
    raise InputError(f"unknown connection fixture {name!r}")


CONNECTION_NAMES = (
    "interval1_so3_flat",
    "circle2_so3_twisted",
    "cyl2_so3_twisted",
    "disk2d_so3_nonflat",
    "disk2d_abelian2_nonflat",
    "circle2_abelian2_flat",
)

# connections that represent couplings (accordance passes)
COUPLING_NAMES = (
    "interval1_so3_flat",
    "circle2_so3_twisted",
    "cyl2_so3_twisted",
    "disk2d_so3_nonflat",
    "circle2_abelian2_flat",
)
