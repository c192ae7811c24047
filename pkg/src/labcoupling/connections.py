"""Lie connections on Lie algebra bundles.

A connection is stored chartwise as derivation-valued one-form grids
``omega[chart][*node, axis] in Der(g)`` with the sign convention
``nabla = d + omega`` (so parallel transport solves T' = -omega(v) T).
Curvature is the chartwise R_ij = d_i w_j - d_j w_i + [w_i, w_j]; a
connection is *in accordance* with the structural group (i.e. represents a
coupling) when R lands in the inner span: R_ij = ad(Omega_ij) for some
fiber-valued two-form Omega, recovered here by least squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .algebra import LieAlgebra, derivation_residuals
from .bundles import Trivialization, pullback_lab, _cover_signature
from .errors import InputError
from .manifolds import ManifoldMap, grid_derivative, interpolate, region_slices
from .tolerances import ACC_TOL, ALG_TOL, GAUGE_TOL


@dataclass(frozen=True)
class ConnectionForm:
    """Per-chart, per-axis grids of derivation matrices over a bundle."""

    bundle: Trivialization
    omega: tuple  # per chart: array (*resolution, mdim, n, n)

    def __post_init__(self):
        n = self.bundle.algebra.dim
        m = self.bundle.manifold
        grids = []
        if len(self.omega) != len(m.charts):
            raise InputError("one omega grid per chart is required")
        for cid, grid in enumerate(self.omega):
            arr = np.asarray(grid, dtype=float)
            expected = m.charts[cid].resolution + (m.dim, n, n)
            if arr.shape != tuple(expected):
                raise InputError(f"omega grid {cid} has shape {arr.shape}, expected {expected}")
            grids.append(arr)
        object.__setattr__(self, "omega", tuple(grids))

    @property
    def algebra(self) -> LieAlgebra:
        return self.bundle.algebra

    @property
    def manifold(self):
        return self.bundle.manifold


def zero_connection(bundle: Trivialization) -> ConnectionForm:
    n = bundle.algebra.dim
    m = bundle.manifold
    omega = tuple(
        np.zeros(chart.resolution + (m.dim, n, n)) for chart in m.charts
    )
    return ConnectionForm(bundle, omega)


def apply_connection(c: ConnectionForm, u: list, x: list) -> list:
    """(nabla_X u)(p) = sum_i X^i(p) (d_i u(p) + w_i(p) u(p)), chartwise."""
    m = c.manifold
    n = c.algebra.dim
    out = []
    for cid, chart in enumerate(m.charts):
        uu = np.asarray(u[cid], dtype=float)
        xx = np.asarray(x[cid], dtype=float)
        if uu.shape != chart.resolution + (n,) or xx.shape != chart.resolution + (m.dim,):
            raise InputError("field shapes do not match the chart grids")
        total = np.zeros_like(uu)
        for i in range(m.dim):
            covar = grid_derivative(chart, uu, i)
            covar = covar + np.einsum("...kj,...j->...k", c.omega[cid][..., i, :, :], uu)
            total += xx[..., i : i + 1] * covar
        out.append(total)
    return out


@dataclass(frozen=True)
class ConnectionReport:
    passed: bool
    max_derivation_residual: float
    max_gauge_residual: float
    worst: str = ""

    def residuals(self) -> dict:
        return {
            "derivation": self.max_derivation_residual,
            "gauge": self.max_gauge_residual,
        }


def validate_connection(
    c: ConnectionForm, tol: float = ALG_TOL, gauge_tol: float = GAUGE_TOL
) -> ConnectionReport:
    """Pointwise Leibniz check of every omega value plus the overlap gauge law
    w_beta = tau w_alpha tau^{-1} + tau d(tau^{-1}) through the overlap
    Jacobian, where tau is the section-coordinate change of the bundle."""
    g = c.algebra
    worst_val, worst = -1.0, ""
    max_der = 0.0
    for cid, grid in enumerate(c.omega):
        res = derivation_residuals(g, grid)
        peak = float(res.max())
        max_der = max(max_der, peak)
        if peak > worst_val:
            node = np.unravel_index(np.argmax(res), res.shape)
            worst_val, worst = peak, f"chart {cid} node {tuple(int(i) for i in node)}"
    max_gauge = gauge_residual(c)
    passed = max_der <= tol and max_gauge <= gauge_tol
    return ConnectionReport(bool(passed), max_der, max_gauge, worst)


def gauge_residual(c: ConnectionForm) -> float:
    m = c.manifold
    worst = 0.0
    for k, o in enumerate(m.overlaps):
        chart = m.charts[o.alpha]
        slices = region_slices(chart, o.region)
        pts = chart.grid_points()[slices]
        tau = c.bundle.coordinate_change_grid(k)
        tau_inv = np.linalg.inv(tau)
        w_alpha = c.omega[o.alpha][slices]
        w_beta = interpolate(m.charts[o.beta], c.omega[o.beta], o.apply(pts))
        for i in range(m.dim):
            lhs = np.einsum("j,...jkl->...kl", o.matrix[:, i], w_beta)
            d_tau_inv = _region_derivative(chart, tau_inv, slices, i)
            rhs = tau @ w_alpha[..., i, :, :] @ tau_inv + tau @ d_tau_inv
            worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
    return worst


def _region_derivative(chart, values: np.ndarray, slices: tuple, axis: int) -> np.ndarray:
    """FD along a chart axis of data sampled on a region sub-grid."""
    length = values.shape[axis]
    order = 2 if length >= 3 else 1
    return np.gradient(values, chart.spacing[axis], axis=axis, edge_order=order)


@dataclass(frozen=True)
class CurvatureData:
    """Chartwise curvature matrices per unordered axis pair (i < j); the
    recovered coupling form and its accordance residuals are filled in by
    ``accordance``.  R_ji = -R_ij is implied, never stored."""

    pairs: tuple             # ((i, j), ...) with i < j
    r: tuple                 # per chart: (*resolution, P, n, n)
    omega_form: tuple = ()   # per chart: (*resolution, P, n)
    residuals: tuple = ()    # per chart: (*resolution, P)

    def full(self, cid: int) -> np.ndarray:
        """Expand to the antisymmetric (*res, m, m, n, n) tensor."""
        arr = self.r[cid]
        n = arr.shape[-1]
        mdim = max(max(p) for p in self.pairs) + 1 if self.pairs else 1
        out = np.zeros(arr.shape[:-3] + (mdim, mdim, n, n))
        for p, (i, j) in enumerate(self.pairs):
            out[..., i, j, :, :] = arr[..., p, :, :]
            out[..., j, i, :, :] = -arr[..., p, :, :]
        return out


def curvature(c: ConnectionForm) -> CurvatureData:
    """R_ij = d_i w_j - d_j w_i + [w_i, w_j], second-order FD chartwise."""
    m = c.manifold
    n = c.algebra.dim
    pairs = tuple(combinations(range(m.dim), 2))
    grids = []
    for cid, chart in enumerate(m.charts):
        w = c.omega[cid]
        out = np.zeros(chart.resolution + (len(pairs), n, n))
        for p, (i, j) in enumerate(pairs):
            di_wj = grid_derivative(chart, w[..., j, :, :], i)
            dj_wi = grid_derivative(chart, w[..., i, :, :], j)
            comm = w[..., i, :, :] @ w[..., j, :, :] - w[..., j, :, :] @ w[..., i, :, :]
            out[..., p, :, :] = di_wj - dj_wi + comm
        grids.append(out)
    return CurvatureData(pairs, tuple(grids))


def curvature_gauge_residual(c: ConnectionForm, curv: CurvatureData | None = None) -> float:
    """Worst violation of R_beta = tau R_alpha tau^{-1} across overlaps."""
    curv = curvature(c) if curv is None else curv
    m = c.manifold
    worst = 0.0
    for k, o in enumerate(m.overlaps):
        chart = m.charts[o.alpha]
        slices = region_slices(chart, o.region)
        pts = chart.grid_points()[slices]
        tau = c.bundle.coordinate_change_grid(k)
        r_alpha = curv.full(o.alpha)[slices]
        r_beta = interpolate(m.charts[o.beta], curv.full(o.beta), o.apply(pts))
        pulled = np.einsum("ki,lj,...klab->...ijab", o.matrix, o.matrix, r_beta)
        conj = np.einsum("...ab,...ijbc,...cd->...ijad", tau, r_alpha, np.linalg.inv(tau))
        worst = max(worst, float(np.abs(pulled - conj).max(initial=0.0)))
    return worst


@dataclass(frozen=True)
class AccordanceResult:
    """Outcome of the coupling condition R = ad(Omega)."""

    passed: bool
    max_residual: float
    curvature: CurvatureData
    center_dim: int

    def residuals(self) -> dict:
        return {"accordance": self.max_residual}


def accordance(c: ConnectionForm, tol: float = ACC_TOL) -> AccordanceResult:
    """Solve R_ij(p) ~ ad(Omega_ij(p)) nodewise by minimum-norm least squares.

    The recovered Omega is unique up to center directions; the minimum-norm
    solution has no center component, and the ambiguity dimension is
    reported.
    """
    g = c.algebra
    curv = curvature(c)
    omega_forms = []
    residual_grids = []
    worst = 0.0
    for grid in curv.r:
        lead = grid.shape[:-2]
        flat = grid.reshape(-1, g.dim * g.dim)
        coeff = flat @ g.ad_pinv.T
        resid = np.linalg.norm(flat - coeff @ g.ad_basis_matrix.T, axis=1)
        omega_forms.append(coeff.reshape(lead + (g.dim,)))
        residual_grids.append(resid.reshape(lead))
        worst = max(worst, float(resid.max(initial=0.0)))
    data = CurvatureData(curv.pairs, curv.r, tuple(omega_forms), tuple(residual_grids))
    n_center = g.dim - int(np.linalg.matrix_rank(g.ad_basis_matrix, tol=ALG_TOL)) if g.dim else 0
    return AccordanceResult(bool(worst <= tol), worst, data, n_center)


def bianchi_residual(c: ConnectionForm, result: AccordanceResult | None = None) -> float:
    """Max over nodes of || ad( cyclic-sum_i nabla_i Omega_jk ) || for strictly
    increasing index triples; 0 when no triple exists (manifold dim < 3).

    Only the inner part ad(d Omega) is asserted by the theory; the
    center-valued part of d Omega is not checked.
    """
    m = c.manifold
    if m.dim < 3:
        return 0.0
    result = accordance(c) if result is None else result
    g = c.algebra
    pairs = {p: idx for idx, p in enumerate(result.curvature.pairs)}

    def omega_at(cid, i, j):
        if i == j:
            return 0.0
        sign = 1.0 if i < j else -1.0
        idx = pairs[(min(i, j), max(i, j))]
        return sign * result.curvature.omega_form[cid][..., idx, :]

    worst = 0.0
    for cid, chart in enumerate(m.charts):
        w = c.omega[cid]
        for i, j, k in combinations(range(m.dim), 3):
            total = 0.0
            for (a, b, d) in ((i, j, k), (j, k, i), (k, i, j)):
                om = omega_at(cid, b, d)
                cov = grid_derivative(chart, om, a)
                cov = cov + np.einsum("...xy,...y->...x", w[..., a, :, :], om)
                total = total + cov
            ad_part = np.einsum("...i,ixy->...yx", total, g.c)
            worst = max(worst, float(np.linalg.norm(ad_part, axis=(-2, -1)).max()))
    return worst


def inner_valued_form(g: LieAlgebra, l: list) -> list:
    """ad applied to a fiber-valued one-form: per chart (*res, m, n) -> (*res, m, n, n)."""
    return [np.einsum("...i,ijk->...kj", np.asarray(grid, dtype=float), g.c) for grid in l]


def shift_by_inner(c: ConnectionForm, l: list, gauge_tol: float = GAUGE_TOL) -> ConnectionForm:
    """nabla' = nabla + [l(X), .], i.e. omega' = omega + ad(l).

    l must transform as a fiber-valued one-form across overlaps (checked).
    """
    m = c.manifold
    n = c.algebra.dim
    for cid, chart in enumerate(m.charts):
        if np.asarray(l[cid]).shape != chart.resolution + (m.dim, n):
            raise InputError("shift field shapes do not match the chart grids")
    worst = 0.0
    for k, o in enumerate(m.overlaps):
        chart = m.charts[o.alpha]
        slices = region_slices(chart, o.region)
        pts = chart.grid_points()[slices]
        tau = c.bundle.coordinate_change_grid(k)
        l_alpha = np.asarray(l[o.alpha])[slices]
        l_beta = interpolate(m.charts[o.beta], np.asarray(l[o.beta]), o.apply(pts))
        lhs = np.einsum("ji,...jk->...ik", o.matrix, l_beta)
        rhs = np.einsum("...ab,...ib->...ia", tau, l_alpha)
        worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
    if worst > gauge_tol:
        raise InputError(f"shift field is not overlap-covariant (residual {worst:.3e})")
    shifted = tuple(
        c.omega[cid] + grid for cid, grid in enumerate(inner_valued_form(c.algebra, l))
    )
    return ConnectionForm(c.bundle, shifted)


@dataclass(frozen=True)
class CouplingEquivalence:
    passed: bool
    max_residual: float
    l: tuple  # per chart (*res, m, n): recovered inner shift


def coupling_equivalent(
    c: ConnectionForm, c_prime: ConnectionForm, tol: float = ACC_TOL
) -> CouplingEquivalence:
    """Same coupling class: omega' - omega is an inner-valued one-form.

    Nodewise the difference is projected onto span{ad(e_k)}; the recovered
    shift l is returned for inspection (minimum-norm, so center-free).
    """
    if c.bundle is not c_prime.bundle:
        same = (
            c.algebra.dim == c_prime.algebra.dim
            and np.abs(c.algebra.c - c_prime.algebra.c).max(initial=0.0) <= ALG_TOL
            and _cover_signature(c.manifold) == _cover_signature(c_prime.manifold)
            and all(
                np.abs(a - b).max(initial=0.0) <= ALG_TOL
                for a, b in zip(c.bundle.frames, c_prime.bundle.frames)
            )
        )
        if not same:
            raise InputError("connections live over different bundles")
    g = c.algebra
    worst = 0.0
    shifts = []
    for cid in range(len(c.manifold.charts)):
        delta = c_prime.omega[cid] - c.omega[cid]
        lead = delta.shape[:-2]
        flat = delta.reshape(-1, g.dim * g.dim)
        coeff = flat @ g.ad_pinv.T
        resid = np.linalg.norm(flat - coeff @ g.ad_basis_matrix.T, axis=1)
        worst = max(worst, float(resid.max(initial=0.0)))
        shifts.append(coeff.reshape(lead + (g.dim,)))
    return CouplingEquivalence(bool(worst <= tol), worst, tuple(shifts))


def pullback_connection(c: ConnectionForm, f: ManifoldMap) -> ConnectionForm:
    """omega'_i(p) = sum_j J_ji omega_j(f(p)) over the pulled-back bundle."""
    new_bundle = pullback_lab(c.bundle, f)
    m = c.manifold
    omega = []
    for cid, chart in enumerate(f.source.charts):
        asg = f.assignments[cid]
        pts = asg.apply(chart.grid_points())
        w_target = interpolate(m.charts[asg.target_chart], c.omega[asg.target_chart], pts)
        omega.append(np.einsum("ji,...jab->...iab", asg.matrix, w_target))
    return ConnectionForm(new_bundle, tuple(omega))
