"""Periodic point configurations, admissibility checks, and symmetry maps.

A configuration stores the positions of the ``N^2`` canonical sites; all
other sites follow from the periodic extension rule
``position(x + N*y) = position(x) + l*N*embed(y)``.  Site ``(0, 0)`` is
pinned at the origin (the reference measure fixes that component).

Admissibility is the conjunction of three predicates:

* omega1 -- every bond length lies strictly inside ``(1, 1 + epsilon)``,
* omega2 -- the piecewise-affine extension of the configuration is
  injective,
* omega3 -- every triangle's affine piece preserves orientation.

``check_omega2_fast`` certifies omega2 in ``O(N^2)`` via positive
determinants plus exact ``2*pi`` image angle sums at every vertex star
(a locally injective torus map of degree one is a homeomorphism);
``check_omega2_oracle`` is the exact, slow cross-check based on pairwise
interior overlap of image triangles.  Agreement of the two is a tested
invariant of this package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, lattice
from .lattice import EMBED_BASIS, SQRT3

TWO_PI = 2.0 * math.pi

# Six atan2 evaluations round at ~1e-15 each; a genuine winding defect
# changes the sum by a multiple of 2*pi, so 1e-9 separates the two cleanly.
ANGLE_SUM_TOL = 1e-9

CONFIG_SCHEMA = "hardlattice.configuration.v1"

# Inverse reference-edge matrices for the two orientations: the gradient of
# the affine piece is [d1 d2] @ _BINV[orientation].
_INV_SQRT3 = 1.0 / SQRT3
_BINV = np.array(
    [
        [[1.0, -_INV_SQRT3], [0.0, 2.0 * _INV_SQRT3]],
        [[1.0, _INV_SQRT3], [-1.0, _INV_SQRT3]],
    ]
)
_BINV.setflags(write=False)

LAMBDA0 = SQRT3 / 4.0  # area of the unit reference triangle


@dataclass(frozen=True)
class Configuration:
    """Immutable snapshot of the system state.

    ``positions[u*N + v]`` is the plane position of canonical site
    ``(u, v)``; ``positions[0]`` is exactly the origin.
    """

    N: int
    l: float
    epsilon: float
    positions: np.ndarray

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")
        if not 1.0 < self.l < 1.0 + self.epsilon:
            raise ValueError(
                f"side length l must lie in (1, 1+epsilon) = (1, {1.0 + self.epsilon}), got {self.l!r}"
            )
        pos = np.array(self.positions, dtype=float)
        if pos.shape != (self.N * self.N, 2):
            raise ValueError(
                f"positions must have shape ({self.N * self.N}, 2), got {pos.shape}"
            )
        if pos[0, 0] != 0.0 or pos[0, 1] != 0.0:
            raise ValueError("gauge violated: site (0, 0) must sit exactly at the origin")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_sites(self) -> int:
        return self.N * self.N

    @property
    def n_triangles(self) -> int:
        return 2 * self.N * self.N


@dataclass
class CheckResult:
    """Outcome of a single admissibility predicate."""

    ok: bool
    violations: list = field(default_factory=list)


@dataclass
class AdmissibilityReport:
    omega1_ok: bool
    omega2_ok: bool
    omega3_ok: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.omega1_ok and self.omega2_ok and self.omega3_ok


def standard_config(N: int, l: float, epsilon: float) -> Configuration:
    """The uniformly scaled lattice: site ``x`` at ``l * embed(x)``.

    This is an interior point of the admissible set for every valid
    ``(N, l, epsilon)``.
    """
    uv = np.array([lattice.site_of_index(i, N) for i in range(N * N)], dtype=float)
    return Configuration(N, float(l), float(epsilon), float(l) * (uv @ EMBED_BASIS))


def position(cfg: Configuration, idx) -> np.ndarray:
    """Position of an arbitrary lattice index via the periodic extension rule."""
    u, v = idx
    N = cfg.N
    cu, cv = u % N, v % N
    wu, wv = (u - cu) // N, (v - cv) // N
    base = cfg.positions[cu * N + cv]
    if wu == 0 and wv == 0:
        return base.copy()
    return base + cfg.l * N * lattice.embed((wu, wv))


def image_triangle_corners(cfg: Configuration) -> np.ndarray:
    """Plane positions of the three corners of every triangle class, shape (2N^2, 3, 2)."""
    sites, wrap, _ = lattice.triangle_tables(cfg.N)
    return cfg.positions[sites] + cfg.l * cfg.N * (wrap @ EMBED_BASIS)


def triangle_gradients(cfg: Configuration) -> np.ndarray:
    """Constant Jacobian of the affine piece on every triangle class, shape (2N^2, 2, 2)."""
    _, _, orient = lattice.triangle_tables(cfg.N)
    corners = image_triangle_corners(cfg)
    d = np.stack((corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=-1)
    return d @ _BINV[orient]

def triangle_gradient(cfg: Configuration, tri: lattice.TriangleRef) -> np.ndarray:
    """Jacobian of the affine piece on one triangle class.

    The unique matrix sending the reference edge vectors to the image
    edge vectors; it reproduces the corner differences exactly.
    """
    p = [position(cfg, c) for c in lattice.triangle_corners(tri)]
    d = np.column_stack((p[1] - p[0], p[2] - p[0]))
    return d @ _BINV[tri.orientation]


def bond_lengths(cfg: Configuration) -> np.ndarray:
    """Lengths of all 3N^2 bond classes in enumeration order."""
    sites, wrap = lattice.bond_tables(cfg.N)
    pa = cfg.positions[sites[:, 0]]
    pb = cfg.positions[sites[:, 1]] + cfg.l * cfg.N * (wrap @ EMBED_BASIS)
    return np.hypot(pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1])


def check_omega1(cfg: Configuration) -> CheckResult:
    """Every bond length strictly inside ``(1, 1 + epsilon)``.

    By periodicity, checking the 3N^2 bond classes covers the full
    infinite bond set.  Comparisons are plain strict float comparisons.
    """
    sites, wrap = lattice.bond_tables(cfg.N)
    pa = cfg.positions[sites[:, 0]]
    pb = cfg.positions[sites[:, 1]] + cfg.l * cfg.N * (wrap @ EMBED_BASIS)
    d2 = (pb[:, 0] - pa[:, 0]) ** 2 + (pb[:, 1] - pa[:, 1]) ** 2
    hi2 = (1.0 + cfg.epsilon) * (1.0 + cfg.epsilon)
    bad = np.flatnonzero((d2 <= 1.0) | (d2 >= hi2))
    if bad.size == 0:
        return CheckResult(True)
    all_bonds = lattice.bonds(cfg.N)
    return CheckResult(
        False,
        [("omega1", all_bonds[i], math.sqrt(float(d2[i]))) for i in bad],
    )


def _triangle_crosses(cfg: Configuration) -> np.ndarray:
    corners = image_triangle_corners(cfg)
    d1 = corners[:, 1] - corners[:, 0]
    d2 = corners[:, 2] - corners[:, 0]
    return d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]


def check_omega3(cfg: Configuration) -> CheckResult:
    """Positive Jacobian determinant on every triangle class.

    The reference edges are positively oriented, so the determinant sign
    equals the sign of the image corner cross product.
    """
    cross = _triangle_crosses(cfg)
    bad = np.flatnonzero(cross <= 0.0)
    if bad.size == 0:
        return CheckResult(True)
    tris = lattice.triangles(cfg.N)
    det_scale = 2.0 / SQRT3  # det(gradient) = cross / det(reference edges)
    return CheckResult(
        False,
        [("omega3", tris[i], float(cross[i]) * det_scale) for i in bad],
    )


def vertex_angle_sums(cfg: Configuration) -> np.ndarray:
    """Image angle sum of the six star triangles at every canonical site."""
    nbr_idx, nbr_wrap = lattice.neighbor_tables(cfg.N)
    w = cfg.positions[nbr_idx] + cfg.l * cfg.N * (nbr_wrap @ EMBED_BASIS)
    e = w - cfg.positions[:, None, :]
    e2 = np.roll(e, -1, axis=1)
    cross = e[..., 0] * e2[..., 1] - e[..., 1] * e2[..., 0]
    dot = e[..., 0] * e2[..., 0] + e[..., 1] * e2[..., 1]
    return np.arctan2(cross, dot).sum(axis=1)


def check_omega2_fast(cfg: Configuration) -> CheckResult:
    """O(N^2) injectivity certificate.

    All determinants positive plus angle sum ``2*pi`` (within
    :data:`ANGLE_SUM_TOL`) at every vertex star.  Positive determinants
    make the torus map a local homeomorphism away from vertices and it
    has degree one, so ruling out winding defects at vertices certifies
    a global bijection.
    """
    omega3 = check_omega3(cfg)
    if not omega3.ok:
        return CheckResult(False, [("omega2_precondition",) + v[1:] for v in omega3.violations])
    sums = vertex_angle_sums(cfg)
    bad = np.flatnonzero(np.abs(sums - TWO_PI) > ANGLE_SUM_TOL)
    if bad.size == 0:
        return CheckResult(True)
    return CheckResult(
        False,
        [
            ("omega2_angle", lattice.site_of_index(int(i), cfg.N), float(sums[i]))
            for i in bad
        ],
    )


def check_omega2_oracle(cfg: Configuration) -> CheckResult:
    """Exact injectivity oracle: no two image triangles overlap.

    Tests the open interiors of all image triangle representatives
    against each other and against the eight surrounding periodic
    translates (the 3x3 tiling).  Degenerate image triangles are
    reported as orientation failures.  Exact but O(N^4); meant for
    validation, not for the sampling hot path.
    """
    corners = image_triangle_corners(cfg)
    T = corners.shape[0]
    tris = lattice.triangles(cfg.N)

    degenerate = []
    for t in range(T):
        if geometry.orient_sign(corners[t, 0], corners[t, 1], corners[t, 2]) == 0:
            degenerate.append(("omega3_degenerate", tris[t]))
    if degenerate:
        return CheckResult(False, degenerate)

    ys = [(yu, yv) for yu in (-1, 0, 1) for yv in (-1, 0, 1)]
    # For identical representatives, opposite translates give the same test.
    half = {k for k, (yu, yv) in enumerate(ys) if (yu, yv) > (0, 0)}
    center = ys.index((0, 0))

    # Fold the tiling shift into the integer wrap before the one float
    # multiply: corner instances that coincide in exact arithmetic then
    # coincide bitwise, so shared seam edges stay exactly shared and the
    # exact predicate sees no sliver overlaps.
    sites, wrap, _ = lattice.triangle_tables(cfg.N)
    tiled = np.empty((len(ys), T, 3, 2))
    for k, y in enumerate(ys):
        total_wrap = wrap + np.array(y)
        tiled[k] = cfg.positions[sites] + cfg.l * cfg.N * (total_wrap @ EMBED_BASIS)

    lo = corners.min(axis=1)
    hi = corners.max(axis=1)
    lo_s = tiled.min(axis=2)  # (9, T, 2)
    hi_s = tiled.max(axis=2)

    # Strict bounding-box prefilter: (i) vs (j, shift k).
    mask = (
        (lo[:, None, None, 0] < hi_s.transpose(1, 0, 2)[None, :, :, 0])
        & (lo_s.transpose(1, 0, 2)[None, :, :, 0] < hi[:, None, None, 0])
        & (lo[:, None, None, 1] < hi_s.transpose(1, 0, 2)[None, :, :, 1])
        & (lo_s.transpose(1, 0, 2)[None, :, :, 1] < hi[:, None, None, 1])
    )
    iu = np.triu_indices(T, k=0)
    keep = np.zeros_like(mask)
    keep[iu[0], iu[1], :] = mask[iu[0], iu[1], :]
    keep[np.arange(T), np.arange(T), :] = False
    for k in half:
        keep[np.arange(T), np.arange(T), k] = mask[np.arange(T), np.arange(T), k]
    keep[np.arange(T), np.arange(T), center] = False

    violations = []
    for i, j, k in zip(*np.nonzero(keep)):
        if geometry.triangles_overlap(corners[i], tiled[k, j]):
            violations.append(("omega2_overlap", tris[i], tris[j], ys[k]))
    return CheckResult(not violations, violations)


def is_admissible(cfg: Configuration) -> AdmissibilityReport:
    """Conjunction of omega1, omega3 and the fast omega2 certificate.

    Evaluated in the order omega1, omega3, omega2; the omega2 check is
    skipped (reported as failing) when omega3 fails, since the angle-sum
    certificate presupposes positive determinants.
    """
    r1 = check_omega1(cfg)
    r3 = check_omega3(cfg)
    if r3.ok:
        r2 = check_omega2_fast(cfg)
    else:
        r2 = CheckResult(False, [("omega2_skipped", "omega3 failed")])
    return AdmissibilityReport(
        omega1_ok=r1.ok,
        omega2_ok=r2.ok,
        omega3_ok=r3.ok,
        violations=r1.violations + r3.violations + r2.violations,
    )


def translate(cfg: Configuration, b) -> Configuration:
    """Pull the configuration back by lattice vector ``b`` and re-gauge.

    ``omega'(x) = omega(x + b) - omega(b)``; the admissible set is
    invariant under this map and the origin gauge is restored exactly.
    """
    N = cfg.N
    bu, bv = b
    flat = np.arange(N * N)
    u, v = flat // N + bu, flat % N + bv
    cu, cv = u % N, v % N
    wrap = np.stack(((u - cu) // N, (v - cv) // N), axis=-1)
    gathered = cfg.positions[cu * N + cv] + cfg.l * N * (wrap @ EMBED_BASIS)
    new_pos = gathered - gathered[0]
    return Configuration(N, cfg.l, cfg.epsilon, new_pos)


def reflect(cfg: Configuration) -> Configuration:
    """Point reflection ``omega'(x) = -omega(-x)``; an involution on states."""
    N = cfg.N
    flat = np.arange(N * N)
    u, v = -(flat // N), -(flat % N)
    cu, cv = u % N, v % N
    wrap = np.stack(((u - cu) // N, (v - cv) // N), axis=-1)
    gathered = cfg.positions[cu * N + cv] + cfg.l * N * (wrap @ EMBED_BASIS)
    new_pos = -gathered
    new_pos[0] = 0.0
    return Configuration(N, cfg.l, cfg.epsilon, new_pos)


def symmetry_map(cfg: Configuration, op: str, b=None) -> Configuration:
    """Dispatch for the two measure-preserving symmetries.

    ``op='translate'`` needs the lattice vector ``b``; ``op='reflect'``
    takes no parameter.
    """
    if op == "translate":
        if b is None:
            raise ValueError("translate requires a lattice vector b")
        return translate(cfg, b)
    if op == "reflect":
        return reflect(cfg)
    raise ValueError(f"unknown symmetry operation {op!r}")


def to_json(cfg: Configuration) -> str:
    """Serialize to the documented flat JSON record.

    Positions are listed as ``2*N^2`` floats ``x0, y0, x1, y1, ...`` in
    canonical site order.  Floats are written in shortest round-trip
    decimal form, so ``from_json(to_json(cfg))`` is bit-exact.
    """
    record = {
        "schema": CONFIG_SCHEMA,
        "N": int(cfg.N),
        "l": float(cfg.l),
        "epsilon": float(cfg.epsilon),
        "positions": [float(x) for x in cfg.positions.ravel()],
    }
    return json.dumps(record)


def from_json(text: str) -> Configuration:
    record = json.loads(text)
    if record.get("schema") != CONFIG_SCHEMA:
        raise ValueError(f"unexpected configuration schema {record.get('schema')!r}")
    N = int(record["N"])
    pos = np.array(record["positions"], dtype=float).reshape(N * N, 2)
    return Configuration(N, float(record["l"]), float(record["epsilon"]), pos)
