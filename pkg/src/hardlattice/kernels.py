"""Hot inner loops of the sampler.

The single-site Metropolis update is a strictly sequential scalar loop,
so it is written once in plain Python over numpy arrays and compiled
with numba's ``@njit`` when available.  The backend is chosen at import
time from the ``HARDLATTICE_BACKEND`` environment variable:

* ``auto`` (default): numba if importable, plain numpy otherwise,
* ``numba``: require numba,
* ``numpy``: force the uncompiled fallback.

Both paths execute the same function bodies and consume the same
pre-drawn uniforms, so trajectories agree across backends.
"""

from __future__ import annotations

import math
import os

TWO_PI = 2.0 * math.pi


def _resolve_backend() -> tuple:
    choice = os.environ.get("HARDLATTICE_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"HARDLATTICE_BACKEND must be auto, numba or numpy, got {choice!r}"
        )
    if choice == "numpy":
        return (lambda f: f), "numpy"
    try:
        from numba import njit
    except ImportError:
        if choice == "numba":
            raise
        return (lambda f: f), "numpy"
    return njit(cache=True), "numba"


_jit, BACKEND = _resolve_backend()


@_jit
def star_ok(pos, nbr_idx, nbr_shift, s, hi2, angle_tol, check_bonds):
    """Local admissibility walk around site ``s``.

    Checks, in one pass over the six neighbors in counterclockwise order:
    squared bond lengths strictly inside ``(1, hi2)`` (only when
    ``check_bonds``), positive orientation of the six incident triangles,
    and the image angle sum at ``s`` equal to ``2*pi`` within
    ``angle_tol``.
    """
    px = pos[s, 0]
    py = pos[s, 1]
    j = nbr_idx[s, 0]
    e0x = pos[j, 0] + nbr_shift[s, 0, 0] - px
    e0y = pos[j, 1] + nbr_shift[s, 0, 1] - py
    if check_bonds:
        d2 = e0x * e0x + e0y * e0y
        if d2 <= 1.0 or d2 >= hi2:
            return False
    prevx = e0x
    prevy = e0y
    total = 0.0
    for k in range(1, 6):
        j = nbr_idx[s, k]
        ex = pos[j, 0] + nbr_shift[s, k, 0] - px
        ey = pos[j, 1] + nbr_shift[s, k, 1] - py
        if check_bonds:
            d2 = ex * ex + ey * ey
            if d2 <= 1.0 or d2 >= hi2:
                return False
        cr = prevx * ey - prevy * ex
        if cr <= 0.0:
            return False
        total += math.atan2(cr, prevx * ex + prevy * ey)
        prevx = ex
        prevy = ey
    cr = prevx * e0y - prevy * e0x
    if cr <= 0.0:
        return False
    total += math.atan2(cr, prevx * e0x + prevy * e0y)
    return abs(total - TWO_PI) <= angle_tol


@_jit
def local_ok(pos, nbr_idx, nbr_shift, s, hi2, angle_tol):
    """Full local decision for the current position of site ``s``.

    Bond window and orientation at ``s`` plus angle sums at ``s`` and at
    each of its six neighbors; these are exactly the constraints a move
    of ``s`` can affect.
    """
    if not star_ok(pos, nbr_idx, nbr_shift, s, hi2, angle_tol, True):
        return False
    for k in range(6):
        v = nbr_idx[s, k]
        if not star_ok(pos, nbr_idx, nbr_shift, v, hi2, angle_tol, False):
            return False
    return True


@_jit
def sweep(pos, nbr_idx, nbr_shift, site_order, uniforms, radius, hi2, angle_tol):
    """One attempted disk move per entry of ``site_order``; in-place.

    ``uniforms`` supplies two variates per attempt (radius and angle of
    the proposal).  A proposal is accepted iff the local constraints
    pass; rejection restores the previous position exactly.  Returns the
    number of accepted moves.
    """
    accepted = 0
    n = site_order.shape[0]
    for t in range(n):
        s = site_order[t]
        rho = radius * math.sqrt(uniforms[t, 0])
        phi = TWO_PI * uniforms[t, 1]
        oldx = pos[s, 0]
        oldy = pos[s, 1]
        pos[s, 0] = oldx + rho * math.cos(phi)
        pos[s, 1] = oldy + rho * math.sin(phi)
        if local_ok(pos, nbr_idx, nbr_shift, s, hi2, angle_tol):
            accepted += 1
        else:
            pos[s, 0] = oldx
            pos[s, 1] = oldy
    return accepted
