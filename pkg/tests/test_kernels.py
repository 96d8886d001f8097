import json
import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

import hardlattice as hl
from hardlattice import configuration as C
from hardlattice import kernels, lattice
from hardlattice.configuration import ANGLE_SUM_TOL, Configuration
from hardlattice.lattice import EMBED_BASIS

SRC = os.path.join(os.path.dirname(__file__), "..", "src")


def _tables(cfg):
    nbr_idx, nbr_wrap = lattice.neighbor_tables(cfg.N)
    shift = cfg.l * cfg.N * (nbr_wrap @ EMBED_BASIS)
    hi2 = (1.0 + cfg.epsilon) * (1.0 + cfg.epsilon)
    return nbr_idx, shift, hi2


def test_backend_is_reported():
    assert kernels.BACKEND in ("numba", "numpy")


def test_local_ok_accepts_interior_state():
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    pos = np.array(cfg.positions)
    for s in range(1, 16):
        assert kernels.local_ok(pos, nbr_idx, shift, s, hi2, ANGLE_SUM_TOL)


def test_local_ok_rejects_bond_stretched_past_window():
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    pos = np.array(cfg.positions)
    s = lattice.site_index((2, 2), 4)
    # push the site away from its (1, 0) neighbor beyond 1 + epsilon
    pos[s] = pos[s] + np.array([-(0.2), 0.0])
    assert not kernels.local_ok(pos, nbr_idx, shift, s, hi2, ANGLE_SUM_TOL)


def test_local_ok_rejects_compressed_bond():
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    pos = np.array(cfg.positions)
    s = lattice.site_index((1, 1), 4)
    nbr = pos[lattice.site_index((2, 1), 4)]
    pos[s] = nbr + np.array([-0.99, 0.0])  # bond length 0.99 < 1
    assert not kernels.local_ok(pos, nbr_idx, shift, s, hi2, ANGLE_SUM_TOL)


def test_local_decision_matches_full_admissibility_check():
    """The locally checked constraints are exactly the ones a single-site
    move can affect, so the local decision must agree with the full
    recheck from any admissible state."""
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    chain = hl.Chain(cfg, hl.SamplerParams(sweeps=0, seed=5))
    for _ in range(200):
        chain.sweep()
    base = chain.snapshot()
    assert C.is_admissible(base).ok

    rng = np.random.Generator(np.random.PCG64(17))
    accepted = rejected = 0
    for _ in range(6000):
        s = int(rng.integers(1, 16))
        delta = rng.uniform(-0.06, 0.06, size=2)
        pos = np.array(base.positions)
        pos[s] = pos[s] + delta
        local = kernels.local_ok(pos, nbr_idx, shift, s, hi2, ANGLE_SUM_TOL)
        full = C.is_admissible(Configuration(4, base.l, base.epsilon, pos)).ok
        assert local == full
        accepted += local
        rejected += not local
    # the proposal scale straddles the constraint surface
    assert accepted >= 1000 and rejected >= 1000


def test_sweep_equals_sequential_single_site_updates():
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    order = np.arange(1, 16, dtype=np.int64)
    uniforms = np.random.Generator(np.random.PCG64(3)).random((15, 2))

    pos_a = np.array(cfg.positions)
    acc_a = kernels.sweep(pos_a, nbr_idx, shift, order, uniforms, 0.01, hi2, ANGLE_SUM_TOL)

    pos_b = np.array(cfg.positions)
    acc_b = 0
    for t in range(15):
        acc_b += kernels.sweep(
            pos_b, nbr_idx, shift, order[t : t + 1], uniforms[t : t + 1], 0.01, hi2, ANGLE_SUM_TOL
        )
    assert acc_a == acc_b
    assert np.array_equal(pos_a, pos_b)


def test_rejection_restores_state_exactly():
    cfg = C.standard_config(4, 1.05, 0.1)
    nbr_idx, shift, hi2 = _tables(cfg)
    pos = np.array(cfg.positions)
    before = pos.copy()
    order = np.array([5], dtype=np.int64)
    # huge radius: the proposal almost surely lands outside the window
    uniforms = np.array([[0.99, 0.37]])
    acc = kernels.sweep(pos, nbr_idx, shift, order, uniforms, 5.0, hi2, ANGLE_SUM_TOL)
    assert acc == 0
    assert np.array_equal(pos, before)


_CHILD = textwrap.dedent(
    """
    import json, sys, hashlib
    import hardlattice as hl
    from hardlattice import kernels
    res = hl.run_chain(4, 1.05, 0.1, hl.SamplerParams(sweeps=250, burn_in=40, thin=250, seed=77))
    snap = res.records[-1]
    print(json.dumps({
        "backend": kernels.BACKEND,
        "accepted": res.accepted,
        "sha": hashlib.sha256(snap.positions.tobytes()).hexdigest(),
    }))
    """
)


@pytest.mark.slow
def test_numpy_and_numba_backends_produce_identical_trajectories():
    outs = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, HARDLATTICE_BACKEND=backend)
        env["PYTHONPATH"] = os.path.abspath(SRC) + os.pathsep + env.get("PYTHONPATH", "")
        out = subprocess.run(
            [sys.executable, "-c", _CHILD], capture_output=True, text=True, env=env, check=True
        )
        outs[backend] = json.loads(out.stdout.strip().splitlines()[-1])
    if outs["numba"]["backend"] == "numpy":
        pytest.skip("numba unavailable; nothing to compare")
    assert outs["numba"]["accepted"] == outs["numpy"]["accepted"]
    assert outs["numba"]["sha"] == outs["numpy"]["sha"]


def test_backend_env_flag_forces_fallback():
    env = dict(os.environ, HARDLATTICE_BACKEND="numpy")
    env["PYTHONPATH"] = os.path.abspath(SRC) + os.pathsep + env.get("PYTHONPATH", "")
    out = subprocess.run(
        [sys.executable, "-c", "from hardlattice import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_invalid_backend_env_flag_raises():
    env = dict(os.environ, HARDLATTICE_BACKEND="cuda")
    env["PYTHONPATH"] = os.path.abspath(SRC) + os.pathsep + env.get("PYTHONPATH", "")
    out = subprocess.run(
        [sys.executable, "-c", "import hardlattice.kernels"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert out.returncode != 0
    assert "HARDLATTICE_BACKEND" in out.stderr
