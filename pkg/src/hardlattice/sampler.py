"""Metropolis sampling of the uniform law on the admissible set.

Single-site updates with a symmetric disk proposal: a move is accepted
iff the locally affected constraints pass, which targets exactly the
uniform distribution on the admissible set (acceptance ratio one inside,
zero outside).  One chain is strictly single threaded; parallelism
belongs at the level of independent chains.

Randomness comes from a PCG64 stream.  Each attempted move consumes
exactly two uniforms (proposal radius and angle), drawn per sweep before
the kernel call, so checkpointing at sweep boundaries is exact and the
numba and numpy kernel backends consume the identical stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import configuration as cfgmod
from . import kernels, lattice
from .configuration import ANGLE_SUM_TOL, Configuration
from .lattice import EMBED_BASIS

RNG_ALGORITHM = "pcg64"

CHECKPOINT_SCHEMA = "hardlattice.checkpoint.v1"


class InadmissibleStateError(RuntimeError):
    """A chain was asked to start from (or reached) an inadmissible state."""


class ChainInvariantError(RuntimeError):
    """An emitted snapshot failed a full admissibility recheck."""


@dataclass
class SamplerParams:
    """Knobs of one chain.

    ``proposal_radius`` defaults to ``epsilon / 10`` at chain
    construction; ``thin`` is the sweep stride between emitted
    snapshots; ``omega2_oracle_every`` runs the exact injectivity oracle
    on every K-th emitted snapshot (0 disables it).
    """

    sweeps: int
    burn_in: int = 0
    thin: int = 1
    proposal_radius: float | None = None
    seed: object = 0
    scan_order: str = "raster"
    omega2_oracle_every: int = 0

    def __post_init__(self):
        if self.sweeps < 0 or self.burn_in < 0:
            raise ValueError("sweeps and burn_in must be nonnegative")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.proposal_radius is not None and not self.proposal_radius > 0.0:
            raise ValueError("proposal_radius must be positive")
        if self.scan_order not in ("raster", "random"):
            raise ValueError(f"scan_order must be 'raster' or 'random', got {self.scan_order!r}")
        if self.omega2_oracle_every < 0:
            raise ValueError("omega2_oracle_every must be >= 0")


@dataclass
class ChainResult:
    records: list
    acceptance_rate: float
    accepted: int
    proposed: int
    sweeps_run: int


class Chain:
    """Mutable working state of one Metropolis chain.

    Snapshots handed to observers are immutable copies; the working
    array never escapes.  Site ``(0, 0)`` is pinned and never proposed.
    """

    def __init__(self, cfg: Configuration, params: SamplerParams):
        report = cfgmod.is_admissible(cfg)
        if not report.ok:
            raise InadmissibleStateError(
                f"initial state is not admissible: {report.violations[:3]}"
            )
        self.N = cfg.N
        self.l = cfg.l
        self.epsilon = cfg.epsilon
        self.params = params
        self.radius = (
            params.proposal_radius if params.proposal_radius is not None else cfg.epsilon / 10.0
        )
        self._pos = np.array(cfg.positions, dtype=float)
        nbr_idx, nbr_wrap = lattice.neighbor_tables(cfg.N)
        self._nbr_idx = nbr_idx
        self._nbr_shift = cfg.l * cfg.N * (nbr_wrap @ EMBED_BASIS)
        self._hi2 = (1.0 + cfg.epsilon) * (1.0 + cfg.epsilon)
        self._raster = np.arange(1, cfg.N * cfg.N, dtype=np.int64)
        self.rng = np.random.Generator(np.random.PCG64(params.seed))
        self.accepted = 0
        self.proposed = 0
        self.sweeps_done = 0

    @classmethod
    def from_standard(cls, N: int, l: float, epsilon: float, params: SamplerParams) -> "Chain":
        return cls(cfgmod.standard_config(N, l, epsilon), params)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else float("nan")

    def snapshot(self) -> Configuration:
        return Configuration(self.N, self.l, self.epsilon, self._pos.copy())

    def site_update(self, site) -> bool:
        """One attempted move of a single site; returns True on acceptance."""
        idx = lattice.site_index(site, self.N)
        if idx == 0:
            raise ValueError("site (0, 0) is pinned by the gauge and cannot move")
        order = np.array([idx], dtype=np.int64)
        uniforms = self.rng.random((1, 2))
        acc = kernels.sweep(
            self._pos, self._nbr_idx, self._nbr_shift, order, uniforms,
            self.radius, self._hi2, ANGLE_SUM_TOL,
        )
        self.accepted += int(acc)
        self.proposed += 1
        return bool(acc)

    def sweep(self) -> int:
        """One update attempt per movable site; returns the number accepted.

        Draw order per sweep: the visit order first (random scan only),
        then two uniforms per attempt.
        """
        if self.params.scan_order == "random":
            order = self.rng.integers(1, self.N * self.N, size=self._raster.size, dtype=np.int64)
        else:
            order = self._raster
        uniforms = self.rng.random((order.size, 2))
        acc = kernels.sweep(
            self._pos, self._nbr_idx, self._nbr_shift, order, uniforms,
            self.radius, self._hi2, ANGLE_SUM_TOL,
        )
        self.accepted += int(acc)
        self.proposed += order.size
        self.sweeps_done += 1
        return int(acc)

    def _verify_snapshot(self, snap: Configuration, emitted: int) -> None:
        report = cfgmod.is_admissible(snap)
        if not report.ok:
            raise ChainInvariantError(
                f"snapshot after sweep {self.sweeps_done} failed recheck: "
                f"{report.violations[:3]}"
            )
        every = self.params.omega2_oracle_every
        if every > 0 and emitted % every == 0:
            oracle = cfgmod.check_omega2_oracle(snap)
            if not oracle.ok:
                raise ChainInvariantError(
                    f"snapshot after sweep {self.sweeps_done} failed the exact "
                    f"injectivity oracle: {oracle.violations[:3]}"
                )

    def run(self, observer=None) -> ChainResult:
        """Burn in, then emit a snapshot every ``thin`` sweeps.

        Every emitted snapshot passes a full admissibility recheck (and
        periodically the exact oracle).  ``observer`` receives the
        immutable snapshot and should do at most O(snapshot) work; its
        return values are collected, or the snapshots themselves when no
        observer is given.
        """
        for _ in range(self.params.burn_in):
            self.sweep()
        records = []
        for s in range(self.params.sweeps):
            self.sweep()
            if (s + 1) % self.params.thin == 0:
                snap = self.snapshot()
                self._verify_snapshot(snap, len(records))
                records.append(observer(snap) if observer is not None else snap)
        return ChainResult(
            records=records,
            acceptance_rate=self.acceptance_rate,
            accepted=self.accepted,
            proposed=self.proposed,
            sweeps_run=self.sweeps_done,
        )

    def checkpoint(self) -> dict:
        """JSON-ready state: positions, rng state, counters.

        Resuming from this and continuing reproduces the uninterrupted
        trajectory exactly (sweep granularity).
        """
        return {
            "schema": CHECKPOINT_SCHEMA,
            "configuration": json.loads(cfgmod.to_json(self.snapshot())),
            "rng": {"algorithm": RNG_ALGORITHM, "state": self.rng.bit_generator.state},
            "counters": {
                "accepted": self.accepted,
                "proposed": self.proposed,
                "sweeps_done": self.sweeps_done,
            },
            "params": {
                "sweeps": self.params.sweeps,
                "burn_in": self.params.burn_in,
                "thin": self.params.thin,
                "proposal_radius": self.radius,
                "scan_order": self.params.scan_order,
                "omega2_oracle_every": self.params.omega2_oracle_every,
            },
        }

    def save_checkpoint(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.checkpoint(), fh)

    @classmethod
    def from_checkpoint(cls, source) -> "Chain":
        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            with open(source) as fh:
                data = json.load(fh)
        else:
            data = source
        if data.get("schema") != CHECKPOINT_SCHEMA:
            raise ValueError(f"unexpected checkpoint schema {data.get('schema')!r}")
        cfg = cfgmod.from_json(json.dumps(data["configuration"]))
        if data["rng"]["algorithm"] != RNG_ALGORITHM:
            raise ValueError(f"unsupported rng algorithm {data['rng']['algorithm']!r}")
        p = data["params"]
        params = SamplerParams(
            sweeps=p["sweeps"],
            burn_in=p["burn_in"],
            thin=p["thin"],
            proposal_radius=p["proposal_radius"],
            scan_order=p["scan_order"],
            omega2_oracle_every=p["omega2_oracle_every"],
        )
        chain = cls(cfg, params)
        chain.rng.bit_generator.state = data["rng"]["state"]
        c = data["counters"]
        chain.accepted = c["accepted"]
        chain.proposed = c["proposed"]
        chain.sweeps_done = c["sweeps_done"]
        return chain


def run_chain(N: int, l: float, epsilon: float, params: SamplerParams, observer=None) -> ChainResult:
    """Run one chain from the scaled standard configuration."""
    return Chain.from_standard(N, l, epsilon, params).run(observer)
