"""Finite volatility-uncertainty lattice: the discrete sample space.

Every node of the (non-recombining) tree records one step of the canonical
path: a volatility choice from the two-point band and a sign. A node at depth
k therefore has 4^k ancestors-free identities, and carries the path value B
and its quadratic variation QV:

    B  = sum_j sign_j * sigma_j * sqrt(dt),     sigma_j in {sigma_low, sigma_high}
    QV = sum_j sigma_j^2 * dt

Child ordering is fixed once and for all (index c = 2*vol + sign):

    c=0 (low, +)   c=1 (low, -)   c=2 (high, +)   c=3 (high, -)

so node i at depth k has children 4*i + c at depth k+1. All reductions in
the expectation engine rely on this ordering, which is what makes results
bitwise deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthMismatchError, InvalidParameterError, LatticeSizeError

DEFAULT_ENUMERATION_CAP = 10

# per-step child layout: (vol index, sign) for c = 0..3
CHILD_VOL = np.array([0, 0, 1, 1])
CHILD_SIGN = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class VolatilityBand:
    """The admissible variance band [sigma_low_sq, sigma_high_sq].

    Strict inequality is required; equality is the classical (single-measure)
    limit and must be requested explicitly via ``classical=True``.
    """

    sigma_low_sq: float
    sigma_high_sq: float
    classical: bool = False

    def __post_init__(self):
        if not (self.sigma_low_sq > 0.0 and math.isfinite(self.sigma_low_sq)):
            raise InvalidParameterError(
                f"sigma_low_sq must be a finite positive real, got {self.sigma_low_sq}"
            )
        if not (self.sigma_high_sq >= self.sigma_low_sq and math.isfinite(self.sigma_high_sq)):
            raise InvalidParameterError(
                f"need 0 < sigma_low_sq <= sigma_high_sq, got "
                f"sigma_low_sq={self.sigma_low_sq}, sigma_high_sq={self.sigma_high_sq}"
            )
        if self.sigma_low_sq == self.sigma_high_sq and not self.classical:
            raise InvalidParameterError(
                "sigma_low_sq == sigma_high_sq is the classical limit; "
                "construct with classical=True to allow it"
            )
        if self.classical and self.sigma_low_sq != self.sigma_high_sq:
            raise InvalidParameterError(
                "classical=True requires sigma_low_sq == sigma_high_sq"
            )

    @property
    def sigma_low(self) -> float:
        return math.sqrt(self.sigma_low_sq)

    @property
    def sigma_high(self) -> float:
        return math.sqrt(self.sigma_high_sq)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_n = horizon.

    n_steps=0 is the degenerate single-point grid and requires horizon=0.
    """

    horizon: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 0 or self.n_steps != int(self.n_steps):
            raise InvalidParameterError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        if self.n_steps == 0:
            if self.horizon != 0.0:
                raise InvalidParameterError(
                    "n_steps=0 is only valid for the degenerate horizon=0 grid"
                )
        elif not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise InvalidParameterError(f"horizon must be positive, got {self.horizon}")

    @property
    def dt(self) -> float:
        if self.n_steps == 0:
            return 0.0
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        if self.n_steps == 0:
            return np.zeros(1)
        # k*dt rather than linspace so t_k is reproducible from dt alone
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class PathFunctional:
    """A value per depth-k node: the discrete stand-in for a path payoff.

    Adaptedness is structural: the value can only depend on the first k steps
    because a node *is* its first k steps.
    """

    depth: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.depth < 0:
            raise InvalidParameterError(f"depth must be nonnegative, got {self.depth}")
        if self.values.shape != (4**self.depth,):
            raise DepthMismatchError(
                f"functional at depth {self.depth} needs {4**self.depth} values, "
                f"got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("functional values must be finite")


# Conditional expectations are again one value per node; same structure.
NodeValues = PathFunctional


@dataclass(frozen=True)
class PathLattice:
    """The full tree up to depth n_steps with per-node B and QV arrays.

    ``b[k]`` and ``qv[k]`` have shape (4**k,), indexed in child-major order.
    """

    band: VolatilityBand
    grid: TimeGrid
    b: tuple = field(repr=False)
    qv: tuple = field(repr=False)

    @property
    def depth(self) -> int:
        return self.grid.n_steps

    @property
    def step_db(self) -> np.ndarray:
        """Per-child increment of B for one step, in child order."""
        sigmas = np.array([self.band.sigma_low, self.band.sigma_high])
        return CHILD_SIGN * sigmas[CHILD_VOL] * math.sqrt(self.grid.dt)

    @property
    def step_dqv(self) -> np.ndarray:
        """Per-child increment of QV for one step, in child order."""
        sig_sq = np.array([self.band.sigma_low_sq, self.band.sigma_high_sq])
        return sig_sq[CHILD_VOL] * self.grid.dt

    def functional_from_terminal(self, fn) -> PathFunctional:
        """Payoff fn(B_T) as a terminal-depth functional."""
        return PathFunctional(self.depth, fn(self.b[self.depth]))


def lift_values(values: np.ndarray, from_depth: int, to_depth: int) -> np.ndarray:
    """Broadcast depth-j node values to all their depth-k descendants (j <= k)."""
    if to_depth < from_depth:
        raise DepthMismatchError(f"cannot lift from depth {from_depth} down to {to_depth}")
    return np.repeat(np.asarray(values, dtype=float), 4 ** (to_depth - from_depth))


def build_lattice(
    band: VolatilityBand,
    grid: TimeGrid,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> PathLattice:
    """Enumerate the tree; refuses anything beyond the cap (4^n nodes at the leaf)."""
    n = grid.n_steps
    if n > enumeration_cap:
        raise LatticeSizeError(
            f"n_steps={n} exceeds the enumeration cap {enumeration_cap}: "
            f"the leaf level alone would hold 4^{n} = {4**n} nodes"
        )
    b = [np.zeros(1)]
    qv = [np.zeros(1)]
    if n > 0:
        sqrt_dt = math.sqrt(grid.dt)
        sigmas = np.array([band.sigma_low, band.sigma_high])
        sig_sq = np.array([band.sigma_low_sq, band.sigma_high_sq])
        db = CHILD_SIGN * sigmas[CHILD_VOL] * sqrt_dt
        dqv = sig_sq[CHILD_VOL] * grid.dt
        for k in range(n):
            b.append((b[k][:, None] + db[None, :]).ravel())
            qv.append((qv[k][:, None] + dqv[None, :]).ravel())
    return PathLattice(band=band, grid=grid, b=tuple(b), qv=tuple(qv))


@dataclass(frozen=True)
class ProcessOnLattice:
    """An adapted process: one value per node for each depth in a contiguous range."""

    lattice: PathLattice
    start_step: int
    values: tuple

    def __post_init__(self):
        if self.start_step < 0:
            raise InvalidParameterError("start_step must be nonnegative")
        vals = tuple(np.asarray(v, dtype=float) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.end_step > self.lattice.depth:
            raise DepthMismatchError(
                f"process spans steps {self.start_step}..{self.end_step}, "
                f"lattice depth is {self.lattice.depth}"
            )
        for i, v in enumerate(vals):
            k = self.start_step + i
            if v.shape != (4**k,):
                raise DepthMismatchError(
                    f"process values at step {k} need shape ({4**k},), got {v.shape}"
                )

    @property
    def end_step(self) -> int:
        return self.start_step + len(self.values) - 1

    def at(self, step: int) -> np.ndarray:
        if not self.start_step <= step <= self.end_step:
            raise DepthMismatchError(
                f"step {step} outside process range {self.start_step}..{self.end_step}"
            )
        return self.values[step - self.start_step]

    def functional_at(self, step: int) -> PathFunctional:
        return PathFunctional(step, self.at(step))

    def shifted(self, path_values: np.ndarray) -> "ProcessOnLattice":
        """Add a deterministic per-step scalar to every node (X = S + A)."""
        path_values = np.asarray(path_values, dtype=float)
        if path_values.shape != (len(self.values),):
            raise InvalidParameterError(
                f"deterministic path has shape {path_values.shape}, "
                f"expected ({len(self.values)},)"
            )
        shifted = tuple(v + a for v, a in zip(self.values, path_values))
        return ProcessOnLattice(self.lattice, self.start_step, shifted)


def brownian_process(lattice: PathLattice) -> ProcessOnLattice:
    """The canonical path itself, as a process (S = B)."""
    return ProcessOnLattice(lattice, 0, lattice.b)


def quadratic_variation_process(lattice: PathLattice) -> ProcessOnLattice:
    return ProcessOnLattice(lattice, 0, lattice.qv)


def constant_process(lattice: PathLattice, value: float,
                     start_step: int = 0, end_step: int | None = None) -> ProcessOnLattice:
    if end_step is None:
        end_step = lattice.depth
    vals = tuple(np.full(4**k, float(value)) for k in range(start_step, end_step + 1))
    return ProcessOnLattice(lattice, start_step, vals)
