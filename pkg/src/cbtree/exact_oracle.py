"""Ground truth by complete configuration enumeration.

Everything here scales as 2**(vertex count) and is meant for small depths:
full trees to depth 3 (22 spins, ~4.2M configurations), half trees to
depth 4.  The recursion modules cover anything larger and are validated
against this one.

The finite-volume Gibbs weight of a configuration s is

    exp( -beta * H(s) + sum over boundary vertices of h_x * s_x )

with the boundary field h living on the outermost level only.  All
probability work happens in log space; log weights are combined by a block
log-sum-exp with fixed block boundaries, so results are independent of the
worker-thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .field_recursion import FieldAssignment
from .model import ModelParams, SpinConfig
from .parallel import parallel_map
from .topology import TreeIndex, build_tree

FULL_ENUM_DEPTH_CAP = 3
HALF_ENUM_DEPTH_CAP = 4

_BLOCK = 1 << 20  # fixed chunking; never tied to the thread count


@dataclass(frozen=True)
class BoundaryField:
    """Field values on the outermost level, in id order."""

    tree: TreeIndex
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.tree.level_size(self.tree.depth):
            raise ValueError("one value per boundary vertex required")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("boundary field values must be finite")

    @classmethod
    def constant(cls, tree: TreeIndex, h: float) -> "BoundaryField":
        return cls(tree, (float(h),) * tree.level_size(tree.depth))

    @classmethod
    def zero(cls, tree: TreeIndex) -> "BoundaryField":
        return cls.constant(tree, 0.0)

    @classmethod
    def from_assignment(cls, fields: FieldAssignment) -> "BoundaryField":
        return cls(fields.tree, tuple(float(v) for v in fields.boundary_values()))

    @property
    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _coerce_boundary(tree: TreeIndex, h) -> BoundaryField:
    if isinstance(h, BoundaryField):
        if h.tree != tree:
            raise ValueError("boundary field belongs to a different tree")
        return h
    if isinstance(h, FieldAssignment):
        if h.tree != tree:
            raise ValueError("field assignment belongs to a different tree")
        return BoundaryField.from_assignment(h)
    if np.ndim(h) == 0:
        return BoundaryField.constant(tree, float(h))
    return BoundaryField(tree, tuple(float(v) for v in h))


def _check_enum_cap(tree: TreeIndex) -> None:
    cap = FULL_ENUM_DEPTH_CAP if tree.mode == "full" else HALF_ENUM_DEPTH_CAP
    if tree.depth > cap:
        raise ValueError(
            f"enumeration capped at depth {cap} for {tree.mode} trees, got {tree.depth}"
        )


def _lse(values) -> float:
    a = np.asarray(values, dtype=np.float64)
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    return m + float(np.log(np.sum(np.exp(a - m))))


def log_weights(tree: TreeIndex, params: ModelParams, h, configs) -> np.ndarray:
    """Unnormalized log weight of each bit-packed configuration."""
    bf = _coerce_boundary(tree, h)
    a, b, _ = model.sufficient_stats_batch(tree, configs)
    w = params.beta * params.J * a + params.beta * params.J1 * b
    cfg = np.asarray(configs, dtype=np.int64)
    for x, hx in zip(tree.boundary, bf.values):
        if hx != 0.0:
            w = w + hx * (2.0 * ((cfg >> x) & 1) - 1.0)
    return w


def _blocks(total: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + _BLOCK, total)) for lo in range(0, total, _BLOCK)]


def log_partition(tree: TreeIndex, params: ModelParams, h) -> float:
    """ln Z over all 2**n configurations, by streamed block log-sum-exp."""
    _check_enum_cap(tree)
    bf = _coerce_boundary(tree, h)
    total = 1 << tree.n_vertices

    def one_block(rng):
        lo, hi = rng
        return _lse(log_weights(tree, params, bf, np.arange(lo, hi, dtype=np.int64)))

    partials = parallel_map(one_block, _blocks(total))
    return _lse(partials)


def measure_prob(tree: TreeIndex, params: ModelParams, h, config: SpinConfig) -> float:
    """Probability of one configuration under the finite-volume measure."""
    if config.tree != tree:
        raise ValueError("configuration belongs to a different tree")
    w = log_weights(tree, params, h, np.array([config.bits], dtype=np.int64))
    return float(np.exp(w[0] - log_partition(tree, params, h)))


def marginal_prob(tree: TreeIndex, params: ModelParams, h, partial: SpinConfig) -> float:
    """Probability of a configuration on the depth-(N-1) sub-slice.

    Sums the full measure over all completions on the outermost level.
    """
    _check_enum_cap(tree)
    if tree.depth < 1:
        raise ValueError("marginal requires depth >= 1")
    if partial.tree.depth != tree.depth - 1 or partial.tree.mode != tree.mode:
        raise ValueError("partial configuration must live on the depth-(N-1) sub-slice")
    n_low = partial.tree.n_vertices
    nb = tree.level_size(tree.depth)
    completions = (np.arange(1 << nb, dtype=np.int64) << n_low) | partial.bits
    w = log_weights(tree, params, h, completions)
    return float(np.exp(_lse(w) - log_partition(tree, params, h)))


def check_consistency(params: ModelParams, fields: FieldAssignment) -> float:
    """Max deviation between the marginalized depth-N measure and the
    depth-(N-1) measure built from the same field family.

    On full trees the step into the degree-3 root (depth 1 -> 0) is outside
    the two-child recursion and is rejected; on half trees every step is
    allowed.
    """
    tree = fields.tree
    _check_enum_cap(tree)
    n = tree.depth
    if tree.mode == "full" and n < 2:
        raise ValueError("full-tree consistency check requires depth >= 2")
    if tree.mode == "half" and n < 1:
        raise ValueError("consistency check requires depth >= 1")

    sub = build_tree(n - 1, tree.mode)
    n_low = sub.n_vertices
    nb = tree.level_size(n)
    low = np.arange(1 << n_low, dtype=np.int64)

    # Stream over boundary configurations in fixed-size blocks, keeping a
    # running log-sum-exp per interior configuration.
    bf = _coerce_boundary(tree, fields)
    acc = np.full(1 << n_low, -np.inf)
    b_step = max(1, _BLOCK >> n_low)
    for lo in range(0, 1 << nb, b_step):
        b = np.arange(lo, min(lo + b_step, 1 << nb), dtype=np.int64)
        cfg = (b[:, None] << n_low) | low[None, :]
        w = log_weights(tree, params, bf, cfg.ravel()).reshape(cfg.shape)
        acc = np.logaddexp(acc, np.logaddexp.reduce(w, axis=0))
    marginal = np.exp(acc - _lse(acc))

    w_prev = log_weights(sub, params, fields.level_values(n - 1), low)
    prev = np.exp(w_prev - _lse(w_prev))
    return float(np.max(np.abs(marginal - prev)))


def plus_minus_mass(tree: TreeIndex, params: ModelParams, h) -> tuple[float, float]:
    """Probabilities of the all-plus and all-minus configurations."""
    _check_enum_cap(tree)
    bf = _coerce_boundary(tree, h)
    ln_z = log_partition(tree, params, bf)
    extremes = np.array([(1 << tree.n_vertices) - 1, 0], dtype=np.int64)
    w = log_weights(tree, params, bf, extremes)
    return float(np.exp(w[0] - ln_z)), float(np.exp(w[1] - ln_z))
