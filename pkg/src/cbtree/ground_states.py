"""Low-temperature behavior: ground-state weights and the combinatorial bounds.

In the three-solution regime the two asymmetric branches concentrate, as
beta grows, on the all-plus and all-minus configurations; at fixed finite
depth that shows up as the single-configuration mass climbing to 1, which
is what ``ground_state_scan`` measures with the enumeration oracle.

``exhaustive_lemma_check`` sweeps the two inequalities behind that
argument: no configuration beats the all-plus edge-minus-sibling gap, and
no connected vertex set has a larger sibling boundary than edge boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exact_oracle
from .field_recursion import REGIME_THREE, ti_fixed_points
from .model import ModelParams, stat_maxima, sufficient_stats_batch
from .parallel import parallel_map
from .topology import boundary_sets, build_tree, connected_subsets

# Non-decreasing mass along the in-regime beta tail, up to this slack.
MONOTONE_SLACK = 1e-9

_CONFIG_DEPTH_CAP = 3
_SUBSET_DEPTH_CAP = 3
_BLOCK = 1 << 20


@dataclass(frozen=True)
class GroundScanRow:
    """One beta point of a ground-state scan; masses only where three
    constant-field solutions exist."""

    beta: float
    regime: str
    u1: float
    u3: float
    root_prob: float
    mass_plus: float | None
    mass_minus: float | None


@dataclass(frozen=True)
class LemmaCheckResult:
    depth: int
    config_count: int
    config_violations: int
    config_witness: int | None
    max_stat_gap: int
    stat_gap_bound: int
    subset_count: int
    subset_violations: int
    subset_witness: frozenset | None

    @property
    def clean(self) -> bool:
        return self.config_violations == 0 and self.subset_violations == 0


def root_magnetization(u_star: float) -> float:
    """Single-site probability of spin up under a constant-field branch."""
    if u_star <= 0.0:
        raise ValueError("u_star must be positive")
    return u_star / (u_star + 1.0)


def ground_state_scan(J: float, J1: float, beta_grid, depth: int = 2) -> list[GroundScanRow]:
    """Extreme-configuration masses across a beta grid at fixed couplings.

    The mass under the upper branch goes to the all-plus configuration and
    the lower branch mirrors it onto all-minus.  Betas outside the
    three-solution regime produce rows with the regime tag and no masses;
    the scan refuses to extrapolate branches that do not exist there.
    """
    if depth > exact_oracle.FULL_ENUM_DEPTH_CAP:
        raise ValueError(f"mass columns need enumeration; depth capped at "
                         f"{exact_oracle.FULL_ENUM_DEPTH_CAP}")
    tree = build_tree(depth, "full")

    def one(beta):
        params = ModelParams(J=J, J1=J1, beta=float(beta))
        fps = ti_fixed_points(params)
        mass_plus = mass_minus = None
        if fps.regime == REGIME_THREE:
            bf3 = exact_oracle.BoundaryField.constant(tree, fps.h3)
            bf1 = exact_oracle.BoundaryField.constant(tree, fps.h1)
            mass_plus = exact_oracle.plus_minus_mass(tree, params, bf3)[0]
            mass_minus = exact_oracle.plus_minus_mass(tree, params, bf1)[1]
        return GroundScanRow(
            beta=float(beta),
            regime=fps.regime,
            u1=fps.u1,
            u3=fps.u3,
            root_prob=root_magnetization(fps.u3),
            mass_plus=mass_plus,
            mass_minus=mass_minus,
        )

    rows = parallel_map(one, beta_grid)
    in_regime = [r for r in rows if r.mass_plus is not None]
    for prev, cur in zip(in_regime, in_regime[1:]):
        if cur.mass_plus < prev.mass_plus - MONOTONE_SLACK:
            raise RuntimeError(
                f"mass_plus decreased along the in-regime tail: "
                f"beta {prev.beta} -> {cur.beta}"
            )
    return rows


def exhaustive_lemma_check(depth: int = 2) -> LemmaCheckResult:
    """Sweep both combinatorial bounds on the full tree.

    Configuration form: B(s) - A(s) <= B - A over every configuration
    (2**22 of them at depth 3).  Subset form: the sibling boundary of a
    connected vertex set never outnumbers its edge boundary.  Returns zero
    violation counts when clean, otherwise the first witness of each kind.
    """
    if depth > _CONFIG_DEPTH_CAP:
        raise ValueError(f"configuration sweep capped at depth {_CONFIG_DEPTH_CAP}")
    tree = build_tree(depth, "full")
    a_max, b_max, _ = stat_maxima(tree)
    bound = b_max - a_max
    total = 1 << tree.n_vertices

    def scan_block(rng):
        lo, hi = rng
        cfg = np.arange(lo, hi, dtype=np.int64)
        a, b, _ = sufficient_stats_batch(tree, cfg)
        gap = b - a
        bad = np.nonzero(gap > bound)[0]
        witness = int(cfg[bad[0]]) if bad.size else None
        return int(np.max(gap)), int(bad.size), witness

    blocks = [(lo, min(lo + _BLOCK, total)) for lo in range(0, total, _BLOCK)]
    results = parallel_map(scan_block, blocks)
    max_gap = max(r[0] for r in results)
    config_violations = sum(r[1] for r in results)
    config_witness = next((r[2] for r in results if r[2] is not None), None)

    subset_count = 0
    subset_violations = 0
    subset_witness = None
    if depth <= _SUBSET_DEPTH_CAP:
        for k in connected_subsets(tree, max_count=10**6):
            subset_count += 1
            dk, d2k = boundary_sets(tree, k)
            if len(d2k) > len(dk):
                subset_violations += 1
                if subset_witness is None:
                    subset_witness = k

    return LemmaCheckResult(
        depth=depth,
        config_count=total,
        config_violations=config_violations,
        config_witness=config_witness,
        max_stat_gap=max_gap,
        stat_gap_bound=bound,
        subset_count=subset_count,
        subset_violations=subset_violations,
        subset_witness=subset_witness,
    )
