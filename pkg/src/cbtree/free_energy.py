"""Free energy via the level-by-level partition-function recursion.

Peeling the outermost level off a depth-n slice multiplies the partition
function by one factor per depth-(n-1) vertex.  The log of that factor,
``level_log_factor``, decomposes into three stable kernels built on
ln(2 cosh); it equals half the sum of the two conditional child-pair log
weights, which is the central identity the test suite hammers on.

With the base ln Z_1 enumerated directly (16 terms on the full tree, 8 on
the half tree), telescoping the factors reproduces ln Z_n exactly.  The
free energy is the n -> infinity limit of -ln Z_n / (3 * beta * 2**n); for
a constant field h it equals -level_log_factor(h, h) / (2 * beta).

Everything beta-dependent flows through ``ln2cosh``; beta = 50 stays well
inside float range.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .field_recursion import REGIME_THREE, FieldAssignment, ti_fixed_points
from .model import ModelParams


def ln2cosh(x):
    """ln(2 cosh x) = |x| + log1p(exp(-2|x|)); exact and overflow-free."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    out = ax + np.log1p(np.exp(-2.0 * ax))
    if out.ndim == 0:
        return float(out)
    return out


def log_cosh_even(shift, x):
    """(1/4) ln[4 cosh(x - shift) cosh(x + shift)]; even in both arguments."""
    return 0.25 * (ln2cosh(np.asarray(x) - shift) + ln2cosh(np.asarray(x) + shift))


def log_cosh_cross(shift, x, y):
    """(1/2) ln[4 cosh(x - shift) cosh(y + shift)].

    Swapping the arguments and negating both leaves the value unchanged.
    """
    return 0.5 * (ln2cosh(np.asarray(x) - shift) + ln2cosh(np.asarray(y) + shift))


def effective_field(x, params: ModelParams):
    """atanh(tanh(beta*J) * tanh(x)), the field transmitted through one edge.

    Computed as (1/2)[ln2cosh(x + beta*J) - ln2cosh(x - beta*J)], which is
    the same function without the tanh round trip; odd in x and bounded by
    min(|x|, |beta*J|).
    """
    bj = params.beta * params.J
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * (ln2cosh(x + bj) - ln2cosh(x - bj))
    if np.ndim(out) == 0:
        return float(out)
    return out


def pair_log_weights(params: ModelParams, h_y, h_z):
    """Log of the two conditional sums over a child pair, given the parent.

    Each is a four-term Boltzmann sum over the child spins; the first
    conditions on parent spin up, the second on parent spin down.  Their
    half-difference is the parent's effective field, their half-sum the
    level log factor.
    """
    hy = np.asarray(h_y, dtype=np.float64)
    hz = np.asarray(h_z, dtype=np.float64)
    a1 = 2.0 * params.beta * params.J1
    aj = params.beta * params.J
    up = np.stack(
        np.broadcast_arrays(
            a1 + aj + hy + hz,
            -aj - hy + hz,
            -aj + hy - hz,
            -a1 + aj - hy - hz,
        )
    )
    down = np.stack(
        np.broadcast_arrays(
            -a1 + aj + hy + hz,
            -aj - hy + hz,
            -aj + hy - hz,
            a1 + aj - hy - hz,
        )
    )
    w_up = np.logaddexp.reduce(up, axis=0)
    w_down = np.logaddexp.reduce(down, axis=0)
    if w_up.ndim == 0:
        return float(w_up), float(w_down)
    return w_up, w_down


def level_log_factor(params: ModelParams, h_y, h_z):
    """Log factor contributed by one parent when its level is peeled off.

    Kernel form; numerically identical to half the sum of the two
    conditional child-pair log weights.
    """
    bj = params.beta * params.J
    bj1 = params.beta * params.J1
    hy = np.asarray(h_y, dtype=np.float64)
    hz = np.asarray(h_z, dtype=np.float64)
    out = (
        log_cosh_even(bj, bj1 + hz)
        + log_cosh_even(bj, -bj1 + hz)
        + log_cosh_cross(
            bj1,
            hy + effective_field(-bj1 + hz, params),
            hy + effective_field(bj1 + hz, params),
        )
    )
    if np.ndim(out) == 0:
        return float(out)
    return out


def _lse(values) -> float:
    a = np.asarray(values, dtype=np.float64)
    m = float(np.max(a))
    return m + float(np.log(np.sum(np.exp(a - m))))


def _ln_z1(params: ModelParams, mode: str, child_fields) -> float:
    """Depth-1 log partition function by direct enumeration.

    The root of a full tree has three children, which the two-child
    recursion never touches; enumerating the 16 (full) or 8 (half) terms
    keeps the base exact.
    """
    hs = [float(v) for v in child_fields]
    n_children = 3 if mode == "full" else 2
    if len(hs) != n_children:
        raise ValueError(f"expected {n_children} child fields, got {len(hs)}")
    expos = []
    for s_root in (1, -1):
        for spins in itertools.product((1, -1), repeat=n_children):
            pair_sum = sum(a * b for a, b in itertools.combinations(spins, 2))
            edge_sum = s_root * sum(spins)
            field = sum(h * s for h, s in zip(hs, spins))
            expos.append(params.beta * (params.J * pair_sum + params.J1 * edge_sum) + field)
    return _lse(expos)


def log_partition_recursive(params: ModelParams, fields: FieldAssignment, depth: int | None = None) -> float:
    """ln Z at the given depth from the telescoped level factors.

    Requires a recursion-consistent field family (from ``propagate_inward``);
    exact at every depth, with no enumeration beyond the depth-1 base.
    """
    tree = fields.tree
    n = tree.depth if depth is None else depth
    if not 1 <= n <= tree.depth:
        raise ValueError(f"depth must be in [1, {tree.depth}], got {n}")
    h = fields.h_array
    ln_z = _ln_z1(params, tree.mode, h[list(tree.vertices_at(1))])
    for m in range(1, n):
        xs = list(tree.vertices_at(m))
        first = np.array([tree.children[x][0] for x in xs])
        second = np.array([tree.children[x][1] for x in xs])
        ln_z += float(np.sum(level_log_factor(params, h[first], h[second])))
    return ln_z


@dataclass(frozen=True)
class FreeEnergyReport:
    """Free-energy sequence for one constant-field branch on the full tree.

    ``f_n = -ln Z_n / (3 beta 2**n)`` converges geometrically; Richardson
    extrapolation of the last two terms removes the 2**-n tail exactly, so
    ``f_extrapolated`` agrees with the closed form ``f_const_field =
    -level_rate / (2 beta)`` to rounding.  ``level_rate`` itself is the raw
    per-parent log factor, reported for anyone who wants the unnormalized
    display convention.
    """

    branch: str
    u_star: float
    h_star: float
    beta: float
    level_rate: float
    per_level: tuple[tuple[int, int, float], ...]  # (level, vertex count, contribution)
    ln_z: tuple[float, ...]                        # n = 1 .. n_max
    f_n: tuple[float, ...]
    f_extrapolated: float
    f_const_field: float
    tail_gap: float
    converged: bool


def free_energy(params: ModelParams, branch: str = "u3", n_max: int = 30) -> FreeEnergyReport:
    """Free energy of one constant-field branch, with its finite-n record."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    fps = ti_fixed_points(params)
    u = fps.branch(branch)
    h = 0.5 * math.log(u)
    rate = level_log_factor(params, h, h)
    ln_z1 = _ln_z1(params, "full", (h, h, h))

    ln_z = [ln_z1 + 3.0 * (2 ** (n - 1) - 1) * rate for n in range(1, n_max + 1)]
    f_n = [-z / (3.0 * params.beta * 2**n) for n, z in zip(range(1, n_max + 1), ln_z)]
    f_extrapolated = 2.0 * f_n[-1] - f_n[-2]
    tail_gap = abs(f_n[-1] - f_n[-2])
    converged = tail_gap <= 1e-9 * max(1.0, abs(f_extrapolated))
    per_level = tuple(
        (m, 3 * 2 ** (m - 1), 3 * 2 ** (m - 1) * rate) for m in range(1, n_max)
    )
    return FreeEnergyReport(
        branch=branch,
        u_star=u,
        h_star=h,
        beta=params.beta,
        level_rate=rate,
        per_level=per_level,
        ln_z=tuple(ln_z),
        f_n=tuple(f_n),
        f_extrapolated=f_extrapolated,
        f_const_field=-rate / (2.0 * params.beta),
        tail_gap=tail_gap,
        converged=converged,
    )


def asymptotic_field_slope(J: float, J1: float) -> float:
    """Zero-temperature growth rate of the upper constant log-field.

    Half the max of the candidate exponent rates of the quadratic's root
    sum.  Only the 4*J1 entry is ever maximal where the upper branch
    actually persists (J1 > 0, J + J1 > 0); the remaining entries are kept
    for fidelity to the source formula.
    """
    return 0.5 * max(2.0 * (J1 - J), 3.0 * J1 - J, 4.0 * J1, J1 - J, 0.0)


@dataclass(frozen=True)
class AsymptoteResult:
    """Zero-temperature free-energy limit of the upper branch.

    ``method`` records how ``limit`` was obtained; the closed forms are
    experimental readings of an ambiguous source display (see
    ``zero_temperature_limit``) and are never used as the primary value.
    """

    slope: float
    limit: float
    method: str
    stable: bool
    samples: tuple[tuple[float, float], ...]
    closed_form_verbatim: float | None = None
    closed_form_corrected: float | None = None


def _closed_form_limit(J: float, J1: float, slope: float, corrected: bool) -> float:
    # The printed display weights |d*J1 + beta*J + M| by eps and sums over
    # eps = +-1; read verbatim the summand is eps-independent and the term
    # cancels to zero.  The corrected reading substitutes eps*J and scopes
    # the signs as in the transmitted-field asymptotics, which reproduces
    # the numeric limit.
    total = 0.0
    for d in (1.0, -1.0):
        if corrected:
            inner = 0.5 * (abs(d * J1 - J + slope) - abs(d * J1 + J + slope))
        else:
            inner = 0.0
        total += 0.5 * abs(d * J1 + slope - inner)
        total += 0.25 * (abs(J1 + J + d * slope) + abs(J1 - J + d * slope))
    # Same normalization as the numeric limit: -1/(2 beta) per level rate.
    return -0.5 * total


def zero_temperature_limit(
    J: float,
    J1: float,
    beta_samples=(10.0, 20.0, 50.0),
    closed_forms: bool = False,
) -> AsymptoteResult:
    """Numeric beta -> infinity limit of the upper-branch free energy.

    Requires J1 > 0 and J + J1 > 0 (where the upper branch persists).  The
    limit is taken as the value at the largest beta sample, flagged stable
    when the two largest samples agree to 1e-3.  Experimental closed forms
    are attached only on request.
    """
    if not (J1 > 0.0 and J + J1 > 0.0):
        raise ValueError("requires J1 > 0 and J + J1 > 0")
    betas = sorted(float(b) for b in beta_samples)
    if len(betas) < 2:
        raise ValueError("need at least two beta samples")
    samples = []
    for b in betas:
        params = ModelParams(J=J, J1=J1, beta=b)
        if ti_fixed_points(params).regime != REGIME_THREE:
            raise ValueError(f"beta={b} is outside the three-solution regime; raise the samples")
        samples.append((b, free_energy(params, "u3").f_extrapolated))
    limit = samples[-1][1]
    stable = abs(samples[-1][1] - samples[-2][1]) < 1e-3
    slope = asymptotic_field_slope(J, J1)
    verbatim = corrected = None
    if closed_forms:
        verbatim = _closed_form_limit(J, J1, slope, corrected=False)
        corrected = _closed_form_limit(J, J1, slope, corrected=True)
    return AsymptoteResult(
        slope=slope,
        limit=limit,
        method="numeric_limit",
        stable=stable,
        samples=tuple(samples),
        closed_form_verbatim=verbatim,
        closed_form_corrected=corrected,
    )
