"""Min-entropy of the retained symbol, unconditional and conditioned on
the classical noise.

The conditional guessing probability is

    p_guess = integral P_E(e) * max_s P(symbol = s | E = e) de.

Given e, the symbol distribution is a truncated Poisson sum pushed through
the floor/clamp quantizer, so as a function of e it is a step function:
it only changes when K*n + e + offset crosses an integer for some
photo-electron count n in the truncated support. Between consecutive
crossings the integrand is a constant times the noise density, whose
integral is a difference of normal CDF values. The integration below
splits exactly at those crossings, which makes the quadrature exact up to
the (bounded, reported) Poisson and Gaussian tail truncations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtr

from .errors import ConvergenceError
from .model import _poisson_weights, extract_symbol
from .types import ChipParams, EntropyResult, NoiseParams, Pmf, QuadratureSpec, SourceParams

# ---------------------------------------------------------------------------
# Unconditional
# ---------------------------------------------------------------------------


def min_entropy_unconditional(pmf_symbols: Pmf) -> EntropyResult:
    """Min-entropy of a symbol distribution with no side information:
    p_guess is simply the largest probability."""
    n = len(pmf_symbols)
    n_bits = int(round(np.log2(n)))
    if 2**n_bits != n:
        raise ValueError(f"symbol alphabet size {n} is not a power of two")
    return EntropyResult.from_p_guess(pmf_symbols.max_prob(), n_bits=n_bits)


# ---------------------------------------------------------------------------
# Conditional on the classical noise
# ---------------------------------------------------------------------------


def _symbol_steps(
    kn: np.ndarray,
    w: np.ndarray,
    sym_table: np.ndarray,
    z_max: int,
    a: float,
    b: float,
    n_buckets: int,
):
    """Piecewise-constant symbol masses of the conditional distribution on
    the window [a, b].

    kn holds K*n + offset for every photo-electron count n in the
    truncated support, w the matching Poisson weights, sym_table the
    code-to-bucket map (length z_max + 1). Returns (edges, masses) where
    edges has length m+1 and masses is (m, n_buckets), row i giving the
    per-bucket mass on [edges[i], edges[i+1]).
    """
    codes = np.clip(np.floor(kn + a).astype(np.int64), 0, z_max)
    start = np.zeros(n_buckets)
    np.add.at(start, sym_table[codes], w)

    # Crossings of K*n + e + offset through integers m, strictly inside (a, b).
    first_e = (np.floor(kn + a) + 1.0) - kn
    counts = np.maximum(0, np.ceil(b - first_e).astype(np.int64))
    total = int(counts.sum())
    if total == 0:
        return np.array([a, b]), start[None, :]

    n_idx = np.repeat(np.arange(len(kn)), counts)
    offsets = np.concatenate([np.arange(c) for c in counts if c > 0])
    eb = first_e[n_idx] + offsets
    ms = np.floor(kn[n_idx] + a).astype(np.int64) + 1 + offsets

    order = np.argsort(eb, kind="stable")
    eb = eb[order]
    n_idx = n_idx[order]
    ms = ms[order]

    bucket_from = sym_table[np.clip(ms - 1, 0, z_max)]
    bucket_to = sym_table[np.clip(ms, 0, z_max)]
    wk = w[n_idx]
    deltas = np.zeros((total, n_buckets))
    rows = np.arange(total)
    np.subtract.at(deltas, (rows, bucket_from), wk)
    np.add.at(deltas, (rows, bucket_to), wk)

    masses = np.vstack([start[None, :], start[None, :] + np.cumsum(deltas, axis=0)])
    edges = np.concatenate([[a], eb, [b]])
    return edges, masses


def _split_edges(edges: np.ndarray, splits: int) -> np.ndarray:
    """Subdivide each interval of an edge vector into `splits` equal parts."""
    if splits == 1:
        return edges
    left = edges[:-1]
    width = np.diff(edges)
    frac = np.arange(splits) / splits
    fine = (left[:, None] + width[:, None] * frac[None, :]).ravel()
    return np.concatenate([fine, edges[-1:]])


def _guess_integral(
    source: SourceParams,
    noise: NoiseParams,
    chip: ChipParams,
    quad: QuadratureSpec,
    splits: int,
    code_range: tuple[int, int] | None = None,
) -> tuple[float, float]:
    """Accumulate integral P_E(e) max_s(masses) de over all dark-electron
    components, together with integral P_E(e) (accepted mass) de.

    With code_range set, only codes inside [code_range] count toward the
    symbol buckets; everything else lands in a reject bucket, enabling the
    conditioned-on-acceptance variant.
    """
    k = chip.gain_k
    z_max = chip.z_max
    ns, w_ph = _poisson_weights(source.mu_e, quad.tail_eps)
    kn = k * ns + chip.adc_offset

    codes_all = np.arange(z_max + 1)
    sym_table = extract_symbol(codes_all, chip).astype(np.int64)
    n_buckets = chip.n_symbols
    if code_range is not None:
        lo, hi = code_range
        outside = (codes_all < lo) | (codes_all > hi)
        sym_table = sym_table.copy()
        sym_table[outside] = chip.n_symbols
        n_buckets += 1

    nds, w_d = _poisson_weights(noise.mu_dark, quad.tail_eps)
    total_max = 0.0
    total_accept = 0.0
    for nd, wd in zip(nds, w_d):
        mu_c = noise.mu_r + k * nd
        if noise.sigma_r == 0.0:
            # Degenerate readout: the component is a point mass at mu_c.
            edges, masses = _symbol_steps(
                kn, w_ph, sym_table, z_max, mu_c, mu_c, n_buckets
            )
            row = masses[0]
            total_max += wd * row[: chip.n_symbols].max()
            total_accept += wd * row[: chip.n_symbols].sum()
            continue
        a = mu_c - quad.sigma_window * noise.sigma_r
        b = mu_c + quad.sigma_window * noise.sigma_r
        edges, masses = _symbol_steps(kn, w_ph, sym_table, z_max, a, b, n_buckets)
        g_max = masses[:, : chip.n_symbols].max(axis=1)
        g_acc = masses[:, : chip.n_symbols].sum(axis=1)
        fine_edges = _split_edges(edges, splits)
        cdf = ndtr((fine_edges - mu_c) / noise.sigma_r)
        piece = np.diff(cdf)
        if splits > 1:
            g_max = np.repeat(g_max, splits)
            g_acc = np.repeat(g_acc, splits)
        total_max += wd * float(np.dot(g_max, piece))
        total_accept += wd * float(np.dot(g_acc, piece))
    return total_max, total_accept


def _truncation_bound(noise: NoiseParams, quad: QuadratureSpec) -> float:
    """Additive bound on p_guess from all truncations: two Poisson tails
    plus the Gaussian window tails (integrand is at most 1)."""
    gauss_tail = 0.0 if noise.sigma_r == 0.0 else 2.0 * ndtr(-quad.sigma_window)
    return 2.0 * quad.tail_eps + float(gauss_tail)


def min_entropy_conditional(
    source: SourceParams,
    noise: NoiseParams,
    chip: ChipParams,
    quad: QuadratureSpec | None = None,
    accepted_range: tuple[int, int] | None = None,
) -> EntropyResult:
    """Min-entropy of the retained symbol for an adversary observing the
    full classical realization (readout sample plus dark-electron count).

    The integral is evaluated per dark-electron mixture component over a
    +-sigma_window readout window, split exactly at the discontinuities
    of the conditional symbol distribution. Successive refinements (each
    smooth piece subdivided twice as finely) must agree within
    quad.refine_tol; the integrand is constant on each piece, so in
    practice refinement changes nothing beyond rounding.

    accepted_range, if given, conditions the symbol distribution on the
    code landing inside [lo, hi] (per-pixel health-test acceptance), with
    the noise reweighted by the acceptance probability.
    """
    quad = quad or QuadratureSpec()

    def evaluate(splits: int) -> float:
        gmax, gacc = _guess_integral(source, noise, chip, quad, splits, accepted_range)
        if accepted_range is not None:
            if gacc <= 0.0:
                raise ConvergenceError(
                    "acceptance probability is zero; conditional result undefined"
                )
            return gmax / gacc
        return gmax

    splits = quad.base_splits
    p_prev = evaluate(splits)
    delta = None
    for _ in range(quad.max_refinements):
        splits *= 2
        p_next = evaluate(splits)
        delta = abs(p_next - p_prev)
        p_prev = p_next
        if delta < quad.refine_tol:
            break
    if delta is not None and delta > quad.fail_tol:
        raise ConvergenceError(
            f"quadrature did not converge: last refinement moved p_guess by {delta:.3e}",
            context={"delta": delta, "splits": splits},
        )

    bound = 0.0 if accepted_range is not None else _truncation_bound(noise, quad)
    return EntropyResult.from_p_guess(
        min(p_prev, 1.0), n_bits=chip.n_retained_bits, truncation_bound=bound
    )


def entropy_curve(
    mu_e_grid,
    noise: NoiseParams,
    chip: ChipParams,
    quad: QuadratureSpec | None = None,
) -> list[tuple[float, EntropyResult]]:
    """Conditional min-entropy evaluated at each source strength of an
    ascending grid. Grid points are independent; evaluation may run on a
    thread pool (QRNG_LAB_THREADS) and results keep input order."""
    grid = [float(m) for m in mu_e_grid]
    if not grid:
        raise ValueError("mu_e grid must be non-empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("mu_e grid must be ascending")

    def one(mu_e: float) -> tuple[float, EntropyResult]:
        try:
            return mu_e, min_entropy_conditional(SourceParams(mu_e), noise, chip, quad)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"entropy evaluation failed at mu_e={mu_e}: {exc}",
                context={"mu_e": mu_e},
            ) from exc

    n_threads = _thread_count()
    if n_threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(one, grid))
    return [one(m) for m in grid]


def _thread_count() -> int:
    raw = os.environ.get("QRNG_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
