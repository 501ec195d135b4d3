"""Online health test: failure probability and the entropy guarantee.

Each frame counts how many pixel codes fall below t_minus or above
t_plus; exceeding either count bound discards the frame. Because the code
distribution is known exactly, the failure probability is computed
analytically. Sweeping the LED intensity shows the alarm saturating
before the entropy collapses, and the guarantee audit finds the highest
certifiable entropy floor.
"""

import numpy as np

from qrnglab import (
    ArrayModel,
    ChipParams,
    HealthConfig,
    REFERENCE_PIXELS,
    SourceParams,
    health_sweep,
    verify_guarantee,
)

chip = ChipParams()
model = ArrayModel.uniform(chip, SourceParams(625.0), REFERENCE_PIXELS[1], 64)
cfg = HealthConfig(t_minus=64, t_plus=940, n_minus_max=1, n_plus_max=1)

grid = np.linspace(0, 1200, 49)
sweep = health_sweep(grid, model, cfg)

print(f"{'mu_e':>7}  {'p_fail':>12}  {'avg h/bit':>9}")
for pt in sweep[::4]:
    print(f"{pt.mu_e:>7.0f}  {pt.p_fail:>12.4e}  {pt.avg_h_min_per_bit:>9.5f}")

print("\nguarantee audit: a frame with array entropy at or below the floor")
print("must pass the health test with probability at most epsilon.")
for floor_per_bit in (0.98, 0.97, 0.96):
    audited = HealthConfig(64, 940, 1, 1, h_min_floor=floor_per_bit * 2,
                           epsilon=1e-6)
    holds, witnesses = verify_guarantee(sweep, audited)
    verdict = "HOLDS" if holds else (
        f"violated at mu_e = {[round(w.mu_e) for w in witnesses]}"
    )
    print(f"  floor {floor_per_bit:.2f}/bit, epsilon 1e-6: {verdict}")

print("\nthe 0.98/bit floor is not certifiable with these thresholds: the")
print("conditional entropy dips to ~0.974/bit near mu_e ~ 100-250 (the")
print("Poisson envelope spans too few symbol periods) while frames there")
print("still pass; the dip is invisible to the out-of-range counters. At")
print("0.96/bit the alarm always fires first.")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(__file__).parent / "output"
    out.mkdir(exist_ok=True)
    fig, ax1 = plt.subplots(figsize=(8, 4))
    ax2 = ax1.twinx()
    mu = [pt.mu_e for pt in sweep]
    ax1.plot(mu, [pt.p_fail for pt in sweep], "r.-", lw=1, label="p_fail")
    ax2.plot(mu, [pt.avg_h_min_per_bit for pt in sweep], "b.-", lw=1,
             label="entropy/bit")
    ax1.set_xlabel("mean photo-electrons per frame")
    ax1.set_ylabel("failure probability", color="r")
    ax2.set_ylabel("avg conditional min-entropy per bit", color="b")
    fig.tight_layout()
    fig.savefig(out / "health_monitoring.png", dpi=120)
    print(f"\nplot written to {out / 'health_monitoring.png'}")
except ImportError:
    print("\n(matplotlib not available; skipping plot)")
