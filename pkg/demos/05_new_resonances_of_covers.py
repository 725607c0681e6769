"""Do random covers pick up new resonances in a strip just left of delta?"""
# %%
from schottky import reference_config
from schottky.experiments import ExperimentConfig, frequency_trend, run_cover_experiment
from schottky.thermo import hausdorff_dimension

data = reference_config()
delta = hausdorff_dimension(data, 12).delta
rect = (delta / 2 + 0.1, delta - 0.05, -0.5, 0.5)
print("rectangle:", rect)

# %%
# A small run; the acceptance suite uses 200 trials per n.
cfg = ExperimentConfig(rectangle=rect, degree_cap=10, n_values=(4, 8, 16), trials=10, seed=0)
rows, summary = run_cover_experiment(cfg, data=data)
for n, v in frequency_trend(rows)["per_n"].items():
    print(f"n={n:3d}  new zeros in {v['new_zeros']}/{v['trials']} covers")
print("smallest |det| over no-zero trials:",
      min(r["min_abs_det"] for r in rows if r["new_zero_found"] is False))
