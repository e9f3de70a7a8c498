"""Regenerate the frozen golden files. Run only when an intended behaviour change is reviewed."""

import json
import tempfile
from pathlib import Path

import numpy as np

from tiledsds.config import resolve_config
from tiledsds.estimators import BoxBlurEstimator, EstimatorContext
from tiledsds.experiments import run_stride_ablation
from tiledsds.grid import LatentGrid, write_grid
from tiledsds.mne import consolidate
from tiledsds.tiling import plan_tiles
from tiledsds.diffusion import gaussian_grid, make_rng, make_linear_schedule

HERE = Path(__file__).parent


def main():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = resolve_config("stride_ablation", overrides={"output_dir": tmp})
        report = run_stride_ablation(cfg)
    seams = {k: v for k, v in report.metrics.items() if k.startswith("mean_boundary_jump")}
    (HERE / "stride_ablation.json").write_text(json.dumps(seams, indent=2, sort_keys=True) + "\n")

    noisy = gaussian_grid(make_rng(7), 16, 16, 2)
    out = consolidate(noisy, BoxBlurEstimator(1), plan_tiles(16, 16, 8, 4), EstimatorContext(1))
    write_grid(HERE / "blur_consolidate_16x16x2_k8_s4_seed7.grid", out)
    write_grid(HERE / "noise_4x3x2_seed0.grid", gaussian_grid(make_rng(0), 4, 3, 2))
    write_grid(HERE / "schedule_T8.grid", make_linear_schedule(8, 1e-3, 5e-2).to_grid())


if __name__ == "__main__":
    main()
