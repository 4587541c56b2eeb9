import dataclasses
import time

import pytest

from roidetect.config import load_config
from roidetect.experiment import run_experiment
from roidetect.synthetic import SynthConfig, generate_synthetic

ACCEPTANCE_SEED = 1234


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """10 tiny slides for fast pipeline tests."""
    root = tmp_path_factory.mktemp("smalldata")
    config = SynthConfig(
        n_slides=10, slide_width=256, slide_height=256,
        primary_radius=(48.0, 64.0), secondary_radius=(22.0, 30.0),
        other_rect_side=(32.0, 56.0),
    )
    return generate_synthetic(root, config, seed=7)


@pytest.fixture(scope="session")
def acceptance_dataset(tmp_path_factory):
    """The 40-slide, 512x512, patch-32 end-to-end fixture."""
    root = tmp_path_factory.mktemp("acceptdata")
    start = time.perf_counter()
    manifest = generate_synthetic(root, SynthConfig(n_slides=40), seed=ACCEPTANCE_SEED)
    elapsed = time.perf_counter() - start
    return {"manifest": manifest, "synth_seconds": elapsed}


@pytest.fixture(scope="session")
def acceptance_run(acceptance_dataset, tmp_path_factory):
    """Experiment sweep over fractions 0.2 and 0.8 with 3 repeats each."""
    out = tmp_path_factory.mktemp("acceptout")
    config = load_config(
        seed=ACCEPTANCE_SEED,
        manifest=str(acceptance_dataset["manifest"]),
        out_dir=str(out),
    )
    config = dataclasses.replace(config, fractions=(0.2, 0.8), repeats=3)
    start = time.perf_counter()
    paths = run_experiment(config)
    elapsed = time.perf_counter() - start
    rows = {}
    for line in paths["csv"].read_text().splitlines()[1:]:
        fraction, metric, mean, ci_low, ci_high, k = line.split(",")
        rows[(float(fraction), metric)] = {
            "mean": float(mean), "ci_low": float(ci_low),
            "ci_high": float(ci_high), "k": int(k),
        }
    return {
        "paths": paths,
        "rows": rows,
        "config": config,
        "experiment_seconds": elapsed,
        "synth_seconds": acceptance_dataset["synth_seconds"],
    }
