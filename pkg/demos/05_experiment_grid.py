"""The experiment grid runner: sizes x expansions x seeds in one call.

run_experiment trains one model per grid cell, evaluates held-out
Pearson correlation (plus optional transfer datasets and a human-target
fine-tuning stage), and writes a reproducible report bundle: per-cell
training histories, a flat TSV of correlations, seed-aggregated
confidence intervals, and a manifest.

Run:  python3 demos/05_experiment_grid.py
"""

import tempfile
from pathlib import Path

from metricest.data import save_jsonl
from metricest.experiment import ExperimentSpec, run_experiment
from metricest.synthetic import generate_synthetic


def main():
    root = Path(tempfile.mkdtemp(prefix="metricest_grid_"))
    data = root / "corpus.jsonl"
    save_jsonl(generate_synthetic(120, seed=0), data)

    spec = ExperimentSpec(
        dataset=str(data),
        train_sizes=(40, 80),
        expansions=(1, 2),
        seeds=(0, 1),
        dev_count=20,
        vocab_size=200, embed_dim=8, hidden_dim=4,
        model_overrides={"head_hidden": 8, "interlayer_dropout": 0.0,
                         "final_dropout": 0.0},
        train_overrides={"learning_rate": 5e-3, "batch_size": 16,
                         "patience": 2, "max_epochs": 4},
    )
    out = root / "report"
    manifest = run_experiment(spec, out)

    ok = sum(1 for c in manifest["cells"] if c["status"] == "ok")
    print(f"ran {len(manifest['cells'])} cells ({ok} ok)")
    print(f"bundle: {out}\n")
    print("seed-aggregated correlations (report_ci.tsv):")
    print((out / "report_ci.tsv").read_text())


if __name__ == "__main__":
    main()
