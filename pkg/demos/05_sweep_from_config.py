"""
Running a sweep from a config file
==================================

The ``cogaccess`` command reads a small text config and writes a CSV whose
comment header records the exact settings. This is the same as

    cogaccess sweep --config my.cfg --output sweep.csv

done from Python, on a trimmed copy of the bundled 100-slot configuration.
"""

import tempfile
from pathlib import Path

from cogaccess.cli import main
from cogaccess.config import format_config, load_config
from cogaccess.sweep import read_table

text = format_config(load_config("fig1.cfg"))
text = text.replace("lambda_step = 0.01", "lambda_step = 0.1").replace("multistarts = 64", "multistarts = 8")

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "trimmed.cfg"
    cfg.write_text(text)
    out = Path(tmp) / "sweep.csv"
    main(["sweep", "--config", str(cfg), "--output", str(out)])
    print(out.read_text().split("\n", 3)[1])  # the config hash line
    for row in read_table(out):
        if row["variant"] in ("proposed", "perfect"):
            print(f"lambda {row['lambda_p']:.1f}  {row['variant']:9s} mu_s {row['mu_s']:.4f}")
