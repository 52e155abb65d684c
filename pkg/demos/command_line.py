"""
Driving the experiments from the command line
==============================================

Every experiment reads a plain ``key = value`` file.  This script writes a
small configuration, runs a few subcommands in-process and prints where
the CSV and JSON results landed.
"""

import os
import tempfile

from liespec import cli

work = tempfile.mkdtemp(prefix="liespec-")
cfg = os.path.join(work, "small.cfg")
with open(cfg, "w") as fh:
    fh.write("resolution = 64\nlambda_grid = 7.0, 13.0, 19.0\ncutoff.draws = 3\n")

for command in ("dual-table", "verify", "spectral-constant", "control", "cost-scan"):
    out = os.path.join(work, command)
    code = cli.main([command, "--config", cfg, "--out", out])
    print(f"{command:<18} exit {code}  ->  {', '.join(sorted(os.listdir(out)))}")
