"""Builds a small reference output directory by driving the simulator CLI.

figgen consumes the simulator strictly through its external interfaces, so
the fixture shells out to ``topolink`` with throwaway configs sized for
speed rather than physics quality.
"""

import subprocess
import sys
from pathlib import Path

import pytest

COMMON = "[meta]\nschema_version = 1\n\n[pulse]\nfamily = sine_squared\n\n"

CONFIGS = {
    "transfer_ssh": ("transfer", COMMON +
                     "[network]\nkind = ssh\nlength = 4\nt = 1.0\nw = 0.0\n\n"
                     "[schedule]\ntau = 40.0\ndw_min = 0.32\n\n"
                     "[run]\nsteps = 1600\nframes = 60\n"),
    "sweep_ssh": ("sweep", COMMON +
                  "[network]\nkind = ssh\nlength = 3\nt = 1.0\nw = 0.0\n\n"
                  "[schedule]\ntau = 1.0\n\n"
                  "[sweep]\nparam = dw_min\nparam_values = 0.2:0.4:5\n"
                  "tau_values = 15:60:6\n\n[run]\nsteps = 1300\n"),
    "sweep_barrier": ("sweep", COMMON +
                      "[network]\nkind = barrier\nlength = 2\nw = 1.0\nt = 1.0\n"
                      "omega_edge = 0.0\nomega_barrier = 5.0\n\n"
                      "[schedule]\ntau = 1.0\n\n"
                      "[sweep]\nparam = omega_barrier_min\nparam_values = 1.6,2.0,2.4\n"
                      "tau_values = 30,60,90\n\n[run]\nsteps = 10000\n"),
    "spectrum_rescaled": ("spectrum", "[meta]\nschema_version = 1\n\n"
                          "[spectrum]\nmode = rescaled\ndw_values = 0.5:6.0:23\n"
                          "ratio_target = 10.0\n"),
    "scan_optimum": ("sweep", COMMON +
                     "[network]\nkind = ssh\nlength = 4\nt = 1.0\nw = 0.0\n\n"
                     "[schedule]\ntau = 1.0\n\n"
                     "[sweep]\nparam = dw_min\nparam_values = 0.1:0.5:21\n"
                     "tau_values = 40\n\n[run]\nsteps = 1600\n"),
    "scaling": ("scaling", COMMON +
                "[scaling]\nalphas = 0,0.5,1\ntau0 = 2.0,0.7,0.25\n"
                "lengths = 4,6,8\ndw_scaled_min = 2.0\nsimulate = true\n"),
    "disorder": ("disorder", COMMON +
                 "[network]\nkind = ssh\nlength = 4\nt = 1.0\nw = 0.0\n\n"
                 "[schedule]\ntau = 40.0\ndw_min = 0.32\n\n"
                 "[disorder]\np_values = 0.02,0.05\nclasses = ph_symmetric,ph_breaking\n"
                 "count = 6\ndw_min = 0.32\ntau0 = 40.0\n\n"
                 "[run]\nsteps = 1500\nseed = 5\n"),
    "gate_cp": ("gate", COMMON +
                "[gate]\ngate = cp\nlength = 4\ndw_min = 0.3\ntau = auto\n"
                "tau_window = 10,120\nsearch_steps = 2500\ntransfer_steps = 3000\n"
                "pulse_steps = 500\n\n[run]\nframes = 80\n"),
}


@pytest.fixture(scope="session")
def reference_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("reference")
    for name, (command, text) in CONFIGS.items():
        cfg = root / f"{name}.ini"
        cfg.write_text(text)
        out = root / name
        proc = subprocess.run(
            [sys.executable, "-m", "topolink.cli", command,
             "--config", str(cfg), "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, f"{name}: {proc.stderr}"
    return root
