"""Smoke test for the pynvodmr extension.

Build first:
    cargo build --release -p pynvodmr --features extension-module
then run `python3 python/smoke_test.py` from the repository root. The script
looks for target/release/libpynvodmr.so when the module is not installed.
"""

import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import pynvodmr

        return pynvodmr
    except ImportError:
        root = pathlib.Path(__file__).resolve().parent.parent
        for name in ("libpynvodmr.so", "libpynvodmr.dylib", "pynvodmr.pyd"):
            lib = root / "target" / "release" / name
            if lib.exists():
                spec = importlib.util.spec_from_file_location("pynvodmr", lib)
                mod = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(mod)
                return mod
        sys.exit("pynvodmr not built; see the docstring")


nv = load()


def check(name, cond, detail=""):
    print(f"{'ok  ' if cond else 'FAIL'} {name} {detail}")
    if not cond:
        check.failed += 1


check.failed = 0

d = nv.zero_field_splitting(300.0)
check("zero-field splitting", abs(d - 2.87e9 + 7.2e6) < 0.5e6, f"{d / 1e9:.6f} GHz")

app = nv.Apparatus(p_laser=0.02, p_mw=0.01)
s = nv.simulate_spectrum([0.0, 0.0, 0.0], app, f_start=d - 10e6, f_end=d + 10e6, n_freq=401, seed=1)
dips = s.fit_dips(prominence=1e-5)
check("single dip at zero field", len(dips) == 1, f"{len(dips)} dips")
check("dip at D(T)", abs(dips[0]["fit"]["center"] - d) < 50e3)

noisy = nv.simulate_spectrum([0.0, 0.0, 0.0], app, nv.Noise.shot_only(), f_start=d - 10e6, f_end=d + 10e6, n_freq=401, seed=1)
again = nv.simulate_spectrum([0.0, 0.0, 0.0], app, nv.Noise.shot_only(), f_start=d - 10e6, f_end=d + 10e6, n_freq=401, seed=1)
check("seeded noise is reproducible", noisy.contrast == again.contrast)
check("photon counts present", noisy.photon_counts is not None and len(noisy.photon_counts) == len(noisy))

smooth = nv.gaussian_filter(noisy.contrast, 2.0)
gain = nv.snr_db(smooth, s.contrast) - nv.snr_db(noisy.contrast, s.contrast)
check("gaussian filter raises SNR", gain > 0, f"+{gain:.2f} dB")
edge = nv.bilateral_filter([0.0] * 20 + [1.0] * 20, 2.0, 0.1, 10)
check("bilateral keeps an edge", edge[19] < 0.01 and edge[20] > 0.99)

bias = [0.8e-3, 0.3e-3, 0.6e-3]
target = [5e-6, 4e-6, 3e-6]
total = [b + t for b, t in zip(bias, target)]
lines = nv.resonances(total)
check("eight resonances", len(lines) == 8 and lines == sorted(lines))
spec = nv.simulate_spectrum(total, nv.Apparatus(p_laser=0.01, p_mw=0.01), f_start=2.83e9, f_end=2.91e9, n_freq=1601, seed=3)
r = spec.reconstruct(bias, refine=True)
err = max(abs(a - t) for a, t in zip(r["b_actual"], target))
check("vector reconstruction", err < 0.5e-6, f"max error {err * 1e6:.3f} uT")

fom = nv.sweep_fom([0.0, 0.0, 0.0], [0.01, 0.03], [nv.dbm_to_watts(10.0), nv.dbm_to_watts(20.0)], f_start=d - 20e6, f_end=d + 20e6, n_freq=401)
cells = [c for c in fom["cells"] if c is not None]
check("fom grid", len(cells) == 4 and all(math.isclose(c["fom"], c["contrast"] / c["linewidth"]) for c in cells))

cfg = nv.load_config("seed = 4\n[apparatus]\np_mw_dbm = 20.0\n")
check("config parses", cfg["seed"] == 4 and cfg["apparatus"]["p_mw_dbm"] == 20.0)
try:
    nv.load_config("[sweep]\nn_freq = 1\n")
    check("bad config rejected", False)
except ValueError as e:
    check("bad config rejected", "sweep.n_freq" in str(e))

for cid, passed, line in nv.selftest([1, 10]):
    check(f"selftest C{cid}", passed, line.split(None, 1)[1] if not passed else "")

print("FAILED" if check.failed else "all smoke checks passed")
sys.exit(1 if check.failed else 0)
