"""Run a list of presets and write each one's artifacts under an output root.

    python scripts/run_presets.py --out results oracle prop1 prop2
    python scripts/run_presets.py --out results --all --threads 4
"""
import argparse
import logging
import os
import time

from stochheat.harness.config import PRESETS, preset
from stochheat.harness.run import run

log = logging.getLogger("run_presets")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="preset names (default: the fast ones)")
    ap.add_argument("--all", action="store_true", help="every preset, including the long nonlinear runs")
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    names = sorted(PRESETS) if args.all else (args.names or ["oracle", "prop1", "prop2", "estimate-temporal",
                                                              "estimate-spatial", "rate"])
    for name in names:
        overrides = {"threads": args.threads}
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = preset(name).with_overrides(**overrides)
        t0 = time.perf_counter()
        res = run(cfg, os.path.join(args.out, name))
        log.info("%-20s pass=%s  %.1fs  hash %s", name, res.passed, time.perf_counter() - t0, cfg.config_hash())


if __name__ == "__main__":
    main()
