"""Compare the numba kernels against the plain numpy fallback.

Each mode runs in its own interpreter because the JIT switch is read at
import time. Usage::

    python3 benchmarks/bench_jit.py [--repeat 3] [--case simplex-3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from collapsehyp import corpus
from collapsehyp._jit import JIT_ENABLED
from collapsehyp.collapse import cone_collapse
from collapsehyp.curvature import verify_links
from collapsehyp.hyperbolize import hyperbolize
from collapsehyp.hypgeom import simplex_dihedral_angles

case, repeat = sys.argv[1], int(sys.argv[2])
c = corpus.collapsible_corpus(4)[case]
m = hyperbolize(c, cone_collapse(c), 0.25)

grams = []
for X in m.coords[:2000]:
    Q = X.copy()
    Q[:, 0] = -Q[:, 0]
    grams.append(Q @ X.T)

def angles():
    for G in grams:
        simplex_dihedral_angles(G)

def links():
    verify_links(m)

out = {"jit": JIT_ENABLED, "simplices": len(m.simplices)}
for name, fn in (("dihedral", angles), ("links", links)):
    t0 = time.perf_counter()
    fn()  # warm-up, includes compilation or cache load
    out[name + "_first"] = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(disable, case, repeat):
    env = dict(os.environ, COLLAPSEHYP_DISABLE_JIT="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, case, str(repeat)], env=env,
                         stdout=subprocess.PIPE, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="simplex-3")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    jit = run(False, args.case, args.repeat)
    ref = run(True, args.case, args.repeat)
    print(f"case {args.case}: {jit['simplices']} maximal simplices")
    print(f"{'kernel':<10}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}{'numba first call (s)':>24}")
    for k in ("dihedral", "links"):
        print(f"{k:<10}{jit[k]:>12.4f}{ref[k]:>12.4f}{ref[k] / jit[k]:>10.1f}{jit[k + '_first']:>24.3f}")


if __name__ == "__main__":
    main()
