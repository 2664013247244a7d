"""Compare the compiled and pure-Python string kernels, then time one
end-to-end run under each backend.

    python benchmarks/bench_kernels.py [--ticks 300]
"""
import argparse
import os
import random
import subprocess
import sys
import timeit

from frosty import _kernels_py as pure
from frosty import kernels


def workload(seed=0, groups=40, length=160):
    rng = random.Random(seed)
    base = "".join(rng.choice("01") for _ in range(length))
    gs = []
    for _ in range(groups):
        cut = rng.randint(length // 2, length)
        gs.append((base[:cut] + "".join(rng.choice("01") for _ in range(length - cut)),
                   rng.randint(1, 4)))
    votes = [v for v, _ in gs[:20]]
    return base, gs, votes


def bench(mod, base, gs, votes, number):
    cases = {
        "lcp": lambda: mod.lcp(base, gs[0][0]),
        "kth_lcp": lambda: mod.kth_lcp(gs, base, 72),
        "count_extending": lambda: mod.count_extending(gs, base[:100]),
        "bit_split": lambda: mod.bit_split(gs, 90),
        "majority_prefix": lambda: mod.majority_prefix(votes),
    }
    return {name: min(timeit.repeat(fn, number=number, repeat=3)) / number
            for name, fn in cases.items()}


def run_once(ticks, force_pure):
    env = dict(os.environ)
    if force_pure:
        env["FROSTY_PURE"] = "1"
    code = ("import time\nfrom frosty.simnet import Scenario, run_scenario\n"
            "from frosty.params import ProtocolParams\n"
            f"t = time.perf_counter(); run_scenario(Scenario(params=ProtocolParams(n=25), horizon={ticks}))\n"
            "print(time.perf_counter() - t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ticks", type=int, default=300)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()
    base, gs, votes = workload()
    rows = {"python": bench(pure, base, gs, votes, args.number)}
    if kernels.compiled is not None:
        rows["cython"] = bench(kernels.compiled, base, gs, votes, args.number)
    print(f"{'kernel':<16}" + "".join(f"{k:>12}" for k in rows) + "     speedup")
    for name in rows["python"]:
        vals = [rows[k][name] for k in rows]
        line = f"{name:<16}" + "".join(f"{v * 1e6:>10.2f}us" for v in vals)
        if len(vals) == 2:
            line += f"  {vals[0] / vals[1]:>8.1f}x"
        print(line)
    py = run_once(args.ticks, True)
    print(f"\nhappy path n=25, {args.ticks} ticks: python {py:.2f}s", end="")
    if kernels.compiled is not None:
        cy = run_once(args.ticks, False)
        print(f", cython {cy:.2f}s ({py / cy:.2f}x)")
    else:
        print(" (compiled backend not built)")


if __name__ == "__main__":
    main()
