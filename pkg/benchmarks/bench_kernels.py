"""Time the hot kernels with numba and with the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at
import time.  The child prints one JSON object; the parent prints a table
of best-of-``--repeat`` wall times and the speedup, and checks that both
backends produced the same graphs.

    python3 benchmarks/bench_kernels.py [--n 5000] [--repeat 3]
"""
import argparse
import hashlib
import json
import os
import subprocess
import sys
import time


def workloads(n):
    from sfoverlay.generators import GeneratorConfig, Model, SubstrateConfig, generate
    from sfoverlay.search import Algorithm, measure_search_curve

    sub = SubstrateConfig.for_mean_degree(2 * n, 10.0)
    pa_graph = generate(GeneratorConfig(Model.PA, n, 2), 0).graph

    def gen(cfg):
        return lambda seed: generate(cfg, seed).graph

    def curve(alg):
        def run(seed):
            measure_search_curve(pa_graph, alg, range(1, 8), 50, k_min=2, rng_seed=seed)
            return pa_graph

        return run

    return {
        f"pa n={n} m=2": gen(GeneratorConfig(Model.PA, n, 2)),
        f"pa n={n} m=2 kc=10": gen(GeneratorConfig(Model.PA, n, 2, hard_cutoff=10)),
        f"hapa n={n // 5} m=1": gen(GeneratorConfig(Model.HAPA, n // 5, 1)),
        f"cm n={n} gamma=2.5": gen(GeneratorConfig(Model.CM, n, 1, gamma_target=2.5, hard_cutoff=100)),
        f"dapa n={n // 5} tau=3": gen(GeneratorConfig(Model.DAPA, n // 5, 1, tau_sub=3, substrate=sub)),
        "nf curve 50 sources": curve(Algorithm.NF),
        "rw curve 50 sources": curve(Algorithm.RW),
    }


def child(n, repeat):
    from sfoverlay import backend

    out = {"backend": backend(), "timings": {}, "digests": {}}
    for name, fn in workloads(n).items():
        fn(0)  # warm-up, pays numba compile/cache load
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            g = fn(1)
            best = min(best, time.perf_counter() - t0)
        out["timings"][name] = best
        out["digests"][name] = hashlib.sha1(g.edge_array().tobytes()).hexdigest()
    print(json.dumps(out))


def run_backend(disable, n, repeat):
    env = dict(os.environ, SFOVERLAY_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, __file__, "--child", "--n", str(n), "--repeat", str(repeat)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        child(args.n, args.repeat)
        return 0

    jit = run_backend(False, args.n, args.repeat)
    py = run_backend(True, args.n, args.repeat)
    if jit["backend"] != "numba":
        print("numba is not importable; both runs used the fallback")
    width = max(len(k) for k in jit["timings"])
    print(f"{'workload':<{width}}  {'numba s':>9}  {'python s':>9}  {'speedup':>8}  same")
    for name, t_jit in jit["timings"].items():
        t_py = py["timings"][name]
        same = jit["digests"][name] == py["digests"][name]
        print(f"{name:<{width}}  {t_jit:9.4f}  {t_py:9.4f}  {t_py / t_jit:8.1f}  {'yes' if same else 'NO'}")
    return 0 if jit["digests"] == py["digests"] else 1


if __name__ == "__main__":
    sys.exit(main())
