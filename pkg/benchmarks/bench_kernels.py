#!/usr/bin/env python3
"""Benchmark the compiled force-assembly kernel against the numpy fallback.

Two views: raw per-call assembly cost on meshes of increasing size, and
an end-to-end tension test (the assembly call dominates, but the Python
time loop overhead shows up at small element counts).

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

import tissuefit as tf
from tissuefit.dynamics import SimConfig
from tissuefit.kernels import available_backends, build_element_data, get_backend
from tissuefit.scenario import ExperimentSpec, run_experiment


def time_assembly(backend, mesh, params, repeats):
    kern = get_backend(backend)
    data = build_element_data(mesh, params.mu, 0.05)
    x = mesh.nodes * 1.08  # mild uniform stretch keeps det(F) > 0
    f = np.zeros_like(x)
    kern.assemble_forces(x, data, params.mu, params.alpha, params.K, f)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        kern.assemble_forces(x, data, params.mu, params.alpha, params.K, f)
    return (time.perf_counter() - t0) / repeats


def time_run(backend, mesh, params, rate):
    cfg = SimConfig(rate_scaling=rate, dt_safety=0.6)
    spec = ExperimentSpec("tension", target_displacement=0.1 * 0.017,
                          sample_height=0.017)
    t0 = time.perf_counter()
    res = run_experiment(spec, mesh, params, cfg, backend=backend)
    elapsed = time.perf_counter() - t0
    return elapsed, res.solver_result.n_steps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller meshes and fewer repeats")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("note: compiled kernel not built; timing the numpy backend only")
    params = tf.OgdenParams(1200.0, -6.3, 0.49)

    cases = [(4, 4, 3), (6, 6, 4), (12, 12, 8)]
    repeats = 50
    if not args.quick:
        cases.append((20, 20, 14))
        repeats = 200

    print("\nper-call force assembly (mesh of 27 x 27 x 17 mm):")
    print(f"{'divisions':>12} {'elements':>9} " +
          " ".join(f"{b:>12}" for b in backends) +
          ("   speedup" if len(backends) > 1 else ""))
    for div in cases:
        mesh = tf.generate_box_mesh((0.027, 0.027, 0.017), div)
        times = [time_assembly(b, mesh, params, repeats) for b in backends]
        row = f"{str(div):>12} {mesh.element_count:>9} "
        row += " ".join(f"{t * 1e6:>10.1f}us" for t in times)
        if len(times) > 1:
            row += f"   {times[0] / times[-1]:>6.1f}x"
        print(row)

    print("\nend-to-end tension test to 10% strain (rate scaling 60):")
    for div in [(4, 4, 3), (6, 6, 4)]:
        mesh = tf.generate_box_mesh((0.027, 0.027, 0.017), div)
        cells = []
        steps = None
        for b in backends:
            elapsed, steps = time_run(b, mesh, params, 60.0)
            cells.append(f"{b}: {elapsed:.3f}s")
        extra = f" ({steps} steps)"
        print(f"  {str(div):>10} " + "  ".join(cells) + extra)


if __name__ == "__main__":
    main()
