"""
How running time grows with the graph
=====================================

Average degree stays at 20 while n doubles; the work per vertex only
depends on its own neighbourhood, so time should roughly double too.
"""
import time

from agreecomm import DetectionParams, detect, gen_lfr_like

previous = None
for n in (25_000, 50_000, 100_000, 200_000):
    graph, _ = gen_lfr_like(n=n, mu=0.3, seed=0)
    detect(graph)  # warm-up
    times = []
    for _ in range(3):
        start = time.perf_counter()
        detect(graph, DetectionParams(seed=1))
        times.append(time.perf_counter() - start)
    best = min(times)
    growth = "" if previous is None else f"  x{best / previous:.2f}"
    print(f"n={n:>7} m={graph.m:>8}  {best:.3f}s{growth}")
    previous = best
