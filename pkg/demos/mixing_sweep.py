"""
LFR-style graphs and the mixing parameter
=========================================

Power-law degrees and community sizes on 1000 vertices; mu is the share
of each vertex's links that leave its community.
"""
import numpy as np

from agreecomm import detect, gen_lfr_like, nmi
from agreecomm.generators import inter_edge_fraction

for mu in np.round(np.arange(0.1, 0.81, 0.1), 1):
    scores, mixing = [], []
    for seed in range(5):
        graph, truth = gen_lfr_like(n=1000, mu=mu, seed=seed)
        found, _ = detect(graph)
        scores.append(nmi(found, truth))
        mixing.append(inter_edge_fraction(graph, truth))
    print(f"mu={mu:.1f} measured mixing {np.mean(mixing):.3f}  NMI {np.mean(scores):.3f} +- {np.std(scores):.3f}")
