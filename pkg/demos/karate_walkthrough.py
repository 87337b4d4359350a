"""
Walking through detection on the karate club
=============================================

Each of the three steps is run separately so the intermediate objects
can be inspected. Member numbers printed here are 1-based, as in
Zachary's description of the club.
"""
import numpy as np

from agreecomm import DetectionParams, ari, assign, compile_all, detect, karate, nmi, uncover
from agreecomm.detection import Provenance, edge_agreements

graph, truth = karate()
print(f"{graph.n} members, {graph.m} friendships")

# Step 1: every member keeps its ceil(d/2) best-connected friends.
params = DetectionParams(tau=0.2, seed=0)
lists = compile_all(graph, params)
for v in (0, 33, 8):
    members = [u + 1 for u in lists[v].members]
    print(f"#{v + 1:<2} degree {graph.degree(v):2d} keeps {members}")

# Step 2: agreement is counted on every edge, then each member picks a friend.
agreements = edge_agreements(graph, lists)
print(f"agreement values over all {2 * graph.m} directed edges: {np.bincount(agreements)}")

assignment = assign(graph, params, lists)
fallback = np.flatnonzero(assignment.provenance == Provenance.DEGREE_FALLBACK) + 1
print(f"members that fell back on their best-connected friend: {fallback.tolist()}")

# Step 3: merging each member with its pick gives the communities.
partition = uncover(assignment)
for community in partition.communities():
    print(sorted(v + 1 for v in community))

print(f"ARI={ari(partition, truth):.3f} NMI={nmi(partition, truth):.3f}")

# The random part only settles ties, so the result moves with the seed.
scores = np.array(
    [(ari(p, truth), nmi(p, truth))
     for p, _ in (detect(graph, DetectionParams(seed=s)) for s in range(100))]
)
print("over 100 seeds, median ARI=%.3f NMI=%.3f" % tuple(np.median(scores, axis=0)))
