"""
Detection as a message protocol
===============================

Vertices exchange two kinds of messages with their neighbours and never
look further. External pollers then merge communities, each over its own
slice of the vertices.
"""
from agreecomm import DetectionParams, MessageBus, PollerPlan, detect, gen_planted, poll_and_merge, run_rounds

graph, truth = gen_planted(z_out=2, seed=3)
params = DetectionParams(seed=42)

# Run the two rounds on an instrumented bus.
bus = MessageBus(graph)
assignment = run_rounds(graph, params, bus=bus, workers=4)
print(f"m={graph.m}: {bus.rounds} rounds, messages per round {bus.per_round}, total {bus.messages}")
print(dict(bus.kinds))

# The same choices come out of the vectorised pipeline.
pipeline_partition, pipeline_assignment = detect(graph, params)
print("same preferred neighbours as the pipeline:", assignment == pipeline_assignment)

# Any covering set of pollers yields the same communities, overlaps included.
plans = {
    "one poller": PollerPlan.whole(graph.n),
    "4 blocks": PollerPlan.blocks(graph.n, 4),
    "6 random, 30% overlap": PollerPlan.random(graph.n, 6, seed=1, overlap=0.3),
}
for name, plan in plans.items():
    partition = poll_and_merge(assignment, plan, workers=3)
    print(f"{name:>22}: {partition.num_communities} communities, equal: {partition == pipeline_partition}")
