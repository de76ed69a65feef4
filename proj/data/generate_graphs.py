#!/usr/bin/env python3
"""Generate the bundled collaboration-style graphs.

Each graph follows a seeded advisor/student co-authorship model: a minority
of hub authors form a preferential-attachment backbone, every remaining
author joins one hub's group, and additional papers create triangles inside
groups plus occasional cross-group collaborations. The edge count is then
padded/trimmed to hit the exact target. Output is a 1-based edge list, one
edge per line, '%' comment header.

Run from the repository root:  python3 data/generate_graphs.py
"""

import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def collaboration_graph(num_nodes, num_edges, seed, hub_fraction=0.11,
                        cross_fraction=0.08):
    rng = random.Random(seed)
    num_hubs = max(2, int(round(hub_fraction * num_nodes)))
    hubs = list(range(num_hubs))
    students = list(range(num_hubs, num_nodes))
    edges = set()

    def add(a, b):
        if a != b:
            edges.add((min(a, b), max(a, b)))

    # hub backbone: preferential-attachment tree plus a few extra links
    hub_weight = [1.0] * num_hubs
    for h in range(1, num_hubs):
        total = sum(hub_weight[:h])
        r = rng.random() * total
        acc = 0.0
        for i in range(h):
            acc += hub_weight[i]
            if acc >= r:
                add(h, i)
                hub_weight[i] += 1.0
                hub_weight[h] += 1.0
                break

    # every student co-authors with one hub (their group)
    group = {}
    for s in students:
        total = sum(hub_weight)
        r = rng.random() * total
        acc = 0.0
        for i in range(num_hubs):
            acc += hub_weight[i]
            if acc >= r:
                group[s] = i
                add(s, i)
                hub_weight[i] += 0.5
                break

    members = {h: [s for s in students if group[s] == h] for h in hubs}

    # remaining papers: mostly within-group student pairs (triangles through
    # the hub), sometimes a cross-group collaboration
    budget = num_edges - len(edges)
    attempts = 0
    while budget > 0 and attempts < 50 * num_edges:
        attempts += 1
        if rng.random() < cross_fraction:
            a, b = rng.sample(range(num_nodes), 2)
        else:
            h = rng.choices(hubs, weights=[1 + len(members[h]) for h in hubs])[0]
            if len(members[h]) < 2:
                continue
            a, b = rng.sample(members[h], 2)
        key = (min(a, b), max(a, b))
        if key not in edges:
            edges.add(key)
            budget -= 1

    # pad with uniform non-edges if the group structure saturated early
    while len(edges) < num_edges:
        a, b = rng.sample(range(num_nodes), 2)
        add(a, b)

    # trim any overshoot without isolating nodes
    edge_list = sorted(edges)
    rng.shuffle(edge_list)
    degree = {}
    for a, b in edge_list:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    while len(edge_list) > num_edges:
        for idx, (a, b) in enumerate(edge_list):
            if degree[a] > 1 and degree[b] > 1:
                degree[a] -= 1
                degree[b] -= 1
                edge_list.pop(idx)
                break
        else:
            raise RuntimeError("cannot trim without isolating a node")
    return sorted(edge_list)


def write_graph(name, num_nodes, num_edges, seed, **kwargs):
    edges = collaboration_graph(num_nodes, num_edges, seed, **kwargs)
    nodes = {n for e in edges for n in e}
    assert len(nodes) == num_nodes, (name, len(nodes))
    assert len(edges) == num_edges
    path = HERE / f"{name}.edges"
    with path.open("w") as f:
        f.write(f"% {name}: {num_nodes} nodes, {num_edges} edges (synthetic)\n")
        for a, b in edges:
            f.write(f"{a + 1} {b + 1}\n")
    print(f"wrote {path} ({num_nodes} nodes, {num_edges} edges)")


if __name__ == "__main__":
    write_graph("ca-netscience", 379, 914, seed=20260823)
    write_graph("ca-sandi-auths", 86, 124, seed=42, hub_fraction=0.16)
