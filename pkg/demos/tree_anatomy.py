"""Anatomy of a routing tree.

Builds the 64-end-node quaternary tree used throughout the other demos
and walks through the three structural ideas the simulator rests on:

  1. every node holds memory proportional to the traffic its depth sees,
  2. edge capacity shrinks geometrically toward the leaves, and
  3. a request between two end nodes occupies exactly the edges on the
     unique path through their lowest common ancestor.

Run:  python3 demos/tree_anatomy.py
"""

from qtnsim.topology import TreeTopology, activation_probability

topo = TreeTopology(k=4, n=3, m=10)
print(f"tree: k={topo.k}, depth n={topo.n}, m={topo.m}, end nodes N={topo.num_leaves}")

# --- memory and capacity ladder ---------------------------------------------

print("\nper-node memory and downlink capacity by depth")
print(f"{'depth':>5} {'role':<8} {'nodes':>6} {'memory':>7} {'edge cap':>9}")
for depth in range(topo.n + 1):
    label = next(iter(topo.nodes_at_depth(depth)))
    if depth == 0:
        role = "root"
    elif depth == topo.n:
        role = "leaf"
    else:
        role = "router"
    count = topo.k**depth
    memory = topo.memory_allocation(label)
    cap = topo.edge_capacity(depth) if depth < topo.n else 0
    cap_text = f"{cap}" if depth < topo.n else "-"
    print(f"{depth:>5} {role:<8} {count:>6} {memory:>7} {cap_text:>9}")

total = sum(topo.memory_allocation(lab) for d in range(topo.n + 1) for lab in topo.nodes_at_depth(d))
print(f"total qubits across the tree: {total}")

# --- routing through the lowest common ancestor -----------------------------

a = (0, 1, 2)
b = (0, 3, 1)
lca = topo.lowest_common_ancestor(a, b)
path = topo.routing_path(a, b)
print(f"\nroute {a} -> {b}")
print(f"  lowest common ancestor: {lca} (depth {len(lca)})")
print(f"  edges occupied ({len(path)}): {path}")

# A pair under the same depth-2 router stays local; one crossing the root
# climbs all the way up. Path length is 2*(n - lca_depth).
near = topo.routing_path((0, 0, 0), (0, 0, 1))
far = topo.routing_path((0, 0, 0), (3, 3, 3))
print(f"  siblings use {len(near)} edges, opposite corners use {len(far)} edges")

# --- how often a router participates -----------------------------------------

# Each step down the tree divides a node's share of routes by roughly k,
# which is exactly the decay the memory ladder above compensates.
print("\nshare of all end-node pairs whose route crosses one node at each depth")
print(f"{'depth':>5} {'measured':>10} {'ratio*k':>8}")
previous = None
for depth in range(0, topo.n):
    label = next(iter(topo.nodes_at_depth(depth)))
    measured = topo.activation_probability_empirical(label)
    ratio = f"{measured / previous * topo.k:>8.3f}" if previous else f"{'-':>8}"
    print(f"{depth:>5} {measured:>10.5f} {ratio}")
    previous = measured

# Under the analytic request model the per-cycle activation of a router
# y levels above the end nodes settles near 2*k^-y once y is a couple of
# levels deep.
print("\nanalytic per-cycle activation (branch, root, total) for y = 1..3")
for y in (1, 2, 3):
    branch, root, both = activation_probability(topo.k, y)
    print(f"  y={y}: branch={branch:.3e} root={root:.3e} total={both:.3e} total*k^y={both * topo.k**y:.3f}")
