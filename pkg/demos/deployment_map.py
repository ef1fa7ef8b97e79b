"""Placing a tree on the map.

A routing tree only helps if its routers can stand on actual ground, so
this demo walks the geometric side: how large a region k unit-range
disks can cover (the growth rate a_k), how that rate turns a tree into
nested service areas, and what channel lengths and repeater chains the
embedding implies.

Two embeddings are compared for k = 4: the disk-covering optimum
(a_4 = sqrt(2), service areas shaped by overlapping disks) and the
square lattice (a_4 = 2, exact quadrant tiling with no dead zones but
longer channels).

Run:  python3 demos/deployment_map.py
"""

from qtnsim.deployment import covering_table, growth_rate, layout
from qtnsim.topology import TreeTopology

# --- how far k disks reach ----------------------------------------------------

print("disk-covering growth rates (k unit disks covering a disk of radius a_k)")
print(f"{'k':>3} {'a_k':>7} {'sqrt(k)':>8} {'efficiency':>11}")
for k, solution in sorted(covering_table().items()):
    a_k = solution.radius
    print(f"{k:>3} {a_k:>7.4f} {k**0.5:>8.4f} {a_k / k**0.5:>11.3f}")

# a_k < sqrt(k) always: disks must overlap to cover without gaps, so a
# covering hierarchy grows area slightly slower than the disk count.

# --- embedding a 3-level quaternary tree ---------------------------------------

topo = TreeTopology(k=4, n=3, m=10)
for mode in ("surface_covering", "square_lattice"):
    plan = layout(topo, mode=mode, l0=1.0)
    print(f"\nmode = {mode} (a_k = {plan.a_k:.4f})")
    print(f"  served area: {plan.area:.1f} km^2 for {topo.num_leaves} end nodes")
    print(f"  {'level':>5} {'channel km':>11} {'repeaters':>10} {'service radius km':>18}")
    for depth in range(topo.n):
        print(
            f"  {depth:>5} {plan.channel_lengths[depth]:>11.3f}"
            f" {plan.repeater_counts[depth]:>10} {plan.coverage_radius_at(depth):>18.3f}"
        )

    xs = [x for x, _ in plan.positions.values()]
    ys = [y for _, y in plan.positions.values()]
    print(f"  bounding box: x in [{min(xs):.2f}, {max(xs):.2f}], y in [{min(ys):.2f}, {max(ys):.2f}]")

# The lattice buys exact tiling with a_k = 2: every channel is longer
# and the served area larger for the same tree, which is why its
# overhead curve sits above the covering curve in overhead_curves.py.
