"""
Cliques, clusters and uncertainty on an 11-gene network
=======================================================

A small chordal network with six cliques, six of its genes flagged as
differentially expressed (DE). We walk from the graph to its perfect
sequence of cliques, classify the cliques, merge them into clusters and
attach the uncertainty index to every DE gene.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np

from coexnet import UndirectedGraph, perfect_sequence
from coexnet.cluster import LabeledNetwork, build_clusters, classify_cliques, uncertainty

# genes are numbered 1..11 here and shifted to 0-based indices below
cliques = [{1, 2, 3}, {2, 3, 8, 10}, {8, 9, 10}, {4, 9, 10}, {8, 9, 11}, {2, 5, 6, 7}]
g = UndirectedGraph(11)
for c in cliques:
    for a, b in combinations(sorted(c), 2):
        g.add_edge(a - 1, b - 1)

def named(vs):
    return "{" + ",".join(str(v + 1) for v in sorted(vs)) + "}"

ps = perfect_sequence(g)
print("perfect sequence of cliques")
for c, s in zip(ps.cliques, ps.separators):
    print(f"  clique {named(c):<14} separator {named(s)}")

# any other valid ordering gives the same separator multiset
shuffled = perfect_sequence(g, np.random.default_rng(0).permutation(11).tolist())
print("same separators under another ordering:", shuffled.multiplicities == ps.multiplicities)

de = np.zeros(11, dtype=bool)
de[[5 - 1, 6 - 1, 7 - 1, 9 - 1, 10 - 1, 11 - 1]] = True
net = LabeledNetwork(g, de, Fraction(6, 11))
classes = classify_cliques(net, ps)
print("\nclique classes at alpha = 6/11")
for c, k in zip(ps.cliques, classes):
    print(f"  {named(c):<14} {k}")

# shared genes move to the cluster of the opposite class
cg = build_clusters(net, ps, classes)
cg, genes = uncertainty(cg, labels=de)
print("\nclusters")
for k, cl in enumerate(cg.clusters):
    print(f"  K{k} {cl.cls:<5} {named(cl.members):<12} eta={cl.eta} rho0={cl.rho0:.5f} rho={cl.rho:.4f}")
print("cluster-graph edges:", sorted(cg.edges))

print("\nper-gene uncertainty")
for gu in genes:
    print(f"  gene {gu.vertex + 1:>2}: cluster K{gu.cluster}, rho = {gu.rho:.4f}")
