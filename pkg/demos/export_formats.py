"""
Moving networks between JSON, GraphML and DOT
=============================================

Every graph format round-trips byte for byte, so a network can be handed
to Gephi or Graphviz and read back without drift.
"""

from fractions import Fraction

from coexnet import fit_decomposable, cluster_network
from coexnet.io import cluster_graph_document, graph_from_dot, graph_from_graphml, labels_document, write_graph
from coexnet.simulate import synthetic_reference_data

data = synthetic_reference_data(p=40, n=60, module_size=8, seed=5)
model, _ = fit_decomposable(data)
doc = labels_document(model.graph, data.names, data.de_labels)

text = write_graph(doc, "graphml")
assert write_graph(graph_from_graphml(text), "graphml") == text
dot = write_graph(doc, "dot")
assert write_graph(graph_from_dot(dot), "dot") == dot
print(dot[:400], "...")

# the cluster graph carries size, class and rho per cluster
cg, _ = cluster_network(model.graph, data.de_labels, Fraction(1, 2))
print(write_graph(cluster_graph_document(cg), "dot"))
