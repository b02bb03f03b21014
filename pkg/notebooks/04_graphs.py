# Building weight sequences and checking them.

import numpy as np

from distsubgrad.graphmodel import (FixedGraph, PeriodicGraph, RandomSwitchingGraph,
                                    check_joint_strong_connectivity, make_graph_sequence,
                                    validate_graph, validate_row_stochastic)

# A matrix whose second row sums to 1.1.
print(validate_row_stochastic([[1.0, 0.0], [0.3, 0.8]]).summary())

# Ring edges dealt over three phases: each phase alone is disconnected.
seq = make_graph_sequence({"kind": "periodic", "n": 5, "ring_phases": 3, "weights": "metropolis"})
for k in range(3):
    print(f"phase {k}:\n{np.round(seq.matrix(k), 3)}")
print("one round connected?   ", check_joint_strong_connectivity(seq, 0, 1))
print("three rounds connected?", check_joint_strong_connectivity(seq, 0, 3))
print(validate_graph(seq).summary())

# Seeded random switching; a Hamiltonian cycle is spread over each window
# so the union of every window is connected by construction.
rnd = RandomSwitchingGraph(n=6, window=4, seed=1, edge_prob=0.1, eta=1 / 6)
print("\nrandom switching, rounds 0-3:")
for k in range(4):
    print(np.round(rnd.matrix(k), 3))
print(validate_graph(rnd).summary())

# Two agents that never exchange anything.
lonely = PeriodicGraph(n=2, mats=(np.eye(2),), window=1, balanced=True)
print("\n" + validate_graph(lonely).summary())

# Unbalanced and fixed: the weights of the local objectives come from q.
fixed = FixedGraph(n=3, A=[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.6, 0.0, 0.4]])
print("\n" + validate_graph(fixed).summary())
