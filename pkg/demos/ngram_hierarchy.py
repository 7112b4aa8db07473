# Walking through the n-gram graph hierarchy on a toy protein corpus.
#
# Run with:  python3 demos/ngram_hierarchy.py

import numpy as np

from protgram.corpus import tokens_from_sequences
from protgram.ngram import build_hierarchy, format_stats, sequence_log_likelihood, transition_probabilities


# %% A tiny corpus
# Sequences are joined into one token stream with a separator between them.

sequences = ["MKTAYIAKQR", "MKTAYLLKQ", "GAVLIMKTA"]
tokens = list(tokens_from_sequences(sequences))
print("".join(tokens))

# %% Graphs for n = 1..3
# Each edge of G_n is an (n+1)-gram, so the nodes of the next level are the
# distinct edges of the previous one.

graphs = build_hierarchy(tokens, 3)
print(format_stats(graphs))
for lo, hi in zip(graphs, graphs[1:]):
    print(f"edges(G{lo.level}) = {lo.num_edges}  nodes(G{hi.level}) = {hi.num_nodes}")

# %% Transition probabilities
# Out-count normalised rows; nodes with no successors keep an all-zero row.

g1 = graphs[0]
p = transition_probabilities(g1)
k = g1.index["K"]
succ = {g1.nodes[j]: round(float(p[k, j]), 3) for j in np.flatnonzero(p[k])}
print("successors of K:", succ)

# %% Sequence log-likelihood under each level

for g in graphs:
    print(f"n={g.level}  log P(MKTAY) = {sequence_log_likelihood(g, 'MKTAY'):.4f}")
print("unseen transition K->A:", sequence_log_likelihood(g1, "KA"))
