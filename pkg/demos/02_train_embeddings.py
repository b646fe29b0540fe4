"""
Training label embeddings on a synthetic log
=============================================

Sessions are treated as sentences and event labels as words. A skip-gram
model with negative sampling then places labels that co-occur close together.
"""

import numpy as np

from focustime.embedding import TrainConfig, build_corpus, train
from focustime.ingest import sessionize
from focustime.synth import SynthConfig, cluster_labels, generate

# A modest corpus: 20 actors over 5 days, six tools with eight actions each.
config = SynthConfig(seed=7, n_actors=20, days=5)
data = generate(config)
sessions = sessionize(data.events)
print(f"{len(data.events)} events in {len(sessions)} sessions")

# Labels seen fewer than min_count times are dropped before training.
corpus = build_corpus(sessions, min_count=50)
print(f"vocabulary of {len(corpus.vocab)} labels, {corpus.n_tokens} tokens")

model = train(corpus, TrainConfig(min_count=50))

# Actions of one tool were planted to co-occur, so they should cluster.
clusters = [[f"{t}:{a}" for t, a in cl] for cl in cluster_labels(config)]
sim = np.array([[np.mean([model.similarity(a, b) for a in ci for b in cj if a != b])
                 for cj in clusters] for ci in clusters])
print("mean cosine similarity between tool clusters:")
print(np.round(sim, 2))

for label in ("ide:edit", "email:view"):
    if label in model:
        print(label, "->", [(w, round(d, 3)) for w, d in model.nearest(label, 4)])
