# %% [markdown]
# # A similarity knowledge graph from entity embeddings
#
# Each article becomes a sequence of entity keys. Skip-gram with negative
# sampling learns a vector per key, and neighbours are ranked by cosine
# similarity instead of raw co-occurrence counts.

# %%
import random

from biokg.embed import TrainParams, train
from biokg.graph import ego_by_similarity

rng = random.Random(3)
antivirals = ["remdesivir", "favipiravir", "ribavirin", "galidesivir"]
coronaviruses = ["covid-19", "sars", "mers", "ards"]
cardio = ["hypertension", "ace2", "angiotensin_ii", "renin"]
docs = []
for _ in range(600):
    topic = rng.choice([antivirals + coronaviruses[:2], cardio + coronaviruses[2:3], antivirals[:2] + ["ebola"]])
    doc = rng.sample(topic, k=min(4, len(topic)))
    docs.append(doc)

emb = train(docs, TrainParams(dim=24, window=3, epochs=8, seed=11))
print("epoch losses:", [round(x, 3) for x in emb.epoch_losses])

# %% Nearest keys to remdesivir.
ego = ego_by_similarity(emb, "remdesivir", k=4)
for key, sim in ego.neighbors:
    print(f"{key:<14} {sim:+.3f}")

# %% Pairs that share contexts end up closer than pairs that never meet.
print("favipiravir", round(emb.similarity("remdesivir", "favipiravir"), 3))
print("renin      ", round(emb.similarity("remdesivir", "renin"), 3))
