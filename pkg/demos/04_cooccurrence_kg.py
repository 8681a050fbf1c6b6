# %% [markdown]
# # A co-occurrence knowledge graph
#
# Two entities are linked when they appear in the same article; the edge
# weight counts such articles. An ego graph keeps a source node and its
# heaviest neighbours, which is what gets drawn in Gephi.

# %%
import tempfile
from pathlib import Path

from biokg.export import ExportSpec, export_graph
from biokg.graph import build_cooc_graph, ego_by_frequency
from biokg.normalize import Normalizer
from biokg.typeclass import EntityCategory

articles = {
    "A1": ["Remdesivir", "favipiravir", "COVID-19", "Ebola"],
    "A2": ["remdesivir", "ribavirin", "MERS", "Favipiravir"],
    "A3": ["remdesivir", "ritonavir", "lopinavir", "COVID-19"],
    "A4": ["remdesivir", "favipiravir", "Ebola virus disease"],
    "A5": ["chloroquine", "COVID-19", "malaria"],
}
norm = Normalizer()
g = build_cooc_graph((doc, [norm(s) for s in surfaces]) for doc, surfaces in articles.items())
print(g)

# %% Attach categories (normally predicted by the typing forest).
drugs = {"remdesivir", "favipiravir", "ribavirin", "ritonavir", "lopinavir", "chloroquine"}
g.set_categories({k: EntityCategory.DRUG if k in drugs else EntityCategory.DISEASE for k in g.nodes})

# %% Remdesivir's most frequent drug neighbours.
ego = ego_by_frequency(g, "remdesivir", EntityCategory.DRUG, k=3)
for key, w in ego.neighbors:
    print(f"{key:<12} {w}")

# %% Write the ego graph for Gephi and as DOT.
out = Path(tempfile.mkdtemp())
cats = {k: info.category for k, info in g.nodes.items()}
for fmt, name in (("gexf", "remdesivir.gexf"), ("dot", "remdesivir.dot")):
    n = export_graph(ego.to_graph(cats), ExportSpec(fmt), out / name)
    print(f"wrote {n} bytes to {out / name}")
print((out / "remdesivir.dot").read_text())
