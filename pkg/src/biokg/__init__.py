"""Knowledge-graph construction from annotated biomedical literature."""

from .corpus import AuthorRank, CorpusError, Document, load_corpus, rank_authors
from .embed import (
    EmbeddingError,
    EmbeddingTable,
    TrainParams,
    Vocabulary,
    build_neg_table,
    build_vocab,
    cosine,
    sgns_step,
    train,
)
from .export import ExportSpec, export_graph, read_edge_csv, read_gexf
from .graph import (
    EgoGraph,
    WeightedGraph,
    build_cooc_graph,
    ego_by_frequency,
    ego_by_similarity,
    merge_graphs,
)
from .normalize import Normalizer, normalize_entity
from .tagging import (
    EntitySpan,
    Label,
    TaggedSentence,
    TaggedToken,
    decode_bio,
    encode_bio,
    merge_wordpieces,
)
from .typeclass import (
    ClassMetrics,
    EntityCategory,
    Forest,
    ForestParams,
    evaluate,
    featurize,
    predict,
    train_forest,
)

__version__ = "0.1.0"
