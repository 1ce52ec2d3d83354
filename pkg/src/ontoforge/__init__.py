"""ontoforge: derive a concept DAG from document-level coreference chains.

The pipeline turns coreference chains into an undirected co-occurrence
graph, orients edges by betweenness centrality, cleans them with PMI,
resolves ambiguous names with embedding communities, and emits an
ontology (concepts with aliases + directed IS-A edges) that can be
scored against reference ontologies.
"""

__version__ = "0.1.0"

from .errors import DataError, InvariantError

__all__ = ["DataError", "InvariantError", "__version__"]
