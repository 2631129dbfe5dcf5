"""Local-first retrieval-augmented question answering.

The package covers the full loop: ingest a corpus into chunks, embed the
chunks, index them with native vector indexes, retrieve and rerank passages
for a question, prompt a language model, and score the result. A small HTTP
service exposes the same pipeline plus a two-stage quiz protocol.
"""

__version__ = "0.1.0"
