"""Command-line front door: ingest, index, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .embedding import EmbedderSpec, HashedNgramEmbedder
from .evaluation import (
    EvalReport,
    compare,
    convert_tmmluplus,
    load_ttqa,
    score_stats,
)
from .index import IndexConfig, create_index, load as load_index, save as save_index
from .index.base import IndexKind
from .ingest import CorpusSource, ingest_corpus, write_chunk_archive
from .llm import LlmClientSpec, ScriptedMockLlm, build_llm_client
from .pipeline import ChunkStore, PipelineConfig, RagPipeline
from .remote import EndpointProfile
from .rerank import LexicalOverlapScorer
from .service import ServiceConfig, create_app


def _cmd_ingest(args: argparse.Namespace) -> int:
    sources = []
    for kind, paths in (
        ("jsonl", args.jsonl),
        ("xml_dump", args.xml_dump),
        ("regulation_dir", args.regulation_dir),
    ):
        for path in paths or []:
            sources.append(
                CorpusSource(
                    kind=kind,
                    path=Path(path),
                    max_tokens=args.max_tokens,
                    strict=not args.lenient,
                    title_header=args.title_header,
                )
            )
    if not sources:
        print("nothing to ingest: pass --jsonl, --xml-dump, or --regulation-dir")
        return 2
    chunks = []
    report = ingest_corpus(sources, chunks.append)
    count = write_chunk_archive(chunks, args.out)
    print(f"wrote {count} chunks to {args.out}")
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def _cmd_index_build(args: argparse.Namespace) -> int:
    config = IndexConfig(
        kind=args.kind,
        metric=args.metric,
        dims=args.dims,
        seed=args.seed,
        ivf_nlist=args.ivf_nlist,
        ivf_nprobe=args.ivf_nprobe,
        hnsw_m=args.hnsw_m,
        hnsw_ef_construction=args.hnsw_ef_construction,
        hnsw_ef_search=args.hnsw_ef_search,
    )
    index = create_index(config)
    embedder = HashedNgramEmbedder(
        EmbedderSpec(dims=args.dims, max_input_tokens=args.max_input_tokens)
    )
    store = ChunkStore.from_archive(args.chunks)
    for chunk in store:
        index.add(chunk.chunk_id, embedder.embed_text(chunk.text))
    if config.kind is IndexKind.IVF:
        index.train()
    index.freeze()
    save_index(index, args.out)
    print(f"indexed {len(index)} chunks into {args.out} ({args.kind}/{args.metric})")
    if embedder.truncations:
        print(f"truncated {embedder.truncations} over-budget chunks")
    return 0


def _cmd_index_search(args: argparse.Namespace) -> int:
    index = load_index(args.index)
    embedder = HashedNgramEmbedder(EmbedderSpec(dims=index.config.dims))
    store = ChunkStore.from_archive(args.chunks) if args.chunks else None
    hits = index.search(embedder.embed_text(args.query), args.k)
    for hit in hits:
        line = f"{hit.rank + 1:>3}. {hit.chunk_id}  score={hit.score:.6f}"
        if store is not None:
            text = store.get(hit.chunk_id).text.replace("\n", " ")
            line += f"  {text[:80]}"
        print(line)
    return 0


def _load_dataset(path: str, fmt: str | None):
    if fmt == "tmmluplus" or (fmt is None and path.endswith(".csv")):
        return convert_tmmluplus(path)
    return load_ttqa(path)


def _build_eval_pipeline(args: argparse.Namespace) -> RagPipeline:
    index = load_index(args.index)
    embedder = HashedNgramEmbedder(EmbedderSpec(dims=index.config.dims))
    if args.llm_config:
        raw = json.loads(Path(args.llm_config).read_text(encoding="utf-8"))
        endpoint = raw.get("endpoint")
        spec = LlmClientSpec(
            backend=raw.get("backend", "remote"),
            model=raw.get("model", ""),
            endpoint=EndpointProfile.from_dict(endpoint) if endpoint else None,
            fixture_path=raw.get("fixture_path"),
        )
        llm = build_llm_client(spec)
    else:
        if not args.llm_fixture:
            raise SystemExit("eval run needs --llm-fixture or --llm-config")
        llm = ScriptedMockLlm.from_file(args.llm_fixture)
    return RagPipeline(
        index=index,
        chunk_store=ChunkStore.from_archive(args.chunks),
        embedder=embedder,
        scorer=LexicalOverlapScorer(),
        llm=llm,
        config=PipelineConfig(
            n_retrieve=args.n_retrieve, n_context=args.n_context
        ),
    )


def _cmd_eval_run(args: argparse.Namespace) -> int:
    from .evaluation import evaluate

    dataset = _load_dataset(args.dataset, args.format)
    pipeline = _build_eval_pipeline(args)
    report = evaluate(
        dataset,
        pipeline,
        mode=args.mode,
        use_rag=not args.no_rag,
        max_workers=args.workers,
        out_path=args.out,
    )
    print(
        f"{dataset.name}: accuracy {report.overall_accuracy:.4f} "
        f"({'with' if not args.no_rag else 'without'} retrieval, "
        f"mode {args.mode})"
    )
    for topic, acc in report.per_topic_accuracy.items():
        print(f"  {topic or '(untagged)'}: {acc:.4f}")
    if args.out:
        print(f"report saved to {args.out}")
    return 0


def _cmd_eval_compare(args: argparse.Namespace) -> int:
    result = compare(EvalReport.load(args.baseline), EvalReport.load(args.contrast))
    print(json.dumps(result.to_dict(), ensure_ascii=False, indent=2))
    return 0


def _cmd_eval_stats(args: argparse.Namespace) -> int:
    if args.scores_file:
        raw = Path(args.scores_file).read_text(encoding="utf-8").split()
        scores = [float(x) for x in raw]
    else:
        scores = [float(x) for x in args.scores.split(",") if x.strip()]
    stats = score_stats(scores)
    print(json.dumps(stats.to_dict(), indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = ServiceConfig.load(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localrag",
        description="Local-first retrieval-augmented question answering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="chunk corpora into an archive")
    p_ingest.add_argument("--jsonl", action="append")
    p_ingest.add_argument("--xml-dump", action="append")
    p_ingest.add_argument("--regulation-dir", action="append")
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument("--max-tokens", type=int, default=8192)
    p_ingest.add_argument("--lenient", action="store_true")
    p_ingest.add_argument("--title-header", action="store_true")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_index = sub.add_parser("index", help="build or query a vector index")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p_build = index_sub.add_parser("build")
    p_build.add_argument("--chunks", required=True)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--kind", default="flat", choices=["flat", "ivf", "hnsw"])
    p_build.add_argument("--metric", default="cosine", choices=["l2", "dot", "cosine"])
    p_build.add_argument("--dims", type=int, default=1024)
    p_build.add_argument("--seed", type=int, default=0)
    p_build.add_argument("--max-input-tokens", type=int, default=8192)
    p_build.add_argument("--ivf-nlist", type=int, default=64)
    p_build.add_argument("--ivf-nprobe", type=int, default=8)
    p_build.add_argument("--hnsw-m", type=int, default=16)
    p_build.add_argument("--hnsw-ef-construction", type=int, default=200)
    p_build.add_argument("--hnsw-ef-search", type=int, default=64)
    p_build.set_defaults(func=_cmd_index_build)

    p_search = index_sub.add_parser("search")
    p_search.add_argument("--index", required=True)
    p_search.add_argument("--chunks")
    p_search.add_argument("--query", required=True)
    p_search.add_argument("-k", type=int, default=5)
    p_search.set_defaults(func=_cmd_index_search)

    p_eval = sub.add_parser("eval", help="run and compare evaluations")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)

    p_run = eval_sub.add_parser("run")
    p_run.add_argument("--dataset", required=True)
    p_run.add_argument("--format", choices=["ttqa", "tmmluplus"])
    p_run.add_argument("--index", required=True)
    p_run.add_argument("--chunks", required=True)
    p_run.add_argument("--mode", default="labeled", choices=["labeled", "freeform_refined"])
    p_run.add_argument("--no-rag", action="store_true")
    p_run.add_argument("--llm-fixture", help="scripted replies JSON file")
    p_run.add_argument("--llm-config", help="remote llm spec JSON file")
    p_run.add_argument("--n-retrieve", type=int, default=20)
    p_run.add_argument("--n-context", type=int, default=5)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_eval_run)

    p_compare = eval_sub.add_parser("compare")
    p_compare.add_argument("--baseline", required=True)
    p_compare.add_argument("--contrast", required=True)
    p_compare.set_defaults(func=_cmd_eval_compare)

    p_stats = eval_sub.add_parser("stats")
    group = p_stats.add_mutually_exclusive_group(required=True)
    group.add_argument("--scores", help="comma-separated values")
    group.add_argument("--scores-file", help="whitespace-separated values")
    p_stats.set_defaults(func=_cmd_eval_stats)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
