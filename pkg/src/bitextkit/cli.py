"""Unified command-line entry point.

Subcommands: langid {train, predict, proportion}; bpe {learn, extend};
embinit; mine; rerank; schedule; score; report; annotations; pipeline run.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import corpus, embinit, langid, metrics, subword
from .curriculum import (CurriculumScheduler, DataSources, DictTranslator,
                         IdentityTranslator, write_stream)
from .miner import MiningConfig, mine_from_manifest, write_mining_report
from .pipeline import EXIT_CONFIG_ERROR, PipelineConfig, ConfigError, \
    run_pipeline
from .rerank import rerank_jsonl
from .reports import (aggregate_annotations, annotator_calibration,
                      read_annotations_csv, read_eval_items,
                      render_section_table, write_section_report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitextkit",
        description="Build, mine, and evaluate parallel corpora.")
    parser.add_argument("--seed", type=int, default=0,
                        help="top-level random seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="within-stage worker threads (results are "
                             "identical to the sequential run)")
    parser.add_argument("--config", type=str, default=None,
                        help="pipeline config file (for 'pipeline run')")
    sub = parser.add_subparsers(dest="command", required=True)

    # langid
    p_langid = sub.add_parser("langid", help="language identification")
    lsub = p_langid.add_subparsers(dest="subcommand", required=True)
    p = lsub.add_parser("train")
    p.add_argument("--in", dest="input", required=True,
                   help="JSONL with {'text','label'} records")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--buckets", type=int, default=200_000)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--lr0", type=float, default=0.05)
    p.add_argument("--min-word-count", type=int, default=100)
    p = lsub.add_parser("predict")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--in", dest="input", default=None,
                   help="text file, one input per line (default: stdin)")
    p = lsub.add_parser("proportion")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--in", dest="input", default=None)

    # bpe
    p_bpe = sub.add_parser("bpe", help="subword vocabulary")
    bsub = p_bpe.add_subparsers(dest="subcommand", required=True)
    p = bsub.add_parser("learn")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--min-count", type=int, default=30)
    p.add_argument("--max-merges", type=int, default=None)
    p.add_argument("--out", required=True)
    p = bsub.add_parser("extend")
    p.add_argument("--base", required=True, help="base vocab, one token/line")
    p.add_argument("--merges", required=True)
    p.add_argument("--out", required=True)

    # embinit
    p = sub.add_parser("embinit", help="initialize new-token embeddings")
    p.add_argument("--pairs", required=True,
                   help="bitext TSV; column 1 in the --src-emb language, "
                        "column 2 in the new-token language")
    p.add_argument("--src-emb", required=True)
    p.add_argument("--new-tokens", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-weight", type=float, default=0.05)

    # mine
    p = sub.add_parser("mine", help="mine parallel sentences")
    p.add_argument("--manifest", required=True)
    p.add_argument("--emb", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--langid-model", default=None)
    p.add_argument("--src-lang", default="")
    p.add_argument("--tgt-lang", default="")
    p.add_argument("--report-dir", default=None)

    # rerank
    p = sub.add_parser("rerank", help="choose candidates by language share")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    # schedule
    p = sub.add_parser("schedule", help="emit the training example stream")
    p.add_argument("--sources", required=True, help="sources TOML")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--translator", default="identity",
                   help="identity or dict:PATH")
    p.add_argument("--langid-model", default=None)
    p.add_argument("--out", required=True)

    # score
    p = sub.add_parser("score", help="corpus-level metric scores")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--metric", choices=["bleu", "chrfpp"], default="bleu")
    p.add_argument("--by-section", default=None,
                   help="one section label per line, aligned with --hyp")

    # report
    p = sub.add_parser("report", help="per-section metric report with figure")
    p.add_argument("--items", required=True,
                   help="JSONL with {'hyp','ref','section'}")
    p.add_argument("--metrics", default="bleu,chrfpp")
    p.add_argument("--out-dir", default="report")

    # annotations
    p = sub.add_parser("annotations", help="aggregate human ratings")
    p.add_argument("--in", dest="input", required=True,
                   help="CSV pair_id,annotator_id,score")
    p.add_argument("--threshold", type=int, default=3)

    # pipeline
    p = sub.add_parser("pipeline", help="run a configured pipeline")
    psub = p.add_subparsers(dest="subcommand", required=True)
    p = psub.add_parser("run")
    p.add_argument("--config", dest="pipeline_config", default=None)

    return parser


def _read_lines(path: str | None) -> list[str]:
    if path is None:
        return [line.rstrip("\n") for line in sys.stdin]
    return Path(path).read_text(encoding="utf-8").splitlines()


def _cmd_langid(args) -> int:
    if args.subcommand == "train":
        data = []
        with open(args.input, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                data.append(langid.LabeledText(text=corpus.normalize(
                    rec["text"]), label=rec["label"]))
        config = langid.LangIdConfig(
            buckets=args.buckets, dim=args.dim, lr0=args.lr0,
            epochs=args.epochs, min_word_count=args.min_word_count,
            seed=args.seed)
        model = langid.train(data, config)
        langid.save_model(model, args.out)
        print(f"trained on {len(data)} texts, {len(model.labels)} labels "
              f"-> {args.out}")
        return 0
    model = langid.load_model(args.model)
    if args.subcommand == "predict":
        for line in _read_lines(args.input):
            preds = langid.predict(model, corpus.normalize(line), args.k)
            print("\t".join(f"{l} {p:.4f}" for l, p in preds))
        return 0
    if args.subcommand == "proportion":
        for line in _read_lines(args.input):
            prop = langid.word_language_proportion(
                model, corpus.normalize(line), args.target)
            print(f"{prop:.4f}")
        return 0
    return 2


def _cmd_bpe(args) -> int:
    if args.subcommand == "learn":
        lines = [corpus.normalize(l)
                 for l in corpus.read_text_paragraphs(args.input)]
        merges = subword.learn_bpe(lines, min_count=args.min_count,
                                   max_merges=args.max_merges)
        subword.write_merges(merges, args.out)
        print(f"learned {len(merges)} merges -> {args.out}")
        return 0
    if args.subcommand == "extend":
        base = {l.strip() for l in Path(args.base).read_text(
            encoding="utf-8").splitlines() if l.strip()}
        merges = subword.read_merges(args.merges)
        vocab = subword.extend_vocab(base, merges)
        with open(args.out, "w", encoding="utf-8") as f:
            for tok in vocab.new_tokens:
                f.write(tok + "\n")
        print(f"{len(vocab.new_tokens)} new tokens -> {args.out}")
        return 0
    return 2


def _cmd_embinit(args) -> int:
    pairs = corpus.read_bitext_tsv(args.pairs)
    src_emb = embinit.read_embeddings(args.src_emb)
    new_tokens = [l.strip() for l in Path(args.new_tokens).read_text(
        encoding="utf-8").splitlines() if l.strip()]
    stats = embinit.cooccurrence_counts(pairs)
    import numpy as np
    vectors = np.stack([
        embinit.init_embedding(tok, stats, src_emb,
                               min_weight=args.min_weight)
        for tok in new_tokens]) if new_tokens else \
        np.empty((0, src_emb.d))
    out = embinit.EmbeddingMatrix(tokens=new_tokens, vectors=vectors,
                                  d=src_emb.d)
    embinit.write_embeddings(out, args.out)
    print(f"initialized {len(new_tokens)} embeddings -> {args.out}")
    return 0


def _cmd_mine(args) -> int:
    config = MiningConfig(threshold=args.threshold, k_neighbors=args.k,
                          alpha=args.alpha)
    model = (langid.load_model(args.langid_model)
             if args.langid_model else None)
    pairs, stats = mine_from_manifest(
        args.manifest, args.emb, config, langid_model=model,
        src_lang=args.src_lang, tgt_lang=args.tgt_lang,
        threads=args.threads)
    corpus.write_bitext_tsv(pairs, args.out)
    if args.report_dir:
        write_mining_report(stats, args.report_dir)
    rep = stats.report()
    print(f"mined {len(pairs)} pairs (accepted {rep['accepted_total']}, "
          f"rejected {rep['rejected_total']}) -> {args.out}")
    return 0


def _load_sources(path: str) -> tuple[DataSources, str, str]:
    with open(path, "rb") as f:
        raw = tomllib.load(f)
    base = Path(path).parent
    target_lang = raw.get("target_lang", "myv")
    pivot_lang = raw.get("pivot_lang", "ru")
    gold = corpus.read_bitext_tsv(base / raw["parallel_target_pivot"],
                                  src_lang=target_lang, tgt_lang=pivot_lang)
    mono = [corpus.Sentence.make(f"mono:{i}", t, lang=target_lang)
            for i, t in enumerate(corpus.read_text_paragraphs(
                base / raw["mono_target"]))]
    aux = {}
    for lang, rel in raw.get("parallel_pivot_aux", {}).items():
        rows = []
        for line in (base / rel).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"{rel}: expected 'pivot TAB aux' rows")
            rows.append((corpus.normalize(cols[0]), corpus.normalize(cols[1])))
        aux[lang] = rows
    sources = DataSources(parallel_target_pivot=gold,
                          parallel_pivot_aux=aux, mono_target=mono)
    return sources, target_lang, pivot_lang


def _cmd_schedule(args) -> int:
    sources, target_lang, pivot_lang = _load_sources(args.sources)
    if args.translator == "identity":
        translator = IdentityTranslator()
    elif args.translator.startswith("dict:"):
        translator = DictTranslator.from_file(args.translator[5:])
    else:
        print(f"error: unknown translator {args.translator!r}",
              file=sys.stderr)
        return 1
    model = (langid.load_model(args.langid_model)
             if args.langid_model else None)
    scheduler = CurriculumScheduler(sources, translator, langid_model=model,
                                    seed=args.seed, target_lang=target_lang,
                                    pivot_lang=pivot_lang)
    n = write_stream(scheduler, args.steps, args.out)
    print(f"emitted {n} examples over {args.steps} steps -> {args.out}")
    return 0


def _cmd_score(args) -> int:
    hyps = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    refs = Path(args.ref).read_text(encoding="utf-8").splitlines()
    if args.metric == "bleu":
        b = metrics.corpus_bleu(hyps, refs)
        result = {"metric": "bleu", "score": round(b.score, 4),
                  "precisions": [round(p, 6) for p in b.precisions],
                  "brevity_penalty": round(b.brevity_penalty, 6),
                  "hyp_len": b.hyp_len, "ref_len": b.ref_len}
    else:
        c = metrics.corpus_chrf_pp(hyps, refs)
        result = {"metric": "chrfpp", "score": round(c.score, 4),
                  "per_order_f": [round(f, 6) for f in c.per_order_f]}
    if args.by_section:
        sections = Path(args.by_section).read_text(
            encoding="utf-8").splitlines()
        if len(sections) != len(hyps):
            print("error: --by-section line count mismatch", file=sys.stderr)
            return 1
        from .reports import EvalItem, score_by_section
        items = [EvalItem(hyp=h, ref=r, section=s)
                 for h, r, s in zip(hyps, refs, sections)]
        result["by_section"] = {
            k: round(v, 4)
            for k, v in score_by_section(items, args.metric).items()}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _cmd_report(args) -> int:
    items = read_eval_items(args.items)
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    scores = write_section_report(items, wanted, args.out_dir)
    print(render_section_table(scores))
    print(f"\nreport written to {args.out_dir}/")
    return 0


def _cmd_annotations(args) -> int:
    records = read_annotations_csv(args.input)
    summary = aggregate_annotations(records,
                                    acceptance_threshold=args.threshold)
    calib = annotator_calibration(records)
    result = {
        "n_pairs": summary.n_pairs,
        "n_records": summary.n_records,
        "mean_pessimistic": round(summary.mean_pessimistic, 4),
        "acceptance_rate": round(summary.acceptance_rate, 4),
        "annotator_means": {a: round(m, 4) for a, m in calib.items()},
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def _cmd_pipeline(args) -> int:
    cfg_path = args.pipeline_config or args.config
    if not cfg_path:
        print("error: pipeline run requires --config", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        config = PipelineConfig.load(cfg_path)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return run_pipeline(config, threads=args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "langid": _cmd_langid,
        "bpe": _cmd_bpe,
        "embinit": _cmd_embinit,
        "mine": _cmd_mine,
        "rerank": lambda a: (rerank_jsonl(a.input, a.out,
                                          langid.load_model(a.model)), 0)[1],
        "schedule": _cmd_schedule,
        "score": _cmd_score,
        "report": _cmd_report,
        "annotations": _cmd_annotations,
        "pipeline": _cmd_pipeline,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
