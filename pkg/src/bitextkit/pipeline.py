"""Pipeline composition: ingest -> langid filter -> dedup -> mine -> score.

Configuration is a TOML file with a version key; parsing is strict (unknown
keys are fatal). Stages run sequentially, each one's outputs feeding the
next, and a run manifest records per-stage record counts. All randomness is
derived from the single top-level seed. Exit codes: 0 success, 1 usage or
config error, 2 data error; partial outputs are removed on failure.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from . import corpus, langid, metrics
from .miner import MiningConfig, mine_from_manifest, write_mining_report

log = logging.getLogger(__name__)

CONFIG_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_DATA_ERROR = 2


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


_TOP_KEYS = {"version", "seed", "manifest", "stages"}
_STAGE_KEYS = {
    "ingest": {"type", "input", "format", "lang", "source_tag", "segment",
               "output"},
    "dedup": {"type", "input", "output"},
    "langid_filter": {"type", "input", "model", "keep", "output"},
    "mine": {"type", "manifest", "embeddings", "threshold", "alpha",
             "k_neighbors", "src_lang", "tgt_lang", "langid_model",
             "output", "report_dir"},
    "score": {"type", "hyp", "ref", "metrics", "output"},
}
_STAGE_REQUIRED = {
    "ingest": {"input", "output"},
    "dedup": {"input", "output"},
    "langid_filter": {"input", "model", "keep", "output"},
    "mine": {"manifest", "embeddings", "threshold", "output"},
    "score": {"hyp", "ref", "output"},
}
_STAGE_INPUT_KEYS = {
    "ingest": ("input",),
    "dedup": ("input",),
    "langid_filter": ("input", "model"),
    "mine": ("manifest", "embeddings"),
    "score": ("hyp", "ref"),
}


@dataclass
class PipelineConfig:
    version: int
    seed: int
    stages: list[dict]
    manifest: str = "pipeline_manifest.json"
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: invalid TOML: {e}")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
        if raw.get("version") != CONFIG_VERSION:
            raise ConfigError(f"{path}: config version must be "
                              f"{CONFIG_VERSION}, got {raw.get('version')!r}")
        stages = raw.get("stages", [])
        for i, stage in enumerate(stages):
            stype = stage.get("type")
            if stype not in _STAGE_KEYS:
                raise ConfigError(f"{path}: stage {i}: unknown type {stype!r}")
            unknown = set(stage) - _STAGE_KEYS[stype]
            if unknown:
                raise ConfigError(f"{path}: stage {i} ({stype}): unknown keys "
                                  f"{sorted(unknown)}")
            missing = _STAGE_REQUIRED[stype] - set(stage)
            if missing:
                raise ConfigError(f"{path}: stage {i} ({stype}): missing keys "
                                  f"{sorted(missing)}")
        return cls(version=raw["version"], seed=int(raw.get("seed", 0)),
                   stages=stages, manifest=raw.get("manifest",
                                                   "pipeline_manifest.json"),
                   base_dir=path.parent)


def derive_seed(seed: int, stage_index: int, stage_type: str) -> int:
    digest = hashlib.sha256(f"{seed}:{stage_index}:{stage_type}"
                            .encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _validate_inputs(config: PipelineConfig) -> None:
    """Fail fast: every declared input must exist on disk or be produced by
    an earlier stage."""
    produced: set[str] = set()
    for i, stage in enumerate(config.stages):
        for key in _STAGE_INPUT_KEYS[stage["type"]]:
            if key not in stage:
                continue
            rel = stage[key]
            if rel in produced:
                continue
            if not (config.base_dir / rel).exists():
                raise ConfigError(f"stage {i} ({stage['type']}): input "
                                  f"{key}={rel!r} does not exist")
        if "output" in stage:
            produced.add(stage["output"])


def run_pipeline(config: PipelineConfig, threads: int = 1) -> int:
    created: list[Path] = []
    try:
        _validate_inputs(config)
        stage_reports = []
        for i, stage in enumerate(config.stages):
            stype = stage["type"]
            seed = derive_seed(config.seed, i, stype)
            report = _run_stage(config.base_dir, stage, seed, threads, created)
            report.update({"index": i, "type": stype, "seed": seed})
            stage_reports.append(report)
            log.info("stage %d (%s): %s", i, stype, report)
        manifest = {"version": config.version, "seed": config.seed,
                    "stages": stage_reports}
        manifest_path = config.base_dir / config.manifest
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return EXIT_OK
    except (ConfigError, DataError) as e:
        for p in created:
            p.unlink(missing_ok=True)
        log.error("pipeline failed: %s", e)
        print(f"error: {e}", flush=True)
        return (EXIT_CONFIG_ERROR if isinstance(e, ConfigError)
                else EXIT_DATA_ERROR)


def _out(base: Path, rel: str, created: list[Path]) -> Path:
    p = base / rel
    p.parent.mkdir(parents=True, exist_ok=True)
    created.append(p)
    return p


def _run_stage(base: Path, stage: dict, seed: int, threads: int,
               created: list[Path]) -> dict:
    stype = stage["type"]
    try:
        if stype == "ingest":
            return _stage_ingest(base, stage, created)
        if stype == "dedup":
            sents = corpus.read_jsonl_sentences(base / stage["input"])
            out = corpus.deduplicate(sents)
            corpus.write_jsonl_sentences(out, _out(base, stage["output"],
                                                   created))
            return {"records_in": len(sents), "records_out": len(out)}
        if stype == "langid_filter":
            model = langid.load_model(base / stage["model"])
            keep = set(stage["keep"])
            sents = corpus.read_jsonl_sentences(base / stage["input"])
            out = [s for s in sents
                   if langid.predict(model, s.text, 1)[0][0] in keep]
            corpus.write_jsonl_sentences(out, _out(base, stage["output"],
                                                   created))
            return {"records_in": len(sents), "records_out": len(out)}
        if stype == "mine":
            return _stage_mine(base, stage, threads, created)
        if stype == "score":
            return _stage_score(base, stage, created)
        raise ConfigError(f"unknown stage type {stype!r}")
    except (ConfigError, DataError):
        raise
    except (ValueError, KeyError, OSError) as e:
        raise DataError(f"stage {stype}: {e}") from e


def _stage_ingest(base: Path, stage: dict, created: list[Path]) -> dict:
    fmt = stage.get("format", "text")
    lang = stage.get("lang")
    tag = stage.get("source_tag", "")
    segment = stage.get("segment", False)
    stem = Path(stage["input"]).stem  # keeps ids unique across input files
    if fmt == "jsonl":
        sents = corpus.read_jsonl_sentences(base / stage["input"])
        n_in = len(sents)
    elif fmt == "text":
        paragraphs = corpus.read_text_paragraphs(base / stage["input"])
        n_in = len(paragraphs)
        sents = []
        for pi, para in enumerate(paragraphs):
            if segment:
                sents.extend(corpus.segment_sentences(
                    para, lang_hint=lang, id_prefix=f"{stem}:p{pi}:",
                    source_tag=tag))
            else:
                sents.append(corpus.Sentence.make(f"{stem}:p{pi}", para,
                                                  lang=lang, source_tag=tag))
    else:
        raise ConfigError(f"ingest: unknown format {fmt!r}")
    sents = [s for s in sents if s.text]
    corpus.write_jsonl_sentences(sents, _out(base, stage["output"], created))
    return {"records_in": n_in, "records_out": len(sents)}


def _stage_mine(base: Path, stage: dict, threads: int,
                created: list[Path]) -> dict:
    cfg = MiningConfig(threshold=float(stage["threshold"]),
                       k_neighbors=int(stage.get("k_neighbors", 4)),
                       alpha=float(stage.get("alpha", 0.5)))
    model = (langid.load_model(base / stage["langid_model"])
             if "langid_model" in stage else None)
    pairs, stats = mine_from_manifest(
        base / stage["manifest"], base / stage["embeddings"], cfg,
        langid_model=model, src_lang=stage.get("src_lang", ""),
        tgt_lang=stage.get("tgt_lang", ""), threads=threads)
    corpus.write_bitext_tsv(pairs, _out(base, stage["output"], created))
    if "report_dir" in stage:
        write_mining_report(stats, base / stage["report_dir"])
    rep = stats.report()
    return {"records_in": len(stats.per_doc),
            "records_out": len(pairs),
            "accepted": rep["accepted_total"],
            "rejected": rep["rejected_total"]}


def _stage_score(base: Path, stage: dict, created: list[Path]) -> dict:
    hyps = (base / stage["hyp"]).read_text(encoding="utf-8").splitlines()
    refs = (base / stage["ref"]).read_text(encoding="utf-8").splitlines()
    if len(hyps) != len(refs):
        raise DataError(f"score: {stage['hyp']} has {len(hyps)} lines but "
                        f"{stage['ref']} has {len(refs)}")
    wanted = stage.get("metrics", ["bleu", "chrfpp"])
    result = {}
    for m in wanted:
        if m == "bleu":
            b = metrics.corpus_bleu(hyps, refs)
            result["bleu"] = {"score": round(b.score, 4),
                              "precisions": [round(p, 6) for p in b.precisions],
                              "brevity_penalty": round(b.brevity_penalty, 6),
                              "hyp_len": b.hyp_len, "ref_len": b.ref_len}
        elif m == "chrfpp":
            c = metrics.corpus_chrf_pp(hyps, refs)
            result["chrfpp"] = {"score": round(c.score, 4)}
        else:
            raise ConfigError(f"score: unknown metric {m!r}")
    with open(_out(base, stage["output"], created), "w",
              encoding="utf-8") as f:
        json.dump(result, f, indent=2, sort_keys=True)
        f.write("\n")
    return {"records_in": len(hyps), "records_out": len(result)}
