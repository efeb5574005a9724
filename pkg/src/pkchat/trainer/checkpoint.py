"""Checkpoint container: 8-byte magic, length-prefixed JSON header, then raw
little-endian float32 tensors. The header carries the model config, the
vocabulary, the tensor manifest, the tagger section, and training provenance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..keywords.crf import CrfModel
from ..keywords.extract import CorpusStats
from ..model.config import ModelConfig
from ..model.network import DialogueModel
from ..textpipe.vocab import Vocab

MAGIC = b"PKCHAT01"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model_config: ModelConfig
    vocab: Vocab
    tensors: dict[str, np.ndarray]  # float32 at rest
    step: int = 0
    train_config: dict = field(default_factory=dict)
    crf: CrfModel | None = None
    corpus_stats: CorpusStats | None = None
    version: int = FORMAT_VERSION


def from_model(model: DialogueModel, step: int = 0, train_config: dict | None = None,
               crf: CrfModel | None = None,
               corpus_stats: CorpusStats | None = None) -> Checkpoint:
    tensors = {name: t.data.astype(np.float32)
               for name, t in model.params.items()}
    return Checkpoint(
        model_config=model.config, vocab=model.vocab, tensors=tensors,
        step=step, train_config=train_config or {}, crf=crf,
        corpus_stats=corpus_stats)


def to_model(ckpt: Checkpoint, seed: int = 0) -> DialogueModel:
    model = DialogueModel(ckpt.model_config, ckpt.vocab, seed=seed)
    for name, param in model.params.items():
        stored = ckpt.tensors.get(name)
        if stored is None:
            raise CheckpointError(f"checkpoint is missing tensor {name!r}")
        param.data = stored.astype(np.float64)
    return model


def _crf_header(crf: CrfModel | None) -> dict | None:
    if crf is None:
        return None
    ordered = sorted(crf.feature_index.items(), key=lambda kv: kv[1])
    return {
        "tags": crf.tags,
        "features": [name for name, _ in ordered],
        "feature_extractor": crf.feature_extractor,
    }


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    tensors = dict(ckpt.tensors)
    if ckpt.crf is not None:
        tensors["crf/feature_weights"] = ckpt.crf.feature_weights.astype(np.float32)
        tensors["crf/transitions"] = ckpt.crf.transitions.astype(np.float32)
        tensors["crf/start"] = ckpt.crf.start.astype(np.float32)
        tensors["crf/stop"] = ckpt.crf.stop.astype(np.float32)

    manifest = []
    offset = 0
    order = sorted(tensors)
    for name in order:
        arr = tensors[name]
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.size * 4

    header = {
        "format_version": ckpt.version,
        "model_config": ckpt.model_config.to_dict(),
        "vocab_tokens": ckpt.vocab.tokens(),
        "n_latent": ckpt.vocab.n_latent,
        "tensors": manifest,
        "step": ckpt.step,
        "train_config": ckpt.train_config,
        "crf": _crf_header(ckpt.crf),
        "corpus_stats": (
            None if ckpt.corpus_stats is None else
            {"n_docs": ckpt.corpus_stats.n_docs,
             "df": dict(ckpt.corpus_stats.doc_freq)}),
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for name in order:
            fh.write(np.ascontiguousarray(
                tensors[name], dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 8 or raw[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a recognized checkpoint file (bad magic)")
    (header_len,) = struct.unpack("<Q", raw[8:16])
    if len(raw) < 16 + header_len:
        raise CheckpointError("truncated checkpoint file (header)")
    try:
        header = json.loads(raw[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {header.get('format_version')!r}")

    config = ModelConfig.from_dict(header["model_config"])
    vocab = Vocab.from_tokens(header["vocab_tokens"], header["n_latent"])

    blob = raw[16 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for item in header["tensors"]:
        shape = tuple(item["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = item["offset"]
        end = start + count * 4
        if end > len(blob):
            raise CheckpointError(
                f"truncated checkpoint file (tensor {item['name']!r})")
        tensors[item["name"]] = np.frombuffer(
            blob[start:end], dtype="<f4").reshape(shape).copy()

    expected = DialogueModel.param_shapes(config)
    for name, shape in expected.items():
        if name not in tensors:
            raise CheckpointError(f"checkpoint is missing tensor {name!r}")
        if tensors[name].shape != shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {tensors[name].shape}, "
                f"config implies {shape}")

    crf = None
    if header.get("crf"):
        meta = header["crf"]
        n_feat, n_tags = len(meta["features"]), len(meta["tags"])
        for name, shape in (("crf/feature_weights", (n_feat, n_tags)),
                            ("crf/transitions", (n_tags, n_tags)),
                            ("crf/start", (n_tags,)), ("crf/stop", (n_tags,))):
            if name not in tensors or tensors[name].shape != shape:
                raise CheckpointError(
                    f"tensor {name!r} missing or mismatched against the "
                    f"tagger section")
        crf = CrfModel(
            tags=list(meta["tags"]),
            feature_index={f: i for i, f in enumerate(meta["features"])},
            feature_weights=tensors.pop("crf/feature_weights").astype(np.float64),
            transitions=tensors.pop("crf/transitions").astype(np.float64),
            start=tensors.pop("crf/start").astype(np.float64),
            stop=tensors.pop("crf/stop").astype(np.float64),
            feature_extractor=meta.get("feature_extractor", "window-v1"),
        )

    stats = None
    if header.get("corpus_stats"):
        from collections import Counter
        stats = CorpusStats(
            n_docs=header["corpus_stats"]["n_docs"],
            doc_freq=Counter(header["corpus_stats"]["df"]))

    return Checkpoint(
        model_config=config, vocab=vocab, tensors=tensors,
        step=header.get("step", 0), train_config=header.get("train_config", {}),
        crf=crf, corpus_stats=stats, version=header["format_version"])
