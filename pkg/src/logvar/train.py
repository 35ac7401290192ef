"""Training loop, fine-tuning, checkpoint selection, and model files.

The optimizer is Adam (bias-corrected moments, beta1=0.9, beta2=0.999,
eps=1e-8) on mean batch loss with global-norm gradient clipping. After each
epoch the selection metric is computed on the validation set; the returned
model is the checkpoint with the best validation metric, earlier epoch on
ties. Runs are deterministic for a fixed seed.

Model file layout: magic "VALB", u32 format version, u32-length-prefixed
UTF-8 JSON metadata (hyperparams, mode, tag ordering, vocabularies), then
named tensors (u16 name length + name, u8 rank, u32 dims, float32
little-endian row-major data), and a trailing 8-byte BLAKE2b checksum of
all preceding bytes.
"""

from __future__ import annotations

import copy
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import AnnotatedLog
from .embed import CharVocab, WordVocab
from .errors import ChecksumError, DivergenceError, FormatError, VersionError
from .evaluate import general_accuracy, variable_aware_accuracy
from .tagger import Hyperparams, TaggerModel, _iob_masks, decode, loss_and_gradients
from .taxonomy import MULTICLASS, Tag, tag_vocabulary

MAGIC = b"VALB"
FORMAT_VERSION = 1

VARIABLE_AWARE = "variable_aware_accuracy"
GENERAL = "general_accuracy"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 1e-3
    gradient_clip_norm: float = 5.0
    seed: int = 42
    mode: str = MULTICLASS
    freeze_word_embeddings: bool = False
    selection_metric: str = VARIABLE_AWARE

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training configuration")
        if self.selection_metric not in (VARIABLE_AWARE, GENERAL):
            raise ValueError(f"unknown selection metric: {self.selection_metric!r}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_metric: float


@dataclass
class Checkpoint:
    model: TaggerModel
    epoch: int
    val_metric: float


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def _val_metric(model: TaggerModel, val: list[AnnotatedLog], metric: str) -> float:
    preds = [
        AnnotatedLog(log.tokens, tuple(decode(model, model.encode(log))))
        for log in val
    ]
    fn = variable_aware_accuracy if metric == VARIABLE_AWARE else general_accuracy
    return fn(preds, val)


def train(
    init: TaggerModel,
    train_set: list[AnnotatedLog],
    val_set: list[AnnotatedLog],
    cfg: TrainConfig,
) -> tuple[TaggerModel, list[EpochStats]]:
    """Train a copy of ``init``; return the best checkpoint and per-epoch history."""
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    if init.mode != cfg.mode:
        raise ValueError(f"model mode {init.mode!r} != config mode {cfg.mode!r}")
    model = copy.deepcopy(init)
    encoded = [(model.encode(log), model.encode_tags(log)) for log in train_set]

    opt = Adam(model.params, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    history: list[EpochStats] = []
    best: Checkpoint | None = None

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(encoded))
        losses = []
        for b_idx, lo in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [encoded[k] for k in order[lo : lo + cfg.batch_size]]
            dropout_seed = cfg.seed * 1_000_003 + epoch * 10_007 + b_idx * 131
            loss, grads = loss_and_gradients(
                model, batch, train_mode=True, dropout_seed=dropout_seed
            )
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {b_idx}"
                )
            if cfg.freeze_word_embeddings:
                grads["word_emb"][:] = 0.0
            clip_global_norm(grads, cfg.gradient_clip_norm)
            opt.step(model.params, grads)
            losses.append(loss)
        metric = _val_metric(model, val_set, cfg.selection_metric)
        history.append(EpochStats(epoch, float(np.mean(losses)), metric))
        if best is None or metric > best.val_metric:
            best = Checkpoint(copy.deepcopy(model), epoch, metric)
    return best.model, history


def finetune(
    pretrained: TaggerModel,
    target_train: list[AnnotatedLog],
    target_val: list[AnnotatedLog],
    cfg: TrainConfig,
) -> tuple[TaggerModel, list[EpochStats]]:
    """Continue optimization from pretrained weights on a small target sample.

    The pretrained vocabularies are reused; target tokens outside them go
    through UNK and the character channel.
    """
    if not target_train:
        raise ValueError("fine-tuning requires a non-empty target training set")
    return train(pretrained, target_train, target_val, cfg)


# ---------------------------------------------------------------------------
# serialization


def _metadata(model: TaggerModel) -> dict:
    return {
        "format": FORMAT_VERSION,
        "mode": model.mode,
        "n_tags": model.n_tags,
        "hyperparams": model.hp.to_dict(),
        "tag_order": [str(t) for t in model.tags],
        "word_vocab": {"words": model.word_vocab.words(),
                       "min_freq": model.word_vocab.min_freq},
        "char_vocab": {"chars": model.char_vocab.chars()},
    }


def save_model(model: TaggerModel, path: str | Path) -> None:
    """Write the model file atomically (temp file + rename)."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    meta = json.dumps(_metadata(model), ensure_ascii=False).encode("utf-8")
    blob += struct.pack("<I", len(meta))
    blob += meta
    blob += struct.pack("<I", len(model.params))
    for name in sorted(model.params):
        arr = np.ascontiguousarray(model.params[name], dtype="<f4")
        nb = name.encode("utf-8")
        blob += struct.pack("<H", len(nb))
        blob += nb
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.tobytes()
    import hashlib

    blob += hashlib.blake2b(bytes(blob), digest_size=8).digest()
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bytes(blob))
    tmp.replace(path)


def load_model(path: str | Path) -> TaggerModel:
    """Read a model file; verifies magic, version, checksum, and tag order."""
    import hashlib

    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not a model file (bad magic)")
    digest = hashlib.blake2b(blob[:-8], digest_size=8).digest()
    if digest != blob[-8:]:
        raise ChecksumError(f"{path}: checksum mismatch (truncated or corrupted)")
    body = memoryview(blob)[:-8]
    off = 4
    (version,) = struct.unpack_from("<I", body, off)
    off += 4
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: unknown format version {version}")
    (meta_len,) = struct.unpack_from("<I", body, off)
    off += 4
    meta = json.loads(bytes(body[off : off + meta_len]).decode("utf-8"))
    off += meta_len
    (n_tensors,) = struct.unpack_from("<I", body, off)
    off += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", body, off)
        off += 2
        name = bytes(body[off : off + name_len]).decode("utf-8")
        off += name_len
        (ndim,) = struct.unpack_from("<B", body, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", body, off)
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(body, dtype="<f4", count=count, offset=off).reshape(shape)
        off += 4 * count
        params[name] = arr.copy()
    if off != len(body):
        raise FormatError(f"{path}: trailing bytes after tensor section")

    hp = Hyperparams(**meta["hyperparams"])
    mode = meta["mode"]
    tags = tag_vocabulary(mode)
    if [str(t) for t in tags] != meta["tag_order"]:
        raise FormatError(
            f"{path}: stored tag ordering does not match the alphabet for mode {mode!r}"
        )
    words = meta["word_vocab"]["words"]
    wv = WordVocab({w: i + 2 for i, w in enumerate(words)},
                   meta["word_vocab"]["min_freq"])
    cv = CharVocab({c: i + 2 for i, c in enumerate(meta["char_vocab"]["chars"])})
    frozen_trans, frozen_start = _iob_masks(tags)
    return TaggerModel(hp, mode, wv, cv, tags, params, frozen_trans, frozen_start)
