"""Char-CNN + word-embedding + Bi-LSTM + CRF sequence tagger.

The full forward pass, its exact analytic gradients, and Viterbi decoding,
implemented directly on numpy arrays. A model owns its vocabularies,
hyperparameters, and fixed tag ordering; inference is deterministic and a
model is immutable during tagging (training mutates it under one writer).

IOB structure is enforced inside the CRF: transitions that would produce an
ill-formed tag sequence are pinned at a large negative score and never
updated, so decoded paths are well-formed by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit as _sigmoid

from . import crf
from .corpus import AnnotatedLog, tokenize
from .embed import PAD, CharVocab, EncodedLog, WordVocab, encode_log
from .taxonomy import MULTICLASS, Tag, is_valid_transition, tag_vocabulary

FROZEN_SCORE = -10000.0


@dataclass(frozen=True)
class Hyperparams:
    word_dim: int = 100
    char_emb_dim: int = 300
    char_filters: int = 50
    char_kernel: int = 3
    lstm_hidden: int = 128  # per direction
    dropout: float = 0.2
    max_word_len: int = 30
    use_char_channel: bool = True  # False gives the char-ablated baseline

    def __post_init__(self) -> None:
        for name in ("word_dim", "char_emb_dim", "char_filters", "char_kernel",
                     "lstm_hidden", "max_word_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.char_filters

    def to_dict(self) -> dict:
        return {
            "word_dim": self.word_dim,
            "char_emb_dim": self.char_emb_dim,
            "char_filters": self.char_filters,
            "char_kernel": self.char_kernel,
            "lstm_hidden": self.lstm_hidden,
            "dropout": self.dropout,
            "max_word_len": self.max_word_len,
            "use_char_channel": self.use_char_channel,
        }


@dataclass
class TaggerModel:
    hp: Hyperparams
    mode: str
    word_vocab: WordVocab
    char_vocab: CharVocab
    tags: list[Tag]
    params: dict[str, np.ndarray]
    frozen_trans: np.ndarray = field(repr=False)  # bool (K, K)
    frozen_start: np.ndarray = field(repr=False)  # bool (K,)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def tag_index(self, tag: Tag) -> int:
        return self._tag_to_idx[tag]

    def __post_init__(self) -> None:
        self._tag_to_idx = {t: i for i, t in enumerate(self.tags)}

    def encode(self, log: AnnotatedLog) -> EncodedLog:
        return encode_log(log, self.word_vocab, self.char_vocab, self.hp.max_word_len)

    def encode_tags(self, log: AnnotatedLog) -> np.ndarray:
        return np.asarray([self._tag_to_idx[t] for t in log.tags], dtype=np.int64)


def _iob_masks(tags: list[Tag]) -> tuple[np.ndarray, np.ndarray]:
    k = len(tags)
    frozen_trans = np.zeros((k, k), dtype=bool)
    for i, prev in enumerate(tags):
        for j, nxt in enumerate(tags):
            if not is_valid_transition(prev, nxt):
                frozen_trans[i, j] = True
    frozen_start = np.asarray([not is_valid_transition(None, t) for t in tags])
    return frozen_trans, frozen_start


def init_model(
    hp: Hyperparams,
    word_vocab: WordVocab,
    char_vocab: CharVocab,
    pretrained: np.ndarray | None = None,
    seed: int = 0,
    mode: str = MULTICLASS,
    dtype=np.float32,
) -> TaggerModel:
    """Fresh model with seeded initialization.

    LSTM and projection weights are uniform in +-sqrt(1/fan_in); embeddings
    are uniform in [-0.25, 0.25] (PAD rows zero) unless a pretrained word
    matrix is supplied; CRF scores start at zero except IOB-violating
    transitions, which are pinned at FROZEN_SCORE and never trained.
    """
    rng = np.random.default_rng(seed)
    tags = tag_vocabulary(mode)
    k = len(tags)
    din, h = hp.input_dim, hp.lstm_hidden

    def uniform(shape, fan_in):
        bound = np.sqrt(1.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    params: dict[str, np.ndarray] = {}
    params["char_emb"] = rng.uniform(
        -0.25, 0.25, size=(len(char_vocab), hp.char_emb_dim)
    ).astype(dtype)
    params["char_emb"][PAD] = 0.0
    params["char_W"] = uniform(
        (hp.char_kernel, hp.char_emb_dim, hp.char_filters), hp.char_kernel * hp.char_emb_dim
    )
    params["char_b"] = np.zeros(hp.char_filters, dtype=dtype)
    if pretrained is not None:
        if pretrained.shape != (len(word_vocab), hp.word_dim):
            raise ValueError(
                f"pretrained matrix shape {pretrained.shape} != "
                f"({len(word_vocab)}, {hp.word_dim})"
            )
        params["word_emb"] = pretrained.astype(dtype).copy()
    else:
        params["word_emb"] = rng.uniform(
            -0.25, 0.25, size=(len(word_vocab), hp.word_dim)
        ).astype(dtype)
    params["word_emb"][PAD] = 0.0
    for d in ("f", "b"):
        params[f"lstm_{d}_Wx"] = uniform((din, 4 * h), din)
        params[f"lstm_{d}_Wh"] = uniform((h, 4 * h), h)
        bias = np.zeros(4 * h, dtype=dtype)
        bias[h : 2 * h] = 1.0  # forget-gate bias
        params[f"lstm_{d}_b"] = bias
    params["proj_W"] = uniform((2 * h, k), 2 * h)
    params["proj_b"] = np.zeros(k, dtype=dtype)

    frozen_trans, frozen_start = _iob_masks(tags)
    trans = np.zeros((k, k), dtype=dtype)
    trans[frozen_trans] = FROZEN_SCORE
    start = np.zeros(k, dtype=dtype)
    start[frozen_start] = FROZEN_SCORE
    params["trans"] = trans
    params["start"] = start
    params["end"] = np.zeros(k, dtype=dtype)

    return TaggerModel(hp, mode, word_vocab, char_vocab, tags, params,
                       frozen_trans, frozen_start)


# ---------------------------------------------------------------------------
# forward pass


def _char_forward(char_ids: np.ndarray, model: TaggerModel) -> tuple[np.ndarray, dict]:
    """Convolution over character embeddings with masked max-pooling.

    PAD positions contribute zero vectors to the convolution (same-padding
    at the edges) and are masked out of the pool; an all-PAD row falls back
    to the bias vector.
    """
    p = model.params
    hp = model.hp
    kern = hp.char_kernel
    half = kern // 2
    t, length = char_ids.shape
    mask = char_ids != PAD  # (T, L)
    x = p["char_emb"][char_ids] * mask[..., None]  # (T, L, Dc)
    xp = np.pad(x, ((0, 0), (half, kern - 1 - half), (0, 0)))
    pre = np.tile(p["char_b"], (t, length, 1))
    for k in range(kern):
        pre += xp[:, k : k + length, :] @ p["char_W"][k]
    masked = np.where(mask[..., None], pre, -np.inf)
    arg = masked.argmax(axis=1)  # (T, F)
    rep = np.take_along_axis(masked, arg[:, None, :], axis=1)[:, 0, :]
    empty = ~mask.any(axis=1)
    if empty.any():
        rep[empty] = p["char_b"]
    cache = {"char_ids": char_ids, "mask": mask, "xp": xp, "arg": arg, "empty": empty}
    return rep.astype(p["char_b"].dtype), cache


def char_representation(char_ids_row: np.ndarray, model: TaggerModel) -> np.ndarray:
    """Char-CNN representation of a single word (length char_filters)."""
    rep, _ = _char_forward(np.asarray(char_ids_row)[None, :], model)
    return rep[0]


def _lstm_forward(
    inputs: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, dict]:
    t_len = inputs.shape[0]
    h_dim = Wh.shape[0]
    dtype = Wx.dtype
    hs = np.zeros((t_len + 1, h_dim), dtype=dtype)
    cs = np.zeros((t_len + 1, h_dim), dtype=dtype)
    gates = np.zeros((t_len, 4, h_dim), dtype=dtype)  # i, f, g, o after nonlinearity
    tanh_c = np.zeros((t_len, h_dim), dtype=dtype)
    for t in range(t_len):
        z = inputs[t] @ Wx + hs[t] @ Wh + b
        i_g = _sigmoid(z[:h_dim])
        f_g = _sigmoid(z[h_dim : 2 * h_dim])
        g_g = np.tanh(z[2 * h_dim : 3 * h_dim])
        o_g = _sigmoid(z[3 * h_dim :])
        cs[t + 1] = f_g * cs[t] + i_g * g_g
        tanh_c[t] = np.tanh(cs[t + 1])
        hs[t + 1] = o_g * tanh_c[t]
        gates[t, 0], gates[t, 1], gates[t, 2], gates[t, 3] = i_g, f_g, g_g, o_g
    cache = {"inputs": inputs, "hs": hs, "cs": cs, "gates": gates, "tanh_c": tanh_c}
    return hs[1:], cache


def _lstm_backward(
    d_h: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, cache: dict
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    inputs, hs, cs = cache["inputs"], cache["hs"], cache["cs"]
    gates, tanh_c = cache["gates"], cache["tanh_c"]
    t_len, h_dim = d_h.shape
    d_wx = np.zeros_like(Wx)
    d_wh = np.zeros_like(Wh)
    d_b = np.zeros(4 * h_dim, dtype=Wx.dtype)
    d_inputs = np.zeros_like(inputs)
    dh_next = np.zeros(h_dim, dtype=Wx.dtype)
    dc_next = np.zeros(h_dim, dtype=Wx.dtype)
    dz = np.empty(4 * h_dim, dtype=Wx.dtype)
    for t in range(t_len - 1, -1, -1):
        i_g, f_g, g_g, o_g = gates[t]
        dh = d_h[t] + dh_next
        d_o = dh * tanh_c[t]
        dc = dc_next + dh * o_g * (1.0 - tanh_c[t] ** 2)
        d_i = dc * g_g
        d_g = dc * i_g
        d_f = dc * cs[t]
        dc_next = dc * f_g
        dz[:h_dim] = d_i * i_g * (1.0 - i_g)
        dz[h_dim : 2 * h_dim] = d_f * f_g * (1.0 - f_g)
        dz[2 * h_dim : 3 * h_dim] = d_g * (1.0 - g_g**2)
        dz[3 * h_dim :] = d_o * o_g * (1.0 - o_g)
        d_wx += np.outer(inputs[t], dz)
        d_wh += np.outer(hs[t], dz)
        d_b += dz
        d_inputs[t] = dz @ Wx.T
        dh_next = dz @ Wh.T
    return d_inputs, d_wx, d_wh, d_b


def _dropout_masks(
    model: TaggerModel, t_len: int, train_mode: bool, dropout_seed: int
) -> tuple[np.ndarray | None, np.ndarray | None]:
    p = model.hp.dropout
    if not train_mode or p == 0.0:
        return None, None
    rng = np.random.default_rng(dropout_seed)
    scale = 1.0 / (1.0 - p)
    m1 = (rng.random((t_len, model.hp.input_dim)) >= p) * scale
    m2 = (rng.random((t_len, 2 * model.hp.lstm_hidden)) >= p) * scale
    dtype = model.params["proj_W"].dtype
    return m1.astype(dtype), m2.astype(dtype)


def _forward(
    enc: EncodedLog, model: TaggerModel, train_mode: bool, dropout_seed: int
) -> tuple[np.ndarray, dict]:
    p = model.params
    hp = model.hp
    t_len = enc.token_count
    if hp.use_char_channel:
        rep, char_cache = _char_forward(enc.char_ids, model)
    else:
        rep = np.zeros((t_len, hp.char_filters), dtype=p["char_b"].dtype)
        char_cache = None
    word_vecs = p["word_emb"][enc.word_ids]  # (T, Dw)
    u = np.concatenate([word_vecs, rep], axis=1)  # (T, Din)
    m1, m2 = _dropout_masks(model, t_len, train_mode, dropout_seed)
    u_d = u * m1 if m1 is not None else u
    h_f, cache_f = _lstm_forward(u_d, p["lstm_f_Wx"], p["lstm_f_Wh"], p["lstm_f_b"])
    h_b_rev, cache_b = _lstm_forward(
        u_d[::-1], p["lstm_b_Wx"], p["lstm_b_Wh"], p["lstm_b_b"]
    )
    h_cat = np.concatenate([h_f, h_b_rev[::-1]], axis=1)  # (T, 2H)
    h_d = h_cat * m2 if m2 is not None else h_cat
    emissions = h_d @ p["proj_W"] + p["proj_b"]
    cache = {
        "enc": enc, "char": char_cache, "m1": m1, "m2": m2,
        "lstm_f": cache_f, "lstm_b": cache_b, "h_d": h_d,
    }
    return emissions, cache


def forward_emissions(
    enc: EncodedLog, model: TaggerModel, train_mode: bool = False, dropout_seed: int = 0
) -> np.ndarray:
    """Per-token emission scores, (T, n_tags)."""
    emissions, _ = _forward(enc, model, train_mode, dropout_seed)
    return emissions


def _backward_net(
    d_emissions: np.ndarray, model: TaggerModel, cache: dict, grads: dict[str, np.ndarray]
) -> None:
    """Accumulate network gradients given d loss / d emissions."""
    p = model.params
    hp = model.hp
    h_dim = hp.lstm_hidden
    d_emissions = d_emissions.astype(p["proj_W"].dtype)

    grads["proj_W"] += cache["h_d"].T @ d_emissions
    grads["proj_b"] += d_emissions.sum(axis=0)
    d_hd = d_emissions @ p["proj_W"].T
    if cache["m2"] is not None:
        d_hd = d_hd * cache["m2"]
    d_inputs_f, d_wx, d_wh, d_b = _lstm_backward(
        d_hd[:, :h_dim], p["lstm_f_Wx"], p["lstm_f_Wh"], cache["lstm_f"]
    )
    grads["lstm_f_Wx"] += d_wx
    grads["lstm_f_Wh"] += d_wh
    grads["lstm_f_b"] += d_b
    d_inputs_b, d_wx, d_wh, d_b = _lstm_backward(
        d_hd[::-1, h_dim:], p["lstm_b_Wx"], p["lstm_b_Wh"], cache["lstm_b"]
    )
    grads["lstm_b_Wx"] += d_wx
    grads["lstm_b_Wh"] += d_wh
    grads["lstm_b_b"] += d_b
    d_u = d_inputs_f + d_inputs_b[::-1]
    if cache["m1"] is not None:
        d_u = d_u * cache["m1"]

    enc: EncodedLog = cache["enc"]
    np.add.at(grads["word_emb"], enc.word_ids, d_u[:, : hp.word_dim])
    if not hp.use_char_channel:
        return
    d_rep = d_u[:, hp.word_dim :].copy()
    cc = cache["char"]
    empty = cc["empty"]
    if empty.any():
        grads["char_b"] += d_rep[empty].sum(axis=0)
        d_rep[empty] = 0.0
    t_len, length = cc["char_ids"].shape
    d_pre = np.zeros((t_len, length, hp.char_filters), dtype=d_rep.dtype)
    np.put_along_axis(d_pre, cc["arg"][:, None, :], d_rep[:, None, :], axis=1)
    grads["char_b"] += d_pre.sum(axis=(0, 1))
    xp = cc["xp"]
    d_xp = np.zeros_like(xp)
    flat_dpre = d_pre.reshape(-1, hp.char_filters)
    for k in range(hp.char_kernel):
        window = xp[:, k : k + length, :].reshape(-1, hp.char_emb_dim)
        grads["char_W"][k] += window.T @ flat_dpre
        d_xp[:, k : k + length, :] += d_pre @ p["char_W"][k].T
    half = hp.char_kernel // 2
    d_x = d_xp[:, half : half + length, :] * cc["mask"][..., None]
    ids = cc["char_ids"][cc["mask"]]
    np.add.at(grads["char_emb"], ids, d_x[cc["mask"]])


def zero_grads(model: TaggerModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in model.params.items()}


def loss_and_gradients(
    model: TaggerModel,
    batch: list[tuple[EncodedLog, np.ndarray]],
    train_mode: bool = True,
    dropout_seed: int = 0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean per-log CRF negative log-likelihood and exact gradients.

    Each log is processed at its true length; frozen CRF entries (IOB
    constraints) receive zero gradient.
    """
    p = model.params
    grads = zero_grads(model)
    total = 0.0
    for i, (enc, gold) in enumerate(batch):
        emissions, cache = _forward(enc, model, train_mode, dropout_seed + i)
        loss, d_e, d_trans, d_s, d_e_end = crf.nll_gradients(
            emissions, p["trans"], p["start"], p["end"], gold
        )
        total += loss
        grads["trans"] += d_trans.astype(p["trans"].dtype)
        grads["start"] += d_s.astype(p["start"].dtype)
        grads["end"] += d_e_end.astype(p["end"].dtype)
        _backward_net(d_e, model, cache, grads)
    scale = 1.0 / len(batch)
    for name in grads:
        grads[name] *= scale
    grads["trans"][model.frozen_trans] = 0.0
    grads["start"][model.frozen_start] = 0.0
    grads["word_emb"][PAD] = 0.0
    grads["char_emb"][PAD] = 0.0
    return total * scale, grads


def decode(model: TaggerModel, enc: EncodedLog) -> list[Tag]:
    """Viterbi-decode one encoded log into tags (inference mode)."""
    p = model.params
    emissions = forward_emissions(enc, model, train_mode=False)
    path = crf.viterbi_decode(emissions, p["trans"], p["start"], p["end"])
    return [model.tags[i] for i in path]


def tag_log(model: TaggerModel, raw: str) -> AnnotatedLog:
    """Tokenize, encode, and tag one raw log message."""
    tokens = tokenize(raw)
    stub = AnnotatedLog(tuple(tokens), tuple(Tag("O") for _ in tokens))
    tags = decode(model, model.encode(stub))
    return AnnotatedLog(tuple(tokens), tuple(tags))
