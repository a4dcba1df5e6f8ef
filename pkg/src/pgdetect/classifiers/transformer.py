"""Small transformer encoder for sequence classification.

Multi-head self-attention with sinusoidal positional encoding, post-norm
residual blocks with a GELU feed-forward, and a single linear head on
the start-token representation producing two logits. Forward and
backward passes are written out against float64 numpy so analytic
gradients can be checked against finite differences.

Training uses adaptive-moment updates with decoupled weight decay
(decay on matrices only). The item order is canonicalized before the
seeded shuffle, so an externally permuted training set trains
identically. Results are deterministic given the seed and a fixed BLAS
thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..annotation import Label
from ..errors import BadInputError, DegenerateLabelsError
from . import prediction_from_score

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715
_LN_EPS = 1e-5
_MASK_BIAS = -1e9


@dataclass(frozen=True)
class TransformerConfig:
    vocab_size: int
    layers: int = 2
    hidden: int = 64
    heads: int = 2
    ff_dim: int | None = None
    max_len: int = 512
    freeze_encoder: bool = False
    pretrained_weights: str | None = None

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be positive")
        if self.hidden % self.heads != 0:
            raise ValueError("hidden must be divisible by heads")
        if self.ff_dim is None:
            object.__setattr__(self, "ff_dim", 4 * self.hidden)


@dataclass(frozen=True)
class TrainingHyperparams:
    batch_size: int = 16
    learning_rate: float = 5e-5
    epochs: int = 2
    epsilon: float = 1e-8
    weight_decay: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if min(self.batch_size, self.epochs) < 1 or self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("hyperparameters must be positive")


def sinusoidal_positions(max_len: int, hidden: int) -> np.ndarray:
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    idx = np.arange(hidden, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * np.floor(idx / 2.0)) / hidden)
    enc = np.empty((max_len, hidden), dtype=np.float64)
    enc[:, 0::2] = np.sin(angle[:, 0::2])
    enc[:, 1::2] = np.cos(angle[:, 1::2])
    return enc


def init_params(config: TransformerConfig, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    h, f = config.hidden, config.ff_dim

    def w(shape):
        return rng.normal(0.0, 0.02, shape)

    params = {"tok_emb": w((config.vocab_size, h))}
    for i in range(config.layers):
        pre = f"layer{i}."
        for name in ("wq", "wk", "wv", "wo"):
            params[pre + name] = w((h, h))
        for name in ("bq", "bk", "bv", "bo"):
            params[pre + name] = np.zeros(h)
        params[pre + "ln1_g"] = np.ones(h)
        params[pre + "ln1_b"] = np.zeros(h)
        params[pre + "w1"] = w((h, f))
        params[pre + "b1"] = np.zeros(f)
        params[pre + "w2"] = w((f, h))
        params[pre + "b2"] = np.zeros(h)
        params[pre + "ln2_g"] = np.ones(h)
        params[pre + "ln2_b"] = np.zeros(h)
    params["head_w"] = w((h, 2))
    params["head_b"] = np.zeros(2)
    return params


def _gelu(x):
    u = _GELU_C * (x + _GELU_A * x**3)
    return 0.5 * x * (1.0 + np.tanh(u))


def _gelu_grad(x):
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du


def _softmax(x, axis=-1):
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _layer_norm(z, gamma, beta):
    mu = z.mean(-1, keepdims=True)
    var = z.var(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (z - mu) * inv
    return gamma * xhat + beta, (xhat, inv)


def _layer_norm_backward(dout, cache, gamma):
    xhat, inv = cache
    dgamma = (dout * xhat).sum(axis=tuple(range(dout.ndim - 1)))
    dbeta = dout.sum(axis=tuple(range(dout.ndim - 1)))
    dxhat = dout * gamma
    dz = inv * (
        dxhat
        - dxhat.mean(-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(-1, keepdims=True)
    )
    return dz, dgamma, dbeta


class TransformerClassifier:
    def __init__(self, config: TransformerConfig, hyperparams: TrainingHyperparams, params=None):
        self.config = config
        self.hyperparams = hyperparams
        self.params = params if params is not None else init_params(config, hyperparams.seed)
        self.positions = sinusoidal_positions(config.max_len, config.hidden)
        self.history: list[float] = []  # mean training loss per epoch

    # ------------------------------------------------------------------ forward

    def forward(self, ids: np.ndarray, mask: np.ndarray):
        """Logits for a batch plus a cache of per-layer attention
        weights and hidden states (consumed by the backward pass and
        the introspection helpers)."""
        cfg = self.config
        p = self.params
        bsz, seq = ids.shape
        if seq > cfg.max_len:
            raise BadInputError(f"sequence length {seq} exceeds max_len {cfg.max_len}")
        maskf = mask.astype(np.float64)
        x = p["tok_emb"][ids] + self.positions[:seq]
        bias = (1.0 - maskf)[:, None, None, :] * _MASK_BIAS
        cache = {"x0": x, "layers": [], "ids": ids, "mask": maskf}
        dh = cfg.hidden // cfg.heads
        scale = 1.0 / math.sqrt(dh)
        for i in range(cfg.layers):
            pre = f"layer{i}."
            a_in = x
            q = a_in @ p[pre + "wq"] + p[pre + "bq"]
            k = a_in @ p[pre + "wk"] + p[pre + "bk"]
            v = a_in @ p[pre + "wv"] + p[pre + "bv"]

            def split(t):
                return t.reshape(bsz, seq, cfg.heads, dh).transpose(0, 2, 1, 3)

            qh, kh, vh = split(q), split(k), split(v)
            scores = qh @ kh.transpose(0, 1, 3, 2) * scale + bias
            att = _softmax(scores)
            ctx = (att @ vh).transpose(0, 2, 1, 3).reshape(bsz, seq, cfg.hidden)
            att_out = ctx @ p[pre + "wo"] + p[pre + "bo"]
            z1 = a_in + att_out
            x1, ln1_cache = _layer_norm(z1, p[pre + "ln1_g"], p[pre + "ln1_b"])
            h_pre = x1 @ p[pre + "w1"] + p[pre + "b1"]
            h = _gelu(h_pre)
            ff = h @ p[pre + "w2"] + p[pre + "b2"]
            z2 = x1 + ff
            x2, ln2_cache = _layer_norm(z2, p[pre + "ln2_g"], p[pre + "ln2_b"])
            cache["layers"].append(
                {
                    "a_in": a_in,
                    "qh": qh,
                    "kh": kh,
                    "vh": vh,
                    "att": att,
                    "ctx": ctx,
                    "ln1": ln1_cache,
                    "x1": x1,
                    "h_pre": h_pre,
                    "h": h,
                    "ln2": ln2_cache,
                    "x_out": x2,
                }
            )
            x = x2
        pooled = x[:, 0, :]
        logits = pooled @ p["head_w"] + p["head_b"]
        cache["pooled"] = pooled
        return logits, cache

    # ----------------------------------------------------------------- backward

    def loss_and_grads(self, ids: np.ndarray, mask: np.ndarray, y: np.ndarray):
        """Mean cross-entropy over the batch and gradients for every
        parameter."""
        cfg = self.config
        p = self.params
        bsz, seq = ids.shape
        logits, cache = self.forward(ids, mask)
        probs = _softmax(logits)
        y = y.astype(np.int64)
        loss = float(-np.log(probs[np.arange(bsz), y] + 1e-300).mean())

        grads = {k: np.zeros_like(v) for k, v in p.items()}
        dlogits = probs.copy()
        dlogits[np.arange(bsz), y] -= 1.0
        dlogits /= bsz

        grads["head_w"] = cache["pooled"].T @ dlogits
        grads["head_b"] = dlogits.sum(0)
        dpooled = dlogits @ p["head_w"].T
        dx = np.zeros((bsz, seq, cfg.hidden))
        dx[:, 0, :] = dpooled

        dh_per_head = cfg.hidden // cfg.heads
        scale = 1.0 / math.sqrt(dh_per_head)
        for i in reversed(range(cfg.layers)):
            pre = f"layer{i}."
            lc = cache["layers"][i]
            dz2, dg2, db2 = _layer_norm_backward(dx, lc["ln2"], p[pre + "ln2_g"])
            grads[pre + "ln2_g"] += dg2
            grads[pre + "ln2_b"] += db2
            dx1 = dz2.copy()
            dff = dz2
            h2d = lc["h"].reshape(-1, cfg.ff_dim)
            dff2d = dff.reshape(-1, cfg.hidden)
            grads[pre + "w2"] += h2d.T @ dff2d
            grads[pre + "b2"] += dff2d.sum(0)
            dh = dff @ p[pre + "w2"].T
            dh_pre = dh * _gelu_grad(lc["h_pre"])
            x1_2d = lc["x1"].reshape(-1, cfg.hidden)
            dh_pre2d = dh_pre.reshape(-1, cfg.ff_dim)
            grads[pre + "w1"] += x1_2d.T @ dh_pre2d
            grads[pre + "b1"] += dh_pre2d.sum(0)
            dx1 += dh_pre @ p[pre + "w1"].T

            dz1, dg1, db1 = _layer_norm_backward(dx1, lc["ln1"], p[pre + "ln1_g"])
            grads[pre + "ln1_g"] += dg1
            grads[pre + "ln1_b"] += db1
            da_in = dz1.copy()
            datt_out = dz1
            ctx2d = lc["ctx"].reshape(-1, cfg.hidden)
            datt_out2d = datt_out.reshape(-1, cfg.hidden)
            grads[pre + "wo"] += ctx2d.T @ datt_out2d
            grads[pre + "bo"] += datt_out2d.sum(0)
            dctx = datt_out @ p[pre + "wo"].T
            dctx4 = dctx.reshape(bsz, seq, cfg.heads, dh_per_head).transpose(0, 2, 1, 3)

            att, qh, kh, vh = lc["att"], lc["qh"], lc["kh"], lc["vh"]
            datt = dctx4 @ vh.transpose(0, 1, 3, 2)
            dvh = att.transpose(0, 1, 3, 2) @ dctx4
            dscores = att * (datt - (datt * att).sum(-1, keepdims=True))
            dqh = dscores @ kh * scale
            dkh = dscores.transpose(0, 1, 3, 2) @ qh * scale

            def merge(t4):
                return t4.transpose(0, 2, 1, 3).reshape(bsz, seq, cfg.hidden)

            a_in2d = lc["a_in"].reshape(-1, cfg.hidden)
            for name, dt in (("q", dqh), ("k", dkh), ("v", dvh)):
                d2d = merge(dt).reshape(-1, cfg.hidden)
                grads[pre + "w" + name] += a_in2d.T @ d2d
                grads[pre + "b" + name] += d2d.sum(0)
                da_in += merge(dt) @ p[pre + "w" + name].T
            dx = da_in

        np.add.at(grads["tok_emb"], cache["ids"], dx)
        return loss, grads

    # ---------------------------------------------------------------- inference

    def predict_scores(self, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(ids, mask)
        return _softmax(logits)[:, 1]

    def predict(self, sequences) -> list:
        if not sequences:
            return []
        ids, mask = sequences_to_arrays(sequences, self.config.max_len)
        if ids.max() >= self.config.vocab_size:
            raise BadInputError("token id outside the model vocabulary")
        return [prediction_from_score(s) for s in self.predict_scores(ids, mask)]

    def attention_maps(self, ids: np.ndarray, mask: np.ndarray) -> list:
        """Per-layer attention tensors (batch, heads, query, key)."""
        _, cache = self.forward(ids, mask)
        return [lc["att"] for lc in cache["layers"]]

    def hidden_states(self, ids: np.ndarray, mask: np.ndarray) -> list:
        _, cache = self.forward(ids, mask)
        return [cache["x0"]] + [lc["x_out"] for lc in cache["layers"]]

    # -------------------------------------------------------------- persistence

    def save(self, path) -> None:
        meta = {
            "format_version": 1,
            "backend": "transformer",
            "config": asdict(self.config),
            "hyperparams": asdict(self.hyperparams),
        }
        arrays = dict(self.params)
        arrays["meta"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "TransformerClassifier":
        data = np.load(path)
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("backend") != "transformer":
            raise BadInputError("checkpoint is not a transformer model")
        config = TransformerConfig(**meta["config"])
        hp = TrainingHyperparams(**meta["hyperparams"])
        params = {k: data[k] for k in data.files if k != "meta"}
        return cls(config, hp, params=params)

    def load_pretrained(self, path, strict: bool = False) -> dict:
        """Copy weights from an .npz checkpoint.

        Keys may use this module's names or the common BERT-style names
        (see docs/pretrained_weights.md for the mapping table). Tensors
        whose translated name or shape does not fit are skipped unless
        strict.
        """
        data = np.load(path)
        loaded, skipped = [], []
        for key in data.files:
            name, transpose = _translate_pretrained_key(key)
            if name is None or name not in self.params:
                skipped.append(key)
                continue
            tensor = data[key].astype(np.float64)
            if transpose:
                tensor = tensor.T
            if tensor.shape != self.params[name].shape:
                skipped.append(key)
                continue
            self.params[name] = tensor
            loaded.append(name)
        if strict and skipped:
            raise BadInputError(f"unmapped pretrained tensors: {skipped}")
        return {"loaded": sorted(loaded), "skipped": sorted(skipped)}


_BERT_SUFFIXES = {
    "attention.self.query": ("wq", "bq", True),
    "attention.self.key": ("wk", "bk", True),
    "attention.self.value": ("wv", "bv", True),
    "attention.output.dense": ("wo", "bo", True),
    "attention.output.LayerNorm": ("ln1_g", "ln1_b", False),
    "intermediate.dense": ("w1", "b1", True),
    "output.dense": ("w2", "b2", True),
    "output.LayerNorm": ("ln2_g", "ln2_b", False),
}


def _translate_pretrained_key(key: str):
    """Returns (our-name | None, transpose)."""
    name = key[5:] if key.startswith("bert.") else key
    if name in ("tok_emb", "head_w", "head_b") or name.startswith("layer"):
        return name, False
    if name == "embeddings.word_embeddings.weight":
        return "tok_emb", False
    if name == "classifier.weight":
        return "head_w", True
    if name == "classifier.bias":
        return "head_b", False
    if name.startswith("encoder.layer."):
        rest = name[len("encoder.layer."):]
        idx, _, tail = rest.partition(".")
        for suffix, (wname, bname, transpose) in _BERT_SUFFIXES.items():
            if tail == suffix + ".weight":
                return f"layer{idx}.{wname}", transpose and wname.startswith("w")
            if tail in (suffix + ".bias", suffix + ".beta"):
                return f"layer{idx}.{bname}", False
            if tail == suffix + ".gamma":
                return f"layer{idx}.{wname}", False
    return None, False


def sequences_to_arrays(sequences, max_len: int):
    ids = np.empty((len(sequences), max_len), dtype=np.int64)
    mask = np.empty((len(sequences), max_len), dtype=np.int64)
    for i, seq in enumerate(sequences):
        if seq.max_len != max_len:
            raise BadInputError(
                f"sequence length {seq.max_len} does not match model max_len {max_len}"
            )
        ids[i] = seq.ids
        mask[i] = seq.attention_mask
    return ids, mask


class _AdamW:
    def __init__(self, params, hp: TrainingHyperparams, betas=(0.9, 0.999)):
        self.hp = hp
        self.b1, self.b2 = betas
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, trainable):
        self.t += 1
        lr, eps = self.hp.learning_rate, self.hp.epsilon
        for key in trainable:
            g = grads[key]
            self.m[key] = self.b1 * self.m[key] + (1.0 - self.b1) * g
            self.v[key] = self.b2 * self.v[key] + (1.0 - self.b2) * g * g
            m_hat = self.m[key] / (1.0 - self.b1**self.t)
            v_hat = self.v[key] / (1.0 - self.b2**self.t)
            if params[key].ndim >= 2:  # decay matrices, not biases or norms
                params[key] *= 1.0 - lr * self.hp.weight_decay
            params[key] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def train_transformer(
    sequences, labels, config: TransformerConfig, hp: TrainingHyperparams | None = None
) -> TransformerClassifier:
    hp = hp or TrainingHyperparams()
    if len(sequences) != len(labels) or len(sequences) < 2:
        raise BadInputError("need aligned sequences and labels, at least two items")
    ids, mask = sequences_to_arrays(sequences, config.max_len)
    if ids.max() >= config.vocab_size or ids.min() < 0:
        raise BadInputError("token id outside the configured vocabulary")
    y = np.array(
        [1 if (isinstance(l, Label) and l is Label.TARGET) or l == 1 else 0 for l in labels],
        dtype=np.int64,
    )
    if len(set(y.tolist())) < 2:
        raise DegenerateLabelsError("training data contains a single class")

    # canonical order: training is invariant to the incoming permutation
    order = sorted(range(len(sequences)), key=lambda i: (ids[i].tobytes(), int(y[i])))
    ids, mask, y = ids[order], mask[order], y[order]

    model = TransformerClassifier(config, hp)
    if config.pretrained_weights:
        model.load_pretrained(config.pretrained_weights)
    trainable = (
        ["head_w", "head_b"] if config.freeze_encoder else list(model.params.keys())
    )
    optimizer = _AdamW(model.params, hp)
    rng = np.random.default_rng(hp.seed)
    n = len(y)
    for _ in range(hp.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, hp.batch_size):
            batch = perm[start : start + hp.batch_size]
            loss, grads = model.loss_and_grads(ids[batch], mask[batch], y[batch])
            optimizer.step(model.params, grads, trainable)
            total += loss * batch.shape[0]
        model.history.append(total / n)
    return model
