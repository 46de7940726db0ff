"""The three classifier architectures over a shared embedding table.

Every model is: embedding lookup, an architecture-specific feature stage,
global max pooling over time, dropout, and a single sigmoid unit.

* cnn1d: parallel valid convolutions with filter sizes 2/3/4, 64 filters
  each, ReLU, pooled and concatenated to 192 features.
* lstm: one recurrent pass returning all hidden states, pooled to 100.
* bilstm: forward and backward passes concatenated per timestep, pooled
  to 200.

Forward passes accept one sequence (max_len,) or a batch (B, max_len); the
batch dimension rides along through every op. Recurrent dropout samples one
mask per sequence and reuses it at each timestep; initialization is Glorot
uniform for input/dense weights, orthogonal for recurrent weights, and zero
biases except the forget gate's, which starts at 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import UserInputError
from .optim import Parameter
from .serialize import load_tensors, save_tensors

ARCHITECTURES = ("cnn1d", "lstm", "bilstm")

# gate order in the stacked LSTM weights
GATES = ("input", "forget", "candidate", "output")
FORGET_GATE = 1


@dataclass(frozen=True)
class ModelSpec:
    """Complete hyperparameter record for one classifier."""

    architecture: str
    max_len: int
    embedding_dim: int = 300
    filter_sizes: tuple[int, ...] = (2, 3, 4)
    filters_per_size: int = 64
    lstm_units: int = 100
    dropout_rate: float = 0.5
    recurrent_dropout_rate: float = 0.2
    batch_size: int = 64
    epochs: int = 5
    embeddings_trainable: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "filter_sizes", tuple(int(h) for h in self.filter_sizes))
        if self.architecture not in ARCHITECTURES:
            raise ValueError(
                f"unknown architecture {self.architecture!r}, expected one of {ARCHITECTURES}"
            )
        if self.max_len < 1:
            raise ValueError("max_len must be positive")
        for name in ("embedding_dim", "filters_per_size", "lstm_units", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        for name in ("dropout_rate", "recurrent_dropout_rate"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.architecture == "cnn1d":
            for h in self.filter_sizes:
                if not 1 <= h <= self.max_len:
                    raise ValueError(
                        f"filter size {h} must lie in [1, max_len={self.max_len}]"
                    )

    @property
    def pooled_width(self) -> int:
        """Feature width after pooling: 192 / 100 / 200 at the defaults."""
        if self.architecture == "cnn1d":
            return len(self.filter_sizes) * self.filters_per_size
        if self.architecture == "lstm":
            return self.lstm_units
        return 2 * self.lstm_units

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filter_sizes"] = list(self.filter_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        expected = set(cls.__dataclass_fields__)
        got = set(d)
        if got != expected:
            missing, extra = sorted(expected - got), sorted(got - expected)
            raise ValueError(f"model spec fields: missing {missing}, unexpected {extra}")
        return cls(**d)


@dataclass
class Conv1DLayer:
    filter_size: int
    weights: Parameter  # (h, embedding_dim, n_filters)
    bias: Parameter  # (n_filters,)


@dataclass
class LSTMCell:
    """Stacked per-gate weights, gate order input | forget | candidate | output."""

    W: Parameter  # (4, units, input_dim)
    U: Parameter  # (4, units, units)
    b: Parameter  # (4, units)

    @property
    def units(self) -> int:
        return self.W.value.shape[1]


# ---------------------------------------------------------------------------
# initializers
# ---------------------------------------------------------------------------


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def orthogonal_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _init_cell(rng: np.random.Generator, input_dim: int, units: int) -> LSTMCell:
    w = glorot_uniform(rng, (len(GATES), units, input_dim), input_dim, units)
    u = np.stack([orthogonal_matrix(rng, units) for _ in GATES])
    b = np.zeros((len(GATES), units))
    b[FORGET_GATE] = 1.0
    return LSTMCell(W=Parameter(Tensor(w)), U=Parameter(Tensor(u)), b=Parameter(Tensor(b)))


# ---------------------------------------------------------------------------
# architecture building blocks
# ---------------------------------------------------------------------------


def conv1d_forward(seq: Tensor, layer: Conv1DLayer) -> Tensor:
    """Valid (no-padding) cross-correlation over time, bias added, no ReLU.

    ``seq`` is (..., L, D); the result is (..., L-h+1, F). Built from window
    slices so the whole thing differentiates through existing primitives:
    output[t, f] = bias[f] + sum_{j,c} seq[t+j, c] * W[j, c, f].
    """
    h, d, f = layer.weights.value.shape
    length = seq.shape[-2]
    if length < h:
        raise ValueError(f"sequence length {length} shorter than filter size {h}")
    if seq.shape[-1] != d:
        raise ValueError(f"sequence dim {seq.shape[-1]} != filter dim {d}")
    t_out = length - h + 1
    windows = [seq[..., j:j + t_out, :] for j in range(h)]
    stacked = ad.concat(windows, axis=-1)  # (..., T, h*D), row t = seq[t:t+h] flattened
    wmat = ad.reshape(layer.weights.value, (h * d, f))
    return ad.add(ad.matmul(stacked, wmat), layer.bias.value)


def global_max_pool(features: Tensor) -> Tensor:
    """Per-channel maximum over the time axis of (..., T, F)."""
    return ad.axis_max(features, -2)


def lstm_step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor, cell: LSTMCell, rec_mask=None):
    """One LSTM timestep; returns (h_t, c_t).

    Gates i, f, o use hard sigmoid, the candidate uses tanh; ``rec_mask``
    (an inverted-dropout mask, or None) multiplies the recurrent input.
    """
    h_in = h_prev if rec_mask is None else ad.mul(h_prev, rec_mask)
    z = []
    for k in range(len(GATES)):
        w = ad.transpose(cell.W.value[k])  # (D, U)
        u = ad.transpose(cell.U.value[k])  # (U, U)
        z.append(ad.add(ad.add(ad.matmul(x_t, w), ad.matmul(h_in, u)), cell.b.value[k]))
    i = ad.hard_sigmoid(z[0])
    f = ad.hard_sigmoid(z[1])
    g = ad.tanh_act(z[2])
    o = ad.hard_sigmoid(z[3])
    c_t = ad.add(ad.mul(f, c_prev), ad.mul(i, g))
    h_t = ad.mul(o, ad.tanh_act(c_t))
    return h_t, c_t


def lstm_sequence(
    seq: Tensor,
    cell: LSTMCell,
    training: bool = False,
    rng: np.random.Generator | None = None,
    recurrent_dropout_rate: float = 0.2,
) -> Tensor:
    """All hidden states of one pass: (..., L, D) -> (..., L, units).

    h_0 = c_0 = 0. In training mode one recurrent mask is sampled here and
    reused at every timestep.
    """
    batch_shape = seq.shape[:-2]
    length = seq.shape[-2]
    units = cell.units
    mask = None
    if training and recurrent_dropout_rate > 0.0:
        if rng is None:
            raise ValueError("training-mode recurrent dropout needs a seeded generator")
        mask = Tensor(ad.dropout_mask(batch_shape + (units,), recurrent_dropout_rate, rng))
    h = Tensor(np.zeros(batch_shape + (units,)))
    c = Tensor(np.zeros(batch_shape + (units,)))
    steps = []
    for t in range(length):
        h, c = lstm_step(seq[..., t, :], h, c, cell, mask)
        steps.append(ad.reshape(h, batch_shape + (1, units)))
    return ad.concat(steps, axis=-2)


def bilstm_forward(
    seq: Tensor,
    fwd: LSTMCell,
    bwd: LSTMCell,
    training: bool = False,
    rng: np.random.Generator | None = None,
    recurrent_dropout_rate: float = 0.2,
) -> Tensor:
    """Concatenation of a forward pass and a time-reversed backward pass,
    the latter re-reversed so timesteps align: (..., L, 2*units)."""
    forward_out = lstm_sequence(seq, fwd, training, rng, recurrent_dropout_rate)
    reversed_seq = seq[..., ::-1, :]
    backward_out = lstm_sequence(reversed_seq, bwd, training, rng, recurrent_dropout_rate)
    return ad.concat([forward_out, backward_out[..., ::-1, :]], axis=-1)


# ---------------------------------------------------------------------------
# assembled classifier
# ---------------------------------------------------------------------------


@dataclass
class ClassifierModel:
    spec: ModelSpec
    embedding: Parameter  # (V, embedding_dim)
    conv_layers: list[Conv1DLayer] = field(default_factory=list)
    cells: dict[str, LSTMCell] = field(default_factory=dict)
    dense_weights: Parameter = None  # (pooled_width, 1)
    dense_bias: Parameter = None  # (1,)

    def parameters(self) -> dict[str, Parameter]:
        """All parameters under stable names, embedding first."""
        params: dict[str, Parameter] = {"embedding": self.embedding}
        for layer in self.conv_layers:
            params[f"conv{layer.filter_size}_weights"] = layer.weights
            params[f"conv{layer.filter_size}_bias"] = layer.bias
        for name, cell in self.cells.items():
            params[f"{name}_W"] = cell.W
            params[f"{name}_U"] = cell.U
            params[f"{name}_b"] = cell.b
        params["dense_weights"] = self.dense_weights
        params["dense_bias"] = self.dense_bias
        return params

    def trainable_parameters(self) -> dict[str, Parameter]:
        params = self.parameters()
        if not self.spec.embeddings_trainable:
            del params["embedding"]
        return params

    def forward(self, indices, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Probability of the positive class; () for one sequence of
        max_len indices, (B,) for a batch."""
        ids = np.asarray(indices, dtype=np.int64)
        single = ids.ndim == 1
        if single:
            ids = ids[np.newaxis, :]
        if ids.ndim != 2 or ids.shape[1] != self.spec.max_len:
            raise ValueError(
                f"expected index shape (B, {self.spec.max_len}), got {np.asarray(indices).shape}"
            )
        n, length = ids.shape
        flat = ad.gather_rows(self.embedding.value, ids.reshape(-1))
        x = ad.reshape(flat, (n, length, self.spec.embedding_dim))
        if self.spec.architecture == "cnn1d":
            pooled = [
                global_max_pool(ad.relu(conv1d_forward(x, layer)))
                for layer in self.conv_layers
            ]
            feats = ad.concat(pooled, axis=-1)
        elif self.spec.architecture == "lstm":
            feats = global_max_pool(
                lstm_sequence(x, self.cells["fwd"], training, rng,
                              self.spec.recurrent_dropout_rate)
            )
        else:
            feats = global_max_pool(
                bilstm_forward(x, self.cells["fwd"], self.cells["bwd"], training, rng,
                               self.spec.recurrent_dropout_rate)
            )
        feats = ad.dropout(feats, self.spec.dropout_rate, training, rng)
        logits = ad.add(ad.matmul(feats, self.dense_weights.value), self.dense_bias.value)
        p = ad.sigmoid(logits)
        return ad.reshape(p, () if single else (n,))

    def predict_proba(self, indices) -> np.ndarray:
        """Inference-mode probabilities as a plain array (no tape needed)."""
        return np.asarray(self.forward(indices, training=False).data)


def build_model(spec: ModelSpec, embedding_vectors: np.ndarray) -> ClassifierModel:
    """Assemble a freshly initialized model around a (V, dim) embedding table.

    Parameter creation order is fixed, so one seed fixes every weight.
    """
    vectors = np.array(embedding_vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != spec.embedding_dim:
        raise ValueError(
            f"embedding table shape {vectors.shape} incompatible with dim {spec.embedding_dim}"
        )
    rng = np.random.default_rng(spec.seed)
    model = ClassifierModel(spec=spec, embedding=Parameter(Tensor(vectors)))
    if spec.architecture == "cnn1d":
        for h in spec.filter_sizes:
            w = glorot_uniform(
                rng,
                (h, spec.embedding_dim, spec.filters_per_size),
                h * spec.embedding_dim,
                spec.filters_per_size,
            )
            model.conv_layers.append(
                Conv1DLayer(
                    filter_size=h,
                    weights=Parameter(Tensor(w)),
                    bias=Parameter(Tensor(np.zeros(spec.filters_per_size))),
                )
            )
    elif spec.architecture == "lstm":
        model.cells["fwd"] = _init_cell(rng, spec.embedding_dim, spec.lstm_units)
    else:
        model.cells["fwd"] = _init_cell(rng, spec.embedding_dim, spec.lstm_units)
        model.cells["bwd"] = _init_cell(rng, spec.embedding_dim, spec.lstm_units)
    dense_w = glorot_uniform(rng, (spec.pooled_width, 1), spec.pooled_width, 1)
    model.dense_weights = Parameter(Tensor(dense_w))
    model.dense_bias = Parameter(Tensor(np.zeros(1)))
    return model


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_model(model: ClassifierModel, vocab_tokens: list[str], path) -> None:
    """Checkpoint = parameter container + the spec and vocabulary needed to
    rebuild an identical inference model."""
    arrays = {name: p.value.data for name, p in model.parameters().items()}
    if arrays["embedding"].shape[0] != len(vocab_tokens):
        raise ValueError(
            f"vocab has {len(vocab_tokens)} tokens but embedding table has "
            f"{arrays['embedding'].shape[0]} rows"
        )
    meta = {"model_spec": model.spec.to_dict(), "vocab_tokens": list(vocab_tokens)}
    save_tensors(path, arrays, meta)


def load_model(path) -> tuple[ClassifierModel, list[str]]:
    """Rebuild (model, vocab_tokens) from a checkpoint, validating that the
    stored tensors agree with the stored spec."""
    arrays, meta = load_tensors(path)
    for key in ("model_spec", "vocab_tokens"):
        if key not in meta:
            raise UserInputError(f"{path}: checkpoint meta lacks {key!r}")
    try:
        spec = ModelSpec.from_dict(meta["model_spec"])
    except (TypeError, ValueError) as exc:
        raise UserInputError(f"{path}: bad model spec in checkpoint: {exc}") from None
    tokens = meta["vocab_tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise UserInputError(f"{path}: vocab_tokens must be a list of strings")
    if "embedding" not in arrays:
        raise UserInputError(f"{path}: checkpoint lacks the embedding table")
    if arrays["embedding"].shape != (len(tokens), spec.embedding_dim):
        raise UserInputError(
            f"{path}: embedding shape {arrays['embedding'].shape} does not match "
            f"{len(tokens)} tokens x dim {spec.embedding_dim}"
        )
    model = build_model(spec, arrays["embedding"])
    expected = model.parameters()
    if set(arrays) != set(expected):
        raise UserInputError(
            f"{path}: tensor names {sorted(arrays)} do not match the spec's "
            f"architecture (expected {sorted(expected)})"
        )
    for name, param in expected.items():
        if arrays[name].shape != param.value.shape:
            raise UserInputError(
                f"{path}: tensor {name!r} has shape {arrays[name].shape}, "
                f"spec implies {param.value.shape}"
            )
        param.value.data[...] = arrays[name]
    return model, tokens
