"""Recurrent next-action scorer: configuration, parameters, persistence.

The network is an embedding lookup, one recurrent layer (GRU or LSTM),
and a dense output layer that scores every action ID.  The embedding
matrix doubles as the input weight matrix (one-hot input times a weight
matrix is exactly a row lookup), so embedding width equals hidden width.
Everything is float64: the gradient checks this code must satisfy need
the headroom.

All parameters live in a flat name -> ndarray dict so the optimizer and
the finite-difference harness can iterate them generically.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np

from ..errors import ConfigError, IntegrityError, ParseError
from ..rng import generator

CELL_KINDS = ("gru", "lstm")
LOSS_KINDS = ("cross_entropy", "bpr", "top1")

# Gate weights are drawn in this order so initialization is reproducible.
GRU_GATES = ("update", "reset", "cand")
LSTM_GATES = ("input", "forget", "outgate", "cand")

_MAGIC = b"GUIRECM1\n"


@dataclass(frozen=True)
class NetworkConfig:
    n_actions: int
    hidden_size: int
    cell_kind: str = "gru"
    loss_kind: str = "top1"
    batch_size: int = 32
    learning_rate: float = 0.05
    adagrad_epsilon: float = 1e-6
    init_scale: float = 0.1
    epochs: int = 10
    seed: int = 0
    bptt_unroll: int = 1  # gradient window in steps; 1 = truncate at step boundaries

    def __post_init__(self):
        for name in ("n_actions", "hidden_size", "batch_size", "epochs", "bptt_unroll"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.adagrad_epsilon <= 0:
            raise ConfigError("adagrad_epsilon must be positive")
        if self.init_scale < 0:
            raise ConfigError("init_scale must be >= 0")
        if self.cell_kind not in CELL_KINDS:
            raise ConfigError(f"cell_kind must be one of {CELL_KINDS}, got {self.cell_kind!r}")
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")


def gate_names(cell_kind: str) -> tuple[str, ...]:
    return GRU_GATES if cell_kind == "gru" else LSTM_GATES


def param_shapes(cfg: NetworkConfig) -> dict[str, tuple[int, ...]]:
    n, h = cfg.n_actions, cfg.hidden_size
    shapes: dict[str, tuple[int, ...]] = {"embed": (n, h)}
    for gate in gate_names(cfg.cell_kind):
        shapes[f"w_{gate}"] = (h, h)
        shapes[f"u_{gate}"] = (h, h)
        shapes[f"b_{gate}"] = (h,)
    shapes["w_out"] = (h, n)
    shapes["b_out"] = (n,)
    return shapes


class RecurrentModel:
    """Parameters plus Adagrad accumulators for one configured network."""

    def __init__(self, cfg: NetworkConfig, params: dict[str, np.ndarray],
                 accum: dict[str, np.ndarray]):
        self.cfg = cfg
        self.params = params
        self.accum = accum

    @classmethod
    def init(cls, cfg: NetworkConfig) -> "RecurrentModel":
        """Weights i.i.d. uniform in [-init_scale, init_scale], biases zero.

        Tensors are drawn in the fixed `param_shapes` order, so a seed pins
        every parameter bit-for-bit.
        """
        rng = generator(cfg.seed)
        params = {}
        for name, shape in param_shapes(cfg).items():
            if name.startswith("b_"):
                params[name] = np.zeros(shape, dtype=np.float64)
            else:
                params[name] = rng.uniform(-cfg.init_scale, cfg.init_scale, size=shape)
        accum = {name: np.zeros_like(tensor) for name, tensor in params.items()}
        return cls(cfg, params, accum)

    def parameter_count(self) -> int:
        return sum(t.size for t in self.params.values())

    def param_items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.params.items())

    def save(self, destination) -> None:
        """Single-file layout: magic, JSON header, raw little-endian float64 tensors."""
        names = sorted(self.params)
        header = {
            "format_version": 1,
            "config": asdict(self.cfg),
            "tensors": [{"name": n, "shape": list(self.params[n].shape)} for n in names]
            + [{"name": f"accum/{n}", "shape": list(self.accum[n].shape)} for n in names],
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(destination, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for n in names:
                fh.write(np.ascontiguousarray(self.params[n], dtype="<f8").tobytes())
            for n in names:
                fh.write(np.ascontiguousarray(self.accum[n], dtype="<f8").tobytes())

    @classmethod
    def load(cls, source) -> "RecurrentModel":
        with open(source, "rb") as fh:
            magic = fh.read(len(_MAGIC))
            if magic != _MAGIC:
                raise ParseError(f"{source}: not a model file (bad magic)")
            (header_len,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(header_len).decode("utf-8"))
            if header.get("format_version") != 1:
                raise ParseError(f"{source}: unsupported model format version "
                                 f"{header.get('format_version')!r}")
            cfg = NetworkConfig(**header["config"])
            tensors = {}
            for spec in header["tensors"]:
                shape = tuple(spec["shape"])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(count * 8)
                if len(raw) != count * 8:
                    raise IntegrityError(f"{source}: truncated tensor {spec['name']!r}")
                tensors[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        expected = param_shapes(cfg)
        params, accum = {}, {}
        for name, shape in expected.items():
            if name not in tensors or tensors[name].shape != shape:
                raise IntegrityError(f"{source}: tensor {name!r} missing or mis-shaped")
            params[name] = tensors[name]
            acc = tensors.get(f"accum/{name}")
            accum[name] = acc if acc is not None else np.zeros(shape, dtype=np.float64)
        return cls(cfg, params, accum)


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax; rows sum to 1 within 1e-9."""
    shifted = scores - np.max(scores, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def forward_scores(model: RecurrentModel, h: np.ndarray) -> np.ndarray:
    """Dense output layer: scores over all action IDs for hidden state h."""
    return h @ model.params["w_out"] + model.params["b_out"]
