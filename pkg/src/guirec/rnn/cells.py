"""GRU and LSTM cell steps with hand-derived backward passes.

Shapes follow the right-multiply convention: a batch of embeddings
``e`` is (B, H), gate weights are (H, H), biases (H,).

GRU (update/reset gating):

    z = sigmoid(e W_z + h U_z + b_z)
    r = sigmoid(e W_r + h U_r + b_r)
    c = tanh(e W_c + (r * h) U_c + b_c)
    h' = (1 - z) * h + z * c

LSTM (four gates, cell state carried alongside h):

    i = sigmoid(e W_i + h U_i + b_i)
    f = sigmoid(e W_f + h U_f + b_f)
    o = sigmoid(e W_o + h U_o + b_o)
    g = tanh(e W_g + h U_g + b_g)
    c' = f * c + i * g
    h' = o * tanh(c')

The backward functions return gradients for every gate parameter, the
embedded input, and the incoming state, which is what truncated
backpropagation through time needs at each unrolled step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class CellState:
    """Recurrent state for a batch of lanes. ``c`` is None for GRU."""

    h: np.ndarray
    c: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, cell_kind: str, batch: int, hidden: int) -> "CellState":
        h = np.zeros((batch, hidden), dtype=np.float64)
        c = np.zeros((batch, hidden), dtype=np.float64) if cell_kind == "lstm" else None
        return cls(h=h, c=c)

    def copy(self) -> "CellState":
        return CellState(h=self.h.copy(), c=None if self.c is None else self.c.copy())

    def reset_lanes(self, mask: np.ndarray) -> None:
        self.h[mask] = 0.0
        if self.c is not None:
            self.c[mask] = 0.0


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class StepCache:
    """Everything the backward pass needs about one forward step."""

    x: np.ndarray            # (B,) 0-based action indices
    e: np.ndarray            # (B, H) embedded inputs
    h_prev: np.ndarray
    c_prev: Optional[np.ndarray]
    gates: dict[str, np.ndarray]
    reset_mask: Optional[np.ndarray]  # lanes whose state was zeroed before this step


def cell_forward(params: dict[str, np.ndarray], cell_kind: str, x: np.ndarray,
                 state: CellState, reset_mask: Optional[np.ndarray] = None
                 ) -> tuple[CellState, StepCache]:
    """One recurrent step for a batch of 0-based action indices."""
    e = params["embed"][x]
    h_prev = state.h
    if cell_kind == "gru":
        z = _sigmoid(e @ params["w_update"] + h_prev @ params["u_update"] + params["b_update"])
        r = _sigmoid(e @ params["w_reset"] + h_prev @ params["u_reset"] + params["b_reset"])
        rh = r * h_prev
        c = np.tanh(e @ params["w_cand"] + rh @ params["u_cand"] + params["b_cand"])
        h_new = (1.0 - z) * h_prev + z * c
        cache = StepCache(x=x, e=e, h_prev=h_prev, c_prev=None,
                          gates={"z": z, "r": r, "rh": rh, "c": c}, reset_mask=reset_mask)
        return CellState(h=h_new, c=None), cache

    c_prev = state.c
    i = _sigmoid(e @ params["w_input"] + h_prev @ params["u_input"] + params["b_input"])
    f = _sigmoid(e @ params["w_forget"] + h_prev @ params["u_forget"] + params["b_forget"])
    o = _sigmoid(e @ params["w_outgate"] + h_prev @ params["u_outgate"] + params["b_outgate"])
    g = np.tanh(e @ params["w_cand"] + h_prev @ params["u_cand"] + params["b_cand"])
    c_new = f * c_prev + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    cache = StepCache(x=x, e=e, h_prev=h_prev, c_prev=c_prev,
                      gates={"i": i, "f": f, "o": o, "g": g, "tanh_c": tanh_c},
                      reset_mask=reset_mask)
    return CellState(h=h_new, c=c_new), cache


def cell_backward(params: dict[str, np.ndarray], cell_kind: str, cache: StepCache,
                  d_h: np.ndarray, d_c: Optional[np.ndarray],
                  grads: dict[str, np.ndarray]
                  ) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Backward through one cached step.

    Accumulates gate-parameter gradients into ``grads`` in place and
    returns (d_embedded_input, d_h_prev, d_c_prev).  Lanes reset at this
    step stop propagating: their incoming state was a fresh zero constant.
    """
    e, h_prev = cache.e, cache.h_prev

    if cell_kind == "gru":
        z, r, rh, c = (cache.gates[k] for k in ("z", "r", "rh", "c"))
        d_c_gate = d_h * z
        d_z = d_h * (c - h_prev)
        d_h_prev = d_h * (1.0 - z)

        d_ac = d_c_gate * (1.0 - c * c)
        grads["w_cand"] += e.T @ d_ac
        grads["u_cand"] += rh.T @ d_ac
        grads["b_cand"] += d_ac.sum(axis=0)
        d_rh = d_ac @ params["u_cand"].T
        d_e = d_ac @ params["w_cand"].T
        d_r = d_rh * h_prev
        d_h_prev = d_h_prev + d_rh * r

        d_az = d_z * z * (1.0 - z)
        grads["w_update"] += e.T @ d_az
        grads["u_update"] += h_prev.T @ d_az
        grads["b_update"] += d_az.sum(axis=0)
        d_e += d_az @ params["w_update"].T
        d_h_prev += d_az @ params["u_update"].T

        d_ar = d_r * r * (1.0 - r)
        grads["w_reset"] += e.T @ d_ar
        grads["u_reset"] += h_prev.T @ d_ar
        grads["b_reset"] += d_ar.sum(axis=0)
        d_e += d_ar @ params["w_reset"].T
        d_h_prev += d_ar @ params["u_reset"].T

        d_c_prev = None
    else:
        i, f, o, g, tanh_c = (cache.gates[k] for k in ("i", "f", "o", "g", "tanh_c"))
        c_prev = cache.c_prev
        d_o = d_h * tanh_c
        d_c_total = d_h * o * (1.0 - tanh_c * tanh_c)
        if d_c is not None:
            d_c_total = d_c_total + d_c
        d_f = d_c_total * c_prev
        d_i = d_c_total * g
        d_g = d_c_total * i
        d_c_prev = d_c_total * f

        d_e = np.zeros_like(e)
        d_h_prev = np.zeros_like(h_prev)
        for gate, d_gate, act in (("input", d_i, i), ("forget", d_f, f),
                                  ("outgate", d_o, o)):
            d_a = d_gate * act * (1.0 - act)
            grads[f"w_{gate}"] += e.T @ d_a
            grads[f"u_{gate}"] += h_prev.T @ d_a
            grads[f"b_{gate}"] += d_a.sum(axis=0)
            d_e += d_a @ params[f"w_{gate}"].T
            d_h_prev += d_a @ params[f"u_{gate}"].T
        d_ag = d_g * (1.0 - g * g)
        grads["w_cand"] += e.T @ d_ag
        grads["u_cand"] += h_prev.T @ d_ag
        grads["b_cand"] += d_ag.sum(axis=0)
        d_e += d_ag @ params["w_cand"].T
        d_h_prev += d_ag @ params["u_cand"].T

    if cache.reset_mask is not None and cache.reset_mask.any():
        d_h_prev[cache.reset_mask] = 0.0
        if d_c_prev is not None:
            d_c_prev[cache.reset_mask] = 0.0
    return d_e, d_h_prev, d_c_prev
