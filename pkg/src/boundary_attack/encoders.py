"""Text encoders: embedded token sequences -> fixed-size text vectors.

Three encoder families share one interface:

  * ``BagEncoder``     -- mean of the (masked) token embeddings; parameter-free,
                          mainly for small exactly-checkable setups.
  * ``ConvEncoder``    -- 1-d convolutions of several widths over the embedding
                          sequence, ReLU, global max pool per filter, concat.
  * ``LstmEncoder``    -- single-layer LSTM, final hidden state.

``forward(emb, mask, lengths)`` takes an already zero-masked embedding batch
``(B, L, D)`` and returns ``(v, cache)`` with ``v`` of shape ``(B, H)``;
``backward(dv, cache)`` returns ``(demb, grads)`` where ``grads`` is keyed like
``params``. Gradients at padded positions are meaningless and must be masked
by the caller before scatter-add into the embedding matrix. All arithmetic is
float64.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class BagEncoder:
    """Mean of masked embeddings; output width equals the embedding dim."""

    def __init__(self, emb_dim: int):
        self.hidden = emb_dim
        self.params: dict[str, np.ndarray] = {}

    def forward(self, emb, mask, lengths):
        counts = np.maximum(mask.sum(axis=1), 1.0)  # (B,)
        v = emb.sum(axis=1) / counts[:, None]
        return v, (emb.shape, counts)

    def backward(self, dv, cache):
        (B, L, D), counts = cache
        demb = np.repeat((dv / counts[:, None])[:, None, :], L, axis=1)
        return demb, {}


class ConvEncoder:
    """Sentence convolutions: widths w, per-width filter banks, ReLU, max pool.

    Output width is the total filter count. A window is pooled only if it lies
    entirely inside the example's true length; examples shorter than a width
    keep their first (zero-padded) window so pooling is never empty.
    """

    def __init__(self, emb_dim, widths=(3, 4, 5), filters=(43, 43, 42), rng=None):
        if len(widths) != len(filters):
            raise ValueError("widths and filters must align")
        rng = rng or np.random.default_rng(0)
        self.emb_dim = emb_dim
        self.widths = tuple(widths)
        self.filters = tuple(filters)
        self.hidden = int(sum(filters))
        self.params = {}
        for w, f in zip(widths, filters):
            limit = np.sqrt(6.0 / (w * emb_dim + f))
            self.params[f"kernel_{w}"] = rng.uniform(-limit, limit, size=(w * emb_dim, f))
            self.params[f"bias_{w}"] = np.zeros(f)

    def forward(self, emb, mask, lengths):
        # each width-w kernel is applied as w per-offset (D -> F) projections
        # of the full contiguous embedding batch, summed with shifts; this
        # keeps every large matmul a single contiguous GEMM
        B, L, D = emb.shape
        if L < max(self.widths):
            raise ValueError(f"batch length {L} below max filter width {max(self.widths)}")
        flat = emb.reshape(B * L, D)
        pooled, cache = [], []
        positions = np.arange(L)
        for w, f in zip(self.widths, self.filters):
            n = L - w + 1
            kernel = self.params[f"kernel_{w}"].reshape(w, D, f)
            pre = np.tile(self.params[f"bias_{w}"], (B, n, 1))
            for j in range(w):
                pre += (flat @ kernel[j]).reshape(B, L, f)[:, j : j + n]
            act = np.maximum(pre, 0.0)
            valid = positions[None, :n] + w <= lengths[:, None]  # (B, n)
            valid[:, 0] |= lengths < w                        # degenerate short example
            scored = np.where(valid[:, :, None], act, -np.inf)
            arg = scored.argmax(axis=1)                       # (B, F)
            pooled.append(np.take_along_axis(scored, arg[:, None, :], axis=1)[:, 0, :])
            cache.append((pre, arg))
        return np.concatenate(pooled, axis=1), (emb, cache)

    def backward(self, dv, cache):
        emb, per_width = cache
        B, L, D = emb.shape
        flat = emb.reshape(B * L, D)
        demb = np.zeros((B, L, D))
        grads = {}
        offset = 0
        for w, f, (pre, arg) in zip(self.widths, self.filters, per_width):
            dpool = dv[:, offset : offset + f]
            offset += f
            n = L - w + 1
            dact = np.zeros((B, n, f))
            np.put_along_axis(dact, arg[:, None, :], dpool[:, None, :], axis=1)
            dpre = dact * (pre > 0)
            kernel = self.params[f"kernel_{w}"].reshape(w, D, f)
            dkernel = np.empty((w, D, f))
            dfull = np.zeros((B, L, f))
            for j in range(w):
                dfull[:] = 0.0
                dfull[:, j : j + n] = dpre
                dkernel[j] = flat.T @ dfull.reshape(B * L, f)
                demb[:, j : j + n, :] += dpre @ kernel[j].T
            grads[f"kernel_{w}"] = dkernel.reshape(w * D, f)
            grads[f"bias_{w}"] = dpre.sum(axis=(0, 1))
        return demb, grads


class LstmEncoder:
    """Single-layer LSTM; the text vector is the final (masked) hidden state."""

    def __init__(self, emb_dim, hidden=128, rng=None):
        rng = rng or np.random.default_rng(0)
        self.emb_dim = emb_dim
        self.hidden = hidden
        scale = 1.0 / np.sqrt(hidden)
        self.params = {
            "w_x": rng.uniform(-scale, scale, size=(emb_dim, 4 * hidden)),
            "w_h": rng.uniform(-scale, scale, size=(hidden, 4 * hidden)),
            "bias": np.zeros(4 * hidden),
        }
        self.params["bias"][hidden : 2 * hidden] = 1.0  # forget gate bias

    def forward(self, emb, mask, lengths):
        B, L, D = emb.shape
        H = self.hidden
        w_x, w_h, bias = self.params["w_x"], self.params["w_h"], self.params["bias"]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        steps = []
        xz_all = emb.reshape(B * L, D) @ w_x
        xz_all = xz_all.reshape(B, L, 4 * H)
        for t in range(L):
            z = xz_all[:, t, :] + h @ w_h + bias
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H : 2 * H])
            g = np.tanh(z[:, 2 * H : 3 * H])
            o = _sigmoid(z[:, 3 * H :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            m = mask[:, t][:, None]
            steps.append((h, c, i, f, g, o, tanh_c, m))
            h = m * h_new + (1.0 - m) * h
            c = m * c_new + (1.0 - m) * c
        return h, (emb, steps)

    def backward(self, dv, cache):
        emb, steps = cache
        B, L, D = emb.shape
        H = self.hidden
        w_x, w_h = self.params["w_x"], self.params["w_h"]
        demb = np.zeros((B, L, D))
        d_wx = np.zeros_like(w_x)
        d_wh = np.zeros_like(w_h)
        d_bias = np.zeros(4 * H)
        dh = dv.copy()
        dc = np.zeros((B, H))
        for t in range(L - 1, -1, -1):
            h_prev, c_prev, i, f, g, o, tanh_c, m = steps[t]
            dh_new = dh * m
            dc_new = dc * m
            dh_skip = dh * (1.0 - m)
            dc_skip = dc * (1.0 - m)
            do = dh_new * tanh_c
            dc_new = dc_new + dh_new * o * (1.0 - tanh_c**2)
            df = dc_new * c_prev
            di = dc_new * g
            dg = dc_new * i
            dc_prev = dc_new * f
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g**2),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            x = emb[:, t, :]
            d_wx += x.T @ dz
            d_wh += h_prev.T @ dz
            d_bias += dz.sum(axis=0)
            demb[:, t, :] = dz @ w_x.T
            dh = dz @ w_h.T + dh_skip
            dc = dc_prev + dc_skip
        return demb, {"w_x": d_wx, "w_h": d_wh, "bias": d_bias}


ENCODER_KINDS = ("cnn", "rnn", "bag")


def build_encoder(kind, emb_dim, hidden=128, rng=None, widths=(3, 4, 5), filters=None):
    if kind == "bag":
        return BagEncoder(emb_dim)
    if kind == "cnn":
        if filters is None:
            base, rem = divmod(hidden, len(widths))
            filters = tuple(base + (1 if i < rem else 0) for i in range(len(widths)))
        return ConvEncoder(emb_dim, widths=widths, filters=filters, rng=rng)
    if kind == "rnn":
        return LstmEncoder(emb_dim, hidden=hidden, rng=rng)
    raise ValueError(f"unknown encoder kind {kind!r}; expected one of {ENCODER_KINDS}")
