"""Encoder-decoder sequence model with modality-specific input embeddings.

Text tokens get word + absolute position embeddings. Each frame contributes a
scene vector (global features + frame sentinel embedding) and up to 36 region
vectors (projected features + a linear map of the normalized bbox + frame
sentinel + visual sentinel embeddings). Sentinel embeddings are the shared
vocabulary rows of the corresponding `<frame_token_i>`/`<visual_token_j>`
tokens: with the weight-tied output head, a region's identity tokens can be
copied from input to output content-based. The encoder attends over the
single concatenated stream; the decoder is causal with cross-attention.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..grammar.sentinels import FRAME_TOKEN_VOCAB_IDS, VISUAL_TOKEN_VOCAB_IDS
from . import autodiff as ad
from .autodiff import Tensor
from .config import EncodedBatch, ModelConfig

NEG_INF = -1e30

# index 0 (padding) maps to the pad token's embedding; padded slots are masked
_FRAME_ID_LUT = np.array((0,) + FRAME_TOKEN_VOCAB_IDS, dtype=np.int64)
_VISUAL_ID_LUT = np.array((0,) + VISUAL_TOKEN_VOCAB_IDS, dtype=np.int64)


class Seq2SeqModel:
    def __init__(self, config: ModelConfig, seed: int = 0):
        if config.vocab_size <= int(_VISUAL_ID_LUT.max()):
            raise ValueError(
                f"vocab_size {config.vocab_size} cannot hold the sentinel id range "
                f"(needs > {int(_VISUAL_ID_LUT.max())})"
            )
        self.config = config
        self.params: dict[str, Tensor] = {}
        self.step_counter = 0
        rng = np.random.default_rng(seed)
        self._init_params(rng)

    # -- parameters -----------------------------------------------------------

    def _init_params(self, rng: np.random.Generator) -> None:
        c = self.config
        d = c.d_model
        # embeddings at unit scale (1/sqrt(d)) so identity/content signals
        # survive the residual stream at init; projections start small
        emb_sigma = 1.0 / np.sqrt(d)

        def normal(name: str, *shape: int, sigma: float = 0.02) -> None:
            self.params[name] = ad.parameter(rng.normal(0.0, sigma, size=shape))

        def ln(name: str) -> None:
            self.params[f"{name}.g"] = ad.parameter(np.ones(d))
            self.params[f"{name}.b"] = ad.parameter(np.zeros(d))

        normal("tok_emb", c.vocab_size, d, sigma=emb_sigma)
        normal("pos_emb", max(c.max_text_positions, c.max_target_positions), d, sigma=emb_sigma)
        normal("region_proj", c.region_feature_dim, d)
        normal("scene_proj", c.scene_feature_dim, d)
        normal("spatial_proj", 4, d)

        def block(prefix: str, cross: bool) -> None:
            ln(f"{prefix}.ln1")
            for part in ("q", "k", "v", "o"):
                normal(f"{prefix}.self.{part}.w", d, d)
                self.params[f"{prefix}.self.{part}.b"] = ad.parameter(np.zeros(d))
            if cross:
                ln(f"{prefix}.ln_cross")
                for part in ("q", "k", "v", "o"):
                    normal(f"{prefix}.cross.{part}.w", d, d)
                    self.params[f"{prefix}.cross.{part}.b"] = ad.parameter(np.zeros(d))
            ln(f"{prefix}.ln2")
            normal(f"{prefix}.ff1.w", d, c.d_ff)
            self.params[f"{prefix}.ff1.b"] = ad.parameter(np.zeros(c.d_ff))
            normal(f"{prefix}.ff2.w", c.d_ff, d)
            self.params[f"{prefix}.ff2.b"] = ad.parameter(np.zeros(d))

        for i in range(c.enc_layers):
            block(f"enc.{i}", cross=False)
        ln("enc.final_ln")
        for i in range(c.dec_layers):
            block(f"dec.{i}", cross=True)
        ln("dec.final_ln")

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # -- embedding layers -------------------------------------------------------

    def embed_text(self, text_ids: np.ndarray) -> Tensor:
        """Word embedding plus absolute positional embedding, per token."""
        if text_ids.shape[-1] > self.config.max_text_positions:
            raise ValueError(f"text length {text_ids.shape[-1]} exceeds max positions")
        positions = np.arange(text_ids.shape[-1])
        return ad.add(ad.gather(self.params["tok_emb"], text_ids),
                      ad.gather(self.params["pos_emb"], positions))

    def embed_frames(
        self,
        scene_feats: np.ndarray,
        scene_frames: np.ndarray,
        region_feats: np.ndarray,
        region_bbox: np.ndarray,
        region_frames: np.ndarray,
        region_tokens: np.ndarray,
        region_tags: Optional[np.ndarray] = None,
    ) -> tuple[Tensor, Tensor]:
        """Scene and region vectors.

        region = project(features) + spatial(bbox) + frame sentinel + visual
        sentinel (+ the mean embedding of the words naming the region, when
        tags are given); scene = project(features) + frame sentinel. Sentinel
        and tag embeddings are shared vocabulary rows, so text/region content
        matching and identity copying live in one space. Projections are
        bias-free.
        """
        if int(region_tokens.max(initial=0)) > self.config.max_visual_tokens:
            raise ValueError("visual token id outside [1, 36]")
        if int(region_frames.max(initial=0)) > self.config.max_frames:
            raise ValueError(f"frame index outside [1, {self.config.max_frames}]")
        if region_bbox.size and (region_bbox.min() < 0.0 or region_bbox.max() > 1.0):
            raise ValueError("bbox must be normalized")
        tok = self.params["tok_emb"]
        scene = ad.add(
            ad.matmul(ad.constant(scene_feats), self.params["scene_proj"]),
            ad.gather(tok, _FRAME_ID_LUT[scene_frames]),
        )
        region = ad.add(
            ad.add(
                ad.matmul(ad.constant(region_feats), self.params["region_proj"]),
                ad.matmul(ad.constant(region_bbox), self.params["spatial_proj"]),
            ),
            ad.add(
                ad.gather(tok, _FRAME_ID_LUT[region_frames]),
                ad.gather(tok, _VISUAL_ID_LUT[region_tokens]),
            ),
        )
        if region_tags is not None and region_tags.size:
            mask = (region_tags > 0).astype(np.float64)
            counts = np.maximum(mask.sum(axis=-1, keepdims=True), 1.0)
            weights = (mask / counts)[..., None]
            tag_mean = ad.sum_axis(ad.mul(ad.gather(tok, region_tags), ad.constant(weights)), 2)
            region = ad.add(region, tag_mean)
        return scene, region

    # -- transformer blocks ---------------------------------------------------

    def _linear(self, x: Tensor, name: str) -> Tensor:
        return ad.add(ad.matmul(x, self.params[f"{name}.w"]), self.params[f"{name}.b"])

    def _attention(
        self,
        prefix: str,
        x_q: Tensor,
        x_kv: Tensor,
        mask: np.ndarray,
        rng: Optional[np.random.Generator],
    ) -> Tensor:
        c = self.config
        b, s_q = x_q.shape[0], x_q.shape[1]
        s_kv = x_kv.shape[1]
        dh = c.d_model // c.heads

        def split_heads(t: Tensor, s: int) -> Tensor:
            return ad.transpose(ad.reshape(t, (b, s, c.heads, dh)), 1, 2)

        q = split_heads(self._linear(x_q, f"{prefix}.q"), s_q)
        k = split_heads(self._linear(x_kv, f"{prefix}.k"), s_kv)
        v = split_heads(self._linear(x_kv, f"{prefix}.v"), s_kv)
        scores = ad.scale(ad.matmul(q, ad.transpose(k, 2, 3)), 1.0 / np.sqrt(dh))
        scores = ad.add(scores, ad.constant(mask))
        probs = ad.dropout(ad.softmax(scores), self.config.dropout, rng)
        ctx = ad.reshape(ad.transpose(ad.matmul(probs, v), 1, 2), (b, s_q, c.d_model))
        return self._linear(ctx, f"{prefix}.o")

    def _ff(self, prefix: str, x: Tensor) -> Tensor:
        h = ad.gelu(ad.add(ad.matmul(x, self.params[f"{prefix}.ff1.w"]), self.params[f"{prefix}.ff1.b"]))
        return ad.add(ad.matmul(h, self.params[f"{prefix}.ff2.w"]), self.params[f"{prefix}.ff2.b"])

    def _ln(self, prefix: str, x: Tensor) -> Tensor:
        return ad.layer_norm(x, self.params[f"{prefix}.g"], self.params[f"{prefix}.b"])

    # -- encoder / decoder ------------------------------------------------------

    def encode(self, batch: EncodedBatch, rng: Optional[np.random.Generator] = None) -> tuple[Tensor, np.ndarray]:
        text = self.embed_text(batch.text_ids)
        scene, region = self.embed_frames(
            batch.scene_feats, batch.scene_frames, batch.region_feats,
            batch.region_bbox, batch.region_frames, batch.region_tokens,
            batch.region_tags,
        )
        x = ad.concat([text, scene, region], axis=1)
        x = ad.dropout(x, self.config.dropout, rng)
        scene_mask = (batch.scene_frames > 0).astype(np.float64)
        region_mask = (batch.region_tokens > 0).astype(np.float64)
        enc_mask = np.concatenate([batch.text_mask, scene_mask, region_mask], axis=1)
        attn_mask = (1.0 - enc_mask)[:, None, None, :] * NEG_INF
        for i in range(self.config.enc_layers):
            p = f"enc.{i}"
            normed = self._ln(f"{p}.ln1", x)
            attn = self._attention(f"{p}.self", normed, normed, attn_mask, rng)
            x = ad.add(x, ad.dropout(attn, self.config.dropout, rng))
            ff = self._ff(p, self._ln(f"{p}.ln2", x))
            x = ad.add(x, ad.dropout(ff, self.config.dropout, rng))
        return self._ln("enc.final_ln", x), enc_mask

    def decode(
        self,
        enc_out: Tensor,
        enc_mask: np.ndarray,
        dec_in: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        if dec_in.shape[-1] > self.config.max_target_positions:
            raise ValueError(f"target length {dec_in.shape[-1]} exceeds max positions")
        t = dec_in.shape[1]
        positions = np.arange(t)
        x = ad.add(ad.gather(self.params["tok_emb"], dec_in), ad.gather(self.params["pos_emb"], positions))
        x = ad.dropout(x, self.config.dropout, rng)
        causal = np.triu(np.full((t, t), NEG_INF), k=1)[None, None, :, :]
        cross_mask = (1.0 - enc_mask)[:, None, None, :] * NEG_INF
        for i in range(self.config.dec_layers):
            p = f"dec.{i}"
            normed = self._ln(f"{p}.ln1", x)
            x = ad.add(x, ad.dropout(self._attention(f"{p}.self", normed, normed, causal, rng),
                                     self.config.dropout, rng))
            x = ad.add(x, ad.dropout(
                self._attention(f"{p}.cross", self._ln(f"{p}.ln_cross", x), enc_out, cross_mask, rng),
                self.config.dropout, rng))
            x = ad.add(x, ad.dropout(self._ff(p, self._ln(f"{p}.ln2", x)), self.config.dropout, rng))
        x = self._ln("dec.final_ln", x)
        return ad.matmul(x, ad.transpose(self.params["tok_emb"], 0, 1))

    def forward(self, batch: EncodedBatch, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Logits over the vocabulary for every target position: (B, T, V)."""
        enc_out, enc_mask = self.encode(batch, rng)
        return self.decode(enc_out, enc_mask, batch.dec_in, rng)

    def loss(self, batch: EncodedBatch, smoothing: float = 0.0,
             rng: Optional[np.random.Generator] = None) -> Tensor:
        logits = self.forward(batch, rng)
        return sequence_loss(logits, batch.targets, batch.target_mask, smoothing)


def sequence_loss(logits: Tensor, targets: np.ndarray, target_mask: np.ndarray,
                  smoothing: float = 0.0) -> Tensor:
    """Cross-entropy averaged per sample over its own target length first,
    then over the batch, so long targets do not dominate mixed batches.
    Padding positions contribute exactly zero."""
    lengths = target_mask.sum(axis=1)
    if np.any(lengths == 0):
        raise ValueError("zero-length target sequence")
    weights = target_mask / (lengths[:, None] * target_mask.shape[0])
    return ad.cross_entropy(logits, targets, weights, smoothing)
