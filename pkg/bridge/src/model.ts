// A miniature causal transformer language model with deterministic
// seeded weights.  Untrained, but a genuine autoregressive model: per
// request it computes next-token logits over the vocabulary from the
// context via embeddings, causal self-attention, and an MLP block.

import { Rand } from "./rng.js";

export interface ModelConfig {
  vocabSize: number;
  dim: number;
  layers: number;
  heads: number;
  context: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  vocabSize: 512,
  dim: 32,
  layers: 1,
  heads: 2,
  context: 64,
  seed: 1,
};

/** Parse a model identifier: "tiny" or "tiny:vocab[:dim[:layers]]". */
export function parseModelId(id: string, seed: number): ModelConfig {
  const parts = id.split(":");
  if (parts[0] !== "tiny") {
    throw new Error(
      `unknown model '${id}'; expected tiny[:vocab[:dim[:layers]]]`,
    );
  }
  const cfg = { ...DEFAULT_CONFIG, seed };
  if (parts.length > 1) cfg.vocabSize = parseInt(parts[1], 10);
  if (parts.length > 2) cfg.dim = parseInt(parts[2], 10);
  if (parts.length > 3) cfg.layers = parseInt(parts[3], 10);
  if (
    !Number.isFinite(cfg.vocabSize) || cfg.vocabSize < 2 ||
    !Number.isFinite(cfg.dim) || cfg.dim < cfg.heads ||
    !Number.isFinite(cfg.layers) || cfg.layers < 1 ||
    cfg.dim % cfg.heads !== 0
  ) {
    throw new Error(`invalid model spec '${id}'`);
  }
  return cfg;
}

function matrix(rand: Rand, rows: number, cols: number, scale: number): Float64Array {
  const m = new Float64Array(rows * cols);
  for (let i = 0; i < m.length; i++) m[i] = rand.gauss() * scale;
  return m;
}

interface Block {
  wq: Float64Array;
  wk: Float64Array;
  wv: Float64Array;
  wo: Float64Array;
  w1: Float64Array;
  w2: Float64Array;
}

function layerNorm(x: Float64Array, dim: number): Float64Array {
  const out = new Float64Array(dim);
  let mean = 0;
  for (let i = 0; i < dim; i++) mean += x[i];
  mean /= dim;
  let varsum = 0;
  for (let i = 0; i < dim; i++) varsum += (x[i] - mean) ** 2;
  const inv = 1 / Math.sqrt(varsum / dim + 1e-5);
  for (let i = 0; i < dim; i++) out[i] = (x[i] - mean) * inv;
  return out;
}

function matVec(w: Float64Array, x: Float64Array, rows: number, cols: number): Float64Array {
  const out = new Float64Array(rows);
  for (let r = 0; r < rows; r++) {
    let acc = 0;
    const base = r * cols;
    for (let c = 0; c < cols; c++) acc += w[base + c] * x[c];
    out[r] = acc;
  }
  return out;
}

function gelu(x: number): number {
  return 0.5 * x * (1 + Math.tanh(0.7978845608028654 * (x + 0.044715 * x ** 3)));
}

export class TinyCausalLM {
  readonly config: ModelConfig;
  private embed: Float64Array; // vocab x dim, also the output head (tied)
  private pos: Float64Array;   // context x dim
  private blocks: Block[];

  constructor(config: ModelConfig) {
    this.config = config;
    const { vocabSize, dim, layers, context, seed } = config;
    const rand = new Rand(0x7eb, seed);
    const s = 1 / Math.sqrt(dim);
    this.embed = matrix(rand, vocabSize, dim, s);
    this.pos = matrix(rand, context, dim, s);
    this.blocks = [];
    for (let l = 0; l < layers; l++) {
      this.blocks.push({
        wq: matrix(rand, dim, dim, s),
        wk: matrix(rand, dim, dim, s),
        wv: matrix(rand, dim, dim, s),
        wo: matrix(rand, dim, dim, s),
        w1: matrix(rand, 4 * dim, dim, s),
        w2: matrix(rand, dim, 4 * dim, s),
      });
    }
  }

  get vocabSize(): number {
    return this.config.vocabSize;
  }

  /** Next-token logits given the context (last `context` tokens used). */
  logits(context: number[]): Float64Array {
    const { vocabSize, dim, heads, context: window } = this.config;
    const toks = context.slice(-window);
    // Empty context: predict from a fixed start-of-text position vector.
    const len = Math.max(toks.length, 1);
    const h: Float64Array[] = [];
    for (let i = 0; i < len; i++) {
      const row = new Float64Array(dim);
      const tok = toks.length ? toks[i] : 0;
      if (tok < 0 || tok >= vocabSize) {
        throw new Error(`token ${tok} outside vocabulary of ${vocabSize}`);
      }
      const base = tok * dim;
      for (let d = 0; d < dim; d++) row[d] = this.embed[base + d] + this.pos[i * dim + d];
      h.push(row);
    }

    const headDim = dim / heads;
    const scale = 1 / Math.sqrt(headDim);
    for (const blk of this.blocks) {
      const qs = h.map((x) => matVec(blk.wq, layerNorm(x, dim), dim, dim));
      const ks = h.map((x) => matVec(blk.wk, layerNorm(x, dim), dim, dim));
      const vs = h.map((x) => matVec(blk.wv, layerNorm(x, dim), dim, dim));
      const attnOut: Float64Array[] = [];
      for (let i = 0; i < len; i++) {
        const mixed = new Float64Array(dim);
        for (let hd = 0; hd < heads; hd++) {
          const off = hd * headDim;
          const scores = new Float64Array(i + 1);
          let maxScore = -Infinity;
          for (let j = 0; j <= i; j++) {
            let s = 0;
            for (let d = 0; d < headDim; d++) s += qs[i][off + d] * ks[j][off + d];
            scores[j] = s * scale;
            if (scores[j] > maxScore) maxScore = scores[j];
          }
          let z = 0;
          for (let j = 0; j <= i; j++) {
            scores[j] = Math.exp(scores[j] - maxScore);
            z += scores[j];
          }
          for (let j = 0; j <= i; j++) {
            const w = scores[j] / z;
            for (let d = 0; d < headDim; d++) mixed[off + d] += w * vs[j][off + d];
          }
        }
        attnOut.push(matVec(blk.wo, mixed, dim, dim));
      }
      for (let i = 0; i < len; i++) {
        for (let d = 0; d < dim; d++) h[i][d] += attnOut[i][d];
        const pre = layerNorm(h[i], dim);
        const mid = matVec(blk.w1, pre, 4 * dim, dim);
        for (let d = 0; d < mid.length; d++) mid[d] = gelu(mid[d]);
        const back = matVec(blk.w2, mid, dim, 4 * dim);
        for (let d = 0; d < dim; d++) h[i][d] += back[d];
      }
    }

    const last = layerNorm(h[len - 1], dim);
    const logits = new Float64Array(vocabSize);
    for (let v = 0; v < vocabSize; v++) {
      let acc = 0;
      const base = v * dim;
      for (let d = 0; d < dim; d++) acc += this.embed[base + d] * last[d];
      logits[v] = acc;
    }
    return logits;
  }
}
