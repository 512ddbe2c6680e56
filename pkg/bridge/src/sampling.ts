// Biased token sampling from logits: add delta to the bias set and
// sample from the softmax at the given temperature.  An infinite delta
// restricts the support to the bias set.  Sampling uses the Gumbel-max
// identity so a single pass over the candidates suffices.

import { Rand } from "./rng.js";

export function sampleToken(
  logits: Float64Array,
  biasIds: number[],
  delta: number,
  temperature: number,
  rand: Rand,
): number {
  if (!(temperature > 0)) throw new Error("temperature must be positive");
  if (delta === Infinity) {
    if (biasIds.length === 0) {
      throw new Error("cannot force sampling into an empty bias set");
    }
    let best = -Infinity;
    let bestTok = biasIds[0];
    for (const id of biasIds) {
      const score = logits[id] / temperature + rand.gumbel();
      if (score > best) {
        best = score;
        bestTok = id;
      }
    }
    return bestTok;
  }
  const bias = new Set(biasIds);
  let best = -Infinity;
  let bestTok = 0;
  for (let id = 0; id < logits.length; id++) {
    const boosted = logits[id] + (bias.has(id) ? delta : 0);
    const score = boosted / temperature + rand.gumbel();
    if (score > best) {
      best = score;
      bestTok = id;
    }
  }
  return bestTok;
}
