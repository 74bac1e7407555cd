/** Deterministic weight generation, independent of library RNG internals. */

export type Rng = () => number;

/** mulberry32: tiny seeded PRNG over [0, 1). */
export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Uniform values in (-limit, limit), the usual fan-based conv/dense init. */
export function uniformWeights(rng: Rng, count: number, fanIn: number, fanOut: number): Float32Array {
  const limit = Math.sqrt(6 / (fanIn + fanOut));
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = (rng() * 2 - 1) * limit;
  }
  return out;
}
