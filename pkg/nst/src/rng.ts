/**
 * Deterministic splitmix64 stream (BigInt), matching the primary toolkit's
 * generator so seeded weights and draws are reproducible across languages.
 */

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

function mix64(z: bigint): bigint {
  z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
  return z ^ (z >> 31n);
}

export function deriveSeed(seed: number | bigint, ...tags: number[]): bigint {
  let s = BigInt(seed) & MASK64;
  for (const t of tags) {
    s = mix64((s + GAMMA + (BigInt(t) & MASK64)) & MASK64);
  }
  return s;
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    return mix64(this.state);
  }

  /** Uniform in [0, 1) with 53-bit resolution. */
  uniform(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  uniformArray(n: number): Float32Array {
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) out[i] = this.uniform();
    return out;
  }
}
