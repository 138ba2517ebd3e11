/**
 * Deterministic seeded PRNG for the --fake embedding mode.
 *
 * splitmix64 over BigInt state: identical output on every platform, no
 * dependence on engine-specific Math.random. Values are mapped to
 * float64 uniforms in [0, 1) using the top 53 bits.
 */

const MASK64 = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK64;
  }

  nextUint64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform float64 in [0, 1). */
  nextFloat(): number {
    return Number(this.nextUint64() >> 11n) / 2 ** 53;
  }

  /** Uniform float64 in [-1, 1). */
  nextSymmetric(): number {
    return 2 * this.nextFloat() - 1;
  }
}

export function fakeEmbedding(dim: number, seed: number): number[] {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`--dim must be a positive integer, got ${dim}`);
  }
  const rng = new SplitMix64(seed);
  return Array.from({ length: dim }, () => rng.nextSymmetric());
}
