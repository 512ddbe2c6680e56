// Deterministic pseudo-randomness for weight init and sampling.
// splitmix64 over BigInt for keying, sfc32 for the fast stream.

const MASK64 = (1n << 64n) - 1n;

export function splitmix64(x: bigint): bigint {
  x = (x + 0x9e3779b97f4a7c15n) & MASK64;
  let z = x;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return z ^ (z >> 31n);
}

/** A small fast counter-based generator returning floats in [0, 1). */
export class Rand {
  private a: number;
  private b: number;
  private c: number;
  private d: number;

  constructor(...key: number[]) {
    let state = 0n;
    for (const k of key) {
      state = splitmix64(state ^ (BigInt(Math.floor(k)) & MASK64));
    }
    this.a = Number(state & 0xffffffffn) >>> 0;
    this.b = Number((state >> 32n) & 0xffffffffn) >>> 0;
    state = splitmix64(state);
    this.c = Number(state & 0xffffffffn) >>> 0;
    this.d = Number((state >> 32n) & 0xffffffffn) >>> 0;
    for (let i = 0; i < 8; i++) this.next();
  }

  /** sfc32 step. */
  next(): number {
    this.a >>>= 0; this.b >>>= 0; this.c >>>= 0; this.d >>>= 0;
    let t = (this.a + this.b) | 0;
    this.a = this.b ^ (this.b >>> 9);
    this.b = (this.c + (this.c << 3)) | 0;
    this.c = (this.c << 21) | (this.c >>> 11);
    this.d = (this.d + 1) | 0;
    t = (t + this.d) | 0;
    this.c = (this.c + t) | 0;
    return (t >>> 0) / 4294967296;
  }

  /** Standard normal via Box-Muller. */
  gauss(): number {
    let u = this.next();
    while (u === 0) u = this.next();
    const v = this.next();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  /** Gumbel(0, 1) draw for max-trick sampling. */
  gumbel(): number {
    let u = this.next();
    while (u === 0) u = this.next();
    return -Math.log(-Math.log(u));
  }
}
