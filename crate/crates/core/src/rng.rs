//! Counter-based random variates.
//!
//! Every normal draw is a pure function of `(seed, path, stream, step)`, so
//! an ensemble is bit-identical no matter how path generation is scheduled
//! across threads. The block cipher is Philox-4x32-10 (Salmon et al., SC'11)
//! keyed by the 64-bit seed; uniforms are mapped to normals with Wichura's
//! PPND16 rational approximation of the inverse normal CDF.
//!
//! Stream layout used by the simulator: stream 0 carries the common noise,
//! stream `i + 1` carries agent `i`'s idiosyncratic noise. Auxiliary draws
//! (parameter sweeps, measure construction) use streams at or above
//! [`AUX_STREAM_BASE`] and therefore never collide with path noise.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;
const PHILOX_ROUNDS: u32 = 10;

/// First stream index reserved for non-path randomness.
pub const AUX_STREAM_BASE: u32 = 0x8000_0000;

#[inline(always)]
fn mul_hi_lo(a: u32, b: u32) -> (u32, u32) {
    let wide = u64::from(a) * u64::from(b);
    ((wide >> 32) as u32, wide as u32)
}

/// One Philox-4x32-10 block: 128 counter bits, 64 key bits, 128 output bits.
#[inline]
pub fn philox4x32(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..PHILOX_ROUNDS {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mul_hi_lo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mul_hi_lo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// 64 uniform bits addressed by `(seed, path, stream, step)`.
#[inline]
pub fn counter_u64(seed: u64, path: u64, stream: u32, step: u32) -> u64 {
    let ctr = [path as u32, (path >> 32) as u32, stream, step];
    let key = [seed as u32, (seed >> 32) as u32];
    let out = philox4x32(ctr, key);
    (u64::from(out[0]) << 32) | u64::from(out[1])
}

/// Map 64 random bits to the open interval (0, 1) with 53-bit resolution.
#[inline]
pub fn uniform_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal variate addressed by `(seed, path, stream, step)`.
#[inline]
pub fn normal(seed: u64, path: u64, stream: u32, step: u32) -> f64 {
    inverse_normal_cdf(uniform_open01(counter_u64(seed, path, stream, step)))
}

/// Inverse standard normal CDF (PPND16, AS 241).
///
/// Relative accuracy is about 1e-16 over (0, 1); the argument must lie
/// strictly inside the unit interval.
#[allow(clippy::excessive_precision)] // verbatim published coefficients
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument outside (0,1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Sequential stream over the counter primitive for auxiliary randomness
/// (randomized sweeps, measure draws). Deterministic in `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    stream: u32,
    counter: u64,
}

impl CounterRng {
    /// `stream` is offset by [`AUX_STREAM_BASE`] so auxiliary draws never
    /// collide with path-noise streams.
    pub fn new(seed: u64, stream: u32) -> Self {
        Self {
            seed,
            stream: AUX_STREAM_BASE.wrapping_add(stream),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter += 1;
        counter_u64(self.seed, c, self.stream, 0)
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform01(&mut self) -> f64 {
        uniform_open01(self.next_u64())
    }

    /// Uniform on `[lo, hi]`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn range_usize(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as usize
    }

    /// Standard normal variate.
    pub fn normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform01())
    }
}
