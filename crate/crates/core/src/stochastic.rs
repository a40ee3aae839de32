//! Parametric input distributions and reproducible random streams.
//!
//! Every draw is addressed by `(seed, trial, variable, day)`. The address
//! selects a ChaCha8 key and stream, so a sample never depends on which
//! other samples were drawn before it or on which thread drew them.
//! Normal variates use an inverse-CDF transform built on `libm`, which
//! keeps outputs identical across platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StochasticError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
}

/// A resolved, validated distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal { mean: f64, stdev: f64 },
    Uniform { min: f64, max: f64 },
    Point(f64),
}

impl Distribution {
    pub fn normal(mean: f64, stdev: f64) -> Result<Self, StochasticError> {
        if !mean.is_finite() || !stdev.is_finite() || stdev < 0.0 {
            return Err(StochasticError::InvalidParameter(format!(
                "normal(mean={mean}, stdev={stdev})"
            )));
        }
        Ok(Self::Normal { mean, stdev })
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self, StochasticError> {
        if !min.is_finite() || !max.is_finite() || min > max {
            return Err(StochasticError::InvalidParameter(format!(
                "uniform(min={min}, max={max})"
            )));
        }
        Ok(Self::Uniform { min, max })
    }

    pub fn point(value: f64) -> Result<Self, StochasticError> {
        if !value.is_finite() {
            return Err(StochasticError::InvalidParameter(format!("point({value})")));
        }
        Ok(Self::Point(value))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Normal { mean, .. } => mean,
            Distribution::Uniform { min, max } => 0.5 * (min + max),
            Distribution::Point(v) => v,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            Distribution::Normal { stdev, .. } => stdev == 0.0,
            Distribution::Uniform { min, max } => min == max,
            Distribution::Point(_) => true,
        }
    }

    fn validate(self) -> Result<Self, StochasticError> {
        match self {
            Distribution::Normal { mean, stdev } => Self::normal(mean, stdev),
            Distribution::Uniform { min, max } => Self::uniform(min, max),
            Distribution::Point(v) => Self::point(v),
        }
    }
}

/// A distribution literal as written in a simulation config. Growth
/// normals resolve to a different [`Distribution`] per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal { mean: f64, stdev: f64 },
    Uniform { min: f64, max: f64 },
    GrowthNormal {
        initial: f64,
        daily_rate: f64,
        stdev: f64,
    },
    Point(f64),
}

impl DistributionSpec {
    /// The distribution in effect on `day` (0-based).
    pub fn resolve(&self, day: usize) -> Result<Distribution, StochasticError> {
        match *self {
            DistributionSpec::Normal { mean, stdev } => Distribution::normal(mean, stdev),
            DistributionSpec::Uniform { min, max } => Distribution::uniform(min, max),
            DistributionSpec::Point(v) => Distribution::point(v),
            DistributionSpec::GrowthNormal {
                initial,
                daily_rate,
                stdev,
            } => growth_normal(initial, daily_rate, day, stdev),
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Normal { mean, stdev } => Self::Normal { mean, stdev },
            Distribution::Uniform { min, max } => Self::Uniform { min, max },
            Distribution::Point(v) => Self::Point(v),
        }
    }
}

/// `Normal(initial * (1 + daily_rate)^day, stdev)`.
pub fn growth_normal(
    initial: f64,
    daily_rate: f64,
    day: usize,
    stdev: f64,
) -> Result<Distribution, StochasticError> {
    if !(initial > 0.0) || !(daily_rate > -1.0) || !initial.is_finite() || !daily_rate.is_finite() {
        return Err(StochasticError::InvalidParameter(format!(
            "growth_normal(initial={initial}, daily_rate={daily_rate})"
        )));
    }
    let mean = initial * libm::pow(1.0 + daily_rate, day as f64);
    Distribution::normal(mean, stdev)
}

/// FNV-1a hash used to key a variable's streams by name, so that adding or
/// reordering bindings never changes another variable's draws.
pub fn variable_key(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub trial: u32,
    pub variable: u64,
    pub day: u32,
}

impl RngStream {
    pub fn new(seed: u64, trial: u32, variable: u64, day: u32) -> Self {
        Self {
            seed,
            trial,
            variable,
            day,
        }
    }

    /// The generator for this address, positioned at its first word.
    pub fn generator(&self) -> StreamRng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.variable.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream((u64::from(self.trial) << 32) | u64::from(self.day));
        StreamRng(rng)
    }
}

/// Sequential draws within one stream.
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Draws one value of `dist` from the first word of `stream`.
pub fn sample(dist: &Distribution, stream: &RngStream) -> f64 {
    sample_with(dist, &mut stream.generator())
}

pub fn sample_with(dist: &Distribution, rng: &mut StreamRng) -> f64 {
    match *dist {
        Distribution::Point(v) => v,
        Distribution::Normal { mean, stdev } => {
            let z = inverse_normal_cdf(rng.next_open01());
            if stdev == 0.0 {
                mean
            } else {
                mean + stdev * z
            }
        }
        Distribution::Uniform { min, max } => {
            let u = rng.next_open01();
            (min + (max - min) * u).clamp(min, max)
        }
    }
}

/// Validates a distribution deserialized from untrusted input.
pub fn checked(dist: Distribution) -> Result<Distribution, StochasticError> {
    dist.validate()
}

/// Standard normal quantile (Wichura's AS 241, ~1e-16 relative accuracy).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
                + 6.726_577_092_700_870_1e4)
                * r
                + 4.592_195_393_154_987_1e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
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
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let z = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
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
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_7e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
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
                + 1.0)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}
