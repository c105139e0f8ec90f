//! Multipath feedback channel through a surface of tunable elements.
//!
//! The end-to-end coefficient is `h = h_env + sum_i s(V_i) h_i`, where
//! `h_env` collects paths that miss the surface, `h_i` the paths through
//! element `i`, and `s(V)` the element response at bias voltage `V`.
//! Every random quantity is drawn from a seeded ChaCha8 stream, so a
//! channel is a pure function of `(seed, params)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cascade::{solve_stack, StackSpec};
use crate::controller::FeedbackOracle;
use crate::error::{Error, Result};
use crate::surface::ElementCircuit;

/// Per-element bias voltages, in element order.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub voltages: Vec<f64>,
}

impl SurfaceConfig {
    pub fn new(voltages: Vec<f64>) -> Self {
        Self { voltages }
    }

    pub fn uniform(elements: usize, voltage: f64) -> Self {
        Self {
            voltages: vec![voltage; elements],
        }
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }
}

/// Rectangular element grid; element `r * cols + c` sits at row `r`, column `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self { rows: 8, cols: 8 }
    }
}

impl ArrayGeometry {
    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// Response of one surface element as a function of bias voltage.
pub trait ElementResponse {
    fn response(&self, voltage: f64) -> Result<Complex64>;

    /// Response with no surface present.
    fn bare(&self) -> Result<Complex64>;
}

/// `s(V)` taken as the stack transmission coefficient with `Y_s = Y(V)`.
///
/// Every element shares the same response (infinite-surface approximation).
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResponse {
    pub stack: StackSpec,
    pub circuit: ElementCircuit,
    pub frequency: f64,
}

impl ElementResponse for CascadeResponse {
    fn response(&self, voltage: f64) -> Result<Complex64> {
        let y = self.circuit.admittance_at_voltage(voltage, self.frequency)?.value;
        Ok(solve_stack(&self.stack, y, self.frequency)?.t)
    }

    fn bare(&self) -> Result<Complex64> {
        Ok(solve_stack(&self.stack, Complex64::new(0.0, 0.0), self.frequency)?.t)
    }
}

/// Response looked up from a finite voltage table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableResponse {
    entries: Vec<(f64, Complex64)>,
    bare: Complex64,
}

impl TableResponse {
    pub fn new(entries: Vec<(f64, Complex64)>, bare: Complex64) -> Self {
        Self { entries, bare }
    }

    /// Evaluates `source` once per voltage.
    pub fn tabulate(source: &dyn ElementResponse, voltages: &[f64]) -> Result<Self> {
        let entries = voltages
            .iter()
            .map(|&v| Ok((v, source.response(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entries,
            bare: source.bare()?,
        })
    }

    pub fn entries(&self) -> &[(f64, Complex64)] {
        &self.entries
    }
}

impl ElementResponse for TableResponse {
    fn response(&self, voltage: f64) -> Result<Complex64> {
        self.entries
            .iter()
            .find(|(v, _)| *v == voltage)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::InvalidArgument(format!("no tabulated response at {voltage} V")))
    }

    fn bare(&self) -> Result<Complex64> {
        Ok(self.bare)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementPowerProfile {
    /// Every element path has this variance.
    Uniform(f64),
    /// One variance per element.
    PerElement(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub elements: usize,
    /// Variance of `h_env`; zero models an absorber-lined environment.
    pub env_power: f64,
    pub element_power: ElementPowerProfile,
    /// Standard deviation (as a fraction) of per-element jitter applied to
    /// the phase the response adds relative to the bare surface.
    pub phase_jitter: f64,
}

/// Default variance of the environment path relative to the summed element paths.
pub const DEFAULT_ENV_POWER: f64 = 0.1;

impl ChannelParams {
    /// Equal element variances summing to one, environment at [`DEFAULT_ENV_POWER`].
    pub fn with_elements(elements: usize) -> Self {
        Self {
            elements,
            env_power: DEFAULT_ENV_POWER,
            element_power: ElementPowerProfile::Uniform(1.0 / elements.max(1) as f64),
            phase_jitter: 0.0,
        }
    }

    fn element_variance(&self, i: usize) -> f64 {
        match &self.element_power {
            ElementPowerProfile::Uniform(v) => *v,
            ElementPowerProfile::PerElement(v) => v[i],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.elements == 0 {
            return Err(Error::InvalidArgument("channel needs at least one element".into()));
        }
        if !(self.env_power.is_finite() && self.env_power >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "env power must be >= 0, got {}",
                self.env_power
            )));
        }
        if !(self.phase_jitter.is_finite() && self.phase_jitter >= 0.0) {
            return Err(Error::InvalidArgument("phase jitter must be >= 0".into()));
        }
        let bad_variance = |v: f64| !(v.is_finite() && v >= 0.0);
        match &self.element_power {
            ElementPowerProfile::Uniform(v) if bad_variance(*v) => {
                Err(Error::InvalidArgument(format!("element power must be >= 0, got {v}")))
            }
            ElementPowerProfile::PerElement(v) if v.len() != self.elements => Err(Error::InvalidArgument(format!(
                "element power profile has {} entries for {} elements",
                v.len(),
                self.elements
            ))),
            ElementPowerProfile::PerElement(v) if v.iter().any(|x| bad_variance(*x)) => {
                Err(Error::InvalidArgument("element powers must be >= 0".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathChannel {
    pub h_env: Complex64,
    pub h_elements: Vec<Complex64>,
    pub seed: u64,
    /// Per-element phase-jitter multipliers; all zero when jitter is off.
    pub jitter: Vec<f64>,
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

pub fn sample_channel(seed: u64, params: &ChannelParams) -> Result<MultipathChannel> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_env = complex_gaussian(&mut rng, params.env_power);
    let h_elements = (0..params.elements)
        .map(|i| complex_gaussian(&mut rng, params.element_variance(i)))
        .collect();
    let jitter = (0..params.elements)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * params.phase_jitter
        })
        .collect();
    Ok(MultipathChannel {
        h_env,
        h_elements,
        seed,
        jitter,
    })
}

impl MultipathChannel {
    pub fn elements(&self) -> usize {
        self.h_elements.len()
    }

    /// Uplink of a reciprocal link: identical coefficients.
    pub fn reciprocal(&self) -> Self {
        self.clone()
    }

    /// `path,re,im` rows, environment path first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,re,im\n");
        let _ = writeln!(out, "env,{:e},{:e}", self.h_env.re, self.h_env.im);
        for (i, h) in self.h_elements.iter().enumerate() {
            let _ = writeln!(out, "{i},{:e},{:e}", h.re, h.im);
        }
        out
    }
}

/// What the surface is doing when the channel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceSetting<'a> {
    /// No surface: every element path sees the bare response.
    Bare,
    Config(&'a SurfaceConfig),
}

pub fn composite_channel(
    channel: &MultipathChannel,
    setting: SurfaceSetting<'_>,
    response: &dyn ElementResponse,
) -> Result<Complex64> {
    let bare = response.bare()?;
    match setting {
        SurfaceSetting::Bare => {
            let sum: Complex64 = channel.h_elements.iter().sum();
            Ok(channel.h_env + bare * sum)
        }
        SurfaceSetting::Config(config) => {
            if config.len() != channel.elements() {
                return Err(Error::InvalidArgument(format!(
                    "config has {} voltages for {} elements",
                    config.len(),
                    channel.elements()
                )));
            }
            let mut cache: Vec<(f64, Complex64)> = Vec::new();
            let mut total = channel.h_env;
            for ((&v, h), &jitter) in config.voltages.iter().zip(&channel.h_elements).zip(&channel.jitter) {
                let s = match cache.iter().find(|(cv, _)| *cv == v) {
                    Some((_, s)) => *s,
                    None => {
                        let s = response.response(v)?;
                        cache.push((v, s));
                        s
                    }
                };
                let s = if jitter != 0.0 {
                    let extra = (s / bare).arg() * jitter;
                    s * Complex64::from_polar(1.0, extra)
                } else {
                    s
                };
                total += s * h;
            }
            Ok(total)
        }
    }
}

/// `20 log10 |x|`, `-inf` for zero.
pub fn amplitude_db(x: Complex64) -> f64 {
    let m = x.norm();
    if m > 0.0 {
        20.0 * m.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Additive receiver noise and RSS reporting resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Noise power in dB relative to a unit-amplitude channel; `None` is noiseless.
    pub power_db: Option<f64>,
    /// RSS quantisation step in dB; `None` reports continuous values.
    pub quantization_db: Option<f64>,
}

pub const DEFAULT_RSS_QUANTIZATION_DB: f64 = 0.1;

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            power_db: None,
            quantization_db: Some(DEFAULT_RSS_QUANTIZATION_DB),
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            power_db: None,
            quantization_db: None,
        }
    }

    fn measure(&self, h: Complex64, rng: &mut ChaCha8Rng) -> f64 {
        let noisy = match self.power_db {
            Some(db) => h + complex_gaussian(rng, 10f64.powf(db / 10.0)),
            None => h,
        };
        let rss = amplitude_db(noisy);
        match self.quantization_db {
            Some(q) if q > 0.0 && rss.is_finite() => (rss / q).round() * q,
            _ => rss,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSample {
    pub rss_db: f64,
    pub noise_seed: u64,
    pub config: SurfaceConfig,
}

pub fn rss_feedback(
    channel: &MultipathChannel,
    config: &SurfaceConfig,
    response: &dyn ElementResponse,
    noise: &NoiseModel,
    noise_seed: u64,
) -> Result<FeedbackSample> {
    let h = composite_channel(channel, SurfaceSetting::Config(config), response)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    Ok(FeedbackSample {
        rss_db: noise.measure(h, &mut rng),
        noise_seed,
        config: config.clone(),
    })
}

/// One-way gain of `config` over the no-surface baseline, in dB.
pub fn one_way_gain(channel: &MultipathChannel, config: &SurfaceConfig, response: &dyn ElementResponse) -> Result<f64> {
    let with = composite_channel(channel, SurfaceSetting::Config(config), response)?;
    let without = composite_channel(channel, SurfaceSetting::Bare, response)?;
    Ok(amplitude_db(with) - amplitude_db(without))
}

/// Two-way (backscatter) gain: product of both directions against the same
/// product with no surface.
pub fn backscatter_gain(
    downlink: &MultipathChannel,
    uplink: &MultipathChannel,
    setting: SurfaceSetting<'_>,
    response: &dyn ElementResponse,
) -> Result<f64> {
    if downlink.elements() != uplink.elements() {
        return Err(Error::InvalidArgument(format!(
            "downlink has {} elements but uplink has {}",
            downlink.elements(),
            uplink.elements()
        )));
    }
    let product = |s: SurfaceSetting<'_>| -> Result<f64> {
        let d = composite_channel(downlink, s, response)?;
        let u = composite_channel(uplink, s, response)?;
        Ok(amplitude_db(d * u))
    };
    Ok(product(setting)? - product(SurfaceSetting::Bare)?)
}

/// Feedback oracle over a simulated channel; noise is drawn sequentially
/// from a stream seeded once, so a probe sequence replays exactly.
pub struct ChannelOracle<'a> {
    channel: &'a MultipathChannel,
    response: &'a dyn ElementResponse,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl<'a> ChannelOracle<'a> {
    pub fn new(
        channel: &'a MultipathChannel,
        response: &'a dyn ElementResponse,
        noise: NoiseModel,
        noise_seed: u64,
    ) -> Self {
        Self {
            channel,
            response,
            noise,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
        }
    }
}

impl FeedbackOracle for ChannelOracle<'_> {
    fn elements(&self) -> usize {
        self.channel.elements()
    }

    fn probe(&mut self, config: &SurfaceConfig) -> Result<f64> {
        let h = composite_channel(self.channel, SurfaceSetting::Config(config), self.response)?;
        Ok(self.noise.measure(h, &mut self.rng))
    }
}

/// Oracle reporting backscatter signal strength `|h_down * h_up|`.
pub struct BackscatterOracle<'a> {
    downlink: &'a MultipathChannel,
    uplink: &'a MultipathChannel,
    response: &'a dyn ElementResponse,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl<'a> BackscatterOracle<'a> {
    pub fn new(
        downlink: &'a MultipathChannel,
        uplink: &'a MultipathChannel,
        response: &'a dyn ElementResponse,
        noise: NoiseModel,
        noise_seed: u64,
    ) -> Self {
        Self {
            downlink,
            uplink,
            response,
            noise,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
        }
    }
}

impl FeedbackOracle for BackscatterOracle<'_> {
    fn elements(&self) -> usize {
        self.downlink.elements()
    }

    fn probe(&mut self, config: &SurfaceConfig) -> Result<f64> {
        let d = composite_channel(self.downlink, SurfaceSetting::Config(config), self.response)?;
        let u = composite_channel(self.uplink, SurfaceSetting::Config(config), self.response)?;
        Ok(self.noise.measure(d * u, &mut self.rng))
    }
}
