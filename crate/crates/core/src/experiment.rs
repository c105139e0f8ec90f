//! Seeded Monte-Carlo link trials: sample a channel, run the controller
//! against noisy feedback, and score the chosen configuration noiselessly.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::channel::{
    amplitude_db, backscatter_gain, composite_channel, one_way_gain, sample_channel, BackscatterOracle, ChannelOracle,
    ChannelParams, ElementResponse, MultipathChannel, NoiseModel, SurfaceConfig, SurfaceSetting, TableResponse,
};
use crate::controller::{run_controller, ControlLayout, ControlTrace, ControllerParams, FeedbackOracle, Stage};
use crate::error::Result;

/// How the controller observes the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    OneWay,
    /// Reciprocal backscatter: feedback is `|h|^2` of the same channel both ways.
    Backscatter,
}

#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub response: TableResponse,
    pub channel: ChannelParams,
    pub noise: NoiseModel,
    pub layout: ControlLayout,
    pub controller: ControllerParams,
    pub mode: LinkMode,
}

impl LinkSetup {
    /// Tabulates `source` over the controller's voltage set.
    pub fn new(
        source: &dyn ElementResponse,
        channel: ChannelParams,
        noise: NoiseModel,
        layout: ControlLayout,
        controller: ControllerParams,
    ) -> Result<Self> {
        let response = TableResponse::tabulate(source, controller.voltages.levels())?;
        Ok(Self {
            response,
            channel,
            noise,
            layout,
            controller,
            mode: LinkMode::OneWay,
        })
    }
}

/// Seeds for one link, derived from a base seed and the link index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkSeeds {
    pub channel: u64,
    pub controller: u64,
    pub noise: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl LinkSeeds {
    pub fn derive(base: u64, index: u64) -> Self {
        let root = splitmix(base ^ splitmix(index));
        Self {
            channel: splitmix(root),
            controller: splitmix(root ^ 1),
            noise: splitmix(root ^ 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutcome {
    pub index: u64,
    pub seeds: LinkSeeds,
    /// Noiseless no-surface signal strength in dB.
    pub baseline_db: f64,
    pub final_db: f64,
    pub gain_db: f64,
    /// Gain of the best configuration seen by the end of the group search.
    pub stage12_gain_db: f64,
    /// Additional gain from fine tuning.
    pub stage3_gain_db: f64,
    pub probes: usize,
    pub trace: ControlTrace,
}

fn noiseless_db(setup: &LinkSetup, channel: &MultipathChannel, setting: SurfaceSetting<'_>) -> Result<f64> {
    let h = composite_channel(channel, setting, &setup.response)?;
    Ok(match setup.mode {
        LinkMode::OneWay => amplitude_db(h),
        LinkMode::Backscatter => amplitude_db(h * h),
    })
}

fn gain(setup: &LinkSetup, channel: &MultipathChannel, config: &SurfaceConfig) -> Result<f64> {
    match setup.mode {
        LinkMode::OneWay => one_way_gain(channel, config, &setup.response),
        LinkMode::Backscatter => backscatter_gain(
            channel,
            &channel.reciprocal(),
            SurfaceSetting::Config(config),
            &setup.response,
        ),
    }
}

pub fn run_link(setup: &LinkSetup, base_seed: u64, index: u64) -> Result<LinkOutcome> {
    let seeds = LinkSeeds::derive(base_seed, index);
    let channel = sample_channel(seeds.channel, &setup.channel)?;
    let uplink = channel.reciprocal();
    let mut one_way;
    let mut two_way;
    let oracle: &mut dyn FeedbackOracle = match setup.mode {
        LinkMode::OneWay => {
            one_way = ChannelOracle::new(&channel, &setup.response, setup.noise, seeds.noise);
            &mut one_way
        }
        LinkMode::Backscatter => {
            two_way = BackscatterOracle::new(&channel, &uplink, &setup.response, setup.noise, seeds.noise);
            &mut two_way
        }
    };
    let params = ControllerParams {
        seed: seeds.controller,
        ..setup.controller.clone()
    };
    let outcome = run_controller(oracle, &setup.layout, &params).map_err(|f| f.error)?;
    let gain_db = gain(setup, &channel, &outcome.config)?;
    let stage12 = outcome
        .trace
        .best_through(Stage::Enumeration)
        .expect("stage 1 probes exist");
    let stage12_gain_db = gain(setup, &channel, &stage12.config)?;
    Ok(LinkOutcome {
        index,
        seeds,
        baseline_db: noiseless_db(setup, &channel, SurfaceSetting::Bare)?,
        final_db: noiseless_db(setup, &channel, SurfaceSetting::Config(&outcome.config))?,
        gain_db,
        stage12_gain_db,
        stage3_gain_db: gain_db - stage12_gain_db,
        probes: outcome.trace.probes.len(),
        trace: outcome.trace,
    })
}

/// Runs links `0..n` in parallel; results are in link order.
pub fn run_links(setup: &LinkSetup, base_seed: u64, n: usize) -> Result<Vec<LinkOutcome>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| run_link(setup, base_seed, i))
        .collect()
}

/// Lower median: element `(n - 1) / 2` of the sorted values; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Lower-interpolation percentile: element `floor((n - 1) * p / 100)` of the
/// sorted values; NaN when empty.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((sorted.len() - 1) as f64 * p.clamp(0.0, 100.0) / 100.0).floor() as usize;
    sorted[rank]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSummary {
    pub links: usize,
    pub median_db: f64,
    pub p10_db: f64,
    pub p90_db: f64,
    pub max_db: f64,
    pub median_stage12_db: f64,
    pub median_stage3_db: f64,
}

impl GainSummary {
    pub fn from_outcomes(outcomes: &[LinkOutcome]) -> Self {
        let gains: Vec<f64> = outcomes.iter().map(|o| o.gain_db).collect();
        let s12: Vec<f64> = outcomes.iter().map(|o| o.stage12_gain_db).collect();
        let s3: Vec<f64> = outcomes.iter().map(|o| o.stage3_gain_db).collect();
        Self {
            links: outcomes.len(),
            median_db: median(&gains),
            p10_db: percentile(&gains, 10.0),
            p90_db: percentile(&gains, 90.0),
            max_db: percentile(&gains, 100.0),
            median_stage12_db: median(&s12),
            median_stage3_db: median(&s3),
        }
    }
}

/// `link,channel_seed,baseline_db,final_db,gain_db,stage12_gain_db,stage3_gain_db,probes`
pub fn links_to_csv(outcomes: &[LinkOutcome]) -> String {
    let mut out =
        String::from("link,channel_seed,baseline_db,final_db,gain_db,stage12_gain_db,stage3_gain_db,probes\n");
    for o in outcomes {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            o.index,
            o.seeds.channel,
            o.baseline_db,
            o.final_db,
            o.gain_db,
            o.stage12_gain_db,
            o.stage3_gain_db,
            o.probes
        );
    }
    out
}

/// Empirical CDF of `values`: `gain_db,cdf` rows in ascending order.
pub fn cdf_to_csv(values: &[f64]) -> String {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = String::from("gain_db,cdf\n");
    let n = sorted.len() as f64;
    for (i, v) in sorted.iter().enumerate() {
        let _ = writeln!(out, "{v:.6},{:.6}", (i + 1) as f64 / n);
    }
    out
}
