//! Feedback-driven configuration of the surface voltages.
//!
//! The controller only sees a scalar RSS per probed configuration. It runs
//! three stages:
//!
//! 1. uniform probe: every element at the same voltage, once per level,
//!    giving an "on" level `v1` (best) and an "off" level `v0` (worst);
//! 2. majority voting: random on/off assignments per control group; each
//!    above-median configuration votes for the groups it switched on;
//! 3. fine tuning: the 3x3 grid of neighbouring levels around `(v1, v0)`.
//!
//! The returned configuration is the best one probed in any stage.
//!
//! Configurations are identified in traces by a hash: the voltages are
//! rendered with `{}` (shortest round-trip form), joined by `,`, hashed with
//! SHA-256, and the first 16 hex digits kept.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::channel::{ArrayGeometry, SurfaceConfig};
use crate::error::{Error, Result};

/// Something that reports received signal strength (dB) for a configuration.
pub trait FeedbackOracle {
    fn elements(&self) -> usize;
    fn probe(&mut self, config: &SurfaceConfig) -> Result<f64>;
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F> {
    elements: usize,
    f: F,
}

impl<F: FnMut(&SurfaceConfig) -> Result<f64>> FnOracle<F> {
    pub fn new(elements: usize, f: F) -> Self {
        Self { elements, f }
    }
}

impl<F: FnMut(&SurfaceConfig) -> Result<f64>> FeedbackOracle for FnOracle<F> {
    fn elements(&self) -> usize {
        self.elements
    }

    fn probe(&mut self, config: &SurfaceConfig) -> Result<f64> {
        (self.f)(config)
    }
}

/// Ordered discrete bias levels, strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSet {
    levels: Vec<f64>,
}

pub const DEFAULT_VOLTAGES: [f64; 7] = [30.0, 20.0, 15.0, 10.0, 5.0, 2.5, 0.0];

impl Default for VoltageSet {
    fn default() -> Self {
        Self {
            levels: DEFAULT_VOLTAGES.to_vec(),
        }
    }
}

impl VoltageSet {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument("voltage set needs at least two levels".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("voltage levels must be finite".into()));
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "voltage levels must be strictly decreasing".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn index_of(&self, voltage: f64) -> Option<usize> {
        self.levels.iter().position(|&v| v == voltage)
    }

    /// The level itself and its immediate neighbours in the ordering.
    pub fn neighborhood(&self, voltage: f64) -> Result<Vec<f64>> {
        let i = self
            .index_of(voltage)
            .ok_or_else(|| Error::InvalidArgument(format!("{voltage} V is not in the voltage set")))?;
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.levels.len() - 1);
        Ok(self.levels[lo..=hi].to_vec())
    }
}

/// Partition of the elements into independently controlled groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlLayout {
    elements: usize,
    groups: Vec<Vec<usize>>,
}

impl ControlLayout {
    /// One group per element.
    pub fn element_wise(elements: usize) -> Self {
        Self {
            elements,
            groups: (0..elements).map(|i| vec![i]).collect(),
        }
    }

    /// One group per column of a row-major grid.
    pub fn columns(geometry: ArrayGeometry) -> Self {
        let groups = (0..geometry.cols)
            .map(|c| (0..geometry.rows).map(|r| r * geometry.cols + c).collect())
            .collect();
        Self {
            elements: geometry.elements(),
            groups,
        }
    }

    pub fn custom(elements: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; elements];
        for &i in groups.iter().flatten() {
            if i >= elements || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "element {i} is out of range or in two groups"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) || groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument(
                "groups must be non-empty and cover every element".into(),
            ));
        }
        Ok(Self { elements, groups })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Configuration with groups marked `on` at `v_on`, the rest at `v_off`.
    pub fn expand(&self, on: &[bool], v_on: f64, v_off: f64) -> SurfaceConfig {
        let mut voltages = vec![v_off; self.elements];
        for (group, &is_on) in self.groups.iter().zip(on) {
            if is_on {
                for &i in group {
                    voltages[i] = v_on;
                }
            }
        }
        SurfaceConfig::new(voltages)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Uniform,
    Voting,
    /// Exhaustive replacement for [`Stage::Voting`].
    Enumeration,
    FineTune,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Uniform => "1",
            Stage::Voting => "2",
            Stage::FineTune => "3",
            Stage::Enumeration => "enum",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub stage: Stage,
    pub config: SurfaceConfig,
    pub rss_db: f64,
}

pub fn config_hash(config: &SurfaceConfig) -> String {
    let text = config
        .voltages
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Every probe made, in order, with an optional cap on their number.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlTrace {
    pub probes: Vec<ProbeRecord>,
    pub budget: Option<usize>,
    /// Oracle calls averaged (in dB) per probe; zero is treated as one.
    pub repeats: usize,
    pub low_contrast: bool,
}

impl ControlTrace {
    pub fn with_budget(budget: Option<usize>) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    fn probe(&mut self, oracle: &mut dyn FeedbackOracle, stage: Stage, config: SurfaceConfig) -> Result<f64> {
        if let Some(cap) = self.budget {
            if self.probes.len() >= cap {
                return Err(Error::Budget(format!("probe budget of {cap} exhausted")));
            }
        }
        let repeats = self.repeats.max(1);
        let mut rss_db = 0.0;
        for _ in 0..repeats {
            rss_db += oracle.probe(&config)?;
        }
        rss_db /= repeats as f64;
        if rss_db.is_nan() {
            return Err(Error::Oracle("oracle returned NaN".into()));
        }
        self.probes.push(ProbeRecord { stage, config, rss_db });
        Ok(rss_db)
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.probes.iter().filter(|p| p.stage == stage).count()
    }

    /// Best probe so far; ties go to the earliest.
    pub fn best(&self) -> Option<&ProbeRecord> {
        self.best_up_to(self.probes.len())
    }

    fn best_up_to(&self, n: usize) -> Option<&ProbeRecord> {
        self.probes[..n]
            .iter()
            .fold(None, |best: Option<&ProbeRecord>, p| match best {
                Some(b) if b.rss_db >= p.rss_db => Some(b),
                _ => Some(p),
            })
    }

    /// Best probe among those made in stages up to and including `stage`.
    pub fn best_through(&self, stage: Stage) -> Option<&ProbeRecord> {
        let n = self.probes.iter().take_while(|p| p.stage <= stage).count();
        self.best_up_to(n)
    }

    /// Running maximum of RSS after each probe.
    pub fn best_seen_history(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.probes
            .iter()
            .map(|p| {
                best = best.max(p.rss_db);
                best
            })
            .collect()
    }

    /// `stage,probe_index,config_hash,rss_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,probe_index,config_hash,rss_db\n");
        for (i, p) in self.probes.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:.6}", p.stage, i, config_hash(&p.config), p.rss_db);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformProbe {
    pub v_on: f64,
    pub v_off: f64,
    /// Every level gave the same RSS.
    pub low_contrast: bool,
}

/// Stage 1: probe each level uniformly. Ties for "on" go to the higher
/// voltage; ties for "off" to the lower. With no contrast at all, "off" is
/// the level adjacent to "on".
pub fn stage1_uniform_probe(
    oracle: &mut dyn FeedbackOracle,
    voltages: &VoltageSet,
    trace: &mut ControlTrace,
) -> Result<UniformProbe> {
    let n = oracle.elements();
    let mut rss = Vec::with_capacity(voltages.len());
    for &v in voltages.levels() {
        rss.push(trace.probe(oracle, Stage::Uniform, SurfaceConfig::uniform(n, v))?);
    }
    // Levels are decreasing, so the first maximum is the highest voltage.
    let mut on = 0;
    let mut off = 0;
    for (i, &r) in rss.iter().enumerate() {
        if r > rss[on] {
            on = i;
        }
        if r <= rss[off] {
            off = i;
        }
    }
    let low_contrast = on == off || rss.iter().all(|&r| r == rss[0]);
    if on == off || low_contrast {
        off = if on + 1 < voltages.len() { on + 1 } else { on - 1 };
    }
    trace.low_contrast |= low_contrast;
    Ok(UniformProbe {
        v_on: voltages.levels()[on],
        v_off: voltages.levels()[off],
        low_contrast,
    })
}

/// Stage 2: majority voting over `n_configs` random group assignments.
///
/// Configurations strictly above the lower median RSS vote. A group is
/// switched on when more than half of the voters had it on; a tie leaves it off.
pub fn stage2_majority_voting(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    v_on: f64,
    v_off: f64,
    n_configs: usize,
    seed: u64,
    trace: &mut ControlTrace,
) -> Result<Vec<bool>> {
    if v_on == v_off {
        return Err(Error::InvalidArgument("on and off voltages must differ".into()));
    }
    if n_configs == 0 {
        return Err(Error::InvalidArgument("voting needs at least one configuration".into()));
    }
    check_layout(oracle, layout)?;
    let k = layout.group_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(n_configs);
    let mut rss = Vec::with_capacity(n_configs);
    for _ in 0..n_configs {
        let on: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        rss.push(trace.probe(oracle, Stage::Voting, layout.expand(&on, v_on, v_off))?);
        assignments.push(on);
    }
    let median = lower_median(&rss);
    let voters: Vec<&Vec<bool>> = assignments
        .iter()
        .zip(&rss)
        .filter(|(_, &r)| r > median)
        .map(|(a, _)| a)
        .collect();
    Ok((0..k)
        .map(|g| 2 * voters.iter().filter(|a| a[g]).count() > voters.len())
        .collect())
}

/// Element `(n - 1) / 2` of the sorted values.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

/// Exhaustive search over on/off assignments of the groups.
pub fn enumerate_groups(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    v_on: f64,
    v_off: f64,
    cap: usize,
    trace: &mut ControlTrace,
) -> Result<Vec<bool>> {
    check_layout(oracle, layout)?;
    let k = layout.group_count();
    let total = 1usize
        .checked_shl(k as u32)
        .filter(|&t| k < usize::BITS as usize && t <= cap);
    let total = total.ok_or_else(|| Error::Budget(format!("2^{k} configurations exceed the cap of {cap}")))?;
    let mut best: Option<(f64, Vec<bool>)> = None;
    for mask in 0..total {
        let on: Vec<bool> = (0..k).map(|g| mask >> g & 1 == 1).collect();
        let r = trace.probe(oracle, Stage::Enumeration, layout.expand(&on, v_on, v_off))?;
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, on));
        }
    }
    Ok(best.map(|(_, on)| on).unwrap_or_default())
}

/// Stage 3: probe the 3x3 grid of neighbouring `(on, off)` levels with the
/// group assignment fixed. Returns the best `(v_on, v_off)` found.
pub fn stage3_fine_tune(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    voltages: &VoltageSet,
    on: &[bool],
    v_on: f64,
    v_off: f64,
    trace: &mut ControlTrace,
) -> Result<(f64, f64)> {
    check_layout(oracle, layout)?;
    let on_levels = voltages.neighborhood(v_on)?;
    let off_levels = voltages.neighborhood(v_off)?;
    // Current assignment first, so it wins ties.
    let mut best_rss = trace.probe(oracle, Stage::FineTune, layout.expand(on, v_on, v_off))?;
    let mut best = (v_on, v_off);
    for &a in &on_levels {
        for &b in &off_levels {
            if (a, b) == (v_on, v_off) {
                continue;
            }
            let r = trace.probe(oracle, Stage::FineTune, layout.expand(on, a, b))?;
            if r > best_rss {
                best_rss = r;
                best = (a, b);
            }
        }
    }
    Ok(best)
}

fn check_layout(oracle: &dyn FeedbackOracle, layout: &ControlLayout) -> Result<()> {
    if oracle.elements() != layout.elements() {
        return Err(Error::InvalidArgument(format!(
            "layout covers {} elements but the oracle has {}",
            layout.elements(),
            oracle.elements()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSearch {
    Voting { n_configs: usize },
    Enumerate { cap: usize },
}

pub const ENUMERATION_CAP: usize = 65_536;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub voltages: VoltageSet,
    pub search: GroupSearch,
    pub fine_tune: bool,
    pub seed: u64,
    /// Maximum number of probes; `None` means unlimited.
    pub budget: Option<usize>,
    /// Oracle calls averaged per probe.
    pub repeats: usize,
}

impl ControllerParams {
    /// Voting with twice as many configurations as groups, fine tuning on.
    pub fn for_layout(layout: &ControlLayout) -> Self {
        Self {
            voltages: VoltageSet::default(),
            search: GroupSearch::Voting {
                n_configs: 2 * layout.group_count(),
            },
            fine_tune: true,
            seed: 0,
            budget: None,
            repeats: 1,
        }
    }

    /// Probes a full run makes: levels, group search, and the 3x3 grid.
    pub fn planned_probes(&self, layout: &ControlLayout) -> usize {
        let search = match self.search {
            GroupSearch::Voting { n_configs } => n_configs,
            GroupSearch::Enumerate { .. } => 1usize << layout.group_count().min(usize::BITS as usize - 1),
        };
        self.voltages.len() + search + if self.fine_tune { 9 } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutcome {
    /// Best configuration probed in any stage.
    pub config: SurfaceConfig,
    pub rss_db: f64,
    pub uniform: UniformProbe,
    pub on_groups: Vec<bool>,
    /// `(v_on, v_off)` after fine tuning.
    pub tuned: (f64, f64),
    /// Elements switched on and off by the group search.
    pub on_set: Vec<usize>,
    pub off_set: Vec<usize>,
    pub trace: ControlTrace,
}

/// A failed run with everything probed before the error.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFailure {
    pub error: Error,
    pub trace: ControlTrace,
}

impl fmt::Display for ControlFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} probes", self.error, self.trace.probes.len())
    }
}

impl std::error::Error for ControlFailure {}

pub fn run_controller(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    params: &ControllerParams,
) -> std::result::Result<ControlOutcome, ControlFailure> {
    let mut trace = ControlTrace::with_budget(params.budget);
    trace.repeats = params.repeats;
    match run_stages(oracle, layout, params, &mut trace) {
        Ok((uniform, on_groups, tuned)) => {
            let best = trace.best().expect("at least one probe").clone();
            let mut on_set = Vec::new();
            let mut off_set = Vec::new();
            for (group, &on) in layout.groups().iter().zip(&on_groups) {
                if on {
                    on_set.extend(group);
                } else {
                    off_set.extend(group);
                }
            }
            on_set.sort_unstable();
            off_set.sort_unstable();
            Ok(ControlOutcome {
                config: best.config,
                rss_db: best.rss_db,
                uniform,
                on_groups,
                tuned,
                on_set,
                off_set,
                trace,
            })
        }
        Err(error) => Err(ControlFailure { error, trace }),
    }
}

fn run_stages(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    params: &ControllerParams,
    trace: &mut ControlTrace,
) -> Result<(UniformProbe, Vec<bool>, (f64, f64))> {
    check_layout(oracle, layout)?;
    let uniform = stage1_uniform_probe(oracle, &params.voltages, trace)?;
    let on = match params.search {
        GroupSearch::Voting { n_configs } => stage2_majority_voting(
            oracle,
            layout,
            uniform.v_on,
            uniform.v_off,
            n_configs,
            params.seed,
            trace,
        )?,
        GroupSearch::Enumerate { cap } => enumerate_groups(oracle, layout, uniform.v_on, uniform.v_off, cap, trace)?,
    };
    let tuned = if params.fine_tune {
        stage3_fine_tune(
            oracle,
            layout,
            &params.voltages,
            &on,
            uniform.v_on,
            uniform.v_off,
            trace,
        )?
    } else {
        (uniform.v_on, uniform.v_off)
    };
    Ok((uniform, on, tuned))
}

/// Exhaustive two-level search over every group, for benchmarking.
pub fn brute_force_baseline(
    oracle: &mut dyn FeedbackOracle,
    layout: &ControlLayout,
    v_on: f64,
    v_off: f64,
    cap: usize,
) -> Result<(SurfaceConfig, f64, ControlTrace)> {
    let mut trace = ControlTrace::default();
    enumerate_groups(oracle, layout, v_on, v_off, cap, &mut trace)?;
    let best = trace.best().expect("at least one probe").clone();
    Ok((best.config, best.rss_db, trace))
}
