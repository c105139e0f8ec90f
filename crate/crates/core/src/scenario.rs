//! TOML scenario files.
//!
//! Every key carries its unit in the name (`thickness_mm`, `frequency_hz`,
//! `susceptance_max_s`, ...). A scenario fully determines a run; its SHA-256
//! is embedded in every report.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::cascade::StackSpec;
use crate::channel::{ArrayGeometry, CascadeResponse, ChannelParams, ElementPowerProfile, NoiseModel};
use crate::controller::{ControlLayout, ControllerParams, GroupSearch, VoltageSet, DEFAULT_VOLTAGES, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::experiment::{LinkMode, LinkSetup};
use crate::matcher::{default_search_steps, DEFAULT_SUSCEPTANCE_RANGE};
use crate::media::{Layer, Medium, DEFAULT_FREQUENCY};
use crate::surface::{calibrate_inductances, ElementCircuit, VaractorRow, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    #[serde(default)]
    pub seed: u64,
    /// Extra media, looked up before the built-in ones.
    #[serde(default)]
    pub media: BTreeMap<String, MediumDef>,
    pub stack: StackDef,
    #[serde(default)]
    pub surface: SurfaceDef,
    #[serde(default)]
    pub array: ArrayDef,
    #[serde(default)]
    pub control: ControlDef,
    #[serde(default)]
    pub channel: ChannelDef,
    #[serde(default, rename = "match")]
    pub matching: MatchDef,
    #[serde(default)]
    pub spectrum: Option<SpectrumDef>,
    #[serde(default)]
    pub bench: BenchDef,
    #[serde(default)]
    pub sweeps: Vec<SweepDef>,
}

fn default_frequency() -> f64 {
    DEFAULT_FREQUENCY
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumDef {
    pub relative_permittivity: f64,
    #[serde(default)]
    pub conductivity_s_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDef {
    pub medium: String,
    pub thickness_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackDef {
    #[serde(default = "default_source")]
    pub source: String,
    #[serde(default)]
    pub layers: Vec<LayerDef>,
    pub load: String,
    #[serde(default)]
    pub surface_index: usize,
    /// Endpoint depth inside the load medium.
    #[serde(default)]
    pub load_depth_mm: Option<f64>,
}

fn default_source() -> String {
    "air".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceMode {
    #[default]
    Calibrate,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceDef {
    #[serde(default)]
    pub mode: SurfaceMode,
    #[serde(default = "default_span_min")]
    pub susceptance_min_s: f64,
    #[serde(default = "default_span_max")]
    pub susceptance_max_s: f64,
    pub patch_inductance_nh: Option<f64>,
    pub bias_wire_inductance_nh: Option<f64>,
    /// `[G, B]` in siemens added to every element admittance.
    #[serde(default)]
    pub coupling_offset_s: [f64; 2],
    /// `[voltage_v, capacitance_pf, resistance_ohm]` rows; the built-in table when absent.
    #[serde(default)]
    pub varactor: Option<Vec<[f64; 3]>>,
}

fn default_span_min() -> f64 {
    DEFAULT_SUSCEPTANCE_SPAN.0
}

fn default_span_max() -> f64 {
    DEFAULT_SUSCEPTANCE_SPAN.1
}

impl Default for SurfaceDef {
    fn default() -> Self {
        Self {
            mode: SurfaceMode::Calibrate,
            susceptance_min_s: default_span_min(),
            susceptance_max_s: default_span_max(),
            patch_inductance_nh: None,
            bias_wire_inductance_nh: None,
            coupling_offset_s: [0.0, 0.0],
            varactor: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDef {
    pub rows: usize,
    pub cols: usize,
}

impl Default for ArrayDef {
    fn default() -> Self {
        let g = ArrayGeometry::default();
        Self {
            rows: g.rows,
            cols: g.cols,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    #[default]
    Element,
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SearchKind {
    #[default]
    Voting,
    Enumerate,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlDef {
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default = "default_voltages")]
    pub voltages_v: Vec<f64>,
    #[serde(default)]
    pub search: SearchKind,
    /// Voting configurations; twice the group count when absent.
    pub n_configs: Option<usize>,
    #[serde(default = "yes")]
    pub fine_tune: bool,
    pub budget: Option<usize>,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

fn default_voltages() -> Vec<f64> {
    DEFAULT_VOLTAGES.to_vec()
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn default_cap() -> usize {
    ENUMERATION_CAP
}

impl Default for ControlDef {
    fn default() -> Self {
        Self {
            granularity: Granularity::Element,
            voltages_v: default_voltages(),
            search: SearchKind::Voting,
            n_configs: None,
            fine_tune: true,
            budget: None,
            repeats: 1,
            enumeration_cap: ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDef {
    #[serde(default = "default_env_power")]
    pub env_power: f64,
    /// Per-element variance; `1 / N` when absent.
    pub element_power: Option<f64>,
    pub element_powers: Option<Vec<f64>>,
    #[serde(default)]
    pub phase_jitter: f64,
    /// Receiver noise power in dB; noiseless when absent.
    pub noise_power_db: Option<f64>,
    /// RSS step in dB; zero reports continuous values.
    #[serde(default = "default_quantization")]
    pub rss_quantization_db: f64,
    #[serde(default = "default_links")]
    pub links: usize,
}

fn default_env_power() -> f64 {
    crate::channel::DEFAULT_ENV_POWER
}

fn default_quantization() -> f64 {
    crate::channel::DEFAULT_RSS_QUANTIZATION_DB
}

fn default_links() -> usize {
    45
}

impl Default for ChannelDef {
    fn default() -> Self {
        Self {
            env_power: default_env_power(),
            element_power: None,
            element_powers: None,
            phase_jitter: 0.0,
            noise_power_db: None,
            rss_quantization_db: default_quantization(),
            links: default_links(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchDef {
    #[serde(default = "default_match_min")]
    pub susceptance_min_s: f64,
    #[serde(default = "default_match_max")]
    pub susceptance_max_s: f64,
    #[serde(default = "default_search_steps")]
    pub steps: usize,
}

fn default_match_min() -> f64 {
    DEFAULT_SUSCEPTANCE_RANGE.0
}

fn default_match_max() -> f64 {
    DEFAULT_SUSCEPTANCE_RANGE.1
}

impl Default for MatchDef {
    fn default() -> Self {
        Self {
            susceptance_min_s: default_match_min(),
            susceptance_max_s: default_match_max(),
            steps: default_search_steps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumDef {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

impl SpectrumDef {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.points < 2 || self.stop_hz.partial_cmp(&self.start_hz) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config(
                "spectrum needs points >= 2 and stop_hz > start_hz".into(),
            ));
        }
        let step = (self.stop_hz - self.start_hz) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.start_hz + step * i as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchDef {
    #[serde(default = "default_bench_links")]
    pub links: usize,
    /// Voting configurations for column control.
    #[serde(default = "default_column_configs")]
    pub column_configs: usize,
}

fn default_bench_links() -> usize {
    100
}

fn default_column_configs() -> usize {
    32
}

impl Default for BenchDef {
    fn default() -> Self {
        Self {
            links: default_bench_links(),
            column_configs: default_column_configs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeDef {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// A heatmap: one layer's thickness against the surface setting.
///
/// Exactly one of `susceptance_s` and `capacitance_pf` gives the second axis.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDef {
    pub name: String,
    /// Index into `stack.layers` of the layer whose thickness varies.
    pub layer: usize,
    #[serde(default = "default_thickness_label")]
    pub thickness_label: String,
    pub thickness_mm: RangeDef,
    pub susceptance_s: Option<RangeDef>,
    pub capacitance_pf: Option<RangeDef>,
}

fn default_thickness_label() -> String {
    "thickness_mm".into()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    /// Parses TOML; errors name the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            match line {
                Some(l) => Error::Config(format!("line {l}: {}", e.message())),
                None => Error::Config(e.message().to_string()),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let scenario = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok((scenario, sha256_hex(text.as_bytes())))
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::Config("frequency_hz must be positive".into()));
        }
        self.stack()?;
        self.voltage_set()?;
        if self.array.rows == 0 || self.array.cols == 0 {
            return Err(Error::Config("array rows and cols must be positive".into()));
        }
        if self.matching.steps < 2 {
            return Err(Error::Config("match.steps must be at least 2".into()));
        }
        for sweep in &self.sweeps {
            if sweep.layer >= self.stack.layers.len() {
                return Err(Error::Config(format!(
                    "sweep `{}`: layer {} does not exist",
                    sweep.name, sweep.layer
                )));
            }
            if sweep.susceptance_s.is_some() == sweep.capacitance_pf.is_some() {
                return Err(Error::Config(format!(
                    "sweep `{}`: give exactly one of susceptance_s and capacitance_pf",
                    sweep.name
                )));
            }
        }
        Ok(())
    }

    pub fn medium(&self, name: &str) -> Result<Medium> {
        if let Some(def) = self.media.get(name) {
            return Medium::new(name, def.relative_permittivity, def.conductivity_s_per_m)
                .map_err(|e| Error::Config(format!("media.{name}: {e}")));
        }
        Medium::by_name(name).ok_or_else(|| Error::Config(format!("unknown medium `{name}`")))
    }

    pub fn stack(&self) -> Result<StackSpec> {
        let layers = self
            .stack
            .layers
            .iter()
            .map(|l| {
                Layer::from_mm(self.medium(&l.medium)?, l.thickness_mm)
                    .map_err(|e| Error::Config(format!("stack.layers: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut stack = StackSpec::new(self.medium(&self.stack.source)?, layers, self.medium(&self.stack.load)?)
            .with_surface_index(self.stack.surface_index);
        if let Some(depth) = self.stack.load_depth_mm {
            stack = stack
                .with_load_depth(depth * 1e-3)
                .map_err(|e| Error::Config(format!("stack.load_depth_mm: {e}")))?;
        }
        stack.validate().map_err(|e| Error::Config(format!("stack: {e}")))?;
        Ok(stack)
    }

    pub fn varactors(&self) -> Result<VaractorTable> {
        match &self.surface.varactor {
            None => Ok(VaractorTable::smv1405()),
            Some(rows) => VaractorTable::new(
                rows.iter()
                    .map(|r| VaractorRow {
                        voltage: r[0],
                        capacitance: r[1] * 1e-12,
                        resistance: r[2],
                    })
                    .collect(),
            )
            .map_err(|e| Error::Config(format!("surface.varactor: {e}"))),
        }
    }

    /// Element circuit, calibrated or from the given inductances.
    pub fn circuit(&self) -> Result<ElementCircuit> {
        let table = self.varactors()?;
        let s = &self.surface;
        let circuit = match s.mode {
            SurfaceMode::Calibrate => {
                calibrate_inductances(&table, self.frequency_hz, (s.susceptance_min_s, s.susceptance_max_s))?
            }
            SurfaceMode::Fixed => {
                let (l1, l2) = s.patch_inductance_nh.zip(s.bias_wire_inductance_nh).ok_or_else(|| {
                    Error::Config("surface mode `fixed` needs patch_inductance_nh and bias_wire_inductance_nh".into())
                })?;
                ElementCircuit::new(l1 * 1e-9, l2 * 1e-9, table, self.frequency_hz)?
            }
        };
        let [g, b] = s.coupling_offset_s;
        Ok(circuit.with_coupling_offset(Complex64::new(g, b)))
    }

    pub fn voltage_set(&self) -> Result<VoltageSet> {
        let set = VoltageSet::new(self.control.voltages_v.clone())
            .map_err(|e| Error::Config(format!("control.voltages_v: {e}")))?;
        let table = self.varactors()?;
        for &v in set.levels() {
            if v < table.min_voltage() || v > table.max_voltage() {
                return Err(Error::Config(format!(
                    "control.voltages_v: {v} V is outside the varactor table [{}, {}] V",
                    table.min_voltage(),
                    table.max_voltage()
                )));
            }
        }
        Ok(set)
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            rows: self.array.rows,
            cols: self.array.cols,
        }
    }

    pub fn layout(&self, granularity: Granularity) -> ControlLayout {
        match granularity {
            Granularity::Element => ControlLayout::element_wise(self.geometry().elements()),
            Granularity::Column => ControlLayout::columns(self.geometry()),
        }
    }

    pub fn controller_params(&self, layout: &ControlLayout) -> Result<ControllerParams> {
        let c = &self.control;
        let search = match c.search {
            SearchKind::Voting => GroupSearch::Voting {
                n_configs: c.n_configs.unwrap_or(2 * layout.group_count()),
            },
            SearchKind::Enumerate => GroupSearch::Enumerate { cap: c.enumeration_cap },
        };
        Ok(ControllerParams {
            voltages: self.voltage_set()?,
            search,
            fine_tune: c.fine_tune,
            seed: self.seed,
            budget: c.budget,
            repeats: c.repeats,
        })
    }

    pub fn channel_params(&self) -> ChannelParams {
        let n = self.geometry().elements();
        let ch = &self.channel;
        let element_power = match (&ch.element_powers, ch.element_power) {
            (Some(v), _) => ElementPowerProfile::PerElement(v.clone()),
            (None, Some(p)) => ElementPowerProfile::Uniform(p),
            (None, None) => ElementPowerProfile::Uniform(1.0 / n as f64),
        };
        ChannelParams {
            elements: n,
            env_power: ch.env_power,
            element_power,
            phase_jitter: ch.phase_jitter,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel {
            power_db: self.channel.noise_power_db,
            quantization_db: (self.channel.rss_quantization_db > 0.0).then_some(self.channel.rss_quantization_db),
        }
    }

    pub fn response(&self) -> Result<CascadeResponse> {
        Ok(CascadeResponse {
            stack: self.stack()?,
            circuit: self.circuit()?,
            frequency: self.frequency_hz,
        })
    }

    /// Link setup for the configured granularity and search.
    pub fn link_setup(&self, mode: LinkMode) -> Result<LinkSetup> {
        let layout = self.layout(self.control.granularity);
        self.link_setup_with(mode, layout.clone(), self.controller_params(&layout)?)
    }

    pub fn link_setup_with(
        &self,
        mode: LinkMode,
        layout: ControlLayout,
        params: ControllerParams,
    ) -> Result<LinkSetup> {
        let mut setup = LinkSetup::new(&self.response()?, self.channel_params(), self.noise(), layout, params)?;
        setup.mode = mode;
        Ok(setup)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
