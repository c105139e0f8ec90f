//! Scenario-driven commands. Each writes CSV artifacts into an output
//! directory and returns a [`RunReport`] with a plain-text summary.
//!
//! Medians and percentiles use the lower-interpolation rule of
//! [`crate::experiment::percentile`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::channel::{one_way_gain, sample_channel};
use crate::controller::{ControllerParams, GroupSearch, Stage};
use crate::error::{Error, Result};
use crate::experiment::{cdf_to_csv, links_to_csv, median, run_links, GainSummary, LinkMode, LinkOutcome, LinkSetup};
use crate::matcher::{
    best_admittance, best_voltage, reflection_spectrum, spectrum_to_csv, sweep_through_power, Axis, SurfaceDrive,
    SweepGrid,
};
use crate::media::Layer;
use crate::scenario::{Granularity, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    /// Ordered `key = value` summary lines.
    pub summary: Vec<(String, String)>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    fn new(command: &str, scenario: &Scenario, hash: &str) -> Self {
        Self {
            command: command.into(),
            scenario: scenario.name.clone(),
            scenario_sha256: hash.into(),
            seed: scenario.seed,
            summary: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    fn put_db(&mut self, key: &str, value: f64) {
        self.put(key, format!("{value:.3}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn write(&mut self, out: &Path, name: &str, contents: &str) -> Result<()> {
        let path = out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.artifacts.push(path);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "scenario_sha256 = {}", self.scenario_sha256);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} = {v}");
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact = {}", a.display());
        }
        s
    }
}

/// Process exit code for an error: 2 configuration, 3 infeasible search,
/// 4 oracle or budget violation.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidArgument(_) | Error::OutOfRange { .. } | Error::Io(_) => 2,
        Error::Search(_) | Error::Calibration { .. } | Error::Resonance { .. } | Error::DegenerateStack { .. } => 3,
        Error::Oracle(_) | Error::Budget(_) => 4,
    }
}

pub fn cmd_match(scenario: &Scenario, hash: &str, out: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("match", scenario, hash);
    let f = scenario.frequency_hz;
    let stack = scenario.stack()?;
    let m = &scenario.matching;
    let best = best_admittance(&stack, f, (m.susceptance_min_s, m.susceptance_max_s), m.steps)?;
    report.put("best_susceptance_s", format!("{:.6}", best.best_admittance.im));
    report.put_db("through_power_db", best.through_power_db);
    report.put_db("baseline_db", best.baseline_db);
    report.put_db("gain_db", best.gain_db);

    let circuit = scenario.circuit()?;
    let voltages = scenario.voltage_set()?;
    let by_voltage = best_voltage(&stack, &circuit, f, voltages.levels())?;
    let v = by_voltage.best_voltage.expect("voltage search sets a voltage");
    report.put("best_voltage_v", v);
    report.put_db("voltage_through_power_db", by_voltage.through_power_db);
    report.put_db("voltage_gain_db", by_voltage.gain_db);

    let at_f = |drive: &SurfaceDrive| -> Result<f64> { Ok(reflection_spectrum(&stack, drive, &[f])?[0].reduction_db) };
    let admittance_drive = SurfaceDrive::Admittance(best.best_admittance);
    let voltage_drive = SurfaceDrive::Voltage { circuit, voltage: v };
    report.put_db("reduction_db", at_f(&admittance_drive)?);
    report.put_db("voltage_reduction_db", at_f(&voltage_drive)?);

    if let Some(spec) = &scenario.spectrum {
        let freqs = spec.frequencies()?;
        let csv = spectrum_to_csv(&reflection_spectrum(&stack, &admittance_drive, &freqs)?);
        report.write(out, "spectrum_admittance.csv", &csv)?;
        let csv = spectrum_to_csv(&reflection_spectrum(&stack, &voltage_drive, &freqs)?);
        report.write(out, "spectrum_voltage.csv", &csv)?;
    }
    Ok(report)
}

pub fn cmd_sweep(scenario: &Scenario, hash: &str, out: &Path) -> Result<RunReport> {
    let mut report = RunReport::new("sweep", scenario, hash);
    if scenario.sweeps.is_empty() {
        return Err(Error::Config("scenario defines no sweeps".into()));
    }
    let base = scenario.stack()?;
    let f = scenario.frequency_hz;
    for sweep in &scenario.sweeps {
        let t = sweep.thickness_mm;
        let axis1 = Axis::stepped(&sweep.thickness_label, t.start, t.stop, t.step)?;
        let family = |thickness_mm: f64| -> Result<crate::cascade::StackSpec> {
            let mut stack = base.clone();
            let medium = stack.layers[sweep.layer].medium.clone();
            stack.layers[sweep.layer] = Layer::from_mm(medium, thickness_mm)?;
            Ok(stack)
        };
        let heatmap = if let Some(b) = sweep.susceptance_s {
            let grid = SweepGrid {
                axis1,
                axis2: Axis::stepped("susceptance_s", b.start, b.stop, b.step)?,
                frequency: f,
            };
            sweep_through_power(&grid, |a1, a2| Ok((family(a1)?, Complex64::new(0.0, a2))))?
        } else {
            let c = sweep.capacitance_pf.expect("validated");
            let circuit = scenario.circuit()?;
            let grid = SweepGrid {
                axis1,
                axis2: Axis::stepped("capacitance_pf", c.start, c.stop, c.step)?,
                frequency: f,
            };
            sweep_through_power(&grid, |a1, a2| {
                Ok((family(a1)?, circuit.admittance_at_capacitance(a2 * 1e-12, f)?.value))
            })?
        };
        let worst_row_best = (0..heatmap.axis1.len())
            .map(|i| heatmap.row_argmax(i).1)
            .fold(f64::INFINITY, f64::min);
        report.put_db(&format!("{}_worst_row_best_db", sweep.name), worst_row_best);
        report.write(out, &format!("sweep_{}.csv", sweep.name), &heatmap.to_csv())?;
    }
    Ok(report)
}

fn link_report(report: &mut RunReport, outcomes: &[LinkOutcome]) {
    let s = GainSummary::from_outcomes(outcomes);
    report.put("links", s.links);
    if s.links > 0 {
        report.put_db("median_gain_db", s.median_db);
        report.put_db("p10_gain_db", s.p10_db);
        report.put_db("p90_gain_db", s.p90_db);
        report.put_db("max_gain_db", s.max_db);
        report.put_db("median_stage12_gain_db", s.median_stage12_db);
        report.put_db("median_stage3_gain_db", s.median_stage3_db);
        for stage in [Stage::Uniform, Stage::Voting, Stage::Enumeration, Stage::FineTune] {
            let max = outcomes.iter().map(|o| o.trace.count(stage)).max().unwrap_or(0);
            if max > 0 {
                report.put(&format!("max_probes_stage_{stage}"), max);
            }
        }
        report.put("max_probes_total", outcomes.iter().map(|o| o.probes).max().unwrap_or(0));
    }
}

fn write_traces(report: &mut RunReport, out: &Path, outcomes: &[LinkOutcome]) -> Result<()> {
    for o in outcomes {
        report.write(out, &format!("traces/link_{:03}.csv", o.index), &o.trace.to_csv())?;
    }
    Ok(())
}

pub fn cmd_links(scenario: &Scenario, hash: &str, out: &Path, links: Option<usize>) -> Result<RunReport> {
    let mut report = RunReport::new("links", scenario, hash);
    let n = links.unwrap_or(scenario.channel.links);
    let setup = scenario.link_setup(LinkMode::OneWay)?;
    let outcomes = run_links(&setup, scenario.seed, n)?;
    link_report(&mut report, &outcomes);
    report.write(out, "links.csv", &links_to_csv(&outcomes))?;
    let gains: Vec<f64> = outcomes.iter().map(|o| o.gain_db).collect();
    report.write(out, "links_cdf.csv", &cdf_to_csv(&gains))?;
    write_traces(&mut report, out, &outcomes)?;
    Ok(report)
}

pub fn cmd_backscatter(scenario: &Scenario, hash: &str, out: &Path, links: Option<usize>) -> Result<RunReport> {
    let mut report = RunReport::new("backscatter", scenario, hash);
    let n = links.unwrap_or(scenario.channel.links);
    let setup = scenario.link_setup(LinkMode::Backscatter)?;
    let outcomes = run_links(&setup, scenario.seed, n)?;
    link_report(&mut report, &outcomes);
    let mut csv = String::from("link,one_way_gain_db,backscatter_gain_db\n");
    let mut one_way = Vec::with_capacity(n);
    for o in &outcomes {
        let channel = sample_channel(o.seeds.channel, &setup.channel)?;
        let best = &o.trace.best().expect("probes exist").config;
        let g = one_way_gain(&channel, best, &setup.response)?;
        one_way.push(g);
        let _ = writeln!(csv, "{},{:.6},{:.6}", o.index, g, o.gain_db);
    }
    if n > 0 {
        report.put_db("median_one_way_gain_db", median(&one_way));
    }
    report.write(out, "backscatter.csv", &csv)?;
    let gains: Vec<f64> = outcomes.iter().map(|o| o.gain_db).collect();
    report.write(out, "backscatter_cdf.csv", &cdf_to_csv(&gains))?;
    Ok(report)
}

/// Gains of the three strategies on the same channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub column_voting: Vec<LinkOutcome>,
    pub column_enumeration: Vec<LinkOutcome>,
    pub element_voting: Vec<LinkOutcome>,
}

/// Column voting, column enumeration and element voting over `links` channels.
pub fn bench_strategies(scenario: &Scenario, links: usize) -> Result<BenchOutcome> {
    let columns = scenario.layout(Granularity::Column);
    let elements = scenario.layout(Granularity::Element);
    let base = |layout| -> Result<ControllerParams> { scenario.controller_params(layout) };
    let column_voting = ControllerParams {
        search: GroupSearch::Voting {
            n_configs: scenario.bench.column_configs,
        },
        ..base(&columns)?
    };
    let column_enum = ControllerParams {
        search: GroupSearch::Enumerate {
            cap: scenario.control.enumeration_cap,
        },
        ..base(&columns)?
    };
    let element_voting = ControllerParams {
        search: GroupSearch::Voting {
            n_configs: 2 * elements.group_count(),
        },
        ..base(&elements)?
    };
    let run = |layout, params| -> Result<Vec<LinkOutcome>> {
        let setup: LinkSetup = scenario.link_setup_with(LinkMode::OneWay, layout, params)?;
        run_links(&setup, scenario.seed, links)
    };
    Ok(BenchOutcome {
        column_voting: run(columns.clone(), column_voting)?,
        column_enumeration: run(columns, column_enum)?,
        element_voting: run(elements, element_voting)?,
    })
}

pub fn cmd_bench_controller(scenario: &Scenario, hash: &str, out: &Path, links: Option<usize>) -> Result<RunReport> {
    let mut report = RunReport::new("bench-controller", scenario, hash);
    let n = links.unwrap_or(scenario.bench.links);
    let bench = bench_strategies(scenario, n)?;
    let mut csv = String::from(
        "link,column_voting_gain_db,column_enumeration_gain_db,element_voting_gain_db,element_stage12_gain_db,element_stage3_gain_db\n",
    );
    for i in 0..n {
        let (cv, ce, ev) = (
            &bench.column_voting[i],
            &bench.column_enumeration[i],
            &bench.element_voting[i],
        );
        let _ = writeln!(
            csv,
            "{i},{:.6},{:.6},{:.6},{:.6},{:.6}",
            cv.gain_db, ce.gain_db, ev.gain_db, ev.stage12_gain_db, ev.stage3_gain_db
        );
    }
    report.put("links", n);
    for (name, outcomes) in [
        ("column_voting", &bench.column_voting),
        ("column_enumeration", &bench.column_enumeration),
        ("element_voting", &bench.element_voting),
    ] {
        if n == 0 {
            continue;
        }
        let s = GainSummary::from_outcomes(outcomes);
        report.put_db(&format!("{name}_median_gain_db"), s.median_db);
        let probes = |stage| outcomes.iter().map(|o| o.trace.count(stage)).max().unwrap_or(0);
        report.put(
            &format!("{name}_probes_per_stage"),
            format!(
                "{}/{}/{}",
                probes(Stage::Uniform),
                probes(Stage::Voting) + probes(Stage::Enumeration),
                probes(Stage::FineTune)
            ),
        );
    }
    if n > 0 {
        let s = GainSummary::from_outcomes(&bench.element_voting);
        report.put_db("element_median_stage12_gain_db", s.median_stage12_db);
        report.put_db("element_median_stage3_gain_db", s.median_stage3_db);
    }
    report.write(out, "bench_controller.csv", &csv)?;
    Ok(report)
}
