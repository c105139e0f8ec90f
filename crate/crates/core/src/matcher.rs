//! Searches for the surface setting that maximises through-interface power,
//! plus the sweeps and spectra built on the same solver.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cascade::{floor_db, power_db, solve_stack, StackSpec};
use crate::error::{check_frequency, Error, Result};
use crate::surface::ElementCircuit;

/// Default susceptance search window in siemens.
pub const DEFAULT_SUSCEPTANCE_RANGE: (f64, f64) = (0.0, 0.12);
/// Default grid spacing for the coarse admittance search, in siemens.
pub const DEFAULT_SUSCEPTANCE_STEP: f64 = 0.002;
/// Golden-section refinement stops once the bracket is narrower than this.
pub const REFINE_TOLERANCE: f64 = 1e-6;

/// Number of grid points for the default search window and step.
pub fn default_search_steps() -> usize {
    let (lo, hi) = DEFAULT_SUSCEPTANCE_RANGE;
    ((hi - lo) / DEFAULT_SUSCEPTANCE_STEP).round() as usize + 1
}

/// A named, strictly monotone list of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!("axis `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("axis `{name}` has non-finite values")));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidArgument(format!(
                "axis `{name}` is not strictly monotone"
            )));
        }
        Ok(Self { name, values })
    }

    /// `start, start + step, ...` up to and including `stop` (within rounding).
    pub fn stepped(name: impl Into<String>, start: f64, stop: f64, step: f64) -> Result<Self> {
        let name = name.into();
        if !(step.is_finite() && step > 0.0 && stop >= start) {
            return Err(Error::InvalidArgument(format!(
                "axis `{name}`: need step > 0 and stop >= start (start={start}, stop={stop}, step={step})"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let values = (0..count).map(|i| start + i as f64 * step).collect();
        Self::new(name, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub frequency: f64,
}

/// Through-power in dB over a 2-D grid, `values[i][j]` at `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// Long-format CSV: `axis1,axis2,through_power_db`, axis1-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis1,axis2,through_power_db\n");
        for (i, a1) in self.axis1.values.iter().enumerate() {
            for (j, a2) in self.axis2.values.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{:.6}\n",
                    fmt_axis(*a1),
                    fmt_axis(*a2),
                    self.values[i][j]
                ));
            }
        }
        out
    }

    /// Index and value of the best axis2 sample for row `i`.
    pub fn row_argmax(&self, i: usize) -> (usize, f64) {
        self.values[i].iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (j, v)| if v > best.1 { (j, v) } else { best },
        )
    }
}

/// Axis values are written rounded to 1e-9 so stepped grids print cleanly.
fn fmt_axis(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Evaluates `point(axis1, axis2) -> (stack, Y_s)` over the grid.
///
/// Points are independent and evaluated in parallel; output order follows
/// the axes. Singular stacks are recorded at the dB floor.
pub fn sweep_through_power<F>(grid: &SweepGrid, point: F) -> Result<Heatmap>
where
    F: Fn(f64, f64) -> Result<(StackSpec, Complex64)> + Sync,
{
    check_frequency(grid.frequency)?;
    let (n1, n2) = (grid.axis1.len(), grid.axis2.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("sweep grid has an empty axis".into()));
    }
    let flat: Vec<Result<f64>> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (a1, a2) = (grid.axis1.values[k / n2], grid.axis2.values[k % n2]);
            let (stack, y) = point(a1, a2)?;
            match solve_stack(&stack, y, grid.frequency) {
                Ok(sol) => Ok(floor_db(sol.through_power_db())),
                Err(Error::DegenerateStack { .. }) => Ok(crate::cascade::DB_FLOOR),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut values = vec![Vec::with_capacity(n2); n1];
    for (k, v) in flat.into_iter().enumerate() {
        values[k / n2].push(v?);
    }
    Ok(Heatmap {
        axis1: grid.axis1.clone(),
        axis2: grid.axis2.clone(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub best_admittance: Complex64,
    pub best_voltage: Option<f64>,
    pub through_power_db: f64,
    /// Through-power with no surface (`Y_s = 0`).
    pub baseline_db: f64,
    pub gain_db: f64,
}

fn through_power_or_none(stack: &StackSpec, y: Complex64, frequency: f64) -> Result<Option<f64>> {
    match solve_stack(stack, y, frequency) {
        Ok(sol) => Ok(Some(sol.through_power)),
        Err(Error::DegenerateStack { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn baseline_power(stack: &StackSpec, frequency: f64) -> Result<f64> {
    through_power_or_none(stack, Complex64::new(0.0, 0.0), frequency)?
        .ok_or_else(|| Error::Search("bare stack (Y_s = 0) is singular".into()))
}

/// Golden-section maximisation of `f` on `[lo, hi]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best purely imaginary `Y_s = jB` for `B` in `range`.
///
/// A uniform grid of `steps` points (plus `B = 0`) is followed by
/// golden-section refinement around the best grid point. If refinement
/// lands below the grid optimum (non-unimodal curve) the grid point wins.
pub fn best_admittance(stack: &StackSpec, frequency: f64, range: (f64, f64), steps: usize) -> Result<MatchResult> {
    check_frequency(frequency)?;
    let (lo, hi) = range;
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 search steps, got {steps}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid susceptance range ({lo}, {hi})"
        )));
    }
    let baseline = baseline_power(stack, frequency)?;
    let step = (hi - lo) / (steps - 1) as f64;
    let grid: Vec<f64> = (0..steps).map(|i| lo + i as f64 * step).collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, &b) in grid.iter().enumerate() {
        if let Some(p) = through_power_or_none(stack, Complex64::new(0.0, b), frequency)? {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
    }
    let (idx, grid_power) = best.ok_or_else(|| Error::Search("every grid point is singular".into()))?;

    let objective = |b: f64| {
        through_power_or_none(stack, Complex64::new(0.0, b), frequency)
            .ok()
            .flatten()
            .unwrap_or(f64::NEG_INFINITY)
    };
    let bracket_lo = grid[idx.saturating_sub(1)];
    let bracket_hi = grid[(idx + 1).min(steps - 1)];
    let (refined_b, refined_p) = golden_section_max(objective, bracket_lo, bracket_hi, REFINE_TOLERANCE);
    let (mut best_b, mut best_p) = if refined_p >= grid_power {
        (refined_b, refined_p)
    } else {
        (grid[idx], grid_power)
    };
    if baseline > best_p {
        best_b = 0.0;
        best_p = baseline;
    }
    let through_db = power_db(best_p);
    let baseline_db = power_db(baseline);
    Ok(MatchResult {
        best_admittance: Complex64::new(0.0, best_b),
        best_voltage: None,
        through_power_db: through_db,
        baseline_db,
        gain_db: through_db - baseline_db,
    })
}

/// Best bias voltage from a discrete set; ties go to the higher voltage.
pub fn best_voltage(
    stack: &StackSpec,
    circuit: &ElementCircuit,
    frequency: f64,
    voltages: &[f64],
) -> Result<MatchResult> {
    if voltages.is_empty() {
        return Err(Error::InvalidArgument("voltage set is empty".into()));
    }
    let baseline = baseline_power(stack, frequency)?;
    let mut best: Option<(f64, Complex64, f64)> = None;
    for &v in voltages {
        let y = circuit.admittance_at_voltage(v, frequency)?.value;
        let Some(p) = through_power_or_none(stack, y, frequency)? else {
            continue;
        };
        let better = match best {
            None => true,
            Some((bv, _, bp)) => p > bp || (p == bp && v > bv),
        };
        if better {
            best = Some((v, y, p));
        }
    }
    let (v, y, p) = best.ok_or_else(|| Error::Search("every candidate voltage is singular".into()))?;
    let through_db = power_db(p);
    let baseline_db = power_db(baseline);
    Ok(MatchResult {
        best_admittance: y,
        best_voltage: Some(v),
        through_power_db: through_db,
        baseline_db,
        gain_db: through_db - baseline_db,
    })
}

/// How the surface is driven across a frequency sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceDrive {
    /// Frequency-independent admittance.
    Admittance(Complex64),
    /// Fixed bias voltage; admittance follows the circuit at each frequency.
    Voltage { circuit: ElementCircuit, voltage: f64 },
    /// Fixed capacitance; resistance is interpolated from the varactor table.
    Capacitance { circuit: ElementCircuit, capacitance: f64 },
}

impl SurfaceDrive {
    pub fn admittance(&self, frequency: f64) -> Result<Complex64> {
        match self {
            SurfaceDrive::Admittance(y) => Ok(*y),
            SurfaceDrive::Voltage { circuit, voltage } => Ok(circuit.admittance_at_voltage(*voltage, frequency)?.value),
            SurfaceDrive::Capacitance { circuit, capacitance } => {
                Ok(circuit.admittance_at_capacitance(*capacitance, frequency)?.value)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub frequency: f64,
    pub reflection_db: f64,
    pub bare_reflection_db: f64,
    /// `bare_reflection_db - reflection_db`; positive means less reflection.
    pub reduction_db: f64,
    pub through_power_db: f64,
}

pub fn reflection_spectrum(stack: &StackSpec, drive: &SurfaceDrive, frequencies: &[f64]) -> Result<Vec<SpectrumPoint>> {
    if frequencies.is_empty() {
        return Err(Error::InvalidArgument("frequency list is empty".into()));
    }
    if !frequencies.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument(
            "frequency list must be strictly increasing".into(),
        ));
    }
    frequencies
        .iter()
        .map(|&f| {
            let with = solve_stack(stack, drive.admittance(f)?, f)?;
            let bare = solve_stack(stack, Complex64::new(0.0, 0.0), f)?;
            let reflection_db = with.reflected_power_db();
            let bare_reflection_db = bare.reflected_power_db();
            Ok(SpectrumPoint {
                frequency: f,
                reflection_db,
                bare_reflection_db,
                reduction_db: bare_reflection_db - reflection_db,
                through_power_db: with.through_power_db(),
            })
        })
        .collect()
}

pub fn spectrum_to_csv(points: &[SpectrumPoint]) -> String {
    let mut out = String::from("frequency_hz,reflection_db,bare_reflection_db,reduction_db,through_power_db\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            p.frequency,
            floor_db(p.reflection_db),
            floor_db(p.bare_reflection_db),
            floor_db(p.reduction_db),
            floor_db(p.through_power_db)
        ));
    }
    out
}
