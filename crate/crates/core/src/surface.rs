//! Voltage-tunable surface element: varactor table, LC equivalent circuit,
//! and inductance calibration.
//!
//! One element is a patch branch (varactor `C`, loss `R`, patch inductance
//! `L1` in series) in parallel with the bias-wire inductance `L2`:
//!
//! ```text
//! Y_s = 1 / (1/(jwC) + R + jwL1) + 1/(jwL2)
//! ```

use num_complex::Complex64;

use crate::error::{check_frequency, Error, Result};
use crate::media::angular_frequency;

/// Minimum value of `1 - w^2 C L1` accepted by calibration.
pub const MIN_RESONANCE_MARGIN: f64 = 0.05;
/// Default calibration target, in siemens.
pub const DEFAULT_SUSCEPTANCE_SPAN: (f64, f64) = (0.0, 0.1);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaractorRow {
    pub voltage: f64,
    pub capacitance: f64,
    pub resistance: f64,
}

/// Reverse-bias voltage to (capacitance, series resistance) lookup.
///
/// Rows are stored by increasing voltage; capacitance and resistance must
/// both fall strictly as the voltage rises.
#[derive(Debug, Clone, PartialEq)]
pub struct VaractorTable {
    rows: Vec<VaractorRow>,
}

impl VaractorTable {
    pub fn new(mut rows: Vec<VaractorRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument("varactor table needs at least two rows".into()));
        }
        for row in &rows {
            let ok = row.voltage.is_finite()
                && row.capacitance.is_finite()
                && row.capacitance > 0.0
                && row.resistance.is_finite()
                && row.resistance > 0.0;
            if !ok {
                return Err(Error::InvalidArgument(format!("invalid varactor row {row:?}")));
            }
        }
        rows.sort_by(|a, b| a.voltage.total_cmp(&b.voltage));
        for pair in rows.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if lo.voltage == hi.voltage {
                return Err(Error::InvalidArgument(format!(
                    "duplicate varactor voltage {}",
                    lo.voltage
                )));
            }
            if hi.capacitance >= lo.capacitance {
                return Err(Error::InvalidArgument(format!(
                    "capacitance must fall with voltage ({} V -> {} V)",
                    lo.voltage, hi.voltage
                )));
            }
            if hi.resistance >= lo.resistance {
                return Err(Error::InvalidArgument(format!(
                    "resistance must fall with voltage ({} V -> {} V)",
                    lo.voltage, hi.voltage
                )));
            }
        }
        Ok(Self { rows })
    }

    /// SMV1405 reverse-bias characteristics from a SPICE model.
    pub fn smv1405() -> Self {
        let data = [
            (0.0, 3.72, 0.63),
            (5.0, 1.32, 0.45),
            (10.0, 1.0, 0.38),
            (15.0, 0.90, 0.36),
            (20.0, 0.81, 0.30),
            (30.0, 0.71, 0.26),
        ];
        let rows = data
            .iter()
            .map(|&(voltage, pf, resistance)| VaractorRow {
                voltage,
                capacitance: pf * 1e-12,
                resistance,
            })
            .collect();
        Self::new(rows).expect("built-in varactor table is valid")
    }

    pub fn rows(&self) -> &[VaractorRow] {
        &self.rows
    }

    pub fn min_voltage(&self) -> f64 {
        self.rows[0].voltage
    }

    pub fn max_voltage(&self) -> f64 {
        self.rows[self.rows.len() - 1].voltage
    }

    /// Row with the largest capacitance (lowest voltage).
    pub fn max_capacitance_row(&self) -> VaractorRow {
        self.rows[0]
    }

    /// Row with the smallest capacitance (highest voltage).
    pub fn min_capacitance_row(&self) -> VaractorRow {
        self.rows[self.rows.len() - 1]
    }

    /// Piecewise-linear `(C, R)` at `voltage`; no extrapolation.
    pub fn at(&self, voltage: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.min_voltage(), self.max_voltage());
        if !(voltage >= lo && voltage <= hi) {
            return Err(Error::OutOfRange {
                what: "bias voltage",
                value: voltage,
                min: lo,
                max: hi,
            });
        }
        let idx = self.rows.partition_point(|r| r.voltage < voltage);
        let upper = self.rows[idx];
        if upper.voltage == voltage || idx == 0 {
            return Ok((upper.capacitance, upper.resistance));
        }
        let lower = self.rows[idx - 1];
        let w = (voltage - lower.voltage) / (upper.voltage - lower.voltage);
        Ok((
            lower.capacitance + w * (upper.capacitance - lower.capacitance),
            lower.resistance + w * (upper.resistance - lower.resistance),
        ))
    }

    /// Bias voltage that yields `capacitance`, inverting the interpolation.
    pub fn voltage_for_capacitance(&self, capacitance: f64) -> Result<f64> {
        let (c_lo, c_hi) = (
            self.min_capacitance_row().capacitance,
            self.max_capacitance_row().capacitance,
        );
        if !(capacitance >= c_lo && capacitance <= c_hi) {
            return Err(Error::OutOfRange {
                what: "capacitance",
                value: capacitance,
                min: c_lo,
                max: c_hi,
            });
        }
        // Capacitance falls along the row order.
        let idx = self.rows.partition_point(|r| r.capacitance > capacitance);
        let upper = self.rows[idx];
        if upper.capacitance == capacitance || idx == 0 {
            return Ok(upper.voltage);
        }
        let lower = self.rows[idx - 1];
        let w = (capacitance - lower.capacitance) / (upper.capacitance - lower.capacitance);
        Ok(lower.voltage + w * (upper.voltage - lower.voltage))
    }
}

pub fn varactor_at(table: &VaractorTable, voltage: f64) -> Result<(f64, f64)> {
    table.at(voltage)
}

/// Complex surface admittance `G + jB` in siemens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceAdmittance {
    pub value: Complex64,
}

impl SurfaceAdmittance {
    pub fn new(value: Complex64) -> Self {
        Self { value }
    }

    pub fn conductance(&self) -> f64 {
        self.value.re
    }

    pub fn susceptance(&self) -> f64 {
        self.value.im
    }
}

/// Equivalent circuit of one tunable element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCircuit {
    /// `L1`, henries.
    pub patch_inductance: f64,
    /// `L2`, henries.
    pub bias_wire_inductance: f64,
    pub varactors: VaractorTable,
    pub design_frequency: f64,
    /// Additive shift applied by [`ElementCircuit::admittance_at_voltage`],
    /// standing in for coupling between the surface and nearby media.
    pub coupling_offset: Complex64,
}

impl ElementCircuit {
    pub fn new(
        patch_inductance: f64,
        bias_wire_inductance: f64,
        varactors: VaractorTable,
        design_frequency: f64,
    ) -> Result<Self> {
        check_frequency(design_frequency)?;
        for (what, l) in [("patch", patch_inductance), ("bias wire", bias_wire_inductance)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{what} inductance must be positive, got {l}"
                )));
            }
        }
        let circuit = Self {
            patch_inductance,
            bias_wire_inductance,
            varactors,
            design_frequency,
            coupling_offset: Complex64::new(0.0, 0.0),
        };
        let factor = circuit.resonance_factor(circuit.varactors.max_capacitance_row().capacitance, design_frequency);
        if factor <= 0.0 {
            return Err(Error::Resonance { factor });
        }
        Ok(circuit)
    }

    pub fn with_coupling_offset(mut self, offset: Complex64) -> Self {
        self.coupling_offset = offset;
        self
    }

    /// `1 - w^2 C L1`.
    pub fn resonance_factor(&self, capacitance: f64, frequency: f64) -> f64 {
        let omega = angular_frequency(frequency);
        1.0 - omega * omega * capacitance * self.patch_inductance
    }

    fn check_inputs(&self, capacitance: f64, resistance: f64, frequency: f64) -> Result<()> {
        check_frequency(frequency)?;
        if !(capacitance.is_finite() && capacitance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "capacitance must be positive, got {capacitance}"
            )));
        }
        if !(resistance.is_finite() && resistance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resistance must be non-negative, got {resistance}"
            )));
        }
        let factor = self.resonance_factor(capacitance, frequency);
        if factor <= 0.0 {
            return Err(Error::Resonance { factor });
        }
        Ok(())
    }

    /// Exact complex admittance of the two parallel branches.
    pub fn admittance_exact(&self, capacitance: f64, resistance: f64, frequency: f64) -> Result<SurfaceAdmittance> {
        self.check_inputs(capacitance, resistance, frequency)?;
        let omega = angular_frequency(frequency);
        let j = Complex64::new(0.0, 1.0);
        let patch = (Complex64::from(1.0) / (j * omega * capacitance)) + resistance + j * omega * self.patch_inductance;
        let bias = j * omega * self.bias_wire_inductance;
        Ok(SurfaceAdmittance::new(patch.inv() + bias.inv()))
    }

    /// Small-loss form: `G = w^2 C^2 R / f^2`, `B = wC/f - 1/(wL2)` with `f = 1 - w^2 C L1`.
    pub fn admittance_approx(&self, capacitance: f64, resistance: f64, frequency: f64) -> Result<SurfaceAdmittance> {
        self.check_inputs(capacitance, resistance, frequency)?;
        let omega = angular_frequency(frequency);
        let factor = self.resonance_factor(capacitance, frequency);
        let g = omega * omega * capacitance * capacitance * resistance / (factor * factor);
        let b = omega * capacitance / factor - 1.0 / (omega * self.bias_wire_inductance);
        Ok(SurfaceAdmittance::new(Complex64::new(g, b)))
    }

    /// Admittance at a bias voltage, including the coupling offset.
    pub fn admittance_at_voltage(&self, voltage: f64, frequency: f64) -> Result<SurfaceAdmittance> {
        let (c, r) = self.varactors.at(voltage)?;
        let y = self.admittance_exact(c, r, frequency)?;
        Ok(SurfaceAdmittance::new(y.value + self.coupling_offset))
    }

    /// Admittance at a capacitance, with resistance interpolated from the table.
    pub fn admittance_at_capacitance(&self, capacitance: f64, frequency: f64) -> Result<SurfaceAdmittance> {
        let voltage = self.varactors.voltage_for_capacitance(capacitance)?;
        self.admittance_at_voltage(voltage, frequency)
    }

    /// Susceptance at the highest and lowest table voltages.
    pub fn susceptance_span(&self, frequency: f64) -> Result<(f64, f64)> {
        let lo = self.admittance_at_voltage(self.varactors.max_voltage(), frequency)?;
        let hi = self.admittance_at_voltage(self.varactors.min_voltage(), frequency)?;
        Ok((lo.susceptance(), hi.susceptance()))
    }
}

fn patch_susceptance(row: VaractorRow, patch_inductance: f64, omega: f64) -> f64 {
    let j = Complex64::new(0.0, 1.0);
    let z = (Complex64::from(1.0) / (j * omega * row.capacitance)) + row.resistance + j * omega * patch_inductance;
    z.inv().im
}

/// Chooses `L1` and `L2` so the table spans `target` susceptance.
///
/// `L2` is fixed by pinning the highest-voltage row to `target.0`; `L1` is
/// the smallest value (by bisection) whose lowest-voltage row reaches
/// `target.1`, subject to `1 - w^2 C L1 > 0.05` over the whole table.
pub fn calibrate_inductances(table: &VaractorTable, frequency: f64, target: (f64, f64)) -> Result<ElementCircuit> {
    check_frequency(frequency)?;
    let (b_min, b_max) = target;
    if !(b_min.is_finite() && b_max.is_finite() && b_min < b_max) {
        return Err(Error::InvalidArgument(format!(
            "susceptance target must satisfy min < max, got ({b_min}, {b_max})"
        )));
    }
    let omega = angular_frequency(frequency);
    let low_c = table.min_capacitance_row();
    let high_c = table.max_capacitance_row();
    let l1_ceiling = (1.0 - MIN_RESONANCE_MARGIN) / (omega * omega * high_c.capacitance) * (1.0 - 1e-9);

    let span = |l1: f64| patch_susceptance(high_c, l1, omega) - patch_susceptance(low_c, l1, omega);
    let wire = |l1: f64| patch_susceptance(low_c, l1, omega) - b_min;

    let best_span = span(l1_ceiling);
    if best_span < b_max - b_min || wire(l1_ceiling) <= 0.0 {
        return Err(Error::Calibration {
            target_min: b_min,
            target_max: b_max,
            best_min: b_min,
            best_max: b_min + best_span,
        });
    }

    let (mut lo, mut hi) = (0.0, l1_ceiling);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if span(mid) >= b_max - b_min {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let l1 = hi;
    let inv_wire = wire(l1);
    if inv_wire <= 0.0 {
        return Err(Error::Calibration {
            target_min: b_min,
            target_max: b_max,
            best_min: patch_susceptance(low_c, l1, omega),
            best_max: patch_susceptance(high_c, l1, omega),
        });
    }
    let l2 = 1.0 / (omega * inv_wire);
    ElementCircuit::new(l1, l2, table.clone(), frequency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::DEFAULT_FREQUENCY;
    use approx::assert_relative_eq;

    const F: f64 = DEFAULT_FREQUENCY;

    fn calibrated() -> ElementCircuit {
        calibrate_inductances(&VaractorTable::smv1405(), F, DEFAULT_SUSCEPTANCE_SPAN).unwrap()
    }

    /// Independent evaluation of the two branches from their impedances.
    fn branch_oracle(c: f64, r: f64, l1: f64, l2: f64, f: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * f;
        let patch = Complex64::new(r, w * l1 - 1.0 / (w * c));
        let wire = Complex64::new(0.0, w * l2);
        let y_patch = patch.conj() / patch.norm_sqr();
        let y_wire = wire.conj() / wire.norm_sqr();
        y_patch + y_wire
    }

    #[test]
    fn table_knots_and_interpolation() {
        let t = VaractorTable::smv1405();
        let (c, r) = varactor_at(&t, 30.0).unwrap();
        assert_relative_eq!(c, 0.71e-12);
        assert_relative_eq!(r, 0.26);
        let (c, r) = varactor_at(&t, 0.0).unwrap();
        assert_relative_eq!(c, 3.72e-12);
        assert_relative_eq!(r, 0.63);
        let (c, _) = varactor_at(&t, 25.0).unwrap();
        assert_relative_eq!(c, 0.76e-12, epsilon = 1e-24);
        let (c, r) = varactor_at(&t, 2.5).unwrap();
        assert_relative_eq!(c, 2.52e-12, epsilon = 1e-24);
        assert_relative_eq!(r, 0.54, epsilon = 1e-12);
        assert!(matches!(t.at(30.5), Err(Error::OutOfRange { .. })));
        assert!(t.at(-0.1).is_err());
    }

    #[test]
    fn capacitance_inverse() {
        let t = VaractorTable::smv1405();
        assert_relative_eq!(t.voltage_for_capacitance(0.76e-12).unwrap(), 25.0, epsilon = 1e-9);
        assert_relative_eq!(t.voltage_for_capacitance(3.72e-12).unwrap(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(t.voltage_for_capacitance(0.71e-12).unwrap(), 30.0, epsilon = 1e-9);
        assert!(t.voltage_for_capacitance(5e-12).is_err());
    }

    #[test]
    fn table_validation() {
        let row = |v, c, r| VaractorRow {
            voltage: v,
            capacitance: c,
            resistance: r,
        };
        assert!(VaractorTable::new(vec![row(0.0, 2e-12, 1.0)]).is_err());
        assert!(VaractorTable::new(vec![row(0.0, 2e-12, 1.0), row(0.0, 1e-12, 0.5)]).is_err());
        assert!(VaractorTable::new(vec![row(0.0, 1e-12, 1.0), row(5.0, 2e-12, 0.5)]).is_err());
        assert!(VaractorTable::new(vec![row(0.0, 2e-12, 0.5), row(5.0, 1e-12, 1.0)]).is_err());
        assert!(VaractorTable::new(vec![row(5.0, 1e-12, 0.5), row(0.0, 2e-12, 1.0)]).is_ok());
    }

    #[test]
    fn branch_cancellation_gives_zero() {
        let c = 1e-12;
        let l1 = 0.5e-9;
        let w = angular_frequency(F);
        let factor = 1.0 - w * w * c * l1;
        let l2 = factor / (w * w * c);
        let circuit = ElementCircuit::new(l1, l2, VaractorTable::smv1405(), F).unwrap();
        let y = circuit.admittance_exact(c, 0.0, F).unwrap();
        assert!(y.value.norm() < 1e-15, "{:?}", y.value);
    }

    #[test]
    fn calibration_matches_frozen_oracle() {
        // Frozen from an independent bisection + brute-force grid over
        // L1 in (0.1, 1.1) nH, L2 in (1, 50) nH; the grid's smallest
        // feasible L1 was 0.59 nH.
        let circuit = calibrated();
        assert_relative_eq!(circuit.patch_inductance, 5.921_638_677e-10, max_relative = 1e-8);
        assert_relative_eq!(circuit.bias_wire_inductance, 5.601_721_340e-9, max_relative = 1e-8);
        let (lo, hi) = circuit.susceptance_span(F).unwrap();
        assert!(lo.abs() < 1e-12);
        assert!((0.1..0.1 + 1e-9).contains(&hi));
        for row in circuit.varactors.rows() {
            assert!(circuit.resonance_factor(row.capacitance, F) > MIN_RESONANCE_MARGIN);
        }
    }

    #[test]
    fn calibration_errors() {
        let t = VaractorTable::smv1405();
        match calibrate_inductances(&t, F, (0.0, 10.0)) {
            Err(Error::Calibration { best_max, .. }) => assert!(best_max > 0.5 && best_max < 1.0),
            other => panic!("expected calibration error, got {other:?}"),
        }
        assert!(matches!(
            calibrate_inductances(&t, F, (0.1, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exact_matches_branch_oracle() {
        let circuit = calibrated();
        let y = circuit.admittance_exact(1.0e-12, 0.38, F).unwrap();
        let oracle = branch_oracle(1.0e-12, 0.38, circuit.patch_inductance, circuit.bias_wire_inductance, F);
        assert_relative_eq!(y.value.re, oracle.re, max_relative = 1e-12);
        assert_relative_eq!(y.value.im, oracle.im, max_relative = 1e-12);
        assert!(y.susceptance() > 0.0 && y.susceptance() < 0.1);
    }

    #[test]
    fn conductance_linear_in_small_resistance() {
        let circuit = calibrated();
        let g1 = circuit.admittance_exact(1.0e-12, 0.2, F).unwrap().conductance();
        let g2 = circuit.admittance_exact(1.0e-12, 0.4, F).unwrap().conductance();
        assert_relative_eq!(g2 / g1, 2.0, max_relative = 0.05);
    }

    #[test]
    fn approximation_limits() {
        let circuit = calibrated();
        assert_eq!(circuit.admittance_approx(1e-12, 0.0, F).unwrap().conductance(), 0.0);
        let w = angular_frequency(F);
        let tiny = circuit.admittance_approx(1e-20, 0.3, F).unwrap();
        assert_relative_eq!(
            tiny.susceptance(),
            -1.0 / (w * circuit.bias_wire_inductance),
            max_relative = 1e-6
        );
    }

    #[test]
    fn approximation_error_within_two_percent() {
        let circuit = calibrated();
        for row in circuit.varactors.rows() {
            let exact = circuit
                .admittance_exact(row.capacitance, row.resistance, F)
                .unwrap()
                .value;
            let approx = circuit
                .admittance_approx(row.capacitance, row.resistance, F)
                .unwrap()
                .value;
            let rel = (exact - approx).norm() / exact.norm();
            assert!(rel <= 0.02, "{} V: relative error {rel}", row.voltage);
        }
    }

    #[test]
    fn resonance_is_rejected() {
        let circuit = calibrated();
        let w = angular_frequency(F);
        let c = 1.0 / (w * w * circuit.patch_inductance);
        assert!(matches!(
            circuit.admittance_exact(c * 1.01, 0.1, F),
            Err(Error::Resonance { .. })
        ));
        assert!(ElementCircuit::new(2e-9, 5e-9, VaractorTable::smv1405(), F).is_err());
    }

    #[test]
    fn voltage_ordering_of_susceptance() {
        let circuit = calibrated();
        let voltages = [30.0, 20.0, 15.0, 10.0, 5.0, 2.5, 0.0];
        let b: Vec<f64> = voltages
            .iter()
            .map(|&v| circuit.admittance_at_voltage(v, F).unwrap().susceptance())
            .collect();
        assert!(b.windows(2).all(|w| w[1] > w[0]), "{b:?}");
        for &v in &voltages {
            assert!(circuit.admittance_at_voltage(v, F).unwrap().conductance() >= 0.0);
        }
    }

    #[test]
    fn loss_is_an_order_below_susceptance() {
        let circuit = calibrated();
        let voltages = [30.0, 20.0, 15.0, 10.0, 5.0, 2.5, 0.0];
        let y: Vec<SurfaceAdmittance> = voltages
            .iter()
            .map(|&v| circuit.admittance_at_voltage(v, F).unwrap())
            .collect();
        // B vanishes at the anchor voltage, so the bound there uses the
        // smallest step to a neighbouring level.
        let min_step = y
            .windows(2)
            .map(|w| (w[1].susceptance() - w[0].susceptance()).abs())
            .fold(f64::INFINITY, f64::min);
        for (v, a) in voltages.iter().zip(&y) {
            let scale = a.susceptance().abs().max(min_step);
            assert!(
                a.conductance() <= 0.1 * scale,
                "{v} V: G={} B={}",
                a.conductance(),
                a.susceptance()
            );
        }
    }

    #[test]
    fn coupling_offset_is_additive() {
        let offset = Complex64::new(0.0, -0.002);
        let base = calibrated();
        let shifted = base.clone().with_coupling_offset(offset);
        let a = base.admittance_at_voltage(10.0, F).unwrap().value;
        let b = shifted.admittance_at_voltage(10.0, F).unwrap().value;
        assert_eq!(b - a, offset);
    }
}
