use medmatch::cascade::{solve_stack, StackSpec, TissueGeometry};
use medmatch::channel::{CascadeResponse, ElementResponse};
use medmatch::controller::{stage1_uniform_probe, ControlTrace, FnOracle, VoltageSet};
use medmatch::matcher::{best_admittance, best_voltage, reflection_spectrum, SurfaceDrive, DEFAULT_SUSCEPTANCE_RANGE};
use medmatch::media::DEFAULT_FREQUENCY;
use medmatch::surface::{calibrate_inductances, ElementCircuit, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

const F: f64 = DEFAULT_FREQUENCY;

fn circuit() -> ElementCircuit {
    calibrate_inductances(&VaractorTable::smv1405(), F, DEFAULT_SUSCEPTANCE_SPAN).unwrap()
}

fn tissue(gap_mm: f64, fat_mm: f64) -> StackSpec {
    StackSpec::air_tissue(TissueGeometry {
        gap_mm,
        fat_mm,
        ..TissueGeometry::default()
    })
    .unwrap()
}

fn levels() -> Vec<f64> {
    VoltageSet::default().levels().to_vec()
}

#[test]
fn fat_thickness_changes_the_chosen_voltage() {
    let chosen: Vec<f64> = [5.0, 15.0, 30.0, 50.0]
        .iter()
        .map(|&fat| {
            best_voltage(&tissue(6.0, fat), &circuit(), F, &levels())
                .unwrap()
                .best_voltage
                .unwrap()
        })
        .collect();
    assert!(chosen.iter().any(|&v| v != chosen[0]), "{chosen:?}");
}

#[test]
fn tissue_and_water_want_different_voltages_at_small_gap() {
    let water = best_voltage(&StackSpec::air_water(2.0).unwrap(), &circuit(), F, &levels()).unwrap();
    let tissue = best_voltage(&tissue(2.0, 15.0), &circuit(), F, &levels()).unwrap();
    assert_ne!(water.best_voltage, tissue.best_voltage);
}

#[test]
fn passive_match_never_exceeds_unity() {
    for g in 2..=12 {
        let m = best_admittance(
            &StackSpec::air_water(g as f64).unwrap(),
            F,
            DEFAULT_SUSCEPTANCE_RANGE,
            61,
        )
        .unwrap();
        assert!(m.through_power_db <= 1e-12);
        assert!(m.gain_db >= 0.0);
    }
}

fn spectrum_trough(stack: &StackSpec, drive: &SurfaceDrive) -> (f64, Vec<(f64, f64)>) {
    let freqs: Vec<f64> = (0..=120).map(|i| 1.8e9 + i as f64 * 1e7).collect();
    let points = reflection_spectrum(stack, drive, &freqs).unwrap();
    let best = points.iter().fold((0.0, f64::NEG_INFINITY), |b, p| {
        if p.reduction_db > b.1 {
            (p.frequency, p.reduction_db)
        } else {
            b
        }
    });
    (best.0, points.iter().map(|p| (p.frequency, p.reduction_db)).collect())
}

#[test]
fn reduction_peaks_near_the_design_frequency() {
    for stack in [StackSpec::air_water(6.0).unwrap(), tissue(6.0, 15.0)] {
        let m = best_admittance(&stack, F, DEFAULT_SUSCEPTANCE_RANGE, 61).unwrap();
        let (_, spectrum) = spectrum_trough(&stack, &SurfaceDrive::Admittance(m.best_admittance));
        let at = |f: f64| spectrum.iter().find(|(x, _)| (x - f).abs() < 1.0).unwrap().1;
        assert!(at(F) >= at(F - 3e8) && at(F) >= at(F + 3e8));
    }
}

#[test]
fn lower_capacitance_moves_the_trough() {
    let stack = StackSpec::air_water(6.0).unwrap();
    let c = circuit();
    let v = best_voltage(&stack, &c, F, &levels()).unwrap().best_voltage.unwrap();
    let (matched_c, _) = c.varactors.at(v).unwrap();
    let (f_matched, _) = spectrum_trough(
        &stack,
        &SurfaceDrive::Capacitance {
            circuit: c.clone(),
            capacitance: matched_c,
        },
    );
    let (f_lower, _) = spectrum_trough(
        &stack,
        &SurfaceDrive::Capacitance {
            circuit: c,
            capacitance: matched_c * 0.9,
        },
    );
    assert_ne!(f_matched, f_lower);
}

#[test]
fn uniform_probe_on_rising_susceptance_picks_zero_volts() {
    // s(V) = |B(V)|, which rises as V falls.
    let c = circuit();
    let mut oracle = FnOracle::new(4, |cfg: &medmatch::channel::SurfaceConfig| {
        let b = c.admittance_at_voltage(cfg.voltages[0], F)?.susceptance().abs();
        Ok(20.0 * (b * 4.0).log10())
    });
    let u = stage1_uniform_probe(&mut oracle, &VoltageSet::default(), &mut ControlTrace::default()).unwrap();
    assert_eq!((u.v_on, u.v_off), (0.0, 30.0));
}

#[test]
fn cascade_response_is_transmission_coefficient() {
    let stack = StackSpec::air_water(6.0).unwrap();
    let c = circuit();
    let r = CascadeResponse {
        stack: stack.clone(),
        circuit: c.clone(),
        frequency: F,
    };
    for v in levels() {
        let y = c.admittance_at_voltage(v, F).unwrap().value;
        assert_eq!(r.response(v).unwrap(), solve_stack(&stack, y, F).unwrap().t);
    }
    // A lossless gap only rotates the bare air-to-water transmission of 0.2.
    assert!((r.bare().unwrap().norm() - 0.2).abs() < 1e-12);
}
