//! Best continuous admittance and best control voltage for the default
//! stacks, with the reflection reduction around 2.4 GHz.

use medmatch::cascade::{StackSpec, TissueGeometry};
use medmatch::controller::DEFAULT_VOLTAGES;
use medmatch::matcher::{best_admittance, best_voltage, reflection_spectrum, SurfaceDrive, DEFAULT_SUSCEPTANCE_RANGE};
use medmatch::media::DEFAULT_FREQUENCY;
use medmatch::surface::{calibrate_inductances, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let circuit = calibrate_inductances(&VaractorTable::smv1405(), f, DEFAULT_SUSCEPTANCE_SPAN)?;
    let stacks = [
        ("water", StackSpec::air_water(6.0)?),
        ("tissue", StackSpec::air_tissue(TissueGeometry::default())?),
    ];
    for (name, stack) in stacks {
        let m = best_admittance(&stack, f, DEFAULT_SUSCEPTANCE_RANGE, 61)?;
        let v = best_voltage(&stack, &circuit, f, &DEFAULT_VOLTAGES)?;
        println!(
            "{name}: B = {:.5} S, {:.3} dB (bare {:.3} dB, gain {:.2} dB); best voltage {} V gives {:.3} dB",
            m.best_admittance.im,
            m.through_power_db,
            m.baseline_db,
            m.gain_db,
            v.best_voltage.unwrap_or_default(),
            v.through_power_db
        );
        let freqs: Vec<f64> = (0..=6).map(|i| 2.1e9 + i as f64 * 1e8).collect();
        for p in reflection_spectrum(&stack, &SurfaceDrive::Admittance(m.best_admittance), &freqs)? {
            println!("  {:.1} GHz  reduction {:>6.2} dB", p.frequency / 1e9, p.reduction_db);
        }
    }
    Ok(())
}
