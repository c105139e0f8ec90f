//! Fits the element inductances to a target susceptance span and prints the
//! admittance at each control voltage.

use medmatch::controller::DEFAULT_VOLTAGES;
use medmatch::media::DEFAULT_FREQUENCY;
use medmatch::surface::{calibrate_inductances, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let table = VaractorTable::smv1405();
    let circuit = calibrate_inductances(&table, f, DEFAULT_SUSCEPTANCE_SPAN)?;
    println!(
        "L1 = {:.4} nH, L2 = {:.4} nH",
        circuit.patch_inductance * 1e9,
        circuit.bias_wire_inductance * 1e9
    );
    println!("{:>6} {:>8} {:>11} {:>11}", "V", "C (pF)", "G (S)", "B (S)");
    for v in DEFAULT_VOLTAGES {
        let (c, _) = table.at(v)?;
        let y = circuit.admittance_at_voltage(v, f)?;
        println!(
            "{v:>6} {:>8.3} {:>11.3e} {:>11.5}",
            c * 1e12,
            y.conductance(),
            y.susceptance()
        );
    }
    match calibrate_inductances(&table, f, (0.0, 10.0)) {
        Err(e) => println!("wider span: {e}"),
        Ok(_) => println!("wider span unexpectedly reachable"),
    }
    Ok(())
}
