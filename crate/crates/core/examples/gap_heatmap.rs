//! Through-power heatmap over gap and susceptance; writes CSV to stdout
//! when given `--csv`, otherwise prints the best susceptance per gap.

use num_complex::Complex64;

use medmatch::cascade::StackSpec;
use medmatch::matcher::{sweep_through_power, Axis, SweepGrid};
use medmatch::media::DEFAULT_FREQUENCY;

fn main() -> medmatch::error::Result<()> {
    let grid = SweepGrid {
        axis1: Axis::stepped("gap_mm", 2.0, 12.0, 1.0)?,
        axis2: Axis::stepped("susceptance_s", 0.0, 0.12, 0.002)?,
        frequency: DEFAULT_FREQUENCY,
    };
    let heatmap = sweep_through_power(&grid, |gap, b| Ok((StackSpec::air_water(gap)?, Complex64::new(0.0, b))))?;
    if std::env::args().any(|a| a == "--csv") {
        print!("{}", heatmap.to_csv());
        return Ok(());
    }
    for (i, gap) in heatmap.axis1.values.iter().enumerate() {
        let (j, db) = heatmap.row_argmax(i);
        println!("gap {gap:>4} mm: best B = {:.3} S, {db:.3} dB", heatmap.axis2.values[j]);
    }
    Ok(())
}
