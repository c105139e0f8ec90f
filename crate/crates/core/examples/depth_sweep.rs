//! Endpoint depth inside a conductive load: absolute power falls, the gain
//! from matching does not.

use num_complex::Complex64;

use medmatch::cascade::{solve_stack, StackSpec};
use medmatch::matcher::{best_admittance, DEFAULT_SUSCEPTANCE_RANGE};
use medmatch::media::{Layer, Medium, DEFAULT_FREQUENCY};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let saline = Medium::water().with_conductivity(2.0)?;
    let base = StackSpec::new(Medium::air(), vec![Layer::from_mm(Medium::air(), 6.0)?], saline);
    let y = best_admittance(&base.clone().with_load_depth(0.02)?, f, DEFAULT_SUSCEPTANCE_RANGE, 61)?.best_admittance;
    for depth_cm in 2..=10 {
        let stack = base.clone().with_load_depth(depth_cm as f64 * 1e-2)?;
        let on = solve_stack(&stack, y, f)?.through_power_db();
        let off = solve_stack(&stack, Complex64::new(0.0, 0.0), f)?.through_power_db();
        println!(
            "{depth_cm:>2} cm: matched {on:>8.2} dB, bare {off:>8.2} dB, gain {:.4} dB",
            on - off
        );
    }
    Ok(())
}
