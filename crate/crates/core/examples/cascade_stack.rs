//! Custom layered stack: ABCD cascade, reflection and transmission with and
//! without a shunt surface.

use num_complex::Complex64;

use medmatch::cascade::{solve_stack, StackSpec};
use medmatch::media::{Layer, Medium, DEFAULT_FREQUENCY};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let stack = StackSpec::new(
        Medium::air(),
        vec![
            Layer::from_mm(Medium::air(), 6.0)?,
            Layer::from_mm(Medium::skin(), 2.0)?,
            Layer::from_mm(Medium::fat(), 15.0)?,
        ],
        Medium::muscle(),
    );
    let m = stack.abcd(Complex64::new(0.0, 0.0), f)?;
    println!("bare ABCD: A={:.4} B={:.2} C={:.5} D={:.4}", m.a, m.b, m.c, m.d);
    for b in [0.0, 0.01, 0.0178, 0.03] {
        let sol = solve_stack(&stack, Complex64::new(0.0, b), f)?;
        println!(
            "B = {b:<7} S  |gamma|^2 = {:.4}  through = {:>7.3} dB",
            sol.reflected_power,
            sol.through_power_db()
        );
    }
    Ok(())
}
