//! Bare interface reflection for the built-in media.

use medmatch::media::{fresnel_interface, Medium, DEFAULT_FREQUENCY};

fn main() -> medmatch::error::Result<()> {
    let air = Medium::air();
    println!(
        "{:<8} {:>10} {:>9} {:>12}",
        "medium", "Z (ohm)", "gamma", "through (dB)"
    );
    for name in Medium::builtin_names() {
        let m = Medium::by_name(name).expect("built-in");
        let z = m.intrinsic_impedance(DEFAULT_FREQUENCY)?;
        let r = fresnel_interface(&air, &m, DEFAULT_FREQUENCY)?;
        println!(
            "{:<8} {:>10.2} {:>9.4} {:>12.3}",
            name,
            z.re,
            r.gamma.re,
            10.0 * r.through_power.log10()
        );
    }
    Ok(())
}
