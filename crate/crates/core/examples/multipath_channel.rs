//! Samples a seeded multipath channel and evaluates it with the surface bare
//! and uniformly biased.

use medmatch::cascade::StackSpec;
use medmatch::channel::{
    amplitude_db, composite_channel, sample_channel, CascadeResponse, ChannelParams, SurfaceConfig, SurfaceSetting,
};
use medmatch::media::DEFAULT_FREQUENCY;
use medmatch::surface::{calibrate_inductances, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let response = CascadeResponse {
        stack: StackSpec::air_water(6.0)?,
        circuit: calibrate_inductances(&VaractorTable::smv1405(), f, DEFAULT_SUSCEPTANCE_SPAN)?,
        frequency: f,
    };
    let params = ChannelParams::with_elements(16);
    let channel = sample_channel(42, &params)?;
    let bare = composite_channel(&channel, SurfaceSetting::Bare, &response)?;
    println!("bare: {:.2} dB", amplitude_db(bare));
    for v in [30.0, 10.0, 0.0] {
        let cfg = SurfaceConfig::uniform(16, v);
        let h = composite_channel(&channel, SurfaceSetting::Config(&cfg), &response)?;
        println!("all at {v:>4} V: {:.2} dB", amplitude_db(h));
    }
    if std::env::args().any(|a| a == "--dump") {
        print!("{}", channel.to_csv());
    }
    Ok(())
}
