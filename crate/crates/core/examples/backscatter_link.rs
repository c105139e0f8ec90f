//! Backscatter links: the controller maximises the two-way product and the
//! gain is compared with the one-way gain of the same configuration.

use medmatch::cascade::StackSpec;
use medmatch::channel::{one_way_gain, sample_channel, CascadeResponse, ChannelParams, NoiseModel};
use medmatch::controller::{ControlLayout, ControllerParams};
use medmatch::experiment::{median, run_links, LinkMode, LinkSetup};
use medmatch::media::DEFAULT_FREQUENCY;
use medmatch::surface::{calibrate_inductances, VaractorTable, DEFAULT_SUSCEPTANCE_SPAN};

fn main() -> medmatch::error::Result<()> {
    let f = DEFAULT_FREQUENCY;
    let source = CascadeResponse {
        stack: StackSpec::air_water(6.0)?,
        circuit: calibrate_inductances(&VaractorTable::smv1405(), f, DEFAULT_SUSCEPTANCE_SPAN)?,
        frequency: f,
    };
    let layout = ControlLayout::element_wise(64);
    let params = ControllerParams::for_layout(&layout);
    let mut setup = LinkSetup::new(
        &source,
        ChannelParams::with_elements(64),
        NoiseModel::default(),
        layout,
        params,
    )?;
    setup.mode = LinkMode::Backscatter;
    let links = run_links(&setup, 1, 45)?;
    let mut one_way = Vec::new();
    for l in &links {
        let ch = sample_channel(l.seeds.channel, &setup.channel)?;
        one_way.push(one_way_gain(
            &ch,
            &l.trace.best().expect("probed").config,
            &setup.response,
        )?);
    }
    let two_way: Vec<f64> = links.iter().map(|l| l.gain_db).collect();
    println!(
        "45 links: median backscatter gain {:.2} dB, median one-way {:.2} dB",
        median(&two_way),
        median(&one_way)
    );
    Ok(())
}
