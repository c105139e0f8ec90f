//! Runs the three-stage controller on one simulated link and prints the
//! probe budget and the gain over the bare surface.

use medmatch::cascade::StackSpec;
use medmatch::channel::{
    one_way_gain, sample_channel, CascadeResponse, ChannelOracle, ChannelParams, NoiseModel, TableResponse,
};
use medmatch::controller::{run_controller, ControlLayout, ControllerParams, Stage};
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
    let response = TableResponse::tabulate(&source, params.voltages.levels())?;
    let channel = sample_channel(3, &ChannelParams::with_elements(64))?;
    let noise = NoiseModel {
        power_db: Some(-40.0),
        ..NoiseModel::default()
    };
    let mut oracle = ChannelOracle::new(&channel, &response, noise, 3);
    let out = run_controller(&mut oracle, &layout, &params).map_err(|f| f.error)?;
    println!(
        "on = {} V, off = {} V, tuned to {:?}; {} elements on",
        out.uniform.v_on,
        out.uniform.v_off,
        out.tuned,
        out.on_set.len()
    );
    println!(
        "probes: {} / {} / {}",
        out.trace.count(Stage::Uniform),
        out.trace.count(Stage::Voting),
        out.trace.count(Stage::FineTune)
    );
    println!(
        "gain over bare surface: {:.2} dB",
        one_way_gain(&channel, &out.config, &response)?
    );
    Ok(())
}
