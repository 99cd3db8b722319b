//! Sweeps the 64-beam codebook over a two-path channel and compares the
//! best beam with the one the 32-beam subset picks.
//!
//! cargo run --example channel_sweep

use dronebeam::phy::{beam_sweep, build_channel, downsample_power, make_codebook, OfdmConfig, PathComponent, UlaArray};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = OfdmConfig::default();
    let array = UlaArray::default();
    let codebook = make_codebook(array.num_antennas, 64, array.element_spacing)?;

    for azimuth_deg in [20.0f64, 55.0, 90.0, 130.0] {
        let los = PathComponent {
            gain: Complex64::from_polar(2e-6, 0.0),
            delay: 0.0,
            azimuth: azimuth_deg.to_radians(),
            elevation: 0.3,
        };
        // weaker ground bounce arriving a little later and from below
        let bounce = PathComponent {
            gain: Complex64::from_polar(6e-7, 2.1),
            delay: 12e-9,
            azimuth: azimuth_deg.to_radians(),
            elevation: -0.3,
        };
        let channel = build_channel(&[los, bounce], &cfg, &array)?;
        let p64 = beam_sweep(&channel, &codebook, &cfg)?;
        let p32 = downsample_power(&p64)?;
        let loss_db = 10.0 * (p64.best_power() / p32.best_power()).log10();
        println!(
            "azimuth {azimuth_deg:>5.1} deg: 64-beam best {:>2} (u = {:+.3}), 32-beam best {:>2}, loss {loss_db:.2} dB",
            p64.best_index, codebook.grid[p64.best_index], p32.best_index
        );
    }
    Ok(())
}
