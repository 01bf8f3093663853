//! Sum beam plus azimuth and elevation difference beams on a 12 x 12 grid,
//! loosening the side-lobe level until the three supports separate.

use monobeam::analysis::sidelobe_levels;
use monobeam::config::SynthesisConfig;
use monobeam::reselection::{beam_pairs, relax_until_disjoint};

fn main() -> monobeam::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/planar-12x12.toml");
    let loaded = SynthesisConfig::load(&path)?;
    let relax = loaded.config.relaxation.expect("config has a [relaxation] table");
    let out = relax_until_disjoint(
        &loaded.specs,
        &loaded.geometry,
        &loaded.coupling,
        &loaded.config.solver,
        &loaded.reselection_options()?,
        relax.step_db,
        relax.max_attempts,
    )?;
    let r = &out.result;
    println!(
        "{:?} after relaxing {} dB ({} attempts), sizes {:?}",
        r.status,
        out.relaxed_by_db,
        out.attempts,
        r.support_sizes()
    );
    let pairs = beam_pairs(3);
    for (l, shared) in r.shared_history.iter().enumerate() {
        let cols: Vec<String> = pairs
            .iter()
            .zip(shared)
            .map(|((i, j), s)| format!("F{}/F{}: {s}", i + 1, j + 1))
            .collect();
        println!("iteration {}: {}", l + 1, cols.join(", "));
    }

    // 12 x 12 map of which beam owns each element
    let owner = |n: usize| {
        (0..3)
            .find(|&k| r.weights[k].support()[n])
            .map_or('.', |k| ['S', 'A', 'E'][k])
    };
    for iy in (0..12).rev() {
        let row: String = (0..12).map(|ix| owner(iy * 12 + ix)).collect();
        println!("  {row}");
    }

    for (k, spec) in out.specs.iter().enumerate() {
        let worst = sidelobe_levels(r.weights[k].values(), spec, &loaded.geometry, &loaded.coupling, 10)?
            .iter()
            .map(|s| (s.on_grid_db, s.off_grid_db))
            .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        println!("beam {}: cut SLL {:.2} dB sampled, {:.2} dB dense", k + 1, worst.0, worst.1);
    }
    Ok(())
}
