//! Pattern analysis of a synthesized pair: writes both beams' patterns and
//! reports side-lobe levels, beamwidth and the difference-beam slope found
//! by finite differences.

use monobeam::analysis::{
    beam_pattern_cut, main_lobe_beamwidth, max_sll, slope_at, slope_finite_difference,
};
use monobeam::array::linspace;
use monobeam::config::SynthesisConfig;
use monobeam::io::{write_pattern, Header};
use monobeam::reselection::run;
use monobeam::{Angle, Axis, Interval};

fn main() -> monobeam::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/tiny-16.toml");
    let loaded = SynthesisConfig::load(&path)?;
    let (geom, cm) = (&loaded.geometry, &loaded.coupling);
    let r = run(&loaded.specs, geom, cm, &loaded.config.solver, &loaded.reselection_options()?)?;
    println!("{:?}, sizes {:?}", r.status, r.support_sizes());

    let coords = linspace(-90.0, 90.0, 3601);
    let out = std::env::temp_dir().join("monobeam-example");
    std::fs::create_dir_all(&out)?;
    let header = Header::new("pattern", &loaded.hash, loaded.seed());
    let region: Vec<Interval> = vec!["[-90, -16]".parse()?, "[16, 90]".parse()?];
    for (k, w) in r.weights.iter().enumerate() {
        let p = beam_pattern_cut(w.values(), geom, cm, Axis::Azimuth, 0.0, &coords)?;
        let file = out.join(format!("pattern-{}.csv", k + 1));
        write_pattern(&file, &header.for_beam(k + 1), &p)?;
        println!("beam {}: peak side lobe beyond 16 deg {:.2} dB -> {}", k + 1, max_sll(&p, &region)?, file.display());
    }

    let bw = main_lobe_beamwidth(r.weights[0].values(), geom, cm, Axis::Azimuth, Angle::BORESIGHT)?;
    println!("sum beamwidth {bw:.3} deg");
    let d = r.weights[1].values();
    let exact = slope_at(d, geom, cm, Angle::BORESIGHT, Axis::Azimuth)?;
    let fd = slope_finite_difference(d, geom, cm, Angle::BORESIGHT, Axis::Azimuth, 1e-4)?;
    println!("difference slope per degree: analytic {exact:.6}, finite difference {fd:.6}");
    Ok(())
}
