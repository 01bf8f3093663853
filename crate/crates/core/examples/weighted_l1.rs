//! The convex subproblem on its own: minimize sum p_i |w_i| subject to one
//! beam's constraints. Making the left half expensive pushes the solution
//! onto the right half.

use monobeam::constraints::{compile, BeamSpec, SampleMode, SidelobeRegion};
use monobeam::solver::{SolverOptions, WeightedL1};
use monobeam::{ArrayGeometry, CouplingModel};

fn main() -> monobeam::Result<()> {
    let n = 24;
    let geom = ArrayGeometry::linear(n, 0.5)?;
    let spec = BeamSpec::sum()
        .with_sidelobe(SidelobeRegion::symmetric(10.0, 161, -10.0).with_mode(SampleMode::Grid));
    let sys = compile(&spec, &geom, &CouplingModel::none(n))?;
    let opts = SolverOptions::default();
    let mut problem = WeightedL1::new(&sys);

    for (label, p) in [
        ("flat", vec![1.0; n]),
        ("left half expensive", (0..n).map(|i| if i < n / 2 { 100.0 } else { 1.0 }).collect()),
    ] {
        let sol = problem.solve(&p, &opts)?;
        let max = sol.w.iter().map(|w| w.norm()).fold(0.0, f64::max);
        let used: Vec<usize> = (0..n).filter(|&i| sol.w[i].norm() > 1e-4 * max).collect();
        println!(
            "{label}: {:?}, objective {:.5}, {} rounds, {} active bounds",
            sol.status, sol.objective, sol.rounds, sol.active_bounds
        );
        println!("  support ({}): {used:?}", used.len());
    }
    Ok(())
}
