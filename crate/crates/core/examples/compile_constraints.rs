//! Turning beam specifications into constraint systems and checking a
//! weight vector against them.

use monobeam::constraints::{check_feasibility, compile, BeamSpec, SidelobeRegion, SlopeUnit};
use monobeam::{ArrayGeometry, CouplingModel, C64};
use nalgebra::DVector;

fn main() -> monobeam::Result<()> {
    let geom = ArrayGeometry::linear(16, 0.5)?;
    let coupling = CouplingModel::none(16);

    let sum = BeamSpec::sum().with_sidelobe(SidelobeRegion::symmetric(12.0, 90, -13.0));
    let diff = BeamSpec::difference(-8.0, SlopeUnit::PerRadian)
        .with_sidelobe(SidelobeRegion::symmetric(16.0, 90, -10.0));

    for (name, spec) in [("sum", &sum), ("difference", &diff)] {
        let sys = compile(spec, &geom, &coupling)?;
        println!(
            "{name}: {} equalities, {} side-lobe bounds",
            sys.equalities.len(),
            sys.bounds.len()
        );
    }

    // uniform taper normalized to unit boresight gain
    let uniform = DVector::from_element(16, C64::new(1.0 / 16.0, 0.0));
    for (name, spec) in [("sum", &sum), ("difference", &diff)] {
        let sys = compile(spec, &geom, &coupling)?;
        let rep = check_feasibility(&uniform, &sys, 1e-8, 1e-8);
        println!(
            "uniform weights vs {name}: eq residual {:.2e}, worst bound excess {:.2e}, feasible {}",
            rep.max_eq_residual, rep.max_ineq_violation, rep.pass
        );
    }
    Ok(())
}
