//! Array model basics: steering vectors, their angular derivatives and the
//! mutual-coupling matrix, for a linear and a planar array.

use monobeam::array::{
    coupling_matrix, effective_response, steering_derivative_along, steering_vector,
};
use monobeam::{Angle, ArrayGeometry, Axis, CouplingModel};

fn main() -> monobeam::Result<()> {
    let line = ArrayGeometry::linear(8, 0.5)?;
    let a = steering_vector(&line, Angle::bearing(20.0))?;
    println!("8-element line, theta = 20 deg");
    for (i, x) in a.iter().enumerate() {
        println!("  a[{i}] = {:+.4} {:+.4}j  |a| = {:.3}", x.re, x.im, x.norm());
    }

    let da = steering_derivative_along(&line, Angle::bearing(0.0), Axis::Azimuth)?;
    println!("d a / d theta at boresight (per degree), last element: {:+.5} {:+.5}j", da[7].re, da[7].im);

    let coupling = CouplingModel::new(0.1, line.len())?;
    let m = coupling_matrix(&coupling);
    let row: Vec<String> = m.row(0).iter().map(|x| format!("{x:.4}")).collect();
    println!("coupling rho = 0.1, first row: {}", row.join(" "));
    let ma = effective_response(&line, &coupling, Angle::bearing(20.0))?;
    println!("coupled response M a, first element: {:+.4} {:+.4}j", ma[0].re, ma[0].im);

    // planar elements are numbered row by row
    let grid = ArrayGeometry::planar(4, 3, 0.5)?;
    let dir = Angle::new(10.0, -5.0);
    let (u, v) = dir.direction_cosines();
    println!("4 x 3 grid, az 10 el -5: u = {u:.4}, v = {v:.4}");
    let d_el = steering_derivative_along(&grid, dir, Axis::Elevation)?;
    for (p, d) in grid.positions().iter().zip(d_el.iter()).take(5) {
        println!("  element at ({:.1}, {:.1}): d/d el = {:+.4} {:+.4}j", p[0], p[1], d.re, d.im);
    }
    Ok(())
}
