//! Positivity of a scalar minimizer when `I_q` diverges and the data are positive.

use deadcore::diagnostics::maximum_principle_check;
use deadcore::field::{BoundarySpec, CascadeOptions, FieldProblem, Geometry};
use deadcore::{PotentialSpec, RadialPotential};

fn main() -> deadcore::Result<()> {
    let spec = PotentialSpec::radial(RadialPotential::power_law(2.0, 1.0)?, 1)?;
    let problem = FieldProblem {
        geometry: Geometry::Rectangle { lo: [0.0, 0.0], hi: [6.0, 2.0] },
        cells: 192,
        boundary: BoundarySpec::Edges { left: vec![0.5], right: vec![1.0], bottom: vec![0.5], top: vec![0.5] },
        spec: spec.clone(),
    };
    let (field, _) = problem.solve_cascade(&CascadeOptions::default())?;
    let rec = maximum_principle_check(&field, &spec, None, None)?;
    println!(
        "interior minimum {:.4e} at {:?} over {} nodes: {:?}",
        rec.min_value, rec.argmin, rec.nodes_checked, rec.verdict
    );
    Ok(())
}
