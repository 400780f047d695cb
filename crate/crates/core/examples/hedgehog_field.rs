//! Vector field on a disk with hedgehog boundary data and the characteristic
//! potential, compared with the radial upper profile on interior balls.

use deadcore::diagnostics::{verify_comparison, ComparisonMode};
use deadcore::field::{BoundarySpec, CascadeOptions, FieldProblem, Geometry};
use deadcore::oracles::critical_radius_n2_characteristic;
use deadcore::{LevelSpec, PotentialSpec, RadialPotential, RadialSolver};

fn main() -> deadcore::Result<()> {
    let q = 1.0;
    let disk = 2.0 * critical_radius_n2_characteristic(q);
    let p = RadialPotential::characteristic(q)?;
    let problem = FieldProblem {
        geometry: Geometry::Disk { radius: disk },
        cells: 160,
        boundary: BoundarySpec::Hedgehog,
        spec: PotentialSpec::radial(p.clone(), 2)?,
    };
    let (field, stats) = problem.solve_cascade(&CascadeOptions::default())?;
    let last = stats.last().expect("at least one stage");
    println!("energy {:.6} after {} iterations (converged {})", last.final_energy, last.iterations, last.converged);

    let solver = RadialSolver { cells: 1000, levels: LevelSpec::Uniform { m: 200 }, ..RadialSolver::default() };
    for (center, radius) in [([0.0, 0.0], disk * 0.5), ([1.0, 0.0], 3.5), ([0.0, 0.0], disk * 0.98)] {
        let pair = solver.comparison_pair(&p, 2, radius)?;
        let v = verify_comparison(&field, &pair, center, radius, ComparisonMode::Interior)?;
        println!(
            "ball {center:?} R {radius:.3}: max violation {:.3e}, tol {:.3e}, {:?}",
            v.max_violation, v.tolerance, v.verdict
        );
    }
    Ok(())
}
