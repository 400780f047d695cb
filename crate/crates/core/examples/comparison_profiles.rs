//! Upper and lower radial comparison profiles for the characteristic potential
//! at twice the critical radius, checked against the harmonic-core solution.

use deadcore::oracles::{critical_radius_n2_characteristic, harmonic_core_profile, Branch};
use deadcore::{LevelSpec, RadialPotential, RadialSolver};

fn main() -> deadcore::Result<()> {
    let q = 1.0;
    let radius = 2.0 * critical_radius_n2_characteristic(q);
    let p = RadialPotential::characteristic(q)?;
    let solver = RadialSolver { cells: 2000, levels: LevelSpec::Uniform { m: 400 }, ..RadialSolver::default() };
    let pair = solver.comparison_pair(&p, 2, radius)?;
    let report = solver.dead_core_report(&pair, &p)?;
    let oracle = harmonic_core_profile(q, radius, Branch::Upper)?;

    println!("R = {radius:.6}, energy {:.6}, ordering gap {:.1e}", pair.upper.energy, pair.ordering_gap());
    println!("core radius {:.4} (harmonic oracle {:.4})", report.core_radius, oracle.core_edge().unwrap_or(0.0));
    println!("{}", serde_json::to_string_pretty(&report.to_json())?);
    for r in [0.0, 3.0, 3.9, 4.2, 4.5, radius] {
        println!(
            "  r = {r:.3}: upper {:.5}, lower {:.5}, oracle {:.5}",
            pair.upper.eval(r),
            pair.lower.eval(r),
            oracle.value(r)
        );
    }
    Ok(())
}
