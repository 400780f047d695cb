//! Pohozaev balance on a closed-form profile and its first-order convergence
//! on computed profiles.

use deadcore::diagnostics::{pohozaev_closed_form, pohozaev_profile};
use deadcore::oracles::first_integral_profile_n1;
use deadcore::{LevelSpec, RadialPotential, RadialSolver};

fn main() -> deadcore::Result<()> {
    let p = RadialPotential::power_law(1.0, 1.0)?;
    let oracle = first_integral_profile_n1(&p, 3.0)?;
    let scan = pohozaev_closed_form(&oracle, &p, &[0.5, 1.0, 2.0, 2.9])?;
    println!("n = 1 closed form: max residual {:.2e}", scan.max_residual());

    for cells in [500, 1000, 2000, 4000] {
        let solver = RadialSolver { cells, levels: LevelSpec::Uniform { m: cells / 5 }, ..RadialSolver::default() };
        let pair = solver.comparison_pair(&p, 2, 3.0)?;
        let scan = pohozaev_profile(&pair.upper, &p, &[1.5, 2.0])?;
        let res: Vec<String> = scan.records.iter().map(|r| format!("r={} {:.3e}", r.r, r.residual)).collect();
        println!("n = 2, N = {cells}: {}", res.join(", "));
    }
    Ok(())
}
