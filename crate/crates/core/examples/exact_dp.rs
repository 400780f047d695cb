//! Exact dynamic programming over monotone level paths, cross-checked by
//! enumerating every path on a small instance.

use deadcore::oracles::brute_force_dp_oracle;
use deadcore::radial::solve_dp;
use deadcore::{RadialPotential, TieBreak};

fn main() -> deadcore::Result<()> {
    let p = RadialPotential::tabulated(vec![(0.0, 0.3), (0.4, 0.8), (0.7, 1.1)], 1.0)?;
    let (n, radius, lambda, cells, m) = (2, 2.5, 1.0, 18, 9);
    let dp = solve_dp(&p, n, radius, lambda, cells, m, TieBreak::PreferLow)?;
    let brute = brute_force_dp_oracle(&p, n, radius, lambda, cells, m)?;
    println!("DP energy          {:.17e}", dp.energy);
    println!("enumeration energy {:.17e}", brute.energy);
    println!("profile {:?}", dp.values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    assert_eq!(dp.energy, brute.energy);
    Ok(())
}
