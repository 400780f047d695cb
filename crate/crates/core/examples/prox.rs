//! Proximal maps of nonsmooth radial potentials along a ray.

use deadcore::field::prox_radial;
use deadcore::RadialPotential;

fn main() -> deadcore::Result<()> {
    let tau = 0.125;
    let potentials = [
        ("characteristic", RadialPotential::characteristic(1.0)?),
        ("power law 0.5", RadialPotential::power_law(0.5, 1.0)?),
        ("power law 1", RadialPotential::power_law(1.0, 1.0)?),
        ("tabulated", RadialPotential::tabulated(vec![(0.0, 0.2), (0.5, 1.0)], 1.0)?),
    ];
    for (name, p) in potentials {
        let row: Vec<String> =
            [0.1, 0.3, 0.5, 0.7, 1.0].iter().map(|&rho| format!("{:.4}", prox_radial(&p, rho, tau))).collect();
        println!("{name:<15} prox at rho = 0.1, 0.3, 0.5, 0.7, 1.0: {}", row.join("  "));
    }
    Ok(())
}
