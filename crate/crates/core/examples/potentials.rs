//! Dead-core integrals `I_q` for the built-in potential families.

use deadcore::{IqVariant, RadialKind, RadialPotential};

fn main() -> deadcore::Result<()> {
    let q = 1.0;
    let kinds = [
        RadialKind::Characteristic,
        RadialKind::PowerLaw { alpha: 0.5 },
        RadialKind::PowerLaw { alpha: 1.0 },
        RadialKind::PowerLaw { alpha: 2.0 },
        RadialKind::Quadratic,
        RadialKind::Tabulated { breakpoints: vec![(0.0, 0.25), (0.5, 1.0)] },
    ];
    println!("{:<44} {:>12} {:>12} {:>14}", "potential", "I_q(1/sqrtW)", "I_q(1/sqrt2W)", "W(q/2), W(q)");
    for kind in kinds {
        let p = RadialPotential::new(kind.clone(), q)?;
        let a = p.iq(IqVariant::SqrtW)?;
        let b = p.iq(IqVariant::Sqrt2W)?;
        println!(
            "{:<44} {:>12.6} {:>12.6} {:>7.3}, {:.3}",
            format!("{kind:?}"),
            a.value,
            b.value,
            p.value(q / 2.0),
            p.value(q)
        );
    }
    Ok(())
}
