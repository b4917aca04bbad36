//! Evaluating utilities and their gradients on an SNR profile.
use trainprecode::oracle::{quadrature_1x1, QuadKind};
use trainprecode::{Utility, UtilityKind, UtilitySpec};

fn main() {
    let s = [1.2, 0.4];
    for kind in [
        UtilityKind::MutualInfo,
        UtilityKind::MmseBound,
        UtilityKind::Harmonic,
        UtilityKind::LogdetShifted { nu: 2.0 },
        UtilityKind::LogDetLower,
        UtilityKind::JensenUpper2,
    ] {
        let u = Utility::new(UtilitySpec::new(kind, 2).samples(20_000).streams(2), 2).unwrap();
        let v = u.evaluate(&s);
        let g = u.gradient(&s).unwrap();
        println!("{:<18} {:>10.6} ± {:.1e}   ∇ = {:.5?}", kind.name(), v.value, v.std_error, g);
    }

    let mc = Utility::new(UtilitySpec::new(UtilityKind::MutualInfo, 1).samples(100_000), 1).unwrap();
    let v = mc.evaluate(&[1.0]);
    println!("1x1 at s = 1: MC {:.6} ± {:.1e}, quadrature {:.9}", v.value, v.std_error, quadrature_1x1(QuadKind::MutualInfo, 1.0).unwrap());
}
