//! Closed-form single-antenna references and finite-difference gradients.
use trainprecode::oracle::{finite_diff_gradient, quadrature_1x1_with, QuadKind, QuadScheme};
use trainprecode::{utility, UtilityKind, UtilitySpec};

fn main() {
    for s in [0.1, 1.0, 10.0] {
        let a = quadrature_1x1_with(QuadKind::MutualInfo, s, QuadScheme::AdaptiveSimpson).unwrap();
        let b = quadrature_1x1_with(QuadKind::MutualInfo, s, QuadScheme::ExponentialIntegral).unwrap();
        println!("E log(1 + {s}|w|²): simpson {a:.12}, exponential integral {b:.12}");
    }
    let spec = UtilitySpec::new(UtilityKind::MutualInfo, 2).samples(5000);
    let s = [0.8, 0.3];
    println!("analytic ∇ {:.8?}", utility::gradient(&spec, &s).unwrap());
    println!("central  ∇ {:.8?}", finite_diff_gradient(spec, &s, 1e-5).unwrap());
}
