//! Best pilots for a prescribed precoder, aligned and misaligned with the
//! channel eigenbasis.
use trainprecode::pilot::optimize_pilot;
use trainprecode::{instances, ChannelCovariance, GramMatrix, Utility, UtilityKind, UtilitySpec};

fn main() {
    let r_eigs = [0.5, 0.3, 0.2];
    let mut rng = instances::rng(5);
    let u_r = instances::unitary(&mut rng, 3);
    let r = ChannelCovariance::new(instances::conjugate_diag(&u_r, &r_eigs)).unwrap();
    let u = Utility::new(UtilitySpec::new(UtilityKind::LogdetShifted { nu: 1.0 }, 1), 3).unwrap();

    let aligned = GramMatrix::transmit(instances::conjugate_diag(&u_r, &[2.0, 1.0, 0.0])).unwrap();
    let sol = optimize_pilot(&aligned, &r, 3.0, &u).unwrap();
    println!("aligned: utility {:.6}, tr P {:.6}, rank P {}", sol.value.value, sol.p.trace(), sol.p.rank());

    let generic = GramMatrix::transmit(instances::psd_with_trace(&mut rng, 3, 2, 3.0)).unwrap();
    let sol = optimize_pilot(&generic, &r, 3.0, &u).unwrap();
    println!("generic: utility {:.6}, tr P {:.6}, rank P {}", sol.value.value, sol.p.trace(), sol.p.rank());
}
