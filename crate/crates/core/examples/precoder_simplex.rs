//! The achievable SNR profiles for fixed pilots form a simplex; the best
//! precoder is found over it.
use trainprecode::precoder::{optimize_precoder, simplex_region};
use trainprecode::{instances, ChannelCovariance, GramMatrix, Utility, UtilityKind, UtilitySpec};

fn main() {
    let mut rng = instances::rng(11);
    let r = ChannelCovariance::new(instances::psd_with_rank(&mut rng, 3, 3, 0.2, 1.0)).unwrap();
    let p = GramMatrix::pilot(instances::psd_with_trace(&mut rng, 3, 2, 4.0)).unwrap();
    let mu_q = 2.0;

    let region = simplex_region(&p, &r, mu_q).unwrap();
    println!("vertex SNRs ω = {:.6?}", region.omegas);

    let u = Utility::new(UtilitySpec::new(UtilityKind::MutualInfo, 2).samples(5000), 3).unwrap();
    let sol = optimize_precoder(&p, &r, mu_q, &u).unwrap();
    println!("optimal profile {:.6?}, utility {:.6}", sol.profile, sol.value.value);
    println!("tr Q = {:.9}, rank Q = {}", sol.q.trace(), sol.q.rank());
    println!("membership residual {:.2e}", region.membership_residual(&sol.profile));
}
