//! Effective SNR of a pilot/precoder pair, in matrix form and in the
//! channel eigenbasis.
use trainprecode::channel::{effective_snr, estimation_covariances, snr_profile_vec};
use trainprecode::{instances, ChannelCovariance, GramMatrix};

fn main() {
    let r_eigs = [0.6, 0.3, 0.1];
    let mut rng = instances::rng(4);
    let u = instances::unitary(&mut rng, 3);
    let r = ChannelCovariance::new(instances::conjugate_diag(&u, &r_eigs)).unwrap();

    // pilots and precoder diagonal in the channel eigenbasis
    let (p, q) = ([2.0, 1.0, 0.0], [1.5, 0.5, 0.0]);
    let pm = GramMatrix::pilot(instances::conjugate_diag(&u, &p)).unwrap();
    let qm = GramMatrix::transmit(instances::conjugate_diag(&u, &q)).unwrap();

    let cov = estimation_covariances(&pm, &r);
    println!("tr R̂ = {:.6}, tr R̃ = {:.6}", cov.r_hat.trace(), cov.r_tilde.trace());
    let snr = effective_snr(&pm, &qm, &r);
    println!("matrix profile:  {:.9?}", snr.profile);
    println!("vector profile:  {:.9?}", snr_profile_vec(&p, &q, &r_eigs));
}
