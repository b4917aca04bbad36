//! Generalized eigenvalues, square roots and pseudoinverses on Hermitian
//! matrices.
use trainprecode::hermitian::{eig_hermitian, frobenius, gevp, pinv, sqrt_psd};
use trainprecode::instances;

fn main() {
    let mut rng = instances::rng(1);
    let a = instances::psd_with_rank(&mut rng, 3, 2, 0.5, 2.0);
    let b = instances::psd_with_rank(&mut rng, 3, 3, 0.5, 2.0);

    let e = gevp(&a, &b).expect("B is positive definite");
    println!("generalized eigenvalues of (A, B): {:.6?}", e.values);
    let x = &e.basis;
    println!("|Xᴴ B X − I| = {:.2e}", frobenius(&(x.adjoint() * b.matrix() * x - trainprecode::CMat::identity(3, 3))));

    let root = sqrt_psd(&a).unwrap();
    println!("|√A √A − A| = {:.2e}", frobenius(&(root.matrix() * root.matrix() - a.matrix())));

    let ap = pinv(a.matrix());
    println!("|A A⁺ A − A| = {:.2e}", frobenius(&(a.matrix() * &ap * a.matrix() - a.matrix())));
    println!("eigenvalues of A: {:.6?}", eig_hermitian(&a).values);
}
