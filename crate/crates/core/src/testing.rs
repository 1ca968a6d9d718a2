//! Helpers shared by unit and integration tests.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Haar-random 2x2 unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<G: Rng + ?Sized>(rng: &mut G) -> Matrix2<C64> {
    let mut gauss = || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    };
    let a = [gauss(), gauss()];
    let b = [gauss(), gauss()];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let e1 = [a[0] / na, a[1] / na];
    let proj = e1[0].conj() * b[0] + e1[1].conj() * b[1];
    let c = [b[0] - proj * e1[0], b[1] - proj * e1[1]];
    let nc = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    Matrix2::new(e1[0], c[0] / nc, e1[1], c[1] / nc)
}
