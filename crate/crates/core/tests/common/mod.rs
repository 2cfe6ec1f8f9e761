#![allow(dead_code)]

use brunoform::derivation::LogDerivation;
use brunoform::monomial::{exponents_in_range, Exponent};
use brunoform::normalize::SPerturbation;
use brunoform::{Automorphism, BigRational as Q, Coeff, Gaussian, Series};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn q(v: i64) -> Q {
    Q::from_i64(v)
}

pub fn qv(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&c| q(c)).collect()
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub const CONE_FIELD: &str = "vars: x, y, z\ni*x*dx - i*y*dy + (x*y - z^2)*(x*dx + y*dy + z*dz)\n";

pub fn cone_field(order: usize) -> SPerturbation<Gaussian> {
    let i = Gaussian::i();
    let one = vec![Gaussian::one(); 3];
    let r = LogDerivation::monomial(Exponent::from([1, 1, 0]), one.clone(), order)
        .sub(&LogDerivation::monomial(Exponent::from([0, 0, 2]), one, order));
    SPerturbation::new(vec![i.clone(), i.neg(), Gaussian::zero()], r).unwrap()
}

pub fn cone(order: usize) -> Series<Gaussian> {
    let v = |i| Series::<Gaussian>::variable(3, order, i);
    v(0).mul(&v(1)).sub(&v(2).pow(2))
}

/// The resonant eigenvalue vectors used by the randomized criteria.
pub fn resonant_lambdas() -> Vec<Vec<Q>> {
    vec![qv(&[1, -1]), qv(&[2, -3]), qv(&[1, -1, 0])]
}

pub fn small_nonzero<R: Rng>(rng: &mut R) -> i64 {
    *[-2i64, -1, 1, 2].choose(rng).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<Q> {
    loop {
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
        if v.iter().any(|c| *c != 0) {
            return qv(&v);
        }
    }
}

/// `Σ x^m L(v_m)` with `terms` random monomials of log degree in `lo..=hi`.
pub fn random_nonlinear<R: Rng>(rng: &mut R, n: usize, lo: usize, hi: usize, terms: usize, order: usize) -> LogDerivation<Q> {
    let pool = exponents_in_range(n, lo, hi);
    let mut d = LogDerivation::zero(n, order);
    for _ in 0..terms {
        let m = pool.choose(rng).unwrap().clone();
        d = d.add(&LogDerivation::monomial(m, random_vector(rng, n), order));
    }
    d
}

/// Nonlinear part supported on resonant monomials only.
pub fn random_resonant<R: Rng>(rng: &mut R, lambda: &[Q], hi: usize, terms: usize, order: usize) -> LogDerivation<Q> {
    let n = lambda.len();
    let pool: Vec<Exponent> = exponents_in_range(n, 1, hi)
        .into_iter()
        .filter(|m| brunoform::series::weight(lambda, m).is_zero())
        .collect();
    let mut d = LogDerivation::zero(n, order);
    for _ in 0..terms {
        let m = pool.choose(rng).unwrap().clone();
        d = d.add(&LogDerivation::monomial(m, random_vector(rng, n), order));
    }
    d
}

pub fn random_poly<R: Rng>(rng: &mut R, n: usize, lo: usize, hi: usize, terms: usize, order: usize) -> Series<Q> {
    let pool = exponents_in_range(n, lo, hi);
    let mut s: Series<Q> = Series::zero(n, order);
    for _ in 0..terms {
        let m = pool.choose(rng).unwrap().clone();
        s.add_term(m.clone(), s.coeff(&m).add(&q(small_nonzero(rng))));
    }
    s
}

/// `x_i ↦ x_i (1 + h_i)` with random polynomial `h_i`, `h_i(0) = 0`.
pub fn random_log_automorphism<R: Rng>(rng: &mut R, n: usize, order: usize) -> Automorphism<Q> {
    let units = (0..n)
        .map(|_| {
            let t = rng.gen_range(0..=2);
            Series::one(n, order).add(&random_poly(rng, n, 1, 2, t, order))
        })
        .collect();
    Automorphism::logarithmic(units).unwrap()
}
