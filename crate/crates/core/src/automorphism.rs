//! Formal coordinate changes of (C^n, 0) known modulo m^N.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::monomial::Exponent;
use crate::series::Series;
use crate::scalar::Coeff;

/// A formal map `x ↦ (φ_1(x), ..., φ_n(x))` with `φ(0) = 0` and invertible
/// linear part.
///
/// It acts on series by pullback, `f ↦ f ∘ φ`. Normalizing coordinate
/// changes are logarithmic (`φ_i = x_i u_i` with `u_i(0) ≠ 0`, see
/// [`Automorphism::logarithmic`]); general invertible maps such as linear
/// complexifications are also representable.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(bound = "")]
pub struct Automorphism<F: Coeff> {
    nvars: usize,
    order: usize,
    images: Vec<Series<F>>,
}

impl<F: Coeff> Automorphism<F> {
    pub fn identity(nvars: usize, order: usize) -> Self {
        Self {
            nvars,
            order,
            images: (0..nvars).map(|i| Series::variable(nvars, order, i)).collect(),
        }
    }

    /// A general map; the images must vanish at the origin and have an
    /// invertible linear part.
    pub fn from_images(images: Vec<Series<F>>) -> Result<Self> {
        let nvars = images.len();
        if let Some(bad) = images.iter().find(|s| s.nvars() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                found: bad.nvars(),
            });
        }
        let order = images.iter().map(Series::order).min().unwrap_or(1);
        if order < 2 {
            return Err(Error::InvalidOrder(format!(
                "automorphism needs truncation order >= 2, got {order}"
            )));
        }
        let images: Vec<Series<F>> = images.into_iter().map(|s| s.truncate(order)).collect();
        if images.iter().any(|s| !s.constant_term().is_zero()) {
            return Err(Error::NotInvertible("image does not fix the origin".into()));
        }
        let a = Self { nvars, order, images };
        a.linear_part().inverse().map_err(|_| Error::NotInvertible("singular linear part".into()))?;
        Ok(a)
    }

    /// The logarithmic map `x_i ↦ x_i u_i` from unit series `u_i`.
    pub fn logarithmic(units: Vec<Series<F>>) -> Result<Self> {
        let nvars = units.len();
        let mut images = Vec::with_capacity(nvars);
        for (i, u) in units.into_iter().enumerate() {
            if u.constant_term().is_zero() {
                return Err(Error::NotAUnit);
            }
            let xi = Series::variable(nvars, u.order(), i);
            images.push(u.mul(&xi));
        }
        Self::from_images(images)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn images(&self) -> &[Series<F>] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &Series<F> {
        &self.images[i]
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            nvars: self.nvars,
            order: order.min(self.order),
            images: self.images.iter().map(|s| s.truncate(order)).collect(),
        }
    }

    /// `φ_i = x_i · u_i` for every `i`.
    pub fn is_logarithmic(&self) -> bool {
        self.images.iter().enumerate().all(|(i, s)| {
            s.terms().keys().all(|e| e.get(i) > 0)
                && !s.coeff(&Exponent::unit(self.nvars, i)).is_zero()
        })
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.nvars, self.order)
    }

    /// Row `i` holds the linear coefficients of `φ_i`.
    pub fn linear_part(&self) -> Matrix<F> {
        let mut m = Matrix::zeros(self.nvars, self.nvars);
        for (i, s) in self.images.iter().enumerate() {
            for j in 0..self.nvars {
                m.set(i, j, s.coeff(&Exponent::unit(self.nvars, j)));
            }
        }
        m
    }

    /// Pullback `f ↦ f ∘ φ` mod `m^order`.
    pub fn pullback(&self, f: &Series<F>, order: usize) -> Result<Series<F>> {
        f.substitute(&self.images, order.min(self.order))
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`. Pullbacks compose
    /// contravariantly: `(a ∘ b)^* f = b^*(a^* f)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        let order = self.order.min(other.order);
        let images = self
            .images
            .iter()
            .map(|s| s.substitute(&other.images, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nvars: self.nvars,
            order,
            images,
        })
    }

    /// Compositional inverse mod `m^order` by fixed-point iteration
    /// `ψ ← A⁻¹(x − h∘ψ)` where `φ = A x + h`; each pass fixes one more degree.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.nvars;
        let order = self.order;
        let a_inv = self
            .linear_part()
            .inverse()
            .map_err(|_| Error::NotInvertible("singular linear part".into()))?;
        let h: Vec<Series<F>> = self
            .images
            .iter()
            .map(|s| s.degree_window(2, order))
            .collect();
        let x: Vec<Series<F>> = (0..n).map(|i| Series::variable(n, order, i)).collect();
        let apply_a_inv = |v: &[Series<F>]| -> Vec<Series<F>> {
            (0..n)
                .map(|i| {
                    let mut acc = Series::zero(n, order);
                    for (j, vj) in v.iter().enumerate() {
                        let c = a_inv.get(i, j);
                        if !c.is_zero() {
                            acc = acc.add(&vj.scale(c));
                        }
                    }
                    acc
                })
                .collect()
        };
        let mut psi = apply_a_inv(&x);
        for _ in 2..order {
            let rhs = x
                .iter()
                .zip(&h)
                .map(|(xi, hi)| hi.substitute(&psi, order).map(|v| xi.sub(&v)))
                .collect::<Result<Vec<_>>>()?;
            let next = apply_a_inv(&rhs);
            if next == psi {
                break;
            }
            psi = next;
        }
        Ok(Self {
            nvars: n,
            order,
            images: psi,
        })
    }

    /// Converts coefficients to another field.
    pub fn map_coeffs<G: Coeff>(&self, f: impl Fn(&F) -> G + Copy) -> Automorphism<G> {
        Automorphism {
            nvars: self.nvars,
            order: self.order,
            images: self.images.iter().map(|s| s.map_coeffs(f)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Gaussian;
    use num_rational::BigRational as Q;

    fn var(n: usize, i: usize, order: usize) -> Series<Q> {
        Series::variable(n, order, i)
    }

    #[test]
    fn logarithmic_constructor_checks_units() {
        let n = 2;
        let u = Series::one(n, 5).add(&var(n, 1, 5));
        let phi = Automorphism::logarithmic(vec![u, Series::one(n, 5)]).unwrap();
        assert!(phi.is_logarithmic());
        assert_eq!(
            Automorphism::logarithmic(vec![var(n, 0, 5), Series::one(n, 5)]),
            Err(Error::NotAUnit)
        );
    }

    #[test]
    fn inverse_composes_to_identity() {
        let n = 2;
        let order = 7;
        let x = var(n, 0, order);
        let y = var(n, 1, order);
        let phi = Automorphism::from_images(vec![
            x.add(&x.mul(&y)).add(&x.pow(3).scale(&Q::from_i64(2))),
            y.sub(&y.mul(&y).mul(&x)),
        ])
        .unwrap();
        let inv = phi.inverse().unwrap();
        assert!(phi.compose(&inv).unwrap().is_identity());
        assert!(inv.compose(&phi).unwrap().is_identity());
    }

    #[test]
    fn complex_linear_map_round_trip() {
        type G = Gaussian;
        let n = 3;
        let v = |i| Series::<G>::variable(n, 8, i);
        let i = Series::constant(n, 8, G::i());
        let phi = Automorphism::from_images(vec![v(0).add(&i.mul(&v(1))), v(0).sub(&i.mul(&v(1))), v(2)]).unwrap();
        assert!(!phi.is_logarithmic());
        let inv = phi.inverse().unwrap();
        assert!(phi.compose(&inv).unwrap().is_identity());
    }

    #[test]
    fn rejects_singular_linear_part() {
        let n = 2;
        let x = var(n, 0, 4);
        assert!(Automorphism::from_images(vec![x.clone(), x]).is_err());
    }
}
