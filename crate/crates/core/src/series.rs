//! Truncated sparse multivariate power series.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial::Exponent;
use crate::scalar::{dot_int, Coeff, Scalar};

/// A power series in `nvars` variables known modulo `m^order`.
///
/// Only monomials of total degree `< order` are stored, and no stored
/// coefficient is zero.
#[derive(Clone, PartialEq)]
pub struct Series<F> {
    nvars: usize,
    order: usize,
    terms: BTreeMap<Exponent, F>,
}

/// An r-norm of a truncated object. The truncated tail is omitted, so the
/// value is only a lower bound of the norm of the underlying germ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncatedNorm {
    pub value: f64,
    pub lower_bound: bool,
}

impl<F: Coeff> Series<F> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        Self {
            nvars,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, order: usize, c: F) -> Self {
        Self::monomial(nvars, order, Exponent::zero(nvars), c)
    }

    pub fn one(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, F::one())
    }

    /// The coordinate function `x_i`.
    pub fn variable(nvars: usize, order: usize, i: usize) -> Self {
        Self::monomial(nvars, order, Exponent::unit(nvars, i), F::one())
    }

    pub fn monomial(nvars: usize, order: usize, e: Exponent, c: F) -> Self {
        let mut s = Self::zero(nvars, order);
        s.add_term(e, c);
        s
    }

    pub fn from_terms(nvars: usize, order: usize, terms: impl IntoIterator<Item = (Exponent, F)>) -> Self {
        let mut s = Self::zero(nvars, order);
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, F> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Exponent, &F)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &Exponent) -> F {
        self.terms.get(e).cloned().unwrap_or_else(F::zero)
    }

    pub fn constant_term(&self) -> F {
        self.coeff(&Exponent::zero(self.nvars))
    }

    /// Adds `c x^e`, dropping it if the degree is out of range and removing
    /// the entry when the sum cancels.
    pub fn add_term(&mut self, e: Exponent, c: F) {
        debug_assert_eq!(e.nvars(), self.nvars);
        if e.degree() >= self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                o.get_mut().add_assign(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Lowest degree of a stored term; `None` encodes `ord(0) = ∞`.
    pub fn ord(&self) -> Option<usize> {
        self.terms.keys().next().map(Exponent::degree)
    }

    /// Highest degree of a stored term; `None` encodes `deg(0) = -∞`.
    pub fn deg(&self) -> Option<usize> {
        self.terms.keys().next_back().map(Exponent::degree)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            nvars: self.nvars,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() < order)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Same terms, with the truncation order replaced. Raising the order is
    /// only meaningful when the series is known to be exact (a polynomial).
    pub fn with_order(mut self, order: usize) -> Self {
        if order < self.order {
            self.terms.retain(|e, _| e.degree() < order);
        }
        self.order = order;
        self
    }

    /// Terms with `lo <= degree < hi`.
    pub fn degree_window(&self, lo: usize, hi: usize) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| (lo..hi).contains(&e.degree()))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn homogeneous(&self, d: usize) -> Self {
        self.degree_window(d, d + 1)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("series dimensions differ")
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars, self.order);
        }
        let mut out = Self::zero(self.nvars, self.order);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a.mul(c));
        }
        out
    }

    /// Multiplication by the monomial `c x^e`.
    pub fn mul_monomial(&self, e: &Exponent, c: &F) -> Self {
        let mut out = Self::zero(self.nvars, self.order);
        for (m, a) in &self.terms {
            out.add_term(m.add(e), a.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("series dimensions differ")
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.mul_to(other, self.order.min(other.order))
    }

    /// Product truncated at `order` (capped by the inputs' orders).
    pub fn mul_to(&self, other: &Self, order: usize) -> Result<Self> {
        self.check_dims(other)?;
        let order = order.min(self.order).min(other.order);
        let mut acc: BTreeMap<Exponent, F> = BTreeMap::new();
        for (a, ca) in &self.terms {
            let da = a.degree();
            if da >= order {
                break;
            }
            for (b, cb) in &other.terms {
                if da + b.degree() >= order {
                    break;
                }
                let p = ca.mul(cb);
                match acc.entry(a.add(b)) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(p);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => o.get_mut().add_assign(&p),
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Self {
            nvars: self.nvars,
            order,
            terms: acc,
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars, self.order);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Multiplicative inverse mod `m^order` of a series with nonzero
    /// constant term.
    pub fn invert_unit(&self, order: usize) -> Result<Self> {
        let order = order.min(self.order);
        let c0 = self.constant_term();
        let c0_inv = c0.inv().filter(|_| !c0.is_zero()).ok_or(Error::NotAUnit)?;
        // f = c0 (1 + h) with ord(h) >= 1, so 1/f = c0^{-1} Σ (-h)^k.
        let h = self.scale(&c0_inv).sub(&Self::one(self.nvars, self.order)).truncate(order);
        let minus_h = h.neg();
        let mut out = Self::one(self.nvars, order);
        let mut power = Self::one(self.nvars, order);
        for _ in 1..order.max(1) {
            power = power.mul(&minus_h);
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out.scale(&c0_inv))
    }

    /// Applies `x_i ↦ x_i · k_i`-style substitution `f(φ_1, ..., φ_n)` where
    /// every image has vanishing constant term.
    pub fn substitute(&self, images: &[Series<F>], order: usize) -> Result<Self> {
        if images.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: images.len(),
            });
        }
        let target_n = images.first().map_or(self.nvars, |s| s.nvars);
        let mut order = order.min(self.order);
        for im in images {
            if im.nvars != target_n {
                return Err(Error::DimensionMismatch {
                    expected: target_n,
                    found: im.nvars,
                });
            }
            if !im.constant_term().is_zero() {
                return Err(Error::NotInvertible(
                    "substituted image has a nonzero constant term".into(),
                ));
            }
            order = order.min(im.order);
        }
        let mut cache: HashMap<Exponent, Series<F>> = HashMap::new();
        cache.insert(Exponent::zero(self.nvars), Series::one(target_n, order));
        let mut out = Series::zero(target_n, order);
        for (e, c) in &self.terms {
            if e.degree() >= order {
                break;
            }
            let val = monomial_value(e, images, order, &mut cache);
            for (m, a) in val.terms.iter() {
                out.add_term(m.clone(), a.mul(c));
            }
        }
        Ok(out)
    }

    /// Σ |a_m| r^∥m∥ over the stored terms.
    pub fn rnorm(&self, r: f64) -> TruncatedNorm {
        let value = self
            .terms
            .iter()
            .map(|(e, c)| c.abs() * r.powi(e.degree() as i32))
            .sum();
        TruncatedNorm {
            value,
            lower_bound: true,
        }
    }

    /// The sub-series of terms with `<λ,m> = α`.
    pub fn graded_component(&self, lambda: &[F], alpha: &F) -> Self {
        let mut out = Self::zero(self.nvars, self.order);
        for (e, c) in &self.terms {
            if weight(lambda, e).sub(alpha).is_resonance_zero(e.degree()) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Decomposition into S-graded components, keyed by the first weight
    /// encountered in graded-lex order.
    pub fn graded_components(&self, lambda: &[F]) -> Vec<(F, Self)> {
        let mut out: Vec<(F, Self)> = Vec::new();
        for (e, c) in &self.terms {
            let w = weight(lambda, e);
            let slot = out
                .iter_mut()
                .find(|(a, _)| w.sub(a).is_resonance_zero(e.degree()));
            match slot {
                Some((_, s)) => {
                    s.terms.insert(e.clone(), c.clone());
                }
                None => {
                    let mut s = Self::zero(self.nvars, self.order);
                    s.terms.insert(e.clone(), c.clone());
                    out.push((w, s));
                }
            }
        }
        out
    }

    /// Converts coefficients to another field through the scalar bridge.
    pub fn map_coeffs<G: Coeff>(&self, f: impl Fn(&F) -> G) -> Series<G> {
        let mut out = Series::zero(self.nvars, self.order);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Human-readable expression, e.g. `x*y - z^2`.
    pub fn to_expression(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let mono = e.to_monomial_string(names);
            let coeff = format!("({})", c.to_scalar());
            let term = if e.is_zero() {
                coeff
            } else {
                format!("{coeff}*{mono}")
            };
            if i > 0 {
                out.push_str(" + ");
            }
            out.push_str(&term);
        }
        out
    }
}

/// `<λ, m>` for an exponent of a series or derivation.
pub fn weight<F: Coeff>(lambda: &[F], e: &Exponent) -> F {
    dot_int(lambda, e.iter().map(i64::from))
}

fn monomial_value<F: Coeff>(
    e: &Exponent,
    images: &[Series<F>],
    order: usize,
    cache: &mut HashMap<Exponent, Series<F>>,
) -> Series<F> {
    if let Some(v) = cache.get(e) {
        return v.clone();
    }
    let i = e.iter().position(|c| c > 0).expect("zero exponent is cached");
    let rest = e.with_decremented(i).expect("positive component");
    let base = monomial_value(&rest, images, order, cache);
    let v = base.mul_to(&images[i], order).expect("dimensions checked");
    cache.insert(e.clone(), v.clone());
    v
}

impl<F: Coeff> fmt::Debug for Series<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[n={}, N={}]{{", self.nvars, self.order)?;
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}: {c}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponent: Vec<u16>,
    coeff: Scalar,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    nvars: usize,
    order: usize,
    terms: Vec<TermRepr>,
}

impl<F: Coeff> Serialize for Series<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRepr {
                    exponent: e.to_vec(),
                    coeff: c.to_scalar(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, F: Coeff> Deserialize<'de> for Series<F> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(deserializer)?;
        let mut s = Series::zero(repr.nvars, repr.order);
        for t in repr.terms {
            if t.exponent.len() != repr.nvars {
                return Err(serde::de::Error::custom("exponent length differs from nvars"));
            }
            let c = F::from_scalar(&t.coeff).map_err(serde::de::Error::custom)?;
            s.add_term(Exponent::from(t.exponent), c);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ComplexFloat, Gaussian};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(v: i64) -> Q {
        Q::from_i64(v)
    }

    fn x(n: usize, i: usize, order: usize) -> Series<Q> {
        Series::variable(n, order, i)
    }

    fn mono(e: &[u16], c: i64, order: usize) -> Series<Q> {
        Series::monomial(e.len(), order, Exponent::from_slice(e), q(c))
    }

    #[test]
    fn difference_of_squares() {
        let (a, b) = (x(2, 0, 3), x(2, 1, 3));
        let p = a.add(&b).mul(&a.sub(&b));
        assert_eq!(p, mono(&[2, 0], 1, 3).sub(&mono(&[0, 2], 1, 3)));
        assert!(p.mul(&Series::zero(2, 3)).is_zero());
    }

    #[test]
    fn geometric_inverse() {
        let one = Series::<Q>::one(2, 6);
        let xy = mono(&[1, 1], 1, 6);
        let f = one.add(&xy);
        let expected = one.sub(&xy).add(&xy.mul(&xy));
        assert_eq!(f.invert_unit(6).unwrap(), expected);
        assert_eq!(f.mul(&expected), one);
        assert_eq!(
            Series::<Q>::constant(2, 6, q(4)).invert_unit(6).unwrap(),
            Series::constant(2, 6, Q::new(1.into(), 4.into()))
        );
        assert_eq!(x(2, 0, 6).invert_unit(6), Err(Error::NotAUnit));
    }

    #[test]
    fn substitution_examples() {
        let n = 2;
        let xy = mono(&[1, 1], 1, 5);
        let images = vec![x(n, 0, 5).add(&mono(&[1, 1], 1, 5)), x(n, 1, 5)];
        assert_eq!(
            xy.substitute(&images, 5).unwrap(),
            xy.add(&mono(&[1, 2], 1, 5))
        );
        let id = vec![x(n, 0, 5), x(n, 1, 5)];
        assert_eq!(xy.substitute(&id, 5).unwrap(), xy);
    }

    #[test]
    fn substitution_complex_linear_map() {
        type G = Gaussian;
        let n = 3;
        let var = |i| Series::<G>::variable(n, 6, i);
        let i = Series::constant(n, 6, G::i());
        let f = var(0).mul(&var(1)).sub(&var(2).mul(&var(2)));
        let images = vec![var(0).add(&i.mul(&var(1))), var(0).sub(&i.mul(&var(1))), var(2)];
        let expected = var(0).pow(2).add(&var(1).pow(2)).sub(&var(2).pow(2));
        assert_eq!(f.substitute(&images, 6).unwrap(), expected);
    }

    #[test]
    fn rnorm_examples() {
        assert_eq!(mono(&[2, 1], 3, 5).rnorm(2.0).value, 24.0);
        assert_eq!(Series::<Q>::zero(2, 5).rnorm(2.0).value, 0.0);
        let f = mono(&[4, 0], 1, 6).add(&mono(&[0, 4], 1, 6));
        let (lo, hi) = (f.rnorm(1.0).value, f.rnorm(2.0).value);
        assert_eq!((lo, hi), (2.0, 32.0));
        assert!(lo <= (1.0f64 / 2.0).powi(4) * hi);
    }

    #[test]
    fn graded_components_examples() {
        let lambda = vec![q(1), q(-1)];
        let f = mono(&[1, 0], 1, 4).add(&mono(&[1, 1], 1, 4)).add(&mono(&[2, 1], 1, 4));
        assert_eq!(f.graded_component(&lambda, &q(0)), mono(&[1, 1], 1, 4));
        assert!(f.graded_component(&lambda, &q(7)).is_zero());

        let lambda = vec![Gaussian::one(), Gaussian::i()];
        let g = Series::monomial(2, 8, Exponent::from([2, 3]), Gaussian::one());
        assert_eq!(g.graded_component(&lambda, &Gaussian::from_ints(2, 3)), g);
    }

    #[test]
    fn float_graded_component_tolerates_rounding() {
        let lambda = vec![ComplexFloat::new(0.1, 0.0), ComplexFloat::new(0.2, 0.0)];
        let g = Series::monomial(2, 8, Exponent::from([1, 1]), ComplexFloat::one());
        assert_eq!(g.graded_component(&lambda, &ComplexFloat::new(0.3, 0.0)), g);
    }

    #[test]
    fn json_round_trip() {
        let f = mono(&[1, 1], 3, 4).sub(&mono(&[0, 2], 1, 4)).scale(&Q::new(1.into(), 2.into()));
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"3/2\""));
        let back: Series<Q> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
