//! Logarithmic derivations stored through their monomial expansion
//! `∂ = Σ_m x^m L(λ_m)`, where `L(λ) = Σ_j λ_j x_j ∂/∂x_j`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal::TruncatedIdeal;
use crate::linalg::Matrix;
use crate::monomial::Exponent;
use crate::scalar::{Coeff, Scalar};
use crate::series::{weight, Series, TruncatedNorm};

/// A logarithmic derivation known modulo `m^order`: only monomial
/// derivations `x^m L(λ_m)` with `∥m∥ < order` are stored.
///
/// In component form `∂ = Σ a_i ∂/∂x_i` with `a_i = x_i f_i`, the `f_i`
/// are known mod `m^order` and the `a_i` mod `m^(order+1)`. Brackets and
/// applications of logarithmic derivations never lower the order.
#[derive(Clone, PartialEq)]
pub struct LogDerivation<F> {
    nvars: usize,
    order: usize,
    terms: BTreeMap<Exponent, Vec<F>>,
}

fn is_zero_vec<F: Coeff>(v: &[F]) -> bool {
    v.iter().all(Coeff::is_zero)
}

fn add_vec<F: Coeff>(acc: &mut [F], v: &[F]) {
    for (a, b) in acc.iter_mut().zip(v) {
        a.add_assign(b);
    }
}

fn scale_vec<F: Coeff>(v: &[F], c: &F) -> Vec<F> {
    v.iter().map(|a| a.mul(c)).collect()
}

/// `Σ|v_j|`, the norm used on eigenvalue vectors.
pub fn vec_norm<F: Coeff>(v: &[F]) -> f64 {
    v.iter().map(Coeff::abs).sum()
}

impl<F: Coeff> LogDerivation<F> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        Self {
            nvars,
            order,
            terms: BTreeMap::new(),
        }
    }

    /// The diagonal field `L(λ)`.
    pub fn diagonal(lambda: Vec<F>, order: usize) -> Self {
        let n = lambda.len();
        Self::monomial(Exponent::zero(n), lambda, order)
    }

    /// `x^m L(λ)`.
    pub fn monomial(m: Exponent, lambda: Vec<F>, order: usize) -> Self {
        let mut d = Self::zero(lambda.len(), order);
        d.add_term(m, lambda);
        d
    }

    pub fn from_terms(nvars: usize, order: usize, terms: impl IntoIterator<Item = (Exponent, Vec<F>)>) -> Self {
        let mut d = Self::zero(nvars, order);
        for (m, v) in terms {
            d.add_term(m, v);
        }
        d
    }

    /// Builds `∂ = Σ a_i ∂/∂x_i`, checking that `x_i` divides `a_i`.
    ///
    /// The result is truncated at `min(order, min_i ord_trunc(a_i) - 1)`.
    pub fn from_vector_components(a: &[Series<F>], order: usize) -> Result<Self> {
        let n = a.len();
        let mut out_order = order;
        for ai in a {
            if ai.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: ai.nvars(),
                });
            }
            out_order = out_order.min(ai.order().saturating_sub(1));
        }
        let mut d = Self::zero(n, out_order);
        for (i, ai) in a.iter().enumerate() {
            for (e, c) in ai.iter() {
                let Some(m) = e.with_decremented(i) else {
                    return Err(Error::NotLogarithmic {
                        component: i + 1,
                        term: format!("{} at exponent {}", c.to_scalar(), e),
                    });
                };
                let mut v = vec![F::zero(); n];
                v[i] = c.clone();
                d.add_term(m, v);
            }
        }
        Ok(d)
    }

    /// Builds `Σ f_i x_i ∂/∂x_i` from the logarithmic coefficients `f_i`.
    pub fn from_log_coefficients(f: &[Series<F>]) -> Self {
        let n = f.len();
        let order = f.iter().map(Series::order).min().unwrap_or(0);
        let mut d = Self::zero(n, order);
        for (i, fi) in f.iter().enumerate() {
            for (m, c) in fi.iter() {
                let mut v = vec![F::zero(); n];
                v[i] = c.clone();
                d.add_term(m.clone(), v);
            }
        }
        d
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Vec<F>> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Exponent, &Vec<F>)> {
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

    pub fn term(&self, m: &Exponent) -> Option<&Vec<F>> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Exponent, v: Vec<F>) {
        debug_assert_eq!(m.nvars(), self.nvars);
        debug_assert_eq!(v.len(), self.nvars);
        if m.degree() >= self.order || is_zero_vec(&v) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                add_vec(e.get_mut(), &v);
                if is_zero_vec(e.get()) {
                    e.remove();
                }
            }
        }
    }

    /// `λ_0`, the eigenvalues of the linear part.
    pub fn linear_part(&self) -> Vec<F> {
        self.terms
            .get(&Exponent::zero(self.nvars))
            .cloned()
            .unwrap_or_else(|| vec![F::zero(); self.nvars])
    }

    /// All terms with `∥m∥ ≥ 1`.
    pub fn nonlinear_part(&self) -> Self {
        self.degree_window(1, self.order)
    }

    /// `ord(∂) = min ∥m∥`; `None` for the zero derivation.
    pub fn ord(&self) -> Option<usize> {
        self.terms.keys().next().map(Exponent::degree)
    }

    pub fn deg(&self) -> Option<usize> {
        self.terms.keys().next_back().map(Exponent::degree)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut d = self.degree_window(0, order);
        d.order = order;
        d
    }

    /// Same terms with a new truncation order; raising the order is only
    /// valid for derivations known exactly (polynomial fields).
    pub fn with_order(mut self, order: usize) -> Self {
        if order < self.order {
            self.terms.retain(|m, _| m.degree() < order);
        }
        self.order = order;
        self
    }

    /// Terms with `lo <= ∥m∥ < hi`.
    pub fn degree_window(&self, lo: usize, hi: usize) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| (lo..hi).contains(&m.degree()))
                .map(|(m, v)| (m.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "derivation dimensions differ");
        let mut out = self.truncate(other.order);
        for (m, v) in &other.terms {
            out.add_term(m.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.iter().map(Coeff::neg).collect()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        let mut out = Self::zero(self.nvars, self.order);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), scale_vec(v, c));
        }
        out
    }

    /// The product `g · ∂`.
    pub fn mul_series(&self, g: &Series<F>) -> Self {
        let order = self.order.min(g.order());
        let mut out = Self::zero(self.nvars, order);
        for (m, v) in &self.terms {
            for (e, c) in g.iter() {
                if m.degree() + e.degree() >= order {
                    break;
                }
                out.add_term(m.add(e), scale_vec(v, c));
            }
        }
        out
    }

    /// Logarithmic coefficients `f_i` with `∂ = Σ f_i x_i ∂/∂x_i`.
    pub fn log_coefficients(&self) -> Vec<Series<F>> {
        (0..self.nvars)
            .map(|i| {
                Series::from_terms(
                    self.nvars,
                    self.order,
                    self.terms.iter().map(|(m, v)| (m.clone(), v[i].clone())),
                )
            })
            .collect()
    }

    /// Components `a_i = x_i f_i` of `Σ a_i ∂/∂x_i`, known mod `m^(order+1)`.
    pub fn to_vector_components(&self) -> Vec<Series<F>> {
        self.log_coefficients()
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let x = Series::variable(self.nvars, self.order + 1, i);
                f.with_order(self.order + 1).mul(&x)
            })
            .collect()
    }

    /// `∂(f)` mod `m^order`, from `x^m L(λ)(x^n) = <λ,n> x^(m+n)`.
    pub fn apply(&self, f: &Series<F>, order: usize) -> Series<F> {
        assert_eq!(self.nvars, f.nvars(), "dimension mismatch in apply");
        let order = order.min(self.order).min(f.order());
        let mut out = Series::zero(self.nvars, order);
        for (n, c) in f.iter() {
            let dn = n.degree();
            if dn >= order {
                break;
            }
            for (m, v) in &self.terms {
                if dn + m.degree() >= order {
                    break;
                }
                let w = weight(v, n);
                if w.is_zero() {
                    continue;
                }
                out.add_term(m.add(n), w.mul(c));
            }
        }
        out
    }

    /// `[self, other]` mod `m^order` via
    /// `[x^m L(λ), x^n L(μ)] = <λ,n> x^(m+n) L(μ) − <μ,m> x^(m+n) L(λ)`.
    pub fn lie_bracket(&self, other: &Self, order: usize) -> Self {
        assert_eq!(self.nvars, other.nvars, "dimension mismatch in bracket");
        let order = order.min(self.order).min(other.order);
        let mut acc: BTreeMap<Exponent, Vec<F>> = BTreeMap::new();
        for (m, lam) in &self.terms {
            let dm = m.degree();
            if dm >= order {
                break;
            }
            for (n, mu) in &other.terms {
                if dm + n.degree() >= order {
                    break;
                }
                let a = weight(lam, n);
                let b = weight(mu, m);
                if a.is_zero() && b.is_zero() {
                    continue;
                }
                let slot = acc.entry(m.add(n)).or_insert_with(|| vec![F::zero(); self.nvars]);
                for j in 0..self.nvars {
                    let mut t = F::zero();
                    if !a.is_zero() && !mu[j].is_zero() {
                        t = a.mul(&mu[j]);
                    }
                    if !b.is_zero() && !lam[j].is_zero() {
                        t = t.sub(&b.mul(&lam[j]));
                    }
                    if !t.is_zero() {
                        slot[j].add_assign(&t);
                    }
                }
            }
        }
        acc.retain(|_, v| !is_zero_vec(v));
        Self {
            nvars: self.nvars,
            order,
            terms: acc,
        }
    }

    /// Splits into the resonant part (`<λ,m> = 0`) and the rest.
    pub fn graded_split(&self, lambda: &[F]) -> (Self, Self) {
        let mut res = Self::zero(self.nvars, self.order);
        let mut non = Self::zero(self.nvars, self.order);
        for (m, v) in &self.terms {
            let target = if is_resonant(lambda, m) { &mut res } else { &mut non };
            target.terms.insert(m.clone(), v.clone());
        }
        (res, non)
    }

    /// Expansion `∂ = Σ_j g_j L(μ_j)` in a logarithmic basis.
    pub fn log_basis_expand(&self, basis: &LogBasis<F>) -> Result<Vec<Series<F>>> {
        if basis.dim() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: basis.dim(),
            });
        }
        let mut g: Vec<Series<F>> = (0..self.nvars).map(|_| Series::zero(self.nvars, self.order)).collect();
        for (m, v) in &self.terms {
            let coords = basis.t_inv.mul_vec(v);
            for (gj, c) in g.iter_mut().zip(coords) {
                gj.add_term(m.clone(), c);
            }
        }
        Ok(g)
    }

    /// Reassembles `Σ_j g_j L(μ_j)`.
    pub fn from_log_basis(g: &[Series<F>], basis: &LogBasis<F>) -> Self {
        let n = basis.dim();
        let order = g.iter().map(Series::order).min().unwrap_or(0);
        let mut d = Self::zero(n, order);
        for (gj, mu) in g.iter().zip(&basis.mus) {
            for (m, c) in gj.iter() {
                d.add_term(m.clone(), scale_vec(mu, c));
            }
        }
        d
    }

    /// `Σ_m r^∥m∥ Σ_j |λ_{m,j}|` over the stored terms.
    pub fn rnorm(&self, r: f64) -> TruncatedNorm {
        let value = self
            .terms
            .iter()
            .map(|(m, v)| r.powi(m.degree() as i32) * vec_norm(v))
            .sum();
        TruncatedNorm {
            value,
            lower_bound: true,
        }
    }

    pub fn map_coeffs<G: Coeff>(&self, f: impl Fn(&F) -> G) -> LogDerivation<G> {
        let mut out = LogDerivation::zero(self.nvars, self.order);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.iter().map(&f).collect());
        }
        out
    }

    /// Component-form expression such as `(1)*x*dx + (-1)*y*dy`.
    pub fn to_expression(&self, names: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, a) in self.to_vector_components().iter().enumerate() {
            for (e, c) in a.iter() {
                parts.push(format!("({})*{}*d{}", c.to_scalar(), e.to_monomial_string(names), names[i]));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Resonance test `<λ,m> = 0` with the float tolerance scaled by `∥m∥`.
pub fn is_resonant<F: Coeff>(lambda: &[F], m: &Exponent) -> bool {
    weight(lambda, m).is_resonance_zero(m.degree())
}

/// Coefficient series `a_ij = f_i g_j − f_j g_i` of `∂₁ ∧ ∂₂` in the basis
/// `x_i∂_i ∧ x_j∂_j`, `i < j`, truncated at `order`.
pub fn wedge_coefficients<F: Coeff>(d1: &LogDerivation<F>, d2: &LogDerivation<F>, order: usize) -> Vec<Series<F>> {
    let order = order.min(d1.order).min(d2.order);
    let f = d1.truncate(order).log_coefficients();
    let g = d2.truncate(order).log_coefficients();
    let n = d1.nvars;
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let a = f[i].mul_to(&g[j], order).expect("same dimension");
            let b = f[j].mul_to(&g[i], order).expect("same dimension");
            out.push(a.sub(&b));
        }
    }
    out
}

/// The ideal generated by the wedge coefficients of `∂₁ ∧ ∂₂`.
pub fn wedge_coeff_ideal<F: Coeff>(d1: &LogDerivation<F>, d2: &LogDerivation<F>, order: usize) -> TruncatedIdeal<F> {
    let order = order.min(d1.order).min(d2.order);
    TruncatedIdeal::new(d1.nvars, order, wedge_coefficients(d1, d2, order))
}

impl<F: Coeff> fmt::Debug for LogDerivation<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogDerivation[n={}, N={}]{{", self.nvars, self.order)?;
        for (i, (m, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let v: Vec<String> = v.iter().map(|c| c.to_string()).collect();
            write!(f, "x^{m} L({})", v.join(", "))?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    m: Vec<u16>,
    lambda: Vec<Scalar>,
}

#[derive(Serialize, Deserialize)]
struct DerivationRepr {
    nvars: usize,
    order: usize,
    terms: Vec<TermRepr>,
}

impl<F: Coeff> Serialize for LogDerivation<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DerivationRepr {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| TermRepr {
                    m: m.to_vec(),
                    lambda: v.iter().map(Coeff::to_scalar).collect(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, F: Coeff> Deserialize<'de> for LogDerivation<F> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = DerivationRepr::deserialize(deserializer)?;
        let mut d = LogDerivation::zero(repr.nvars, repr.order);
        for t in repr.terms {
            if t.m.len() != repr.nvars || t.lambda.len() != repr.nvars {
                return Err(serde::de::Error::custom("term length differs from nvars"));
            }
            let v = t
                .lambda
                .iter()
                .map(F::from_scalar)
                .collect::<Result<Vec<F>>>()
                .map_err(serde::de::Error::custom)?;
            d.add_term(Exponent::from(t.m), v);
        }
        Ok(d)
    }
}

/// A basis `μ_0, ..., μ_{n-1}` of eigenvalue vectors, used to write a
/// derivation as `Σ g_j L(μ_j)`.
#[derive(Clone, PartialEq, Debug)]
pub struct LogBasis<F: Coeff> {
    mus: Vec<Vec<F>>,
    /// Columns are the `μ_j`.
    t: Matrix<F>,
    t_inv: Matrix<F>,
    c: f64,
    d: f64,
}

impl<F: Coeff> LogBasis<F> {
    pub fn new(mus: Vec<Vec<F>>) -> Result<Self> {
        let n = mus.len();
        if let Some(bad) = mus.iter().find(|m| m.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let t = Matrix::from_rows(mus.clone()).transpose();
        let t_inv = t.inverse().map_err(|_| Error::SingularBasis)?;
        let max_mu = mus.iter().map(|m| vec_norm(m)).fold(0.0, f64::max);
        let d = max_mu * t_inv.max_column_abs_sum();
        Ok(Self { mus, t, t_inv, c: 1.0, d })
    }

    /// `{λ} ∪ {e_i : i ≠ p}` where `p` is the first nonzero coordinate of `λ`.
    pub fn canonical(lambda: &[F]) -> Result<Self> {
        let n = lambda.len();
        let p = lambda.iter().position(|c| !c.is_zero()).ok_or(Error::ZeroLambda)?;
        let mut mus = vec![lambda.to_vec()];
        for i in (0..n).filter(|&i| i != p) {
            let mut e = vec![F::zero(); n];
            e[i] = F::one();
            mus.push(e);
        }
        Self::new(mus)
    }

    pub fn dim(&self) -> usize {
        self.mus.len()
    }

    pub fn mus(&self) -> &[Vec<F>] {
        &self.mus
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.t
    }

    pub fn inverse_matrix(&self) -> &Matrix<F> {
        &self.t_inv
    }

    /// Constants with `c ∥∂∥_r ≤ Σ_j ∥g_j∥_r ∥μ_j∥ ≤ d ∥∂∥_r`.
    pub fn norm_constants(&self) -> (f64, f64) {
        (self.c, self.d)
    }
}
