//! Homological equation, exponential coordinate changes and the two
//! normalization schemes (Newton doubling and degree by degree).
//!
//! Conventions. `conjugate(∂, U)` is `Σ_j ad_U^j(∂)/j!` with
//! `ad_U(δ) = [δ, U]`, which as an operator equals `e^{-U} ∂ e^{U}`.
//! `exp_automorphism(U)` is the map `φ` with `φ_i = e^U(x_i)`, so pulling
//! back along it applies `e^U`. A normalization returns `δ` and the map
//! `θ` with `∂(g ∘ θ) = (δ g) ∘ θ`; hence `B(∂) = θ^* B(δ)`.

use serde::Serialize;

use crate::automorphism::Automorphism;
use crate::derivation::{is_resonant, LogBasis, LogDerivation};
use crate::error::{Error, Result};
use crate::scalar::Coeff;
use crate::series::{weight, Series};

/// `∂ = S + R` with `S = L(λ)`, `λ ≠ 0` and `ord(R) ≥ 1`.
#[derive(Clone, PartialEq, Debug, Serialize)]
#[serde(bound = "")]
pub struct SPerturbation<F: Coeff> {
    #[serde(serialize_with = "crate::normalize::ser_scalars")]
    lambda: Vec<F>,
    nonlinear: LogDerivation<F>,
}

pub(crate) fn ser_scalars<F: Coeff, S: serde::Serializer>(v: &[F], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        seq.serialize_element(&c.to_scalar())?;
    }
    seq.end()
}

impl<F: Coeff> SPerturbation<F> {
    pub fn new(lambda: Vec<F>, nonlinear: LogDerivation<F>) -> Result<Self> {
        if lambda.len() != nonlinear.nvars() {
            return Err(Error::DimensionMismatch {
                expected: lambda.len(),
                found: nonlinear.nvars(),
            });
        }
        if lambda.iter().all(Coeff::is_zero) {
            return Err(Error::ZeroLambda);
        }
        if nonlinear.ord() == Some(0) {
            return Err(Error::InvalidOrder("nonlinear part has a constant term".into()));
        }
        Ok(Self { lambda, nonlinear })
    }

    /// Splits a field into its linear part `L(λ_0)` and the rest.
    pub fn from_field(d: &LogDerivation<F>) -> Result<Self> {
        Self::new(d.linear_part(), d.nonlinear_part())
    }

    pub fn lambda(&self) -> &[F] {
        &self.lambda
    }

    pub fn nonlinear(&self) -> &LogDerivation<F> {
        &self.nonlinear
    }

    pub fn nvars(&self) -> usize {
        self.lambda.len()
    }

    pub fn order(&self) -> usize {
        self.nonlinear.order()
    }

    pub fn semisimple(&self) -> LogDerivation<F> {
        LogDerivation::diagonal(self.lambda.clone(), self.order())
    }

    pub fn field(&self) -> LogDerivation<F> {
        self.semisimple().add(&self.nonlinear)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            lambda: self.lambda.clone(),
            nonlinear: self.nonlinear.truncate(order),
        }
    }

    /// Whether every nonlinear term is resonant.
    pub fn is_normal_form(&self) -> bool {
        self.nonlinear.graded_split(&self.lambda).1.is_zero()
    }
}

/// The S-coefficient `f` in `δ₀ = fS + Σ g_j T_j`, where `δ₀` is the
/// resonant part of `δ − S` written in the canonical basis.
pub fn resonant_s_coefficient<F: Coeff>(lambda: &[F], delta: &LogDerivation<F>) -> Result<Series<F>> {
    let basis = LogBasis::canonical(lambda)?;
    let (res, _) = delta.nonlinear_part().graded_split(lambda);
    let mut g = res.log_basis_expand(&basis)?;
    Ok(g.swap_remove(0))
}

fn check_graded_zero<F: Coeff>(lambda: &[F], f0: &Series<F>) -> Result<()> {
    let s = LogDerivation::diagonal(lambda.to_vec(), f0.order());
    if !f0.constant_term().is_zero() || !s.apply(f0, f0.order()).is_zero() {
        return Err(Error::NotGradedZero);
    }
    Ok(())
}

/// `ad_{(1+f₀)S}^{-1}(x^m L(μ))` mod `m^order` for `<λ,m> ≠ 0`.
pub fn inverse_adjoint_term<F: Coeff>(
    lambda: &[F],
    unit_inv: &Series<F>,
    f0: &Series<F>,
    m: &crate::monomial::Exponent,
    mu: &[F],
    order: usize,
) -> Result<LogDerivation<F>> {
    let n = lambda.len();
    let alpha = weight(lambda, m);
    if is_resonant(lambda, m) {
        return Err(Error::ResonantInput { exponent: m.to_string() });
    }
    let alpha_inv = alpha.inv().ok_or_else(|| Error::ResonantInput { exponent: m.to_string() })?;
    let term = LogDerivation::monomial(m.clone(), mu.to_vec(), order);
    let first = term.mul_series(&unit_inv.scale(&alpha_inv));
    let xf = term.apply(f0, order);
    if xf.is_zero() {
        return Ok(first);
    }
    let coeff = xf
        .mul_to(&unit_inv.mul_to(unit_inv, order)?, order)?
        .scale(&alpha_inv.mul(&alpha_inv));
    let second = LogDerivation::diagonal(lambda.to_vec(), order).mul_series(&coeff);
    debug_assert_eq!(second.nvars(), n);
    Ok(first.add(&second))
}

/// Unique resonance-free `U` with `[(1+f₀)S, U] = −W_*` mod `m^order`.
pub fn solve_bracket_equation<F: Coeff>(
    lambda: &[F],
    f0: &Series<F>,
    w: &LogDerivation<F>,
    order: usize,
) -> Result<LogDerivation<F>> {
    check_graded_zero(lambda, f0)?;
    let n = lambda.len();
    let order = order.min(w.order());
    let f0 = f0.truncate(order).with_order(order);
    let unit = Series::one(n, order).add(&f0);
    let unit_inv = unit.invert_unit(order)?;
    let (_, w_star) = w.graded_split(lambda);
    let mut u = LogDerivation::zero(n, order);
    for (m, mu) in w_star.iter() {
        if m.degree() >= order {
            break;
        }
        let t = inverse_adjoint_term(lambda, &unit_inv, &f0, m, mu, order)?;
        u = u.sub(&t);
    }
    Ok(u)
}

/// The Newton-step equation: requires `ord(W) ≥ 2^k`, `deg(W) ≤ 2^(k+1)`
/// and truncates the solution at `2^(k+1)`.
pub fn solve_truncated_bracket<F: Coeff>(
    lambda: &[F],
    f0: &Series<F>,
    w: &LogDerivation<F>,
    k: u32,
) -> Result<LogDerivation<F>> {
    let lo = 1usize << k;
    let hi = 1usize << (k + 1);
    if let Some(o) = w.ord() {
        if o < lo {
            return Err(Error::InvalidWindow(format!("ord(W) = {o} < 2^{k} = {lo}")));
        }
    }
    if let Some(d) = w.deg() {
        if d > hi {
            return Err(Error::InvalidWindow(format!("deg(W) = {d} > 2^{} = {hi}", k + 1)));
        }
    }
    solve_bracket_equation(lambda, f0, w, hi)
}

/// `e^U(f) = Σ_j U^j(f)/j!` mod `m^order`.
pub fn apply_exp<F: Coeff>(u: &LogDerivation<F>, f: &Series<F>, order: usize) -> Series<F> {
    let mut out = f.truncate(order);
    let mut term = out.clone();
    let mut j = 1i64;
    loop {
        term = u.apply(&term, order).scale(&F::from_i64(j).inv().expect("nonzero"));
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
        j += 1;
    }
    out
}

fn require_positive_order<F: Coeff>(u: &LogDerivation<F>) -> Result<()> {
    if u.ord() == Some(0) {
        return Err(Error::InvalidOrder("generator has a linear part; exp does not terminate".into()));
    }
    Ok(())
}

/// The map `φ_i = e^U(x_i)`.
pub fn exp_automorphism<F: Coeff>(u: &LogDerivation<F>, order: usize) -> Result<Automorphism<F>> {
    require_positive_order(u)?;
    let n = u.nvars();
    // The images x_i(1 + ...) are known one degree beyond the log order.
    let u_exact = u.clone().with_order(order);
    let images = (0..n)
        .map(|i| apply_exp(&u_exact, &Series::variable(n, order, i), order))
        .collect();
    Automorphism::from_images(images)
}

/// `Σ_j ad_U^j(∂)/j!` with `ad_U(δ) = [δ, U]`, mod `m^order`.
pub fn conjugate<F: Coeff>(d: &LogDerivation<F>, u: &LogDerivation<F>, order: usize) -> Result<LogDerivation<F>> {
    require_positive_order(u)?;
    let order = order.min(d.order()).min(u.order());
    let mut out = d.truncate(order);
    let mut term = out.clone();
    let mut j = 1i64;
    loop {
        term = term.lie_bracket(u, order).scale(&F::from_i64(j).inv().expect("nonzero"));
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
        j += 1;
    }
    Ok(out)
}

/// `Θ⁻¹ ∂ Θ` where `Θ g = g ∘ φ`: the field whose components are
/// `(∂ φ_i) ∘ φ⁻¹`. Its Bruno ideal is `(φ⁻¹)^* B(∂)`.
///
/// Components carry one more degree than logarithmic coefficients, so the
/// result is known mod `m^(N-1)` when `φ` is known mod `m^N`.
pub fn transport<F: Coeff>(d: &LogDerivation<F>, phi: &Automorphism<F>, order: usize) -> Result<LogDerivation<F>> {
    let order = order.min(d.order()).min(phi.order().saturating_sub(1));
    let n = d.nvars();
    let wide = order + 1;
    let d_exact = d.clone().with_order(wide);
    let phi_w = phi.truncate(wide);
    let psi = phi_w.inverse()?;
    let comps = (0..n)
        .map(|i| psi.pullback(&d_exact.apply(phi_w.image(i), wide), wide))
        .collect::<Result<Vec<_>>>()?;
    LogDerivation::from_vector_components(&comps, order)
}

/// The conjugate `Φ ∂ Φ⁻¹`, normalized so that `B(Φ∂Φ⁻¹) = Φ^* B(∂)`.
/// As for [`transport`], `φ` must be known one degree beyond `order`.
pub fn conjugate_by<F: Coeff>(d: &LogDerivation<F>, phi: &Automorphism<F>, order: usize) -> Result<LogDerivation<F>> {
    transport(d, &phi.inverse()?, order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Newton,
    Graded,
}

/// How each step's generator `U` becomes a coordinate change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateChange {
    /// `exp(U)`.
    Exponential,
    /// `x ↦ x + U(x)`.
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct StepRecord<F: Coeff> {
    /// Newton index, or the homogeneous degree for the graded scheme.
    pub k: u32,
    /// Position among the passes sharing the same `k`.
    pub pass: u32,
    pub u: LogDerivation<F>,
    /// `f₀` after the step, truncated at the step's upper window bound.
    pub f0: Series<F>,
    pub ord_u: Option<usize>,
    pub deg_u: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct NormalizationTrace<F: Coeff> {
    pub method: Method,
    pub steps: Vec<StepRecord<F>>,
}

impl<F: Coeff> NormalizationTrace<F> {
    /// `ord(U_k) ≥ 2^k` and `deg(U_k) < 2^(k+1)` for every Newton step.
    pub fn flatness_holds(&self) -> bool {
        self.steps.iter().all(|s| {
            let lo = 1usize << s.k;
            s.u.is_zero() || (s.ord_u.unwrap_or(usize::MAX) >= lo && s.deg_u.unwrap_or(0) < 2 * lo)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Normalization<F: Coeff> {
    pub normal_form: SPerturbation<F>,
    /// `θ` with `∂(g ∘ θ) = (δ g) ∘ θ`.
    pub coordinate_change: Automorphism<F>,
    pub trace: NormalizationTrace<F>,
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub change: CoordinateChange,
    /// Upper bound on passes per Newton step.
    pub max_passes: u32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            change: CoordinateChange::Exponential,
            max_passes: 64,
        }
    }
}

/// Newton doubling normalization mod `m^order`, `order` a power of two.
pub fn newton_normalize<F: Coeff>(p: &SPerturbation<F>, order: usize) -> Result<Normalization<F>> {
    newton_normalize_with(p, order, NewtonOptions::default())
}

pub fn newton_normalize_with<F: Coeff>(
    p: &SPerturbation<F>,
    order: usize,
    opts: NewtonOptions,
) -> Result<Normalization<F>> {
    if order < 2 || !order.is_power_of_two() {
        return Err(Error::InvalidOrder(format!("Newton scheme needs a power of two >= 2, got {order}")));
    }
    if p.order() < order {
        return Err(Error::InvalidOrder(format!(
            "field is known mod m^{} only, {order} requested",
            p.order()
        )));
    }
    let lambda = p.lambda().to_vec();
    let n = p.nvars();
    let s = p.semisimple().truncate(order);
    let mut delta = p.field().truncate(order);
    let mut theta = Automorphism::identity(n, order);
    let mut us: Vec<LogDerivation<F>> = Vec::new();
    let mut steps = Vec::new();
    let mut k = 0u32;
    while (1usize << k) < order {
        let lo = 1usize << k;
        let hi = (2 * lo).min(order);
        for pass in 0..opts.max_passes {
            let f0 = resonant_s_coefficient(&lambda, &delta)?.truncate(lo).with_order(order);
            let unit_s = s.mul_series(&Series::one(n, order).add(&f0));
            let w = delta.sub(&unit_s).degree_window(lo, hi);
            let (_, w_star) = w.graded_split(&lambda);
            if w_star.is_zero() {
                break;
            }
            let u = solve_bracket_equation(&lambda, &f0.truncate(hi), &w, hi)?.with_order(order);
            match opts.change {
                CoordinateChange::Exponential => {
                    delta = conjugate(&delta, &u, order)?;
                    us.push(u.clone());
                }
                CoordinateChange::Polynomial => {
                    let phi = polynomial_change(&u, order + 1)?;
                    delta = transport(&delta, &phi, order)?;
                    theta = phi.truncate(order).compose(&theta)?;
                }
            }
            let f0_after = resonant_s_coefficient(&lambda, &delta)?.truncate(hi);
            steps.push(StepRecord {
                k,
                pass,
                ord_u: u.ord(),
                deg_u: u.deg(),
                u,
                f0: f0_after,
            });
        }
        k += 1;
    }
    if opts.change == CoordinateChange::Exponential {
        theta = composite_exponential(&us, n, order)?;
    }
    finish(delta, theta, Method::Newton, steps)
}

/// `x ↦ x + U(x)`.
pub fn polynomial_change<F: Coeff>(u: &LogDerivation<F>, order: usize) -> Result<Automorphism<F>> {
    require_positive_order(u)?;
    let n = u.nvars();
    let u_exact = u.clone().with_order(order);
    let images = (0..n)
        .map(|i| {
            let x = Series::variable(n, order, i);
            x.add(&u_exact.apply(&x, order))
        })
        .collect();
    Automorphism::from_images(images)
}

/// `θ` with `θ_i = e^{U_1} e^{U_2} ⋯ e^{U_K}(x_i)`, i.e. the composite map
/// `φ_K ∘ ⋯ ∘ φ_1` of the per-step exponentials.
pub fn composite_exponential<F: Coeff>(us: &[LogDerivation<F>], n: usize, order: usize) -> Result<Automorphism<F>> {
    let exact: Vec<LogDerivation<F>> = us.iter().map(|u| u.clone().with_order(order)).collect();
    let images = (0..n)
        .map(|i| {
            exact
                .iter()
                .rev()
                .fold(Series::variable(n, order, i), |acc, u| apply_exp(u, &acc, order))
        })
        .collect();
    Automorphism::from_images(images)
}

fn finish<F: Coeff>(
    delta: LogDerivation<F>,
    theta: Automorphism<F>,
    method: Method,
    steps: Vec<StepRecord<F>>,
) -> Result<Normalization<F>> {
    Ok(Normalization {
        normal_form: SPerturbation::from_field(&delta)?,
        coordinate_change: theta,
        trace: NormalizationTrace { method, steps },
    })
}

/// Classical degree-by-degree elimination with `f₀ = 0`.
pub fn graded_normalize<F: Coeff>(p: &SPerturbation<F>, order: usize) -> Result<Normalization<F>> {
    if order < 2 {
        return Err(Error::InvalidOrder(format!("order must be >= 2, got {order}")));
    }
    let order = order.min(p.order());
    let lambda = p.lambda().to_vec();
    let n = p.nvars();
    let zero = Series::zero(n, order);
    let mut delta = p.field().truncate(order);
    let mut us = Vec::new();
    let mut steps = Vec::new();
    for d in 1..order {
        let w = delta.degree_window(d, d + 1);
        let (_, w_star) = w.graded_split(&lambda);
        if w_star.is_zero() {
            continue;
        }
        let u = solve_bracket_equation(&lambda, &zero, &w_star, order)?;
        delta = conjugate(&delta, &u, order)?;
        steps.push(StepRecord {
            k: d as u32,
            pass: 0,
            ord_u: u.ord(),
            deg_u: u.deg(),
            u: u.clone(),
            f0: Series::zero(n, d + 1),
        });
        us.push(u);
    }
    let theta = composite_exponential(&us, n, order)?;
    finish(delta, theta, Method::Graded, steps)
}

pub fn normalize<F: Coeff>(p: &SPerturbation<F>, order: usize, method: Method) -> Result<Normalization<F>> {
    match method {
        Method::Newton => newton_normalize(p, order),
        Method::Graded => graded_normalize(p, order),
    }
}
