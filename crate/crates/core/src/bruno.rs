//! Bruno ideals: extraction from normal forms, transport to the original
//! coordinates, the Jordan–Chevalley jet oracle and the analyticity
//! certificate built from collinearity and commutativity ideals.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::derivation::{wedge_coeff_ideal, LogBasis, LogDerivation};
use crate::error::{Error, Result};
use crate::ideal::TruncatedIdeal;
use crate::linalg::Matrix;
use crate::monomial::{exponents_in_range, Exponent};
use crate::normalize::{normalize, Method, Normalization, SPerturbation};
use crate::poly::{characteristic_polynomial, Poly};
use crate::scalar::Coeff;
use crate::series::Series;

fn first_nonresonant<F: Coeff>(delta: &SPerturbation<F>, order: usize) -> Option<Exponent> {
    let (_, non) = delta.nonlinear().truncate(order).graded_split(delta.lambda());
    non.terms().keys().next().cloned()
}

fn check_adapted<F: Coeff>(lambda: &[F], basis: &LogBasis<F>) -> Result<()> {
    let m = Matrix::from_rows(vec![lambda.to_vec(), basis.mus()[0].clone()]);
    if m.rank() != 1 {
        return Err(Error::BasisNotAdapted);
    }
    Ok(())
}

/// `⟨g_1, ..., g_{n-1}⟩` from `δ − S = f S + Σ g_j T_j` for a field in
/// normal form, in a basis whose first vector is collinear to `λ`.
pub fn bruno_ideal_normal_form<F: Coeff>(
    delta: &SPerturbation<F>,
    basis: &LogBasis<F>,
    order: usize,
) -> Result<TruncatedIdeal<F>> {
    let order = order.min(delta.order());
    if let Some(m) = first_nonresonant(delta, order) {
        return Err(Error::NotInNormalForm { exponent: m.to_string() });
    }
    check_adapted(delta.lambda(), basis)?;
    let g = delta.nonlinear().truncate(order).log_basis_expand(basis)?;
    Ok(TruncatedIdeal::new(delta.nvars(), order, g.into_iter().skip(1)))
}

/// Coefficients `(f, g_1, ..., g_{n-1})` of `δ − S` in the canonical basis.
pub fn normal_form_coefficients<F: Coeff>(delta: &SPerturbation<F>) -> Result<Vec<Series<F>>> {
    let basis = LogBasis::canonical(delta.lambda())?;
    delta.nonlinear().log_basis_expand(&basis)
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct BrunoReport<F: Coeff> {
    pub order: usize,
    pub normalization: Normalization<F>,
    /// `B(δ)` in the normalized coordinates.
    pub ideal_normalized: TruncatedIdeal<F>,
    /// `B(∂) = θ^* B(δ)` in the original coordinates.
    pub ideal_original: TruncatedIdeal<F>,
    /// S-coefficient `f` of the normal form and its degree-zero component.
    pub f: Series<F>,
    pub f0: Series<F>,
    pub f_minus_f0_in_ideal: bool,
    pub g_in_ideal: Vec<bool>,
    /// The nilpotent part is collinear to `S` mod `m^order`.
    pub a_condition_holds: bool,
    pub orientation: &'static str,
}

/// Normalizes `∂`, extracts `B(δ)` and pulls it back along `θ`.
pub fn bruno_ideal<F: Coeff>(p: &SPerturbation<F>, order: usize, method: Method) -> Result<BrunoReport<F>> {
    let normalization = normalize(p, order, method)?;
    let order = order.min(p.order());
    let delta = &normalization.normal_form;
    let basis = LogBasis::canonical(delta.lambda())?;
    let ideal_normalized = bruno_ideal_normal_form(delta, &basis, order)?;
    let ideal_original = ideal_normalized.pullback(&normalization.coordinate_change, order)?;
    let coeffs = delta.nonlinear().log_basis_expand(&basis)?;
    let f = coeffs[0].clone();
    let f0 = f.graded_component(delta.lambda(), &F::zero());
    let f_minus_f0_in_ideal = ideal_normalized.contains(&f.sub(&f0), order);
    let g_in_ideal = coeffs[1..].iter().map(|g| ideal_normalized.contains(g, order)).collect();
    let a_condition_holds = ideal_normalized.is_zero();
    Ok(BrunoReport {
        order,
        normalization,
        ideal_normalized,
        ideal_original,
        f,
        f0,
        f_minus_f0_in_ideal,
        g_in_ideal,
        a_condition_holds,
        orientation: "d(g o theta) = (delta g) o theta; B(d) = theta^* B(delta)",
    })
}

/// Matrix of `∂` on the monomials of degree `1..=jet`, in graded-lex order:
/// column `j` holds the coefficients of `∂(x^{e_j})` mod `m^(jet+1)`.
pub struct JetMatrix<F: Coeff> {
    pub basis: Vec<Exponent>,
    pub matrix: Matrix<F>,
}

pub fn jet_matrix<F: Coeff>(d: &LogDerivation<F>, jet: usize) -> JetMatrix<F> {
    let n = d.nvars();
    let basis = exponents_in_range(n, 1, jet);
    let index: HashMap<&Exponent, usize> = basis.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let dim = basis.len();
    // Terms of log degree >= jet only reach degrees > jet on the basis, so
    // the field may be treated as exact up to jet + 1.
    let d = d.truncate(jet).with_order(jet + 1);
    let mut matrix = Matrix::zeros(dim, dim);
    for (j, e) in basis.iter().enumerate() {
        let image = d.apply(&Series::monomial(n, jet + 1, e.clone(), F::one()), jet + 1);
        for (m, c) in image.iter() {
            matrix.set(index[m], j, c.clone());
        }
    }
    JetMatrix { basis, matrix }
}

/// Reads a jet matrix back as a logarithmic derivation mod `m^jet`.
fn read_back<F: Coeff>(jm: &JetMatrix<F>, a: &Matrix<F>, n: usize, jet: usize) -> Result<LogDerivation<F>> {
    let comps: Vec<Series<F>> = (0..n)
        .map(|i| {
            let col = jm
                .basis
                .iter()
                .position(|e| *e == Exponent::unit(n, i))
                .expect("degree-one monomials are in the basis");
            Series::from_terms(
                n,
                jet + 1,
                jm.basis.iter().enumerate().map(|(r, e)| (e.clone(), a.get(r, col).clone())),
            )
        })
        .collect();
    let d = LogDerivation::from_vector_components(&comps, jet)
        .map_err(|e| Error::NotADerivation(format!("readback is not logarithmic: {e}")))?;
    // A derivation is determined by the images of the coordinates; the
    // matrix is a derivation iff it coincides with the readback's matrix.
    if jet_matrix(&d, jet).matrix != *a {
        return Err(Error::NotADerivation("Leibniz rule fails on the jet".into()));
    }
    Ok(d)
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct JetDecomposition<F: Coeff> {
    pub jet: usize,
    pub dimension: usize,
    pub semisimple: LogDerivation<F>,
    pub nilpotent: LogDerivation<F>,
    pub newton_iterations: usize,
    pub squarefree_degree: usize,
    /// `[∂_ss, ∂_nilp] = 0` mod `m^jet`.
    pub commute: bool,
}

/// Squarefree part of the characteristic polynomial: the product of
/// `t − α` over distinct diagonal entries when the matrix is triangular,
/// `p / gcd(p, p')` otherwise.
pub fn separable_polynomial<F: Coeff>(a: &Matrix<F>) -> Poly<F> {
    if a.is_lower_triangular() {
        let mut roots: Vec<F> = Vec::new();
        for i in 0..a.rows() {
            let d = a.get(i, i);
            if !roots.iter().any(|r| r == d) {
                roots.push(d.clone());
            }
        }
        Poly::from_roots(&roots)
    } else {
        characteristic_polynomial(a).squarefree_part()
    }
}

/// Additive Jordan–Chevalley decomposition of a square matrix by the
/// iteration `A ← A − p(A) p'(A)^{-1}`; returns the semisimple part and
/// the number of iterations.
pub fn semisimple_part<F: Coeff>(a: &Matrix<F>) -> Result<(Matrix<F>, usize, usize)> {
    let p = separable_polynomial(a);
    let dp = p.derivative();
    let mut s = a.clone();
    let triangular = a.is_lower_triangular();
    for it in 0..64 {
        let ps = p.eval_matrix(&s);
        if ps.is_zero() {
            return Ok((s, it, p.degree().unwrap_or(0)));
        }
        let dps = dp.eval_matrix(&s);
        let inv = if triangular && dps.is_lower_triangular() {
            dps.inverse_lower_triangular()?
        } else {
            dps.inverse()?
        };
        s = s.sub(&ps.mul(&inv));
    }
    Err(Error::NotADerivation("separable-part iteration did not converge".into()))
}

/// Jordan decomposition `∂ = ∂_ss + ∂_nilp` of the jet of `∂` mod `m^jet`.
pub fn chevalley_jet<F: Coeff>(d: &LogDerivation<F>, jet: usize) -> Result<JetDecomposition<F>> {
    if !F::is_exact() {
        return Err(Error::ExactScalarsRequired("Jordan–Chevalley jet oracle".into()));
    }
    if jet == 0 || d.order() < jet {
        return Err(Error::InvalidOrder(format!("jet order {jet} exceeds field order {}", d.order())));
    }
    let n = d.nvars();
    let jm = jet_matrix(d, jet);
    let (s, iterations, sq) = semisimple_part(&jm.matrix)?;
    let semisimple = read_back(&jm, &s, n, jet)?;
    let nilpotent = d.truncate(jet).sub(&semisimple);
    let commute = semisimple.lie_bracket(&nilpotent, jet).is_zero();
    Ok(JetDecomposition {
        jet,
        dimension: jm.basis.len(),
        semisimple,
        nilpotent,
        newton_iterations: iterations,
        squarefree_degree: sq,
        commute,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct OracleComparison<F: Coeff> {
    pub jet: usize,
    pub decomposition: JetDecomposition<F>,
    pub chevalley_ideal: TruncatedIdeal<F>,
    pub pullback_ideal: TruncatedIdeal<F>,
    pub chevalley_rank: usize,
    pub pullback_rank: usize,
    pub equal: bool,
}

/// `Γ(∂_ss ∧ ∂_nilp)` from the jet matrix against `θ^* B(δ)` from a
/// normalization, both mod `m^jet`.
pub fn bruno_oracle_compare<F: Coeff>(p: &SPerturbation<F>, jet: usize) -> Result<OracleComparison<F>> {
    let dec = chevalley_jet(&p.field(), jet)?;
    let chevalley_ideal = wedge_coeff_ideal(&dec.semisimple, &dec.nilpotent, jet);
    let method = if jet.is_power_of_two() && jet >= 2 {
        Method::Newton
    } else {
        Method::Graded
    };
    let report = bruno_ideal(p, jet, method)?;
    let pullback_ideal = report.ideal_original.truncate(jet);
    let top = jet.saturating_sub(1);
    Ok(OracleComparison {
        jet,
        chevalley_rank: chevalley_ideal.slice_rank(top),
        pullback_rank: pullback_ideal.slice_rank(top),
        equal: chevalley_ideal.ideal_equal(&pullback_ideal, jet),
        decomposition: dec,
        chevalley_ideal,
        pullback_ideal,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "")]
pub struct AnalyticityCertificate<F: Coeff> {
    pub order: usize,
    /// `Γ(S ∧ R)`.
    pub collinearity: TruncatedIdeal<F>,
    /// Coefficients of `[S, R]`.
    pub commutativity: TruncatedIdeal<F>,
    /// `S[I₁ + I₂]`.
    pub ideal: TruncatedIdeal<F>,
    pub normal_form: bool,
    /// `B(∂)` from the basis expansion, for normal-form input.
    pub bruno: Option<TruncatedIdeal<F>>,
    /// Whether `I = B(∂)`; only asserted for normal forms.
    pub equal: Option<bool>,
}

pub fn analyticity_certificate<F: Coeff>(p: &SPerturbation<F>, order: usize) -> Result<AnalyticityCertificate<F>> {
    let order = order.min(p.order());
    let n = p.nvars();
    let s = p.semisimple().truncate(order);
    let r = p.nonlinear().truncate(order);
    let collinearity = wedge_coeff_ideal(&s, &r, order);
    let commutativity = TruncatedIdeal::new(n, order, s.lie_bracket(&r, order).log_coefficients());
    let w = collinearity.sum(&commutativity);
    let ideal = w.differential_closure(&s, order);
    let normal_form = first_nonresonant(p, order).is_none();
    let (bruno, equal) = if normal_form {
        let b = bruno_ideal_normal_form(p, &LogBasis::canonical(p.lambda())?, order)?;
        let eq = ideal.ideal_equal(&b, order);
        (Some(b), Some(eq))
    } else {
        (None, None)
    };
    Ok(AnalyticityCertificate {
        order,
        collinearity,
        commutativity,
        ideal,
        normal_form,
        bruno,
        equal,
    })
}

/// Distinct weights `<λ, m>` over the jet basis; the spectrum of the jet
/// matrix of a field with linear part `L(λ)`.
pub fn jet_spectrum<F: Coeff>(lambda: &[F], jet: usize) -> Vec<F> {
    let mut seen: Vec<F> = Vec::new();
    let mut keys = BTreeSet::new();
    for e in exponents_in_range(lambda.len(), 1, jet) {
        let w = crate::series::weight(lambda, &e);
        if keys.insert(w.to_string()) {
            seen.push(w);
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::newton_normalize;
    use crate::scalar::Gaussian;
    use num_rational::BigRational as Q;

    type G = Gaussian;

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&c| Q::from_i64(c)).collect()
    }

    fn cone_field(order: usize) -> SPerturbation<G> {
        let i = G::i();
        let one = vec![G::one(); 3];
        let r = LogDerivation::monomial(Exponent::from([1, 1, 0]), one.clone(), order)
            .sub(&LogDerivation::monomial(Exponent::from([0, 0, 2]), one, order));
        SPerturbation::new(vec![i.clone(), i.neg(), G::zero()], r).unwrap()
    }

    fn cone(order: usize) -> Series<G> {
        let v = |i| Series::<G>::variable(3, order, i);
        v(0).mul(&v(1)).sub(&v(2).pow(2))
    }

    #[test]
    fn cone_field_ideal() {
        let p = cone_field(8);
        let b = bruno_ideal_normal_form(&p, &LogBasis::canonical(p.lambda()).unwrap(), 8).unwrap();
        assert!(b.ideal_equal(&TruncatedIdeal::new(3, 8, [cone(8)]), 8));
        let coeffs = normal_form_coefficients(&p).unwrap();
        assert_eq!(coeffs[0], cone(8).scale(&G::i().neg()));
        assert_eq!(coeffs[1], cone(8).scale(&G::from_i64(2)));
        assert_eq!(coeffs[2], cone(8));
    }

    #[test]
    fn collinear_field_has_zero_ideal() {
        let s = LogDerivation::diagonal(qv(&[1, -1]), 6);
        let xy = Series::monomial(2, 6, Exponent::from([1, 1]), Q::from_i64(1));
        let p = SPerturbation::new(qv(&[1, -1]), s.mul_series(&xy)).unwrap();
        let report = bruno_ideal(&p, 6, Method::Graded).unwrap();
        assert!(report.ideal_normalized.is_zero());
        assert!(report.a_condition_holds);
    }

    #[test]
    fn xy_example() {
        let r = LogDerivation::monomial(Exponent::from([1, 1]), qv(&[1, 0]), 8);
        let p = SPerturbation::new(qv(&[1, -1]), r).unwrap();
        let basis = LogBasis::new(vec![qv(&[1, -1]), qv(&[1, 0])]).unwrap();
        let b = bruno_ideal_normal_form(&p, &basis, 8).unwrap();
        let xy = Series::monomial(2, 8, Exponent::from([1, 1]), Q::from_i64(1));
        assert!(b.ideal_equal(&TruncatedIdeal::new(2, 8, [xy]), 8));
        let bad = LogBasis::new(vec![qv(&[1, 0]), qv(&[0, 1])]).unwrap();
        assert_eq!(bruno_ideal_normal_form(&p, &bad, 8).unwrap_err(), Error::BasisNotAdapted);
    }

    #[test]
    fn rejects_non_normal_form() {
        let r = LogDerivation::monomial(Exponent::from([1, 0]), qv(&[1, 0]), 8);
        let p = SPerturbation::new(qv(&[1, -1]), r).unwrap();
        let basis = LogBasis::canonical(p.lambda()).unwrap();
        assert!(matches!(
            bruno_ideal_normal_form(&p, &basis, 8),
            Err(Error::NotInNormalForm { .. })
        ));
    }

    #[test]
    fn chevalley_examples() {
        let r = LogDerivation::monomial(Exponent::from([1, 1]), qv(&[1, 0]), 4);
        let s = LogDerivation::diagonal(qv(&[1, -1]), 4);
        let dec = chevalley_jet(&s.add(&r), 4).unwrap();
        assert_eq!(dec.semisimple, s);
        assert_eq!(dec.nilpotent, r);
        assert!(dec.commute);

        let lin = chevalley_jet(&s, 4).unwrap();
        assert_eq!(lin.semisimple, s);
        assert!(lin.nilpotent.is_zero());

        let p = cone_field(8);
        let dec = chevalley_jet(&p.field(), 8).unwrap();
        assert_eq!(dec.dimension, 164);
        assert_eq!(dec.semisimple, p.semisimple().truncate(8));
        assert_eq!(dec.nilpotent, p.nonlinear().truncate(8));
    }

    #[test]
    fn chevalley_on_non_normal_field() {
        // ∂ = L(1,-1) + x L(1,0): semisimple part is the linearization's
        // conjugate, not L(λ) itself.
        let order = 6;
        let d = LogDerivation::diagonal(qv(&[1, -1]), order)
            .add(&LogDerivation::monomial(Exponent::from([1, 0]), qv(&[1, 0]), order));
        let dec = chevalley_jet(&d, order).unwrap();
        assert!(dec.commute);
        assert_ne!(dec.semisimple, LogDerivation::diagonal(qv(&[1, -1]), order));
        let p = SPerturbation::from_field(&d).unwrap();
        let cmp = bruno_oracle_compare(&p, order).unwrap();
        assert!(cmp.equal);
    }

    #[test]
    fn gcd_route_matches_diagonal_route() {
        let d = LogDerivation::diagonal(qv(&[2, -1]), 5)
            .add(&LogDerivation::monomial(Exponent::from([1, 2]), qv(&[1, 3]), 5));
        let a = jet_matrix(&d, 4).matrix;
        let via_gcd = characteristic_polynomial(&a).squarefree_part();
        assert_eq!(via_gcd, separable_polynomial(&a).monic());
    }

    #[test]
    fn certificate_on_cone_field() {
        let p = cone_field(8);
        let cert = analyticity_certificate(&p, 8).unwrap();
        assert_eq!(cert.equal, Some(true));
        assert!(cert.commutativity.is_zero());
        assert!(cert.ideal.ideal_equal(&TruncatedIdeal::new(3, 8, [cone(8)]), 8));

        let r = LogDerivation::monomial(Exponent::from([1, 0]), qv(&[1, 0]), 6);
        let q = SPerturbation::new(qv(&[1, -1]), r).unwrap();
        let cert = analyticity_certificate(&q, 6).unwrap();
        assert!(!cert.commutativity.is_zero());
        assert_eq!(cert.equal, None);
    }

    #[test]
    fn cone_field_newton_is_identity() {
        let p = cone_field(16);
        let out = newton_normalize(&p, 16).unwrap();
        assert!(out.coordinate_change.is_identity());
        let spec = jet_spectrum(p.lambda(), 8);
        assert_eq!(spec.len(), 17);
    }
}
