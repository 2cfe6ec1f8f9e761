//! Dense univariate polynomials, used for separable parts of matrices.

use crate::linalg::Matrix;
use crate::scalar::Coeff;

/// Coefficients in ascending degree; no trailing zeros.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly<F> {
    coeffs: Vec<F>,
}

impl<F: Coeff> Poly<F> {
    pub fn new(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(Coeff::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::new(vec![F::one()])
    }

    /// `Π (t − r)`.
    pub fn from_roots(roots: &[F]) -> Self {
        roots.iter().fold(Self::one(), |acc, r| acc.mul(&Self::new(vec![r.neg(), F::one()])))
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&F> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &[F], i: usize| v.get(i).cloned().unwrap_or_else(F::zero);
        Self::new((0..n).map(|i| get(&self.coeffs, i).add(&get(&o.coeffs, i))).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&F::from_i64(-1)))
    }

    pub fn scale(&self, c: &F) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![F::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j].add_assign(&a.mul(b));
            }
        }
        Self::new(out)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.mul_int(i as i64))
                .collect(),
        )
    }

    /// Euclidean division `self = q·d + r`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead_inv = d.leading().and_then(Coeff::inv).expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        let mut q = vec![F::zero(); self.coeffs.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = r.last().expect("nonempty").mul(&lead_inv);
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] = r[k + i].sub(&c.mul(dc));
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(Coeff::is_zero) {
                r.pop();
            }
        }
        (Self::new(q), Self::new(r))
    }

    pub fn monic(&self) -> Self {
        match self.leading().and_then(Coeff::inv) {
            Some(inv) => self.scale(&inv),
            None => self.clone(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `p / gcd(p, p')`: the product of the distinct linear factors.
    pub fn squarefree_part(&self) -> Self {
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    pub fn eval(&self, x: &F) -> F {
        self.coeffs.iter().rev().fold(F::zero(), |acc, c| acc.mul(x).add(c))
    }

    /// `p(A)` by Horner's rule, multiplying by `A` on the right.
    pub fn eval_matrix(&self, a: &Matrix<F>) -> Matrix<F> {
        let n = a.rows();
        let mut acc = Matrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(a);
            if !c.is_zero() {
                for i in 0..n {
                    let v = acc.get(i, i).add(c);
                    acc.set(i, i, v);
                }
            }
        }
        acc
    }
}

/// Characteristic polynomial `det(t I − A)` by the Faddeev–LeVerrier
/// recursion (characteristic zero).
pub fn characteristic_polynomial<F: Coeff>(a: &Matrix<F>) -> Poly<F> {
    let n = a.rows();
    let mut coeffs = vec![F::zero(); n + 1];
    coeffs[n] = F::one();
    let mut m = Matrix::zeros(n, n);
    let mut c_prev = F::one();
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        m = a.mul(&m);
        for i in 0..n {
            let v = m.get(i, i).add(&c_prev);
            m.set(i, i, v);
        }
        let am = a.mul(&m);
        let mut tr = F::zero();
        for i in 0..n {
            tr.add_assign(am.get(i, i));
        }
        let c = tr.neg().mul(&F::from_i64(k as i64).inv().expect("nonzero"));
        coeffs[n - k] = c.clone();
        c_prev = c;
    }
    Poly::new(coeffs)
}
