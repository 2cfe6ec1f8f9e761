//! Nonnegative exponent vectors with graded-lexicographic ordering.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

/// Multi-index `m = (m_1, ..., m_n)` with nonnegative components.
///
/// Ordered graded-lexicographically: total degree first, then the vector
/// with the larger first differing component comes first, so that
/// `x < y < x^2 < xy < y^2`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Exponent(SmallVec<[u16; 4]>);

impl Exponent {
    pub fn zero(n: usize) -> Self {
        Exponent(SmallVec::from_elem(0, n))
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = Self::zero(n);
        e.0[i] = 1;
        e
    }

    pub fn from_slice(s: &[u16]) -> Self {
        Exponent(SmallVec::from_slice(s))
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.0
    }

    /// ∥m∥ = Σ m_i.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn get(&self, i: usize) -> u16 {
        self.0[i]
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        debug_assert_eq!(self.nvars(), other.nvars());
        Exponent(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when every component stays nonnegative.
    pub fn checked_sub(&self, other: &Exponent) -> Option<Exponent> {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<SmallVec<_>>>()
            .map(Exponent)
    }

    pub fn divides(&self, other: &Exponent) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn with_incremented(&self, i: usize) -> Exponent {
        let mut e = self.clone();
        e.0[i] += 1;
        e
    }

    pub fn with_decremented(&self, i: usize) -> Option<Exponent> {
        let mut e = self.clone();
        e.0[i] = e.0[i].checked_sub(1)?;
        Some(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        self.0.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<u16> {
        self.0.to_vec()
    }

    /// Monomial text such as `x^2*y` for the given variable names.
    pub fn to_monomial_string(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .zip(names)
            .filter(|(c, _)| **c > 0)
            .map(|(&c, name)| if c == 1 { name.clone() } else { format!("{name}^{c}") })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u16>> for Exponent {
    fn from(v: Vec<u16>) -> Self {
        Exponent(SmallVec::from_vec(v))
    }
}

impl<const K: usize> From<[u16; K]> for Exponent {
    fn from(v: [u16; K]) -> Self {
        Exponent::from_slice(&v)
    }
}

/// All exponents in `n` variables of total degree exactly `d`, in
/// graded-lex order.
pub fn exponents_of_degree(n: usize, d: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    fill(&mut cur, 0, d, &mut out);
    out
}

fn fill(cur: &mut Vec<u16>, i: usize, rest: usize, out: &mut Vec<Exponent>) {
    let n = cur.len();
    if n == 0 {
        if rest == 0 {
            out.push(Exponent::zero(0));
        }
        return;
    }
    if i == n - 1 {
        cur[i] = rest as u16;
        out.push(Exponent::from_slice(cur));
        return;
    }
    for c in (0..=rest).rev() {
        cur[i] = c as u16;
        fill(cur, i + 1, rest - c, out);
    }
    cur[i] = 0;
}

/// All exponents with `lo <= degree <= hi`, in graded-lex order.
pub fn exponents_in_range(n: usize, lo: usize, hi: usize) -> Vec<Exponent> {
    (lo..=hi).flat_map(|d| exponents_of_degree(n, d)).collect()
}

/// Number of monomials of degree exactly `d` in `n` variables.
pub fn count_of_degree(n: usize, d: usize) -> usize {
    if n == 0 {
        return usize::from(d == 0);
    }
    binomial(d + n - 1, n - 1)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}
