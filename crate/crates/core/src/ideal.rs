//! Ideals of the truncated power-series ring, handled by graded linear
//! algebra on the finite-dimensional slices `O / m^N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::automorphism::Automorphism;
use crate::derivation::LogDerivation;
use crate::error::Result;
use crate::monomial::Exponent;
use crate::monomial::exponents_in_range;
use crate::scalar::Coeff;
use crate::series::Series;

/// Finitely many generators, with all questions asked mod `m^order`.
#[derive(Clone, Serialize)]
#[serde(bound = "")]
pub struct TruncatedIdeal<F: Coeff> {
    nvars: usize,
    order: usize,
    generators: Vec<Series<F>>,
    #[serde(skip)]
    cache: Arc<Mutex<HashMap<usize, Arc<SliceEchelon<F>>>>>,
}

impl<F: Coeff> TruncatedIdeal<F> {
    pub fn new(nvars: usize, order: usize, generators: impl IntoIterator<Item = Series<F>>) -> Self {
        let mut gens: Vec<Series<F>> = generators
            .into_iter()
            .map(|g| g.truncate(order))
            .filter(|g| !g.is_zero())
            .collect();
        gens.sort_by(|a, b| a.terms().keys().cmp(b.terms().keys()));
        Self {
            nvars,
            order,
            generators: gens,
            cache: Arc::default(),
        }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::new(nvars, order, [])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generators(&self) -> &[Series<F>] {
        &self.generators
    }

    /// True when every generator vanishes mod `m^order`.
    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }

    /// Float ideals are decided by thresholded rank; verdicts are heuristic.
    pub fn is_heuristic(&self) -> bool {
        !F::is_exact()
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.nvars, order.min(self.order), self.generators.iter().cloned())
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self::new(
            self.nvars,
            self.order.min(other.order),
            self.generators.iter().chain(&other.generators).cloned(),
        )
    }

    fn echelon(&self, d: usize) -> Arc<SliceEchelon<F>> {
        let mut cache = self.cache.lock().expect("echelon cache poisoned");
        cache
            .entry(d)
            .or_insert_with(|| {
                let mut e = SliceEchelon::new(self.nvars, d);
                for g in &self.generators {
                    e.insert_generator(g);
                }
                Arc::new(e)
            })
            .clone()
    }

    /// Reduced row echelon basis of `(I + m^(d+1)) / m^(d+1)` inside the
    /// polynomials of degree `≤ d`, in increasing pivot order.
    pub fn graded_slice_basis(&self, d: usize) -> Vec<Series<F>> {
        self.echelon(d).rref_rows()
    }

    /// Dimension of the degree-`≤ d` slice of the ideal.
    pub fn slice_rank(&self, d: usize) -> usize {
        self.echelon(d).rank()
    }

    /// Whether `f ∈ I + m^order`.
    pub fn contains(&self, f: &Series<F>, order: usize) -> bool {
        let order = order.min(self.order).min(f.order());
        if order == 0 {
            return true;
        }
        self.echelon(order - 1).reduce(&f.truncate(order)).is_zero()
    }

    pub fn contains_ideal(&self, other: &Self, order: usize) -> bool {
        other.generators.iter().all(|g| self.contains(g, order))
    }

    /// Mutual containment mod `m^order`.
    pub fn ideal_equal(&self, other: &Self, order: usize) -> bool {
        self.contains_ideal(other, order) && other.contains_ideal(self, order)
    }

    /// `Φ^* I`, generated by `g ∘ φ`.
    pub fn pullback(&self, phi: &Automorphism<F>, order: usize) -> Result<Self> {
        let order = order.min(self.order).min(phi.order());
        let gens = self
            .generators
            .iter()
            .map(|g| phi.pullback(g, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(self.nvars, order, gens))
    }

    /// Smallest `∂`-stable ideal containing `I`, mod `m^order`.
    pub fn differential_closure(&self, d: &LogDerivation<F>, order: usize) -> Self {
        let order = order.min(self.order).min(d.order());
        if order == 0 {
            return Self::zero(self.nvars, 0);
        }
        let mut ech = SliceEchelon::new(self.nvars, order - 1);
        let mut gens = Vec::new();
        let mut queue = Vec::new();
        for g in &self.generators {
            let g = g.truncate(order);
            if ech.insert_generator(&g) {
                gens.push(g.clone());
                queue.push(g);
            }
        }
        let mut next = 0;
        while next < queue.len() {
            let h = d.apply(&queue[next], order);
            next += 1;
            if !ech.reduce(&h).is_zero() {
                ech.insert_generator(&h);
                gens.push(h.clone());
                queue.push(h);
            }
        }
        Self::new(self.nvars, order, gens)
    }

    /// Whether `∂(I) ⊂ I` mod `m^order`.
    pub fn is_invariant(&self, d: &LogDerivation<F>, order: usize) -> bool {
        self.generators.iter().all(|g| self.contains(&d.apply(g, order), order))
    }

    pub fn map_coeffs<G: Coeff>(&self, f: impl Fn(&F) -> G + Copy) -> TruncatedIdeal<G> {
        TruncatedIdeal::new(self.nvars, self.order, self.generators.iter().map(|g| g.map_coeffs(f)))
    }
}

/// Generator-wise comparison; use [`TruncatedIdeal::ideal_equal`] for
/// equality of ideals.
impl<F: Coeff> PartialEq for TruncatedIdeal<F> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.order == other.order && self.generators == other.generators
    }
}

impl<F: Coeff> fmt::Debug for TruncatedIdeal<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedIdeal")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("generators", &self.generators)
            .finish()
    }
}

/// Semi-echelon basis of the span of `x^a g` truncated at degree `≤ d`.
/// Each row is keyed by its leading (graded-lex smallest) monomial and
/// normalized so that the leading coefficient is one.
struct SliceEchelon<F: Coeff> {
    nvars: usize,
    degree: usize,
    rows: BTreeMap<Exponent, Series<F>>,
}

impl<F: Coeff> SliceEchelon<F> {
    fn new(nvars: usize, degree: usize) -> Self {
        Self {
            nvars,
            degree,
            rows: BTreeMap::new(),
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `f` modulo the rows; the result has no term on a pivot.
    fn reduce(&self, f: &Series<F>) -> Series<F> {
        let mut f = f.truncate(self.degree + 1);
        let scale = f.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        let mut done: Vec<(Exponent, F)> = Vec::new();
        loop {
            let head = f.iter().next().map(|(e, c)| (e.clone(), c.clone()));
            let Some((e, c)) = head else { break };
            if let Some(row) = self.rows.get(&e) {
                f = f.sub(&row.scale(&c));
            } else {
                f = Series::from_terms(
                    self.nvars,
                    self.degree + 1,
                    f.iter().skip(1).map(|(e, c)| (e.clone(), c.clone())),
                );
                if !c.is_negligible(scale) {
                    done.push((e, c));
                }
            }
            if !F::is_exact() {
                f = drop_negligible(&f, scale);
            }
        }
        Series::from_terms(self.nvars, self.degree + 1, done)
    }

    fn insert_row(&mut self, row: &Series<F>) -> bool {
        let r = self.reduce(row);
        let Some((lead, c)) = r.iter().next().map(|(e, c)| (e.clone(), c.clone())) else {
            return false;
        };
        let inv = c.inv().expect("leading coefficient is nonzero");
        self.rows.insert(lead, r.scale(&inv));
        true
    }

    /// Adds all multiples `x^a g`; returns whether the span grew.
    fn insert_generator(&mut self, g: &Series<F>) -> bool {
        let g = g.truncate(self.degree + 1);
        let Some(ord) = g.ord() else { return false };
        let mut grew = false;
        if ord > self.degree {
            return false;
        }
        for a in exponents_in_range(self.nvars, 0, self.degree - ord) {
            let row = g.mul_monomial(&a, &F::one());
            grew |= self.insert_row(&row);
        }
        grew
    }

    fn rref_rows(&self) -> Vec<Series<F>> {
        let mut reduced: BTreeMap<Exponent, Series<F>> = BTreeMap::new();
        for (pivot, row) in self.rows.iter().rev() {
            let mut r = row.clone();
            loop {
                let hit = r
                    .iter()
                    .find(|(e, _)| *e != pivot && reduced.contains_key(*e))
                    .map(|(e, c)| (e.clone(), c.clone()));
                match hit {
                    Some((e, c)) => r = r.sub(&reduced[&e].scale(&c)),
                    None => break,
                }
            }
            reduced.insert(pivot.clone(), r);
        }
        reduced.into_values().collect()
    }
}

fn drop_negligible<F: Coeff>(f: &Series<F>, scale: f64) -> Series<F> {
    Series::from_terms(
        f.nvars(),
        f.order(),
        f.iter()
            .filter(|(_, c)| !c.is_negligible(scale))
            .map(|(e, c)| (e.clone(), c.clone())),
    )
}
