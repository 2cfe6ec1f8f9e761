//! Small divisors: the `ω_k` sequence, Bruno sums, radius schedules and
//! runtime checks of the majorant estimates along a normalization.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::derivation::LogBasis;
use crate::error::{Error, Result};
use crate::monomial::exponents_of_degree;
use crate::normalize::{conjugate, resonant_s_coefficient, Method, NormalizationTrace, SPerturbation};
use crate::scalar::{ratio_to_f64, rational_sqrt, Coeff, ComplexFloat, Gaussian};
use crate::series::Series;

/// Default bound on `∥m∥` for the lattice enumeration.
pub const DEFAULT_CAP: u64 = 4096;

/// Index set of the enumeration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    /// `M_1 ∪ ⋯ ∪ M_n`: at most one entry equal to `−1`, the rest `≥ 0`.
    #[default]
    Paper,
    /// Nonnegative exponents only.
    Nonneg,
}

impl fmt::Display for OmegaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmegaMode::Paper => "paper",
            OmegaMode::Nonneg => "nonneg",
        })
    }
}

impl FromStr for OmegaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(OmegaMode::Paper),
            "nonneg" => Ok(OmegaMode::Nonneg),
            other => Err(Error::InvalidOrder(format!("unknown omega mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SatisfiedCertified,
    SatisfiedHeuristic,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaRecord {
    pub k: u32,
    pub omega: f64,
    /// `ω_k` as an exact rational when the squared modulus is a square.
    pub omega_exact: Option<String>,
    /// Exact `ω_k²`.
    pub omega_squared: Option<String>,
    pub argmin: Vec<i64>,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrunoSum {
    /// `σ_K = Σ_{k≤K} −log(ω_k)/2^k`.
    pub partial_sums: Vec<f64>,
    pub verdict: Verdict,
    /// Extrapolated remainder of the series past `K`, when estimated.
    pub tail_estimate: Option<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaReport {
    pub lambda: Vec<String>,
    pub mode: OmegaMode,
    pub cap: u64,
    pub fast_path: bool,
    pub records: Vec<OmegaRecord>,
    pub bruno_sum: BrunoSum,
}

impl OmegaReport {
    pub fn omegas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.omega).collect()
    }
}

enum Weights {
    /// `D·λ = re + i·im` with small integer entries.
    Int { re: Vec<i128>, im: Vec<i128>, denom: BigInt },
    Gauss(Vec<Gaussian>),
    Float(Vec<Complex64>),
}

#[derive(Clone, Debug)]
enum Mag {
    Int(i128),
    Gauss(BigRational),
    Float(f64),
}

impl Mag {
    fn cmp(&self, other: &Mag) -> Ordering {
        match (self, other) {
            (Mag::Int(a), Mag::Int(b)) => a.cmp(b),
            (Mag::Gauss(a), Mag::Gauss(b)) => a.cmp(b),
            (Mag::Float(a), Mag::Float(b)) => a.total_cmp(b),
            _ => unreachable!("one weight representation per enumeration"),
        }
    }
}

const INT_LIMIT: i128 = 1 << 40;

impl Weights {
    fn new<F: Coeff>(lambda: &[F]) -> Self {
        if !F::is_exact() {
            return Weights::Float(lambda.iter().map(Coeff::to_complex).collect());
        }
        let g: Vec<Gaussian> = lambda
            .iter()
            .map(|c| c.to_gaussian().expect("exact scalars embed in the Gaussian rationals"))
            .collect();
        let denom = g.iter().fold(BigInt::one(), |acc, z| {
            let d = num_integer::lcm(z.re.denom().clone(), z.im.denom().clone());
            num_integer::lcm(acc, d)
        });
        let scaled = |q: &BigRational| (q * BigRational::from_integer(denom.clone())).to_integer().to_i128();
        let re: Option<Vec<i128>> = g.iter().map(|z| scaled(&z.re)).collect();
        let im: Option<Vec<i128>> = g.iter().map(|z| scaled(&z.im)).collect();
        match (re, im) {
            (Some(re), Some(im)) if re.iter().chain(&im).all(|v| v.abs() < INT_LIMIT) => {
                Weights::Int { re, im, denom }
            }
            _ => Weights::Gauss(g),
        }
    }

    fn is_exact(&self) -> bool {
        !matches!(self, Weights::Float(_))
    }

    fn is_real(&self) -> bool {
        match self {
            Weights::Int { im, .. } => im.iter().all(|v| *v == 0),
            Weights::Gauss(g) => g.iter().all(Gaussian::is_real),
            Weights::Float(z) => z.iter().all(|c| c.im == 0.0),
        }
    }

    /// `|⟨λ, m⟩|` (squared for exact weights), or `None` when resonant.
    fn eval(&self, m: &[i64]) -> Option<Mag> {
        match self {
            Weights::Int { re, im, .. } => {
                let a: i128 = re.iter().zip(m).map(|(r, &k)| r * k as i128).sum();
                let b: i128 = im.iter().zip(m).map(|(r, &k)| r * k as i128).sum();
                let n = a * a + b * b;
                (n != 0).then_some(Mag::Int(n))
            }
            Weights::Gauss(g) => {
                let mut acc = Gaussian::zero();
                for (z, &k) in g.iter().zip(m) {
                    acc.add_assign(&z.mul_int(k));
                }
                (!acc.is_zero()).then(|| Mag::Gauss(acc.norm_sqr()))
            }
            Weights::Float(z) => {
                let v: Complex64 = z.iter().zip(m).map(|(c, &k)| c * k as f64).sum();
                let norm = m.iter().map(|k| k.unsigned_abs() as usize).sum();
                (!ComplexFloat(v).is_resonance_zero(norm)).then(|| Mag::Float(v.norm()))
            }
        }
    }

    fn record(&self, k: u32, mag: &Mag, argmin: Vec<i64>) -> OmegaRecord {
        let squared = match (self, mag) {
            (Weights::Int { denom, .. }, Mag::Int(n)) => {
                let d = denom.clone();
                Some(BigRational::new(BigInt::from(*n), &d * &d))
            }
            (_, Mag::Gauss(q)) => Some(q.clone()),
            _ => None,
        };
        let (omega, omega_exact) = match (&squared, mag) {
            (Some(q), _) => {
                let root = rational_sqrt(q);
                let value = root.as_ref().map_or_else(|| ratio_to_f64(q).sqrt(), ratio_to_f64);
                (value, root.map(|r| r.to_string()))
            }
            (None, Mag::Float(v)) => (*v, None),
            _ => unreachable!(),
        };
        OmegaRecord {
            k,
            omega,
            omega_exact,
            omega_squared: squared.map(|q| q.to_string()),
            argmin,
            exact: self.is_exact(),
        }
    }

    /// Largest real root guess `−λ₂ m₂ / λ₁` rounded down, for real `n = 2`.
    fn floor_root(&self, m2: i64) -> i64 {
        match self {
            Weights::Int { re, .. } => {
                let num = -re[1] * m2 as i128;
                num.div_euclid(re[0]) as i64 - i64::from(re[0] < 0 && num.rem_euclid(re[0]) != 0)
            }
            Weights::Gauss(g) => {
                let t = -(&g[1].re * BigRational::from_integer(m2.into())) / &g[0].re;
                t.floor().to_integer().to_i64().unwrap_or(0)
            }
            Weights::Float(z) => (-z[1].re * m2 as f64 / z[0].re).floor() as i64,
        }
    }
}

/// Graded-lex key for signed exponent vectors: norm first, then the
/// lexicographically larger vector first (so `x < y < x²`).
fn key_cmp(a: &[i64], b: &[i64]) -> Ordering {
    let na: u64 = a.iter().map(|v| v.unsigned_abs()).sum();
    let nb: u64 = b.iter().map(|v| v.unsigned_abs()).sum();
    na.cmp(&nb).then_with(|| b.cmp(a))
}

struct Best {
    mag: Mag,
    m: Vec<i64>,
}

fn offer(best: &mut Option<Best>, mag: Mag, m: &[i64]) {
    let better = match best {
        None => true,
        Some(b) => match mag.cmp(&b.mag) {
            Ordering::Less => true,
            Ordering::Equal => key_cmp(m, &b.m) == Ordering::Less,
            Ordering::Greater => false,
        },
    };
    if better {
        *best = Some(Best { mag, m: m.to_vec() });
    }
}

/// Vectors of norm exactly `d` in the mode's index set.
fn shell(n: usize, d: usize, mode: OmegaMode) -> Vec<Vec<i64>> {
    let widen = |e: &crate::monomial::Exponent| e.iter().map(i64::from).collect::<Vec<i64>>();
    let mut out: Vec<Vec<i64>> = exponents_of_degree(n, d).iter().map(widen).collect();
    if mode == OmegaMode::Paper && d >= 1 {
        for i in 0..n {
            for e in exponents_of_degree(n - 1, d - 1) {
                let mut v = widen(&e);
                v.insert(i, -1);
                out.push(v);
            }
        }
    }
    out
}

fn exhaustive(w: &Weights, n: usize, kmax: u32, mode: OmegaMode) -> Vec<OmegaRecord> {
    let mut best: Option<Best> = None;
    let mut records = Vec::new();
    let mut d = 0usize;
    for k in 0..=kmax {
        let bound = 1usize << k;
        while d < bound {
            d += 1;
            for m in shell(n, d, mode) {
                if let Some(mag) = w.eval(&m) {
                    offer(&mut best, mag, &m);
                }
            }
        }
        let b = best.as_ref().expect("a nonzero λ has a nonresonant unit vector");
        records.push(w.record(k, &b.mag, b.m.clone()));
    }
    records
}

/// Real `λ = (λ₁, λ₂)`: for each `m₂` only the integers next to the real
/// root of `λ₁ m₁ + λ₂ m₂`, and the ends of the admissible range, can
/// realize the minimum.
fn two_dim_scan(w: &Weights, kmax: u32, mode: OmegaMode) -> Vec<OmegaRecord> {
    let mut records = Vec::new();
    for k in 0..=kmax {
        let b = 1i64 << k;
        let mut best: Option<Best> = None;
        let m2_lo = if mode == OmegaMode::Paper { -1 } else { 0 };
        for m2 in m2_lo..=b {
            let (lo, hi) = match mode {
                OmegaMode::Nonneg => (0, b - m2),
                OmegaMode::Paper if m2 < 0 => (0, b - 1),
                OmegaMode::Paper => (if m2 < b { -1 } else { 0 }, b - m2),
            };
            if lo > hi {
                continue;
            }
            let fl = w.floor_root(m2);
            let mut cands: Vec<i64> = [fl - 1, fl, fl + 1, fl + 2, lo, lo + 1, hi - 1, hi]
                .iter()
                .map(|&c| c.clamp(lo, hi))
                .collect();
            cands.sort_unstable();
            cands.dedup();
            for m1 in cands {
                let m = [m1, m2];
                if let Some(mag) = w.eval(&m) {
                    offer(&mut best, mag, &m);
                }
            }
        }
        let bst = best.expect("a nonzero λ has a nonresonant unit vector");
        records.push(w.record(k, &bst.mag, bst.m));
    }
    records
}

#[derive(Clone, Copy, Debug)]
pub struct OmegaOptions {
    pub mode: OmegaMode,
    pub cap: u64,
    /// Use the `n = 2` real scan when applicable.
    pub fast_path: bool,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        Self {
            mode: OmegaMode::Paper,
            cap: DEFAULT_CAP,
            fast_path: true,
        }
    }
}

/// `ω_k = min |⟨λ, m⟩|` over nonresonant `m` of the mode's index set with
/// `∥m∥ ≤ 2^k`, for `k = 0..=kmax`.
pub fn omega_sequence<F: Coeff>(lambda: &[F], kmax: u32, opts: OmegaOptions) -> Result<OmegaReport> {
    if lambda.iter().all(Coeff::is_zero) {
        return Err(Error::ZeroLambda);
    }
    let requested = 1u64.checked_shl(kmax).filter(|&b| b <= opts.cap && kmax < 63);
    let Some(_) = requested else {
        return Err(Error::BudgetExceeded {
            requested: 1u64.checked_shl(kmax).unwrap_or(u64::MAX),
            cap: opts.cap,
        });
    };
    let w = Weights::new(lambda);
    let n = lambda.len();
    let fast = opts.fast_path && n == 2 && w.is_real() && !matches!(w, Weights::Gauss(_)) && {
        // The scan divides by λ₁.
        !lambda[0].is_zero()
    };
    let records = if fast {
        two_dim_scan(&w, kmax, opts.mode)
    } else {
        exhaustive(&w, n, kmax, opts.mode)
    };
    let bruno_sum = bruno_sum_of(&records, w.is_exact());
    Ok(OmegaReport {
        lambda: lambda.iter().map(|c| c.to_string()).collect(),
        mode: opts.mode,
        cap: opts.cap,
        fast_path: fast,
        records,
        bruno_sum,
    })
}

/// Partial sums and verdict from the records of a report.
pub fn bruno_sum(report: &OmegaReport) -> BrunoSum {
    bruno_sum_of(&report.records, report.records.iter().all(|r| r.exact))
}

fn bruno_sum_of(records: &[OmegaRecord], exact: bool) -> BrunoSum {
    let terms: Vec<f64> = records.iter().map(|r| -r.omega.ln() / (1u64 << r.k) as f64).collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    if exact {
        // Values ⟨λ, m⟩ lie in the discrete lattice (1/D)·ℤ[i], so
        // ω_k ≥ 1/D and the tail is bounded by 2·log(D)/2^K.
        return BrunoSum {
            partial_sums,
            verdict: Verdict::SatisfiedCertified,
            tail_estimate: None,
            reason: "Gaussian-rational eigenvalues: the values <lambda,m> form a discrete set".into(),
        };
    }
    let k = terms.len();
    if k < 3 {
        return BrunoSum {
            partial_sums,
            verdict: Verdict::Undetermined,
            tail_estimate: None,
            reason: "too few terms to estimate the growth of the partial sums".into(),
        };
    }
    let last = &terms[k - 3..];
    if last.iter().all(|t| *t <= 0.0) {
        return BrunoSum {
            partial_sums,
            verdict: Verdict::SatisfiedHeuristic,
            tail_estimate: Some(0.0),
            reason: "omega_k >= 1 on the last terms".into(),
        };
    }
    let ratio = last
        .windows(2)
        .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { f64::INFINITY })
        .fold(0.0, f64::max);
    if ratio < 1.0 {
        let tail = terms[k - 1].max(0.0) * ratio / (1.0 - ratio);
        BrunoSum {
            partial_sums,
            verdict: Verdict::SatisfiedHeuristic,
            tail_estimate: Some(tail),
            reason: format!("increments decay with ratio <= {ratio:.6}"),
        }
    } else {
        BrunoSum {
            partial_sums,
            verdict: Verdict::Undetermined,
            tail_estimate: None,
            reason: "increments of the partial sums do not decay".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusSchedule {
    pub c: f64,
    pub k0: u32,
    pub rho: f64,
    /// `(ω_k/(C 2^{2k}))^{C/2^k}` for `k = k0, k0+1, ...`.
    pub factors: Vec<f64>,
    /// `ρ_s = ρ ∏_{k=k0}^{k0+s}` factor.
    pub radii: Vec<f64>,
    /// `ρ_s / ρ_{s−1}` for `s ≥ 1`.
    pub ratios: Vec<f64>,
    /// Extrapolated `ρ̄`, continuing `ω_k` by its last tabulated value.
    pub limit_estimate: f64,
    /// Closed-form bound on `|log ρ̄ − log ρ_s|` for the last `s`.
    pub log_tail: f64,
    pub limit_positive: bool,
}

/// Radii `ρ_s` of the analytic induction for `s = 0..=s_max`; `omegas[k]`
/// is `ω_k`, extended by its last value past the end of the table.
pub fn radius_schedule(omegas: &[f64], c: f64, k0: u32, rho: f64, s_max: usize) -> RadiusSchedule {
    let omega_at = |k: usize| omegas.get(k).or(omegas.last()).copied().unwrap_or(1.0);
    let log_factor = |k: usize| {
        let w = omega_at(k);
        c / 2f64.powi(k as i32) * (w.ln() - c.ln() - 2.0 * k as f64 * std::f64::consts::LN_2)
    };
    let mut factors = Vec::with_capacity(s_max + 1);
    let mut radii = Vec::with_capacity(s_max + 1);
    let mut log_rho = rho.ln();
    for s in 0..=s_max {
        let k = k0 as usize + s;
        let lf = log_factor(k);
        factors.push(lf.exp());
        log_rho += lf;
        radii.push(if rho > 0.0 { log_rho.exp() } else { 0.0 });
    }
    let ratios = radii
        .windows(2)
        .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { 0.0 })
        .collect();
    // Σ_{k>K} C/2^k (log ω − log C − 2k log 2) with ω frozen at ω_K.
    let kk = (k0 as usize + s_max) as f64;
    let tail_scale = c / 2f64.powf(kk);
    let log_tail = tail_scale * ((omega_at(k0 as usize + s_max).ln() - c.ln()) - 2.0 * std::f64::consts::LN_2 * (kk + 2.0));
    let limit_estimate = if rho > 0.0 { (log_rho + log_tail).exp() } else { 0.0 };
    let limit_positive = rho > 0.0 && limit_estimate > 0.0 && omegas.iter().all(|w| *w > 0.0);
    RadiusSchedule {
        c,
        k0,
        rho,
        factors,
        radii,
        ratios,
        limit_estimate,
        log_tail: log_tail.abs(),
        limit_positive,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub k: u32,
    pub pass: u32,
    /// Radii `ρ > r > ρ₁` of the step.
    pub rho: f64,
    pub r: f64,
    pub rho1: f64,
    pub u_norm: f64,
    pub u_bound: f64,
    pub u_ok: bool,
    pub f0_norm: f64,
    pub f0_ok: bool,
    pub w_norm: f64,
    pub w_ok: bool,
    pub residual_before: f64,
    pub residual_after: f64,
    /// `∥R∥_ρ ≤ Δ ⇒ ∥R₁∥_{ρ₁} ≤ Δ`.
    pub delta_ok: bool,
    /// `∥R₁∥_{ρ₁} ≤ (1 − Ck/2^k)∥R∥_ρ`.
    pub contraction_ok: bool,
    /// `max(∥f∥_ρ, ∥g_j∥_ρ) ≤ d∥R∥_ρ`.
    pub basis_ok: bool,
    pub scheduled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub c: f64,
    pub k0: u32,
    /// `Δ = min(1, 1/(2d))`.
    pub delta: f64,
    pub basis_constants: (f64, f64),
    /// Rescaling `μ = max(1, ∥R∥_ρ/Δ)`, applied as `ρ ↦ ρ/μ`.
    pub scaling: f64,
    pub rho: f64,
    pub steps: Vec<StepDiagnostics>,
    /// Truncated norms are lower bounds of the germ norms.
    pub lower_bounds: bool,
}

/// Evaluates the majorant inequalities of the analytic induction on a
/// completed normalization trace. Radii follow the schedule starting from
/// `ρ` (after rescaling so that `∥R∥_ρ ≤ Δ`) and advance once per index `k`.
pub fn estimate_diagnostics<F: Coeff>(
    p: &SPerturbation<F>,
    trace: &NormalizationTrace<F>,
    c: f64,
    k0: u32,
    rho: f64,
    omegas: &[f64],
) -> Result<Diagnostics> {
    let basis = LogBasis::canonical(p.lambda())?;
    let (bc, bd) = basis.norm_constants();
    let delta_c = 1f64.min(1.0 / (2.0 * bd));
    let order = p.order();
    let lambda = p.lambda().to_vec();
    let n = p.nvars();
    let s = p.semisimple();
    let r0 = p.nonlinear().rnorm(rho).value;
    let scaling = (r0 / delta_c).max(1.0);
    let mut rho_k = rho / scaling;
    let mut delta = p.field();
    let mut steps = Vec::new();
    let mut current_k = None;
    let (mut r, mut rho1) = (rho_k, rho_k);
    for step in &trace.steps {
        let k = match trace.method {
            Method::Newton => step.k,
            Method::Graded => (step.k.max(1) as u64).ilog2(),
        };
        let scheduled = k >= k0;
        if current_k != Some(k) {
            if current_k.is_some() && scheduled {
                rho_k = rho1;
            }
            current_k = Some(k);
            let two_k = 2f64.powi(k as i32);
            let base = (1.0 / (c * two_k)).powf(c / two_k);
            let w = omegas.get(k as usize).or(omegas.last()).copied().unwrap_or(1.0);
            let big_omega = w.powf(c / two_k);
            r = rho_k * base * big_omega;
            rho1 = r * base;
            if !scheduled {
                r = rho_k;
                rho1 = rho_k;
            }
        }
        let residual = delta.sub(&s);
        let residual_before = residual.rnorm(rho_k).value;
        let lo = 1usize << k;
        let hi = (2 * lo).min(order);
        let f0 = match trace.method {
            Method::Newton => resonant_s_coefficient(&lambda, &delta)?.truncate(lo),
            Method::Graded => Series::zero(n, order),
        };
        let unit_s = s.mul_series(&Series::one(n, order).add(&f0));
        let w = delta.sub(&unit_s).degree_window(lo, hi);
        let coeffs = residual.log_basis_expand(&basis)?;
        let coeff_max = coeffs.iter().map(|g| g.rnorm(rho_k).value).fold(0.0, f64::max);
        delta = conjugate(&delta, &step.u, order)?;
        let residual_after = delta.sub(&s).rnorm(rho1).value;
        let u_norm = step.u.rnorm(r).value;
        let u_bound = 1.0 / 2f64.powi(k as i32);
        let slack = 1e-12;
        let contraction = 1.0 - c * k as f64 / 2f64.powi(k as i32);
        steps.push(StepDiagnostics {
            k: step.k,
            pass: step.pass,
            rho: rho_k,
            r,
            rho1,
            u_norm,
            u_bound,
            u_ok: u_norm <= u_bound + slack,
            f0_norm: f0.rnorm(rho_k).value,
            f0_ok: f0.rnorm(rho_k).value <= 0.5 + slack,
            w_norm: w.rnorm(rho_k).value,
            w_ok: w.rnorm(rho_k).value <= 1.0 + slack,
            residual_before,
            residual_after,
            delta_ok: residual_before > delta_c + slack || residual_after <= delta_c + slack,
            contraction_ok: residual_after <= contraction.max(0.0) * residual_before + slack,
            basis_ok: coeff_max <= bd * residual_before * (1.0 + 1e-9) + slack,
            scheduled,
        });
    }
    Ok(Diagnostics {
        c,
        k0,
        delta: delta_c,
        basis_constants: (bc, bd),
        scaling,
        rho: rho / scaling,
        steps,
        lower_bounds: true,
    })
}

/// Shorthand for the report used by the estimate diagnostics.
pub fn omega_floats<F: Coeff>(lambda: &[F], kmax: u32) -> Result<Vec<f64>> {
    Ok(omega_sequence(lambda, kmax, OmegaOptions::default())?.omegas())
}
