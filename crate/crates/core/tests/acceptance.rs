//! Acceptance criteria, one line per criterion. Run with
//! `cargo test -p brunoform-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use brunoform::bruno::{analyticity_certificate, bruno_ideal, bruno_oracle_compare};
use brunoform::derivation::LogDerivation;
use brunoform::monomial::{exponents_in_range, Exponent};
use brunoform::normalize::{
    conjugate_by, newton_normalize, solve_bracket_equation, solve_truncated_bracket, Method,
    NormalizationTrace, SPerturbation,
};
use brunoform::omega::{omega_sequence, radius_schedule, OmegaMode, OmegaOptions, Verdict};
use brunoform::parse::parse_field;
use brunoform::{Automorphism, Coeff, ComplexFloat, Gaussian, Series, TruncatedIdeal};
use common::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

static FLAT_RUNS: AtomicUsize = AtomicUsize::new(0);
static FLAT_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

fn record_flatness<F: Coeff>(trace: &NormalizationTrace<F>) -> bool {
    FLAT_RUNS.fetch_add(1, Ordering::Relaxed);
    let ok = trace.flatness_holds();
    if !ok {
        FLAT_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
    ok
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, format!("{what} took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn c1_cone_field() -> Outcome {
    let start = Instant::now();
    let spec = parse_field(CONE_FIELD).map_err(|e| e.to_string())?;
    let d: LogDerivation<Gaussian> = spec.derivation(16).map_err(|e| e.to_string())?;
    let p = SPerturbation::from_field(&d).map_err(|e| e.to_string())?;
    let report = bruno_ideal(&p, 16, Method::Newton).map_err(|e| e.to_string())?;
    let t = within(start, Duration::from_secs(10), "bruno-ideal")?;
    let expected = TruncatedIdeal::new(3, 16, [cone(16)]);
    ensure(report.ideal_original.ideal_equal(&expected, 16), "B(d) != <xy - z^2>")?;
    ensure(report.normalization.coordinate_change.is_identity(), "normalizing map is not the identity")?;
    ensure(record_flatness(&report.normalization.trace), "flatness violated")?;
    Ok(format!("B = <xy - z^2> mod m^16, identity map, {t:.2?}"))
}

fn c2_real_conjugate() -> Outcome {
    let start = Instant::now();
    let n = 3;
    let v = |i| Series::<Gaussian>::variable(n, 17, i);
    let i = Gaussian::i();
    let phi = Automorphism::from_images(vec![v(0).add(&v(1).scale(&i)), v(0).sub(&v(1).scale(&i)), v(2)])
        .map_err(|e| e.to_string())?;
    let b = TruncatedIdeal::new(3, 16, [cone(16)]);
    let pulled = b.pullback(&phi, 16).map_err(|e| e.to_string())?;
    let t = within(start, Duration::from_secs(5), "pullback")?;
    let w = |i| Series::<Gaussian>::variable(n, 16, i);
    let target = TruncatedIdeal::new(3, 16, [w(0).pow(2).add(&w(1).pow(2)).sub(&w(2).pow(2))]);
    ensure(pulled.ideal_equal(&target, 16), "pullback != <x^2 + y^2 - z^2>")?;
    Ok(format!("Phi^*<xy - z^2> = <x^2 + y^2 - z^2> mod m^16, {t:.2?}"))
}

fn c3_pullback_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let order = 8;
    let lambdas = resonant_lambdas();
    let count = 50;
    for case in 0..count {
        let lambda = lambdas.choose(&mut rng).unwrap().clone();
        let n = lambda.len();
        let terms = rng.gen_range(1..=3);
        let r = random_nonlinear(&mut rng, n, 1, 2, terms, order + 1);
        let p = SPerturbation::new(lambda, r).unwrap();
        let phi = random_log_automorphism(&mut rng, n, order + 1);
        let conj = conjugate_by(&p.field(), &phi, order).map_err(|e| format!("case {case}: {e}"))?;
        let q = SPerturbation::from_field(&conj).unwrap();
        let b_orig = bruno_ideal(&p, order, Method::Newton).map_err(|e| format!("case {case}: {e}"))?;
        let b_conj = bruno_ideal(&q, order, Method::Newton).map_err(|e| format!("case {case}: {e}"))?;
        record_flatness(&b_orig.normalization.trace);
        record_flatness(&b_conj.normalization.trace);
        let pulled = b_orig.ideal_original.pullback(&phi, order).unwrap();
        ensure(
            b_conj.ideal_original.ideal_equal(&pulled, order),
            format!("case {case}: B(Phi d Phi^-1) != Phi^* B(d)"),
        )?;
    }
    Ok(format!("{count} random instances, exact equality mod m^8"))
}

fn c4_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let jet = 8;
    let lambdas = resonant_lambdas();
    let count = 20;
    let mut nontrivial = 0;
    for case in 0..count {
        let lambda = lambdas.choose(&mut rng).unwrap().clone();
        let n = lambda.len();
        let terms = rng.gen_range(1..=3);
        let r = random_nonlinear(&mut rng, n, 1, 2, terms, jet);
        let p = SPerturbation::new(lambda, r).unwrap();
        let cmp = bruno_oracle_compare(&p, jet).map_err(|e| format!("case {case}: {e}"))?;
        ensure(cmp.decomposition.commute, format!("case {case}: [ss, nilp] != 0"))?;
        ensure(cmp.equal, format!("case {case}: Chevalley and pullback ideals differ"))?;
        if !cmp.chevalley_ideal.is_zero() {
            nontrivial += 1;
        }
    }
    Ok(format!("{count} instances at jet 8 ({nontrivial} with nonzero ideal)"))
}

fn c5_newton_vs_graded() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let order = 16;
    let lambdas = resonant_lambdas();
    let count = 50;
    for case in 0..count {
        let lambda = lambdas.choose(&mut rng).unwrap().clone();
        let n = lambda.len();
        let terms = rng.gen_range(1..=2);
        let r = random_nonlinear(&mut rng, n, 1, 2, terms, order);
        let p = SPerturbation::new(lambda, r).unwrap();
        let s = p.semisimple();
        let mut ideals = Vec::new();
        for method in [Method::Newton, Method::Graded] {
            let rep = bruno_ideal(&p, order, method).map_err(|e| format!("case {case}: {e}"))?;
            let nf = &rep.normalization.normal_form;
            ensure(nf.is_normal_form(), format!("case {case}: {method:?} output has nonresonant terms"))?;
            ensure(
                s.lie_bracket(nf.nonlinear(), order).is_zero(),
                format!("case {case}: [S, delta - S] != 0 for {method:?}"),
            )?;
            if method == Method::Newton {
                ensure(record_flatness(&rep.normalization.trace), format!("case {case}: flatness"))?;
            }
            ideals.push(rep.ideal_original);
        }
        ensure(ideals[0].ideal_equal(&ideals[1], order), format!("case {case}: Bruno ideals differ"))?;
    }
    Ok(format!("{count} instances mod m^16"))
}

fn c6_flatness() -> Outcome {
    // Extra runs on top of those recorded by criteria 1, 3, 5 and 8.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let lambda = resonant_lambdas().choose(&mut rng).unwrap().clone();
        let n = lambda.len();
        let r = random_nonlinear(&mut rng, n, 1, 3, 3, 16);
        let p = SPerturbation::new(lambda, r).unwrap();
        let out = newton_normalize(&p, 16).map_err(|e| e.to_string())?;
        record_flatness(&out.trace);
    }
    let runs = FLAT_RUNS.load(Ordering::Relaxed);
    let bad = FLAT_VIOLATIONS.load(Ordering::Relaxed);
    ensure(bad == 0, format!("{bad} of {runs} Newton runs violate ord(U_k) >= 2^k, deg(U_k) < 2^(k+1)"))?;
    Ok(format!("{runs} Newton runs, every step flat"))
}

fn c7_solver() -> Outcome {
    // Hand-verified fixture.
    let order = 4;
    let lambda = qv(&[1, -1]);
    let xy = Series::monomial(2, order, Exponent::from([1, 1]), q(1));
    let w = LogDerivation::monomial(Exponent::from([1, 0]), qv(&[0, 1]), order);
    let u = solve_bracket_equation(&lambda, &xy, &w, order).map_err(|e| e.to_string())?;
    let expected = LogDerivation::monomial(Exponent::from([1, 0]), qv(&[0, -1]), order)
        .add(&LogDerivation::monomial(Exponent::from([2, 1]), qv(&[-1, 2]), order));
    ensure(u == expected, format!("fixture: U = {u:?}"))?;
    let unit_s = LogDerivation::diagonal(lambda.clone(), order).mul_series(&Series::one(2, order).add(&xy));
    ensure(unit_s.lie_bracket(&u, order).add(&w).is_zero(), "fixture bracket identity")?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lambdas = [qv(&[1, -1]), qv(&[2, -3]), qv(&[1, -1, 0]), qv(&[1, 2]), qv(&[3, -1, 1])];
    let count = 100;
    for case in 0..count {
        let lambda = lambdas.choose(&mut rng).unwrap().clone();
        let n = lambda.len();
        let k: u32 = rng.gen_range(0..=2);
        let (lo, hi) = (1usize << k, 1usize << (k + 1));
        let s = LogDerivation::diagonal(lambda.clone(), hi);
        let resonant: Vec<Exponent> = exponents_in_range(n, 1, hi - 1)
            .into_iter()
            .filter(|m| brunoform::series::weight(&lambda, m).is_zero())
            .collect();
        let mut f0: Series<brunoform::BigRational> = Series::zero(n, hi);
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(m) = resonant.choose(&mut rng) {
                f0.add_term(m.clone(), f0.coeff(m).add(&q(small_nonzero(&mut rng))));
            }
        }
        let terms = rng.gen_range(1..=4);
        let w = random_nonlinear(&mut rng, n, lo, hi, terms, hi + 1);
        let u = solve_truncated_bracket(&lambda, &f0, &w, k).map_err(|e| format!("case {case}: {e}"))?;
        let unit_s = s.mul_series(&Series::one(n, hi).add(&f0));
        let (_, w_star) = w.truncate(hi).graded_split(&lambda);
        ensure(
            unit_s.lie_bracket(&u, hi).add(&w_star).is_zero(),
            format!("case {case}: [(1+f0)S, U] + W_* != 0 mod m^{hi}"),
        )?;
        ensure(u.is_zero() || u.ord().unwrap() >= lo && u.deg().unwrap() < hi, format!("case {case}: window"))?;
    }
    Ok(format!("fixture plus {count} random triples"))
}

fn c8_linearization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let order = 16;
    let lambda = vec![Gaussian::one(), Gaussian::i()];
    let count = 5;
    let mut slowest = Duration::ZERO;
    for case in 0..count {
        let start = Instant::now();
        let terms = rng.gen_range(2..=4);
        let r = random_nonlinear(&mut rng, 2, 1, 3, terms, order).map_coeffs(Gaussian::from_rational);
        let p = SPerturbation::new(lambda.clone(), r).unwrap();
        let out = newton_normalize(&p, order).map_err(|e| format!("case {case}: {e}"))?;
        let t = within(start, Duration::from_secs(30), &format!("case {case}"))?;
        slowest = slowest.max(t);
        ensure(out.normal_form.nonlinear().is_zero(), format!("case {case}: not linearized"))?;
        ensure(record_flatness(&out.trace), format!("case {case}: flatness"))?;
    }
    Ok(format!("{count} instances linearized mod m^16, slowest {slowest:.2?}"))
}

fn c9_omega() -> Outcome {
    for mode in [OmegaMode::Paper, OmegaMode::Nonneg] {
        let opts = OmegaOptions { mode, ..Default::default() };
        let r = omega_sequence(&qv(&[1, -1]), 8, opts).map_err(|e| e.to_string())?;
        let g = omega_sequence(&[Gaussian::one(), Gaussian::i()], 8, opts).map_err(|e| e.to_string())?;
        for rep in [&r, &g] {
            ensure(rep.records.iter().all(|x| x.omega == 1.0), format!("{mode}: omega_k != 1"))?;
            ensure(rep.bruno_sum.verdict == Verdict::SatisfiedCertified, format!("{mode}: verdict"))?;
            ensure(rep.bruno_sum.partial_sums.iter().all(|s| *s == 0.0), format!("{mode}: Bruno sum"))?;
        }
    }
    // Frozen from exhaustive enumeration of |m1 - m2 (1+sqrt 5)/2| over |m| <= 2^k.
    const GOLDEN: [f64; 9] = [
        1.0,
        0.6180339887498949,
        0.3819660112501051,
        0.1458980337503153,
        0.09016994374947451,
        0.05572809000084078,
        0.021286236252208823,
        0.013155617496423133,
        0.005024998740651654,
    ];
    let lam = [ComplexFloat::new(1.0, 0.0), ComplexFloat::new(-(1.0 + 5f64.sqrt()) / 2.0, 0.0)];
    let rep = omega_sequence(&lam, 8, OmegaOptions::default()).map_err(|e| e.to_string())?;
    for (rec, w) in rep.records.iter().zip(GOLDEN) {
        ensure((rec.omega - w).abs() <= 1e-12 * w, format!("golden k={}: {} vs {w}", rec.k, rec.omega))?;
    }
    Ok("unit tables certified in both modes; golden-ratio table within 1e-12".into())
}

fn c10_radius() -> Outcome {
    let sched = radius_schedule(&[1.0; 64], 3.0, 1, 1.0, 40);
    let first = (1.0f64 / 12.0).powf(1.5);
    ensure((sched.factors[0] - first).abs() <= 1e-12 * first, "first factor")?;
    ensure(sched.radii.iter().all(|r| *r > 0.0), "nonpositive radius")?;
    ensure(sched.radii.windows(2).all(|p| p[1] < p[0]), "radii not decreasing")?;
    ensure(sched.limit_positive, "limit not positive")?;
    // ratios[s-1] = rho_s / rho_{s-1}
    let dev = (sched.ratios[19] - 1.0).abs();
    ensure(
        dev <= 1e-6,
        format!(
            "|rho_20/rho_19 - 1| = {dev:.3e} > 1e-6; first s with deviation <= 1e-6 is {}",
            sched
                .ratios
                .iter()
                .position(|r| (r - 1.0).abs() <= 1e-6)
                .map_or("none".into(), |i| (i + 1).to_string())
        ),
    )?;
    Ok(format!("first factor {first:.6e}, |rho_20/rho_19 - 1| = {dev:.3e}"))
}

fn c11_norms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let count = 200;
    let slack = |x: f64| x * (1.0 + 1e-9) + 1e-300;
    for case in 0..count {
        let n = rng.gen_range(2..=3);
        let r: f64 = rng.gen_range(0.2..2.0);
        let order = 16;
        let f = random_poly(&mut rng, n, 0, 4, 4, order);
        let g = random_poly(&mut rng, n, 0, 4, 4, order);
        let prod = f.mul(&g);
        ensure(
            prod.rnorm(r).value <= slack(f.rnorm(r).value * g.rnorm(r).value),
            format!("case {case}: submultiplicativity"),
        )?;

        let (m1, m2) = (
            exponents_in_range(n, 0, 4).choose(&mut rng).unwrap().clone(),
            exponents_in_range(n, 0, 4).choose(&mut rng).unwrap().clone(),
        );
        let h = LogDerivation::monomial(m1.clone(), random_vector(&mut rng, n), order);
        let k = LogDerivation::monomial(m2.clone(), random_vector(&mut rng, n), order);
        let br = h.lie_bracket(&k, order).rnorm(r).value;
        let bound = (m1.degree() + m2.degree()) as f64 * h.rnorm(r).value * k.rnorm(r).value;
        ensure(br <= slack(bound), format!("case {case}: key estimate"))?;

        let terms = rng.gen_range(1..=4);
        let hh = random_nonlinear(&mut rng, n, 0, 3, terms, order);
        let kk = random_nonlinear(&mut rng, n, 0, 3, terms, order);
        let br = hh.lie_bracket(&kk, order).rnorm(r).value;
        let degs = (hh.deg().unwrap_or(0) + kk.deg().unwrap_or(0)) as f64;
        ensure(
            br <= slack(degs * hh.rnorm(r).value * kk.rnorm(r).value),
            format!("case {case}: deg(H) + deg(K) bound"),
        )?;

        let big = 64;
        let d = random_nonlinear(&mut rng, n, 0, 3, terms, big);
        let mu = random_vector(&mut rng, n);
        let dn = d.deg().unwrap_or(0) as f64 * d.rnorm(r).value;
        let mu_norm = brunoform::derivation::vec_norm(&mu);
        let mut term = LogDerivation::diagonal(mu, big);
        let mut fact = 1.0;
        for j in 1..=4 {
            term = d.lie_bracket(&term, big);
            fact *= j as f64;
            ensure(
                term.rnorm(r).value / fact <= slack(dn.powi(j) * mu_norm),
                format!("case {case}: adjoint bound at n = {j}"),
            )?;
        }
    }
    Ok(format!("{count} instances of each of the four bounds"))
}

fn c12_certificate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let order = 8;
    let count = 20;
    let mut nonzero = 0;
    for case in 0..count {
        let lambda = resonant_lambdas().choose(&mut rng).unwrap().clone();
        let terms = rng.gen_range(1..=3);
        let r = random_resonant(&mut rng, &lambda, order - 1, terms, order);
        let p = SPerturbation::new(lambda, r).unwrap();
        let cert = analyticity_certificate(&p, order).map_err(|e| format!("case {case}: {e}"))?;
        ensure(cert.equal == Some(true), format!("case {case}: I != B(d)"))?;
        if !cert.ideal.is_zero() {
            nonzero += 1;
        }
    }
    Ok(format!("{count} normal forms ({nonzero} with nonzero ideal), exact mod m^8"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "cone field Bruno ideal", c1_cone_field),
        (2, "real-conjugate pullback", c2_real_conjugate),
        (3, "pullback law", c3_pullback_law),
        (4, "Chevalley oracle equivalence", c4_oracle),
        (5, "Newton vs graded", c5_newton_vs_graded),
        (7, "homological solver", c7_solver),
        (8, "nonresonant linearization", c8_linearization),
        (9, "omega tables", c9_omega),
        (10, "radius schedule", c10_radius),
        (11, "r-norm properties", c11_norms),
        (12, "analyticity certificate", c12_certificate),
        (6, "Newton flatness", c6_flatness),
    ];
    let mut lines = Vec::new();
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let line = match &res {
            Ok(msg) => format!("criterion {id:>2} PASS  {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                format!("criterion {id:>2} FAIL  {name}: {msg} [{elapsed:.2?}]")
            }
        };
        lines.push((id, line));
    }
    lines.sort_by_key(|(id, _)| *id);
    for (_, line) in &lines {
        println!("{line}");
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
