//! Coefficient tower: exact rationals, Gaussian rationals and complex floats.
//!
//! Every algebraic structure in this crate is generic over [`Coeff`], so a
//! whole pipeline runs in a single variant and mixing variants is a type
//! error. The dynamically tagged [`Scalar`] is used at the boundaries
//! (parsing, serialization) where the variant is only known at runtime.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for float zero tests.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Relative pivot threshold used by float rank decisions.
pub const FLOAT_PIVOT_THRESHOLD: f64 = 1e-9;

static EPSILON_BITS: AtomicU64 = AtomicU64::new(0x3D71_9799_812D_EA11); // 1e-12

/// Global tolerance used by [`ComplexFloat`] zero tests.
pub fn float_epsilon() -> f64 {
    f64::from_bits(EPSILON_BITS.load(Ordering::Relaxed))
}

pub fn set_float_epsilon(eps: f64) {
    assert!(eps >= 0.0 && eps.is_finite(), "epsilon must be a finite non-negative number");
    EPSILON_BITS.store(eps.to_bits(), Ordering::Relaxed);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Rational,
    Gaussian,
    Float,
}

impl ScalarKind {
    pub fn is_exact(self) -> bool {
        !matches!(self, ScalarKind::Float)
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarKind::Rational => "rational",
            ScalarKind::Gaussian => "gaussian",
            ScalarKind::Float => "float",
        })
    }
}

impl FromStr for ScalarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" | "q" => Ok(ScalarKind::Rational),
            "gaussian" | "gaussian-rational" | "complex-exact" => Ok(ScalarKind::Gaussian),
            "float" | "complex" | "complex-float" => Ok(ScalarKind::Float),
            other => Err(Error::InvalidScalar(other.to_string())),
        }
    }
}

/// Field operations needed by the series and derivation algebra.
///
/// Methods take references and return fresh values; implementations for
/// big rationals allocate anyway, so there is little to gain from in-place
/// variants beyond [`Coeff::add_assign`].
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    const KIND: ScalarKind;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &BigRational) -> Self;

    /// Exact test for exact variants; `|z| <= epsilon` for floats.
    fn is_zero(&self) -> bool;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;

    fn add_assign(&mut self, other: &Self) {
        *self = Coeff::add(self, other);
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.mul(&i))
    }

    fn mul_int(&self, k: i64) -> Self {
        self.mul(&Self::from_i64(k))
    }

    /// Modulus as a float (display and norms).
    fn abs(&self) -> f64;

    fn to_complex(&self) -> Complex64;

    /// The imaginary unit, when the variant contains it.
    fn imaginary_unit() -> Option<Self>;

    fn to_scalar(&self) -> Scalar;

    fn from_scalar(s: &Scalar) -> Result<Self>;

    /// Exact value as a Gaussian rational, if the variant is exact.
    fn to_gaussian(&self) -> Option<Gaussian>;

    /// Zero test used for resonance decisions at multi-index norm `norm`.
    /// Floats use the scaled tolerance `epsilon * (1 + norm)`.
    fn is_resonance_zero(&self, norm: usize) -> bool {
        let _ = norm;
        self.is_zero()
    }

    /// Zero test for pivots in rank decisions; `scale` is the largest
    /// modulus in the row being reduced.
    fn is_negligible(&self, scale: f64) -> bool {
        let _ = scale;
        self.is_zero()
    }

    fn is_exact() -> bool {
        Self::KIND.is_exact()
    }
}

// ---------------------------------------------------------------------------
// Exact rationals

impl Coeff for BigRational {
    const KIND: ScalarKind = ScalarKind::Rational;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn is_zero(&self) -> bool {
        <BigRational as Zero>::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if <BigRational as Zero>::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn abs(&self) -> f64 {
        ratio_to_f64(self).abs()
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(self), 0.0)
    }
    fn imaginary_unit() -> Option<Self> {
        None
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Rational(self.clone())
    }
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Rational(q) => Ok(q.clone()),
            Scalar::Gaussian(g) if <BigRational as Zero>::is_zero(&g.im) => Ok(g.re.clone()),
            other => Err(Error::ScalarMismatch {
                left: ScalarKind::Rational,
                right: other.kind(),
            }),
        }
    }
    fn to_gaussian(&self) -> Option<Gaussian> {
        Some(Gaussian::new(self.clone(), <BigRational as Zero>::zero()))
    }
}

pub(crate) fn ratio_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    q.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Gaussian rationals

/// Exact element `re + im*i` of Q(i).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gaussian {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gaussian {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Self::new(
            BigRational::from_integer(re.into()),
            BigRational::from_integer(im.into()),
        )
    }

    pub fn i() -> Self {
        Self::from_ints(0, 1)
    }

    pub fn is_real(&self) -> bool {
        <BigRational as Zero>::is_zero(&self.im)
    }

    /// |z|^2 as an exact rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Exact modulus when |z|^2 is the square of a rational.
    pub fn exact_modulus(&self) -> Option<BigRational> {
        rational_sqrt(&self.norm_sqr())
    }
}

/// Square root of a non-negative rational when it is itself rational.
pub fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl Coeff for Gaussian {
    const KIND: ScalarKind = ScalarKind::Gaussian;

    fn zero() -> Self {
        Self::from_ints(0, 0)
    }
    fn one() -> Self {
        Self::from_ints(1, 0)
    }
    fn from_i64(v: i64) -> Self {
        Self::from_ints(v, 0)
    }
    fn from_rational(q: &BigRational) -> Self {
        Self::new(q.clone(), <BigRational as Zero>::zero())
    }
    fn is_zero(&self) -> bool {
        <BigRational as Zero>::is_zero(&self.re) && <BigRational as Zero>::is_zero(&self.im)
    }
    fn add(&self, o: &Self) -> Self {
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }
    fn sub(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn mul(&self, o: &Self) -> Self {
        if self.is_real() && o.is_real() {
            return Self::new(&self.re * &o.re, <BigRational as Zero>::zero());
        }
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    fn neg(&self) -> Self {
        Self::new(-&self.re, -&self.im)
    }
    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            return None;
        }
        let n = self.norm_sqr();
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }
    fn add_assign(&mut self, o: &Self) {
        self.re += &o.re;
        self.im += &o.im;
    }
    fn mul_int(&self, k: i64) -> Self {
        let k = BigRational::from_integer(k.into());
        Self::new(&self.re * &k, &self.im * &k)
    }
    fn abs(&self) -> f64 {
        self.to_complex().norm()
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
    fn imaginary_unit() -> Option<Self> {
        Some(Self::i())
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Gaussian(self.clone())
    }
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Rational(q) => Ok(Self::from_rational(q)),
            Scalar::Gaussian(g) => Ok(g.clone()),
            Scalar::Float(_) => Err(Error::ScalarMismatch {
                left: ScalarKind::Gaussian,
                right: ScalarKind::Float,
            }),
        }
    }
    fn to_gaussian(&self) -> Option<Gaussian> {
        Some(self.clone())
    }
}

impl fmt::Display for Gaussian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.im.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}*i", self.re, sign, Signed::abs(&self.im))
    }
}

// ---------------------------------------------------------------------------
// Complex floats

/// Heuristic variant: double-precision complex with tolerance-based zero tests.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ComplexFloat(pub Complex64);

impl ComplexFloat {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }
}

impl Coeff for ComplexFloat {
    const KIND: ScalarKind = ScalarKind::Float;

    fn zero() -> Self {
        Self::new(0.0, 0.0)
    }
    fn one() -> Self {
        Self::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Self::new(v as f64, 0.0)
    }
    fn from_rational(q: &BigRational) -> Self {
        Self::new(ratio_to_f64(q), 0.0)
    }
    fn is_zero(&self) -> bool {
        self.0.norm() <= float_epsilon()
    }
    fn add(&self, o: &Self) -> Self {
        Self(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Self(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Self(self.0 * o.0)
    }
    fn neg(&self) -> Self {
        Self(-self.0)
    }
    fn inv(&self) -> Option<Self> {
        if self.0.norm() == 0.0 {
            None
        } else {
            Some(Self(self.0.inv()))
        }
    }
    fn abs(&self) -> f64 {
        self.0.norm()
    }
    fn to_complex(&self) -> Complex64 {
        self.0
    }
    fn imaginary_unit() -> Option<Self> {
        Some(Self::new(0.0, 1.0))
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Float(self.0)
    }
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Float(c) => Ok(Self(*c)),
            other => Err(Error::ScalarMismatch {
                left: ScalarKind::Float,
                right: other.kind(),
            }),
        }
    }
    fn to_gaussian(&self) -> Option<Gaussian> {
        None
    }
    fn is_resonance_zero(&self, norm: usize) -> bool {
        self.0.norm() <= float_epsilon() * (1.0 + norm as f64)
    }
    fn is_negligible(&self, scale: f64) -> bool {
        self.0.norm() <= FLOAT_PIVOT_THRESHOLD * scale.max(f64::MIN_POSITIVE)
    }
}

impl fmt::Display for ComplexFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Scalar::Float(self.0))
    }
}

// ---------------------------------------------------------------------------
// Dynamically tagged scalar

/// A scalar whose variant is known only at runtime.
///
/// Arithmetic through the `try_*` methods reports a
/// [`Error::ScalarMismatch`] instead of silently converting; the only
/// permitted promotion is rational → Gaussian, which is an inclusion of
/// exact fields.
#[derive(Clone, PartialEq, Debug)]
pub enum Scalar {
    Rational(BigRational),
    Gaussian(Gaussian),
    Float(Complex64),
}

impl Scalar {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Rational(_) => ScalarKind::Rational,
            Scalar::Gaussian(_) => ScalarKind::Gaussian,
            Scalar::Float(_) => ScalarKind::Float,
        }
    }

    pub fn integer(v: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(v.into()))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(q) => <BigRational as Zero>::is_zero(q),
            Scalar::Gaussian(g) => Coeff::is_zero(g),
            Scalar::Float(c) => ComplexFloat(*c).is_zero(),
        }
    }

    fn unify(&self, other: &Scalar) -> Result<(Scalar, Scalar)> {
        use Scalar::*;
        match (self, other) {
            (Rational(_), Rational(_)) | (Gaussian(_), Gaussian(_)) | (Float(_), Float(_)) => {
                Ok((self.clone(), other.clone()))
            }
            (Rational(q), Gaussian(_)) => {
                Ok((Gaussian(crate::scalar::Gaussian::from_rational(q)), other.clone()))
            }
            (Gaussian(_), Rational(q)) => {
                Ok((self.clone(), Gaussian(crate::scalar::Gaussian::from_rational(q))))
            }
            _ => Err(Error::ScalarMismatch {
                left: self.kind(),
                right: other.kind(),
            }),
        }
    }

    fn binary(
        &self,
        other: &Scalar,
        q: impl Fn(&BigRational, &BigRational) -> Option<BigRational>,
        g: impl Fn(&crate::scalar::Gaussian, &crate::scalar::Gaussian) -> Option<crate::scalar::Gaussian>,
        c: impl Fn(Complex64, Complex64) -> Option<Complex64>,
    ) -> Result<Scalar> {
        let (a, b) = self.unify(other)?;
        let out = match (&a, &b) {
            (Scalar::Rational(x), Scalar::Rational(y)) => q(x, y).map(Scalar::Rational),
            (Scalar::Gaussian(x), Scalar::Gaussian(y)) => g(x, y).map(Scalar::Gaussian),
            (Scalar::Float(x), Scalar::Float(y)) => c(*x, *y).map(Scalar::Float),
            _ => unreachable!("unify returns matching variants"),
        };
        out.ok_or_else(|| Error::InvalidScalar("division by zero".into()))
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Some(a + b), |a, b| Some(Coeff::add(a, b)), |a, b| Some(a + b))
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Some(a - b), |a, b| Some(Coeff::sub(a, b)), |a, b| Some(a - b))
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(other, |a, b| Some(a * b), |a, b| Some(Coeff::mul(a, b)), |a, b| Some(a * b))
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar> {
        self.binary(
            other,
            |a, b| (!<BigRational as Zero>::is_zero(b)).then(|| a / b),
            Coeff::div,
            |a, b| (b.norm() != 0.0).then(|| a / b),
        )
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(q) => Scalar::Rational(-q),
            Scalar::Gaussian(g) => Scalar::Gaussian(Coeff::neg(g)),
            Scalar::Float(c) => Scalar::Float(-c),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            Scalar::Rational(q) => Coeff::to_complex(q),
            Scalar::Gaussian(g) => g.to_complex(),
            Scalar::Float(c) => *c,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    // 17 significant digits round-trip every double
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0000000000000000e0".into() } else { "0.0000000000000000e0".into() };
    }
    format!("{:.16e}", x)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(q) => write!(f, "{q}"),
            Scalar::Gaussian(g) => write!(f, "{g}"),
            Scalar::Float(c) => {
                let im = fmt_f64(c.im.abs());
                let sign = if c.im.is_sign_negative() { '-' } else { '+' };
                write!(f, "{}{}{}*i", fmt_f64(c.re), sign, im)
            }
        }
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Splits `a+b*i` / `a-b*i` at the sign separating the two parts.
fn split_complex(s: &str) -> Option<(&str, &str, bool)> {
    let body = s.strip_suffix("*i")?;
    let bytes = body.as_bytes();
    for idx in (1..bytes.len()).rev() {
        let c = bytes[idx];
        if (c == b'+' || c == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
            return Some((&body[..idx], &body[idx + 1..], c == b'-'));
        }
    }
    None
}

impl FromStr for Scalar {
    type Err = Error;

    /// Parses the serialization formats produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidScalar(s.to_string());
        if let Some((re, im, negative)) = split_complex(t) {
            if let (Some(re), Some(im)) = (parse_rational(re), parse_rational(im)) {
                let im = if negative { -im } else { im };
                return Ok(Scalar::Gaussian(Gaussian::new(re, im)));
            }
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            return Ok(Scalar::Float(Complex64::new(re, if negative { -im } else { im })));
        }
        if let Some(q) = parse_rational(t) {
            return Ok(Scalar::Rational(q));
        }
        t.parse::<f64>()
            .map(|x| Scalar::Float(Complex64::new(x, 0.0)))
            .map_err(|_| bad())
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dot product `<lambda, m>` for a non-negative integer vector.
pub fn dot_int<F: Coeff>(lambda: &[F], m: impl IntoIterator<Item = i64>) -> F {
    let mut acc = F::zero();
    for (l, k) in lambda.iter().zip(m) {
        match k {
            0 => {}
            1 => acc.add_assign(l),
            k => acc.add_assign(&l.mul_int(k)),
        }
    }
    acc
}
