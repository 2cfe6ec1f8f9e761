//! Text format for logarithmic vector fields.
//!
//! ```text
//! vars: x, y, z
//! scalars: gaussian
//! truncation: 16
//! i*x*dx - i*y*dy + (x*y - z^2)*(x*dx + y*dy + z*dz)
//! ```
//!
//! Header lines are optional; `#` starts a comment line. The expression is
//! a polynomial combination of the differentials `d<var>`.

use std::marker::PhantomData;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Num;

use crate::derivation::LogDerivation;
use crate::error::{Error, Result};
use crate::monomial::Exponent;
use crate::scalar::{Coeff, ComplexFloat, Gaussian, Scalar, ScalarKind};
use crate::series::Series;

/// Working order while evaluating expressions; exponents are `u16`.
const PARSE_ORDER: usize = u16::MAX as usize;
const MAX_POWER: u64 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Components {
    Exact(Vec<Series<Gaussian>>),
    Float(Vec<Series<ComplexFloat>>),
}

/// A parsed input file: variables, scalar field and the vector components
/// `a_i` of `∂ = Σ a_i ∂/∂x_i` as exact polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub vars: Vec<String>,
    pub scalars: ScalarKind,
    pub truncation: Option<usize>,
    pub components: Components,
}

impl ProblemSpec {
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Largest total degree among the components, plus one.
    pub fn polynomial_order(&self) -> usize {
        let deg = match &self.components {
            Components::Exact(c) => c.iter().filter_map(Series::deg).max(),
            Components::Float(c) => c.iter().filter_map(Series::deg).max(),
        };
        deg.map_or(1, |d| d.max(1))
    }

    /// The field as a logarithmic derivation mod `m^order`.
    pub fn derivation<F: Coeff>(&self, order: usize) -> Result<LogDerivation<F>> {
        if F::KIND != self.scalars {
            return Err(Error::ScalarMismatch {
                left: F::KIND,
                right: self.scalars,
            });
        }
        if let Some(t) = self.truncation {
            if order > t {
                return Err(Error::InvalidOrder(format!("field is known mod m^{t} only, {order} requested")));
            }
        }
        let n = self.nvars();
        let convert = |terms: Vec<(Exponent, Scalar)>| -> Result<Series<F>> {
            let mut s = Series::zero(n, order + 1);
            for (e, c) in terms {
                s.add_term(e, F::from_scalar(&c)?);
            }
            Ok(s)
        };
        let comps: Vec<Series<F>> = match &self.components {
            Components::Exact(c) => c
                .iter()
                .map(|a| {
                    convert(
                        a.iter()
                            .map(|(e, g)| {
                                let s = if g.is_real() {
                                    Scalar::Rational(g.re.clone())
                                } else {
                                    Scalar::Gaussian(g.clone())
                                };
                                (e.clone(), s)
                            })
                            .collect(),
                    )
                })
                .collect::<Result<_>>()?,
            Components::Float(c) => c
                .iter()
                .map(|a| convert(a.iter().map(|(e, z)| (e.clone(), z.to_scalar())).collect()))
                .collect::<Result<_>>()?,
        };
        LogDerivation::from_vector_components(&comps, order)
    }
}

/// Text of `d` in the input format, headers included.
pub fn print_field<F: Coeff>(d: &LogDerivation<F>, vars: &[String]) -> String {
    format!(
        "vars: {}\nscalars: {}\ntruncation: {}\n{}\n",
        vars.join(", "),
        F::KIND,
        d.order(),
        d.to_expression(vars)
    )
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(s) => format!("number `{s}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".into(),
    }
}

fn lex(lines: &[(usize, &str)]) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut last = (1, 1);
    for &(line, text) in lines {
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Num(chars[start..i].iter().collect()),
                    line,
                    column,
                });
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line,
                    column,
                });
                continue;
            }
            if "+-*/^()".contains(c) {
                out.push(Token {
                    tok: Tok::Op(c),
                    line,
                    column,
                });
                i += 1;
                continue;
            }
            return Err(Error::Syntax {
                line,
                column,
                expected: "operator, number, identifier or parenthesis".into(),
                found: format!("`{c}`"),
            });
        }
        last = (line, chars.len() + 1);
    }
    out.push(Token {
        tok: Tok::End,
        line: last.0,
        column: last.1,
    });
    Ok(out)
}

/// Exact value of a decimal literal such as `12`, `0.25` or `1.5e-3`.
fn decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str_radix(&digits, 10).ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-shift) as usize))
    })
}

#[derive(Clone, Debug)]
enum Val<F: Coeff> {
    Func(Series<F>),
    Field(Vec<Series<F>>),
}

struct Parser<'a, F: Coeff> {
    toks: &'a [Token],
    pos: usize,
    vars: &'a [String],
    _scalar: PhantomData<F>,
}

impl<'a, F: Coeff> Parser<'a, F> {
    fn n(&self) -> usize {
        self.vars.len()
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn err(&self, expected: &str) -> Error {
        let t = self.peek();
        Error::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.into(),
            found: describe(&t.tok),
        }
    }

    fn err_at(&self, t: &Token, expected: &str) -> Error {
        Error::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.into(),
            found: describe(&t.tok),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Op(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn zero_field(&self) -> Vec<Series<F>> {
        vec![Series::zero(self.n(), PARSE_ORDER); self.n()]
    }

    fn add(&self, a: Val<F>, b: Val<F>, negate: bool, at: &Token) -> Result<Val<F>> {
        let b = match b {
            Val::Func(f) if negate => Val::Func(f.neg()),
            Val::Field(v) if negate => Val::Field(v.iter().map(Series::neg).collect()),
            other => other,
        };
        match (a, b) {
            (Val::Func(f), Val::Func(g)) => Ok(Val::Func(f.add(&g))),
            (Val::Field(u), Val::Field(v)) => Ok(Val::Field(u.iter().zip(&v).map(|(a, b)| a.add(b)).collect())),
            (Val::Func(f), Val::Field(v)) | (Val::Field(v), Val::Func(f)) if f.is_zero() => Ok(Val::Field(v)),
            _ => Err(self.err_at(at, "terms of the same kind (function or vector field)")),
        }
    }

    fn mul(&self, a: Val<F>, b: Val<F>, at: &Token) -> Result<Val<F>> {
        match (a, b) {
            (Val::Func(f), Val::Func(g)) => Ok(Val::Func(f.mul(&g))),
            (Val::Func(f), Val::Field(v)) | (Val::Field(v), Val::Func(f)) => {
                Ok(Val::Field(v.iter().map(|c| c.mul(&f)).collect()))
            }
            (Val::Field(_), Val::Field(_)) => Err(self.err_at(at, "at most one differential per term")),
        }
    }

    fn expr(&mut self) -> Result<Val<F>> {
        let start = self.peek().clone();
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let first = self.term()?;
        let mut acc = self.add(Val::Func(Series::zero(self.n(), PARSE_ORDER)), first, neg, &start)?;
        loop {
            let at = self.peek().clone();
            let negate = if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                break;
            };
            let t = self.term()?;
            acc = self.add(acc, t, negate, &at)?;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Val<F>> {
        let mut acc = self.factor()?;
        loop {
            let at = self.peek().clone();
            if self.eat('*') {
                let f = self.factor()?;
                acc = self.mul(acc, f, &at)?;
            } else if self.eat('/') {
                let divisor_at = self.peek().clone();
                let inv = match self.factor()? {
                    Val::Func(f) if f.terms().keys().all(Exponent::is_zero) => f.constant_term().inv().filter(|_| !f.is_zero()),
                    _ => None,
                }
                .ok_or_else(|| self.err_at(&divisor_at, "nonzero constant divisor"))?;
                acc = self.mul(acc, Val::Func(Series::constant(self.n(), PARSE_ORDER, inv)), &at)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Val<F>> {
        if self.eat('-') {
            return Ok(match self.factor()? {
                Val::Func(f) => Val::Func(f.neg()),
                Val::Field(v) => Val::Field(v.iter().map(Series::neg).collect()),
            });
        }
        let base = self.atom()?;
        if self.eat('^') {
            let t = self.peek().clone();
            let Tok::Num(s) = &t.tok else {
                return Err(self.err("nonnegative integer exponent"));
            };
            let k: u64 = s.parse().map_err(|_| self.err("nonnegative integer exponent"))?;
            if k > MAX_POWER {
                return Err(self.err("exponent at most 4096"));
            }
            self.pos += 1;
            return match base {
                Val::Func(f) => Ok(Val::Func(f.pow(k as u32))),
                Val::Field(_) => Err(self.err_at(&t, "exponent on a function, not a differential")),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Val<F>> {
        let t = self.peek().clone();
        let n = self.n();
        match &t.tok {
            Tok::Num(s) => {
                self.pos += 1;
                let c = if F::is_exact() {
                    F::from_rational(&decimal(s).ok_or_else(|| Error::InvalidScalar(s.clone()))?)
                } else {
                    let v: f64 = s.parse().map_err(|_| Error::InvalidScalar(s.clone()))?;
                    F::from_scalar(&Scalar::Float(Complex64::new(v, 0.0)))?
                };
                Ok(Val::Func(Series::constant(n, PARSE_ORDER, c)))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if name == "i" {
                    let unit = F::imaginary_unit()
                        .ok_or_else(|| Error::MixedScalars("imaginary unit `i` in a rational field".into()))?;
                    return Ok(Val::Func(Series::constant(n, PARSE_ORDER, unit)));
                }
                if let Some(k) = self.vars.iter().position(|v| v == name) {
                    return Ok(Val::Func(Series::variable(n, PARSE_ORDER, k)));
                }
                if let Some(k) = name.strip_prefix('d').and_then(|v| self.vars.iter().position(|w| w == v)) {
                    let mut f = self.zero_field();
                    f[k] = Series::one(n, PARSE_ORDER);
                    return Ok(Val::Field(f));
                }
                Err(Error::UnknownVariable {
                    name: name.clone(),
                    line: t.line,
                    column: t.column,
                })
            }
            Tok::Op('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("`)`, `+`, `-`, `*`, `/` or `^`"));
                }
                Ok(v)
            }
            _ => Err(self.err("number, variable, differential `d<var>` or `(`")),
        }
    }
}

fn parse_components<F: Coeff>(toks: &[Token], vars: &[String]) -> Result<Vec<Series<F>>> {
    let mut p = Parser::<F> {
        toks,
        pos: 0,
        vars,
        _scalar: PhantomData,
    };
    let v = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.err("`+`, `-`, `*`, `/`, `^` or end of input"));
    }
    match v {
        Val::Field(f) => Ok(f),
        Val::Func(f) if f.is_zero() => Ok(p.zero_field()),
        Val::Func(_) => Err(Error::Syntax {
            line: toks[0].line,
            column: toks[0].column,
            expected: "a vector field (terms containing `d<var>`)".into(),
            found: "a function".into(),
        }),
    }
}

fn check_logarithmic<F: Coeff>(comps: &[Series<F>], vars: &[String]) -> Result<()> {
    for (i, a) in comps.iter().enumerate() {
        if let Some((e, c)) = a.iter().find(|(e, _)| e.get(i) == 0) {
            let mono = e.to_monomial_string(vars);
            return Err(Error::NotLogarithmic {
                component: i + 1,
                term: format!("({})*{}*d{}", c.to_scalar(), mono, vars[i]),
            });
        }
    }
    Ok(())
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.trim_start().strip_prefix(key)?;
    rest.trim_start().strip_prefix(':').map(str::trim)
}

/// Parses the input format into a [`ProblemSpec`].
pub fn parse_field(text: &str) -> Result<ProblemSpec> {
    let mut vars: Option<Vec<String>> = None;
    let mut scalars: Option<ScalarKind> = None;
    let mut truncation = None;
    let mut body: Vec<(usize, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        if let Some(v) = header_value(line, "vars") {
            let names: Vec<String> = v.split([',', ' ']).filter(|s| !s.is_empty()).map(String::from).collect();
            for name in &names {
                let ok = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                    && name.chars().all(|c| c.is_alphanumeric() || c == '_')
                    && name != "i";
                if !ok {
                    return Err(Error::Syntax {
                        line: lineno,
                        column: col,
                        expected: "variable names (identifiers other than `i`)".into(),
                        found: format!("`{name}`"),
                    });
                }
            }
            vars = Some(names);
        } else if let Some(v) = header_value(line, "scalars") {
            scalars = Some(v.parse().map_err(|_| Error::Syntax {
                line: lineno,
                column: col,
                expected: "`rational`, `gaussian` or `float`".into(),
                found: format!("`{v}`"),
            })?);
        } else if let Some(v) = header_value(line, "truncation") {
            let n: usize = v.parse().ok().filter(|n| *n >= 2).ok_or_else(|| Error::Syntax {
                line: lineno,
                column: col,
                expected: "integer truncation order >= 2".into(),
                found: format!("`{v}`"),
            })?;
            truncation = Some(n);
        } else {
            body.push((lineno, line));
        }
    }
    let toks = lex(&body)?;
    let vars = match vars {
        Some(v) => v,
        None => infer_vars(&toks),
    };
    if vars.is_empty() {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            expected: "a `vars:` header or at least one differential".into(),
            found: "none".into(),
        });
    }
    let uses_i = toks.iter().any(|t| t.tok == Tok::Ident("i".into()));
    let scalars = match scalars {
        Some(ScalarKind::Rational) if uses_i => {
            return Err(Error::MixedScalars("imaginary unit `i` in a field declared rational".into()))
        }
        Some(k) => k,
        None if uses_i => ScalarKind::Gaussian,
        None => ScalarKind::Rational,
    };
    let components = if scalars == ScalarKind::Float {
        let c = parse_components::<ComplexFloat>(&toks, &vars)?;
        check_logarithmic(&c, &vars)?;
        Components::Float(c)
    } else {
        let c = parse_components::<Gaussian>(&toks, &vars)?;
        check_logarithmic(&c, &vars)?;
        Components::Exact(c)
    };
    Ok(ProblemSpec {
        vars,
        scalars,
        truncation,
        components,
    })
}

/// Variables named by the differentials `d<var>`, in order of appearance.
fn infer_vars(toks: &[Token]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in toks {
        if let Tok::Ident(s) = &t.tok {
            if let Some(v) = s.strip_prefix('d').filter(|v| !v.is_empty() && *v != "i") {
                if !out.iter().any(|w| w == v) {
                    out.push(v.to_string());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Gaussian as G;
    use num_rational::BigRational as Q;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cone_field() {
        let spec = parse_field(
            "vars: x, y, z\ni*x*dx - i*y*dy + (x*y - z^2)*(x*dx + y*dy + z*dz)\n",
        )
        .unwrap();
        assert_eq!(spec.scalars, ScalarKind::Gaussian);
        let d: LogDerivation<G> = spec.derivation(16).unwrap();
        let one = vec![G::one(); 3];
        let expected = LogDerivation::diagonal(vec![G::i(), G::i().neg(), G::zero()], 16)
            .add(&LogDerivation::monomial(Exponent::from([1, 1, 0]), one.clone(), 16))
            .sub(&LogDerivation::monomial(Exponent::from([0, 0, 2]), one, 16));
        assert_eq!(d, expected);
    }

    #[test]
    fn rejects_non_logarithmic() {
        let err = parse_field("vars: x, y\ny*dx").unwrap_err();
        assert!(matches!(err, Error::NotLogarithmic { component: 1, ref term } if term.contains("y*dx")));
    }

    #[test]
    fn rational_diagonal() {
        let spec = parse_field("vars: x, y\n1/2*x*dx + 3/4*y*dy").unwrap();
        assert_eq!(spec.scalars, ScalarKind::Rational);
        let d: LogDerivation<Q> = spec.derivation(4).unwrap();
        let half = Q::new(1.into(), 2.into());
        let three_q = Q::new(3.into(), 4.into());
        assert_eq!(d, LogDerivation::diagonal(vec![half, three_q], 4));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_field("vars: x, y\nx*dx +\n  * y*dy").unwrap_err() {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{other:?}"),
        }
        match parse_field("vars: x\nx*dx + w*dx").unwrap_err() {
            Error::UnknownVariable { name, line, column } => {
                assert_eq!((name.as_str(), line, column), ("w", 2, 8))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_field("vars: x\nscalars: rational\ni*x*dx"),
            Err(Error::MixedScalars(_))
        ));
        assert!(matches!(parse_field("vars: x\nx*dx*dx"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn print_round_trip() {
        let spec = parse_field("vars: x, y\n(2+i)*x*dx - 1/3*x^2*y*dy + x*y^2*(x*dx - 5*y*dy)").unwrap();
        let d: LogDerivation<G> = spec.derivation(6).unwrap();
        let text = print_field(&d, &names(&["x", "y"]));
        let again: LogDerivation<G> = parse_field(&text).unwrap().derivation(6).unwrap();
        assert_eq!(d, again);

        let f = parse_field("vars: x, y\nscalars: float\n0.1*x*dx - 1.5e-3*x*y*dy").unwrap();
        let d: LogDerivation<ComplexFloat> = f.derivation(4).unwrap();
        let again: LogDerivation<ComplexFloat> =
            parse_field(&print_field(&d, &names(&["x", "y"]))).unwrap().derivation(4).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(decimal("0.25"), Some(Q::new(1.into(), 4.into())));
        assert_eq!(decimal("1.5e2"), Some(Q::from_integer(150.into())));
        assert_eq!(decimal("."), None);
    }
}
