//! Claimed success-probability relations `β`, evaluated in exact rational
//! arithmetic.
//!
//! Every supported form is linear in `x`: a scalar multiple, `a·x / p(n)` for
//! a polynomial `p` (optionally with a `⌈log₂ n⌉` term), or a composition of
//! two specs.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `p(n) = Σ coeffs[i]·nⁱ + log_coeff·⌈log₂ n⌉`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    pub coeffs: Vec<Rational>,
    pub log_coeff: Rational,
}

impl Poly {
    pub fn new(coeffs: Vec<Rational>) -> Poly {
        Poly {
            coeffs,
            log_coeff: Rational::zero(),
        }
    }

    pub fn constant(c: i64) -> Poly {
        Poly::new(vec![rat(c, 1)])
    }

    pub fn with_log(mut self, c: Rational) -> Poly {
        self.log_coeff = c;
        self
    }

    pub fn eval(&self, n: u64) -> Rational {
        let nr = Rational::from_integer(BigInt::from(n));
        let mut acc = Rational::zero();
        let mut pow = Rational::one();
        for c in &self.coeffs {
            acc += c * &pow;
            pow *= &nr;
        }
        acc + &self.log_coeff * Rational::from_integer(BigInt::from(ceil_log2(n)))
    }
}

pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BetaForm {
    Scalar(Rational),
    LinearOverPoly {
        numerator: Rational,
        poly: Poly,
    },
    /// `outer(inner(x))`.
    Composed(Box<BetaSpec>, Box<BetaSpec>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaSpec {
    pub form: BetaForm,
    pub n: u64,
}

impl BetaSpec {
    pub fn scalar(c: Rational) -> Result<BetaSpec, Error> {
        BetaSpec {
            form: BetaForm::Scalar(c),
            n: 0,
        }
        .validated()
    }

    pub fn identity() -> BetaSpec {
        BetaSpec::scalar(Rational::one()).expect("valid")
    }

    pub fn linear_over_poly(numerator: Rational, poly: Poly, n: u64) -> Result<BetaSpec, Error> {
        if poly.eval(n) <= Rational::zero() {
            return Err(Error::Param(format!("p({n}) must be positive")));
        }
        BetaSpec {
            form: BetaForm::LinearOverPoly { numerator, poly },
            n,
        }
        .validated()
    }

    pub fn compose(outer: &BetaSpec, inner: &BetaSpec) -> BetaSpec {
        BetaSpec {
            form: BetaForm::Composed(Box::new(outer.clone()), Box::new(inner.clone())),
            n: outer.n.max(inner.n),
        }
    }

    fn validated(self) -> Result<BetaSpec, Error> {
        let s = self.slope();
        if s.is_negative() || s > Rational::one() {
            return Err(Error::Param(format!(
                "β slope {s} must lie in [0,1] so that β maps [0,1] into [0,1]"
            )));
        }
        Ok(self)
    }

    /// The constant `c` with `β(x) = c·x`.
    pub fn slope(&self) -> Rational {
        match &self.form {
            BetaForm::Scalar(c) => c.clone(),
            BetaForm::LinearOverPoly { numerator, poly } => numerator / poly.eval(self.n),
            BetaForm::Composed(o, i) => o.slope() * i.slope(),
        }
    }

    pub fn evaluate_exact(&self, x: &Rational) -> Rational {
        match &self.form {
            BetaForm::Composed(o, i) => o.evaluate_exact(&i.evaluate_exact(x)),
            _ => self.slope() * x,
        }
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.slope().to_f64().unwrap_or(0.0) * x
    }

    pub fn is_nondecreasing_on_grid(&self, points: usize) -> bool {
        let mut prev = f64::NEG_INFINITY;
        (0..=points).all(|i| {
            let v = self.evaluate(i as f64 / points as f64);
            let ok = v >= prev && (0.0..=1.0).contains(&v);
            prev = v;
            ok
        })
    }
}

impl fmt::Display for BetaSpec {
    /// Renders the effective relation, e.g. `x/4128`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.slope();
        if s.is_zero() {
            return f.write_str("0");
        }
        let (num, den) = (s.numer(), s.denom());
        match (num.is_one(), den.is_one()) {
            (true, true) => f.write_str("x"),
            (true, false) => write!(f, "x/{den}"),
            (false, true) => write!(f, "{num}x"),
            (false, false) => write!(f, "{num}x/{den}"),
        }
    }
}
