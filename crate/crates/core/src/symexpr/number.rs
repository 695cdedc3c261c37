//! Exact rational constants with a floating-point fallback.
//!
//! Arithmetic stays in `Ratio<i128>` until an operation overflows, at which
//! point the result degrades to `f64`. Mixed exact/float arithmetic yields a
//! float.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug)]
pub enum Number {
    Rat(Rational),
    Float(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Rat(Rational::from_integer(n as i128))
    }

    pub fn rat(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Number::Rat(Rational::new(num as i128, den as i128))
    }

    /// Floats that are exact small integers are stored exactly.
    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
            Number::int(x as i64)
        } else {
            Number::Float(x)
        }
    }

    pub fn zero() -> Self {
        Number::Rat(Rational::zero())
    }

    pub fn one() -> Self {
        Number::Rat(Rational::one())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rat(r) => ratio_to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_one(),
            Number::Float(_) => false,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rat(r) => r.is_negative(),
            Number::Float(x) => *x < 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Rat(_))
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Number::Rat(r) => Some(*r),
            Number::Float(_) => None,
        }
    }

    /// The value as an `i64` when it is an exact integer.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Number::Rat(r) if r.is_integer() => r.to_integer().to_i64(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rat(a), Number::Rat(b)) => match a.checked_add(b) {
                Some(r) => Number::Rat(r),
                None => Number::Float(ratio_to_f64(a) + ratio_to_f64(b)),
            },
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Rat(a), Number::Rat(b)) => match a.checked_mul(b) {
                Some(r) => Number::Rat(r),
                None => Number::Float(ratio_to_f64(a) * ratio_to_f64(b)),
            },
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Rat(r) => match r.numer().checked_neg() {
                Some(n) => Number::Rat(Rational::new_raw(n, *r.denom())),
                None => Number::Float(-ratio_to_f64(r)),
            },
            Number::Float(x) => Number::Float(-x),
        }
    }

    /// Reciprocal; `None` for zero.
    pub fn recip(&self) -> Option<Number> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Number::Rat(r) => Number::Rat(r.recip()),
            Number::Float(x) => Number::Float(1.0 / x),
        })
    }

    /// Integer power; `None` when raising zero to a negative power.
    pub fn powi(&self, exp: i64) -> Option<Number> {
        if exp < 0 {
            return self.recip()?.powi(-exp);
        }
        match self {
            Number::Rat(r) => {
                if exp > 4096 {
                    return Some(Number::Float(ratio_to_f64(r).powf(exp as f64)));
                }
                let mut acc = Rational::one();
                for _ in 0..exp {
                    match acc.checked_mul(r) {
                        Some(v) => acc = v,
                        None => return Some(Number::Float(ratio_to_f64(r).powf(exp as f64))),
                    }
                }
                Some(Number::Rat(acc))
            }
            Number::Float(x) => Some(Number::Float(x.powi(exp as i32))),
        }
    }

    /// Exact rational power `self^(p/q)` when the result is rational.
    pub fn exact_root_pow(&self, exp: &Rational) -> Option<Number> {
        let r = self.as_rational()?;
        let q = *exp.denom();
        let p = *exp.numer();
        if q > 64 || p.abs() > 4096 {
            return None;
        }
        let neg = r.is_negative();
        if neg && q % 2 == 0 {
            return None;
        }
        let n = integer_root(r.numer().abs(), q as u32)?;
        let d = integer_root(*r.denom(), q as u32)?;
        let mut base = Rational::new(n, d);
        if neg {
            base = -base;
        }
        Number::Rat(base).powi(p as i64)
    }

    fn rank(&self) -> u8 {
        match self {
            Number::Rat(_) => 0,
            Number::Float(_) => 1,
        }
    }

    /// Total order: by value, exact before float on ties.
    pub fn total_cmp(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Rat(a), Number::Rat(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()).then(self.rank().cmp(&other.rank())),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

pub(crate) fn ratio_to_f64(r: &Rational) -> f64 {
    let (n, d) = (*r.numer(), *r.denom());
    if n.abs() < (1 << 53) && d < (1 << 53) {
        n as f64 / d as f64
    } else {
        let g = n.gcd(&d);
        (n / g) as f64 / (d / g) as f64
    }
}

fn integer_root(x: i128, k: u32) -> Option<i128> {
    if k == 1 {
        return Some(x);
    }
    let guess = (x as f64).powf(1.0 / k as f64).round() as i128;
    for cand in [guess - 1, guess, guess + 1] {
        if cand < 0 {
            continue;
        }
        if let Some(p) = checked_pow(cand, k) {
            if p == x {
                return Some(cand);
            }
        }
    }
    None
}

fn checked_pow(b: i128, k: u32) -> Option<i128> {
    let mut acc: i128 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(b)?;
    }
    Some(acc)
}

/// Best rational approximation with denominator at most `max_den`, accepted
/// only if it reproduces `x` within `tol` (relative to `max(1, |x|)`).
pub fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let scale = x.abs().max(1.0);
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e17 {
            break;
        }
        let ai = a as i128;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= tol * scale {
            return Some(Rational::new(h1, k1));
        }
        let frac = v - a;
        if frac.abs() < 1e-300 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 != 0 && ((h1 as f64 / k1 as f64) - x).abs() <= tol * scale {
        Some(Rational::new(h1, k1))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Number::Rat(Rational::from_integer(i128::MAX / 2));
        let prod = big.mul(&Number::int(4));
        assert!(!prod.is_exact());
        assert!((prod.to_f64() - (i128::MAX as f64) * 2.0).abs() / prod.to_f64() < 1e-12);
    }

    #[test]
    fn exact_roots() {
        assert_eq!(Number::int(4).exact_root_pow(&Rational::new(1, 2)), Some(Number::int(2)));
        assert_eq!(Number::rat(8, 27).exact_root_pow(&Rational::new(2, 3)), Some(Number::rat(4, 9)));
        assert_eq!(Number::int(-8).exact_root_pow(&Rational::new(1, 3)), Some(Number::int(-2)));
        assert_eq!(Number::int(2).exact_root_pow(&Rational::new(1, 2)), None);
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        assert_eq!(rationalize(0.25, 1000, 1e-12), Some(Rational::new(1, 4)));
        assert_eq!(rationalize(-2.0 / 3.0 + 1e-14, 1000, 1e-10), Some(Rational::new(-2, 3)));
        assert_eq!(rationalize(std::f64::consts::PI, 100, 1e-12), None);
    }

    #[test]
    fn total_order_separates_exact_and_float() {
        assert_ne!(Number::int(1), Number::Float(1.0));
        assert_eq!(Number::int(1).total_cmp(&Number::Float(1.0)), Ordering::Less);
    }
}
