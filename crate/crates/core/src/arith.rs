//! Exact arithmetic for PSL(2) elements and their fixed points.
//!
//! A [`Mat2`] stores `(1/den) * [[a, b], [c, d]]` with integer entries and a
//! positive denominator, normalized so that the entries share no common factor
//! with `den` and the first nonzero entry of the top row is positive. Integer
//! presets always carry `den = 1`, which keeps products of very long words
//! cheap (no gcd work on multi-megabit entries).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
    den: BigInt,
}

impl Mat2 {
    pub fn identity() -> Self {
        Self::from_ints(1, 0, 0, 1).expect("identity is unimodular")
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into(), BigInt::one())
    }

    /// Builds `(1/den) [[a,b],[c,d]]`, rejecting anything whose determinant is not 1.
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::NonUnimodular("zero denominator".into()));
        }
        let det = &a * &d - &b * &c;
        if det != &den * &den {
            return Err(Error::NonUnimodular(format!(
                "determinant {}/{} != 1",
                det,
                &den * &den
            )));
        }
        Ok(Self::normalized(a, b, c, d, den))
    }

    /// Rational entries `[[a,b],[c,d]]`.
    pub fn from_rationals(entries: [BigRational; 4]) -> Result<Self> {
        let den = entries
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let scaled: Vec<BigInt> = entries
            .iter()
            .map(|r| r.numer() * (&den / r.denom()))
            .collect();
        let [a, b, c, d]: [BigInt; 4] = scaled.try_into().expect("four entries");
        Self::new(a, b, c, d, den)
    }

    fn normalized(mut a: BigInt, mut b: BigInt, mut c: BigInt, mut d: BigInt, mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            a = -a;
            b = -b;
            c = -c;
            d = -d;
        }
        if !den.is_one() {
            let g = [&a, &b, &c, &d].iter().fold(den.clone(), |acc, x| acc.gcd(x));
            if !g.is_one() {
                a /= &g;
                b /= &g;
                c /= &g;
                d /= &g;
                den /= &g;
            }
        }
        let lead = if a.is_zero() { b.sign() } else { a.sign() };
        if lead == Sign::Minus {
            a = -a;
            b = -b;
            c = -c;
            d = -d;
        }
        Mat2 { a, b, c, d, den }
    }

    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.a * &o.a + &self.b * &o.c;
        let b = &self.a * &o.b + &self.b * &o.d;
        let c = &self.c * &o.a + &self.d * &o.c;
        let d = &self.c * &o.b + &self.d * &o.d;
        Self::normalized(a, b, c, d, &self.den * &o.den)
    }

    pub fn inverse(&self) -> Mat2 {
        Self::normalized(
            self.d.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.a.clone(),
            self.den.clone(),
        )
    }

    pub fn pow(&self, mut n: u64) -> Mat2 {
        let mut base = self.clone();
        let mut acc = Mat2::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn powi(&self, n: i64) -> Mat2 {
        if n >= 0 {
            self.pow(n as u64)
        } else {
            self.inverse().pow(n.unsigned_abs())
        }
    }

    pub fn is_identity(&self) -> bool {
        self.b.is_zero() && self.c.is_zero() && self.a == self.d && self.a.abs() == self.den
    }

    /// Trace up to the global PSL(2) sign, made nonnegative.
    pub fn abs_trace(&self) -> BigRational {
        BigRational::new((&self.a + &self.d).abs(), self.den.clone())
    }

    /// Numerator of the trace over `den`, before taking the absolute value.
    pub fn trace_numer(&self) -> BigInt {
        &self.a + &self.d
    }

    /// Compares |trace| with 2 exactly.
    pub fn cmp_trace_with_two(&self) -> Ordering {
        let t = (&self.a + &self.d).abs();
        t.cmp(&(&self.den * 2))
    }

    /// `2 arccosh(|tr|/2)`, robust for astronomically large traces.
    pub fn translation_length(&self) -> f64 {
        if self.cmp_trace_with_two() != Ordering::Greater {
            return 0.0;
        }
        let lt = big_ln(&(&self.a + &self.d).abs()) - big_ln(&self.den);
        if lt > 30.0 {
            // arccosh(x/2) = ln x - x^-2 - ...; the correction is below f64 resolution.
            2.0 * lt
        } else {
            2.0 * (lt.exp() / 2.0).acosh()
        }
    }

    /// Floating-point entries. When the integers exceed the f64 range they are
    /// rescaled by a common power of two, so the determinant is no longer 1;
    /// the Möbius action is unchanged.
    pub fn to_f64(&self) -> [f64; 4] {
        let bits = self
            .entries()
            .iter()
            .map(|x| x.bits())
            .chain(std::iter::once(self.den.bits()))
            .max()
            .unwrap_or(0);
        let shift = bits.saturating_sub(500);
        let conv = |x: &BigInt| (x >> shift).to_f64().unwrap_or(f64::NAN);
        if shift > 0 {
            // Only the projective class survives the rescaling; fine for Möbius action.
            return [conv(&self.a), conv(&self.b), conv(&self.c), conv(&self.d)];
        }
        let den = conv(&self.den);
        [
            self.a.to_f64().unwrap() / den,
            self.b.to_f64().unwrap() / den,
            self.c.to_f64().unwrap() / den,
            self.d.to_f64().unwrap() / den,
        ]
    }

    /// The f64 Möbius map, with the exact log-determinant of the rescaled entries.
    pub fn mobius(&self) -> crate::geometry::h2::Mobius {
        let bits = self.entries().iter().map(|x| x.bits()).chain(std::iter::once(self.den.bits())).max().unwrap_or(0);
        let shift = bits.saturating_sub(500);
        let ln_det = if shift > 0 { 2.0 * big_ln(&self.den) - 2.0 * shift as f64 * std::f64::consts::LN_2 } else { 0.0 };
        crate::geometry::h2::Mobius(self.to_f64(), ln_det)
    }

    /// Residue modulo a prime. `None` when `p` divides the denominator.
    pub fn residue(&self, p: u64) -> Option<ModMat> {
        let pb = BigInt::from(p);
        let r = |x: &BigInt| x.mod_floor(&pb).to_u64().unwrap();
        let den = r(&self.den);
        if den == 0 {
            return None;
        }
        let inv = mod_pow(den, p - 2, p);
        Some(ModMat {
            m: [
                mul_mod(r(&self.a), inv, p),
                mul_mod(r(&self.b), inv, p),
                mul_mod(r(&self.c), inv, p),
                mul_mod(r(&self.d), inv, p),
            ],
            p,
        })
    }

    /// Exact fixed points on the boundary of the upper half-plane.
    ///
    /// Solves `c z^2 + (d - a) z - b = 0`. For hyperbolic elements the first
    /// returned point is the attracting one.
    pub fn fixed_points(&self) -> Vec<Boundary> {
        // Sign-normalize so the trace numerator is nonnegative.
        let flip = (&self.a + &self.d).is_negative();
        let s = |x: &BigInt| if flip { -x.clone() } else { x.clone() };
        let (a, b, c, d) = (s(&self.a), s(&self.b), s(&self.c), s(&self.d));
        let amd = &a - &d;
        let disc = &amd * &amd + BigInt::from(4) * &b * &c;
        if c.is_zero() {
            if amd.is_zero() {
                // Parabolic (or identity) fixing only infinity.
                return vec![Boundary::Infinity];
            }
            let finite = Boundary::rational(BigRational::new(b.clone(), -amd.clone()));
            // z -> (a z + b)/d expands away from the finite point iff a > d.
            return if a > d {
                vec![Boundary::Infinity, finite]
            } else {
                vec![finite, Boundary::Infinity]
            };
        }
        match disc.sign() {
            Sign::Minus => vec![],
            Sign::NoSign => vec![Boundary::rational(BigRational::new(amd, BigInt::from(2) * &c))],
            Sign::Plus => {
                let two_c = BigInt::from(2) * &c;
                let r = BigRational::new(amd, two_c.clone());
                let q = BigRational::new(BigInt::one(), two_c);
                let plus = QuadPoint::new(r.clone(), q.clone(), disc.clone());
                let minus = QuadPoint::new(r, -q, disc);
                // With nonnegative trace, c z + d = (tr + sqrt(disc))/2 at the
                // "+" root, which is the attracting one.
                vec![Boundary::Quad(plus), Boundary::Quad(minus)]
            }
        }
    }

    /// Exact Möbius action on a boundary point.
    pub fn act_boundary(&self, z: &Boundary) -> Boundary {
        let (a, b, c, d) = (
            BigRational::from(self.a.clone()),
            BigRational::from(self.b.clone()),
            BigRational::from(self.c.clone()),
            BigRational::from(self.d.clone()),
        );
        match z {
            Boundary::Infinity => {
                if c.is_zero() {
                    Boundary::Infinity
                } else {
                    Boundary::rational(a / c)
                }
            }
            Boundary::Quad(q) => {
                // (a x + b) / (c x + d) with x = r + s sqrt(D).
                let nr = &a * &q.r + &b;
                let ns = &a * &q.s;
                let dr = &c * &q.r + &d;
                let ds = &c * &q.s;
                if dr.is_zero() && ds.is_zero() {
                    return Boundary::Infinity;
                }
                let dd = BigRational::from(q.disc.clone());
                let norm = &dr * &dr - &ds * &ds * &dd;
                let ur = (&nr * &dr - &ns * &ds * &dd) / &norm;
                let us = (&ns * &dr - &nr * &ds) / &norm;
                Boundary::Quad(QuadPoint::new(ur, us, q.disc.clone()))
            }
            Boundary::Real(x) => {
                let [a, b, c, d] = self.to_f64();
                let den = c * x + d;
                if den == 0.0 {
                    Boundary::Infinity
                } else {
                    Boundary::Real((a * x + b) / den)
                }
            }
        }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
        } else {
            write!(f, "[[{},{}],[{},{}]]/{}", self.a, self.b, self.c, self.d, self.den)
        }
    }
}

/// A 2x2 matrix over Z/p, taken up to sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModMat {
    pub m: [u64; 4],
    pub p: u64,
}

impl ModMat {
    pub fn identity(p: u64) -> Self {
        ModMat { m: [1, 0, 0, 1], p }
    }

    pub fn mul(&self, o: &ModMat) -> ModMat {
        let p = self.p;
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = o.m;
        let ad = |x: u64, y: u64| (x + y) % p;
        ModMat {
            m: [
                ad(mul_mod(a, e, p), mul_mod(b, g, p)),
                ad(mul_mod(a, f, p), mul_mod(b, h, p)),
                ad(mul_mod(c, e, p), mul_mod(d, g, p)),
                ad(mul_mod(c, f, p), mul_mod(d, h, p)),
            ],
            p,
        }
    }

    pub fn pow(&self, mut n: u64) -> ModMat {
        let mut base = *self;
        let mut acc = ModMat::identity(self.p);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    pub fn inverse(&self) -> ModMat {
        let p = self.p;
        let [a, b, c, d] = self.m;
        ModMat { m: [d, (p - b) % p, (p - c) % p, a], p }
    }

    /// Equal to +I or -I modulo p.
    pub fn is_pm_identity(&self) -> bool {
        let [a, b, c, d] = self.m;
        b == 0 && c == 0 && a == d && (a == 1 || a == self.p - 1)
    }
}

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn mod_pow(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Natural log of |n| for arbitrarily large integers.
pub fn big_ln(n: &BigInt) -> f64 {
    let n = n.abs();
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (&n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r.numer(), r.denom())
}

pub fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let nf = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift).to_f64().unwrap_or(f64::NAN);
    if df == 0.0 {
        // Denominator vanished under the shift: the ratio exceeds f64 range.
        return if n.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    nf / df
}

/// An element `r + s sqrt(disc)` of a real quadratic field (or of Q when `s = 0`).
#[derive(Clone, Debug)]
pub struct QuadPoint {
    pub r: BigRational,
    pub s: BigRational,
    pub disc: BigInt,
}

impl QuadPoint {
    pub fn new(r: BigRational, s: BigRational, disc: BigInt) -> Self {
        // Perfect-square discriminants collapse to rationals.
        if s.is_zero() || disc.is_zero() {
            return QuadPoint { r, s: BigRational::zero(), disc: BigInt::zero() };
        }
        let root = disc.sqrt();
        if &root * &root == disc {
            return QuadPoint { r: r + s * BigRational::from(root), s: BigRational::zero(), disc: BigInt::zero() };
        }
        QuadPoint { r, s, disc }
    }

    pub fn is_rational(&self) -> bool {
        self.s.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        if self.s.is_zero() {
            return rational_to_f64(&self.r);
        }
        if self.disc.bits() < 1000 && self.s.numer().bits() < 1000 && self.s.denom().bits() < 1000 {
            return rational_to_f64(&self.r) + rational_to_f64(&self.s) * self.disc.to_f64().unwrap().sqrt();
        }
        // Huge surds: combine the magnitudes in log space.
        let ln = big_ln(self.s.numer()) - big_ln(self.s.denom()) + big_ln(&self.disc) / 2.0;
        let surd = if self.s.is_negative() { -ln.exp() } else { ln.exp() };
        rational_to_f64(&self.r) + surd
    }
}

impl PartialEq for QuadPoint {
    fn eq(&self, o: &Self) -> bool {
        // r1 + s1 sqrt(D1) = r2 + s2 sqrt(D2) with non-square D's holds iff the
        // rational parts agree and the surd parts agree in sign and square.
        self.r == o.r
            && self.s.signum() == o.s.signum()
            && &self.s * &self.s * BigRational::from(self.disc.clone())
                == &o.s * &o.s * BigRational::from(o.disc.clone())
    }
}

/// A point of the boundary of the upper half-plane.
#[derive(Clone, Debug)]
pub enum Boundary {
    Infinity,
    /// Exact rational or quadratic irrational.
    Quad(QuadPoint),
    /// Floating-point boundary point (randomized harness only; equality is numeric).
    Real(f64),
}

impl Boundary {
    pub fn rational(r: BigRational) -> Self {
        Boundary::Quad(QuadPoint::new(r, BigRational::zero(), BigInt::zero()))
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from(BigInt::from(n)))
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Boundary::Quad(q) if q.is_rational() => Some(q.r.clone()),
            _ => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Boundary::Infinity)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Boundary::Infinity => f64::INFINITY,
            Boundary::Quad(q) => q.to_f64(),
            Boundary::Real(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Boundary::Real(_))
    }
}

impl PartialEq for Boundary {
    fn eq(&self, o: &Self) -> bool {
        match (self, o) {
            (Boundary::Infinity, Boundary::Infinity) => true,
            (Boundary::Quad(a), Boundary::Quad(b)) => a == b,
            (Boundary::Real(a), Boundary::Real(b)) => a == b,
            (Boundary::Real(a), Boundary::Quad(b)) | (Boundary::Quad(b), Boundary::Real(a)) => {
                *a == b.to_f64()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Infinity => write!(f, "inf"),
            Boundary::Real(x) => write!(f, "{x}"),
            Boundary::Quad(q) if q.is_rational() => write!(f, "{}", q.r),
            Boundary::Quad(q) => write!(f, "{} + ({})*sqrt({})", q.r, q.s, q.disc),
        }
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_text {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|_| D::Error::custom(format!("bad rational {text:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(Mat2::from_ints(2, 0, 0, 1).is_err());
        assert!(Mat2::from_ints(1, 1, 0, 1).is_ok());
    }

    #[test]
    fn sign_normalization_identifies_plus_minus() {
        let m = Mat2::from_ints(-2, -1, -1, -1).unwrap();
        assert_eq!(m, Mat2::from_ints(2, 1, 1, 1).unwrap());
        let s = Mat2::from_ints(0, -1, 1, 0).unwrap();
        assert!(s.mul(&s).is_identity());
        assert_eq!(s.inverse(), s);
    }

    #[test]
    fn rational_entries_reduce() {
        let m = Mat2::from_rationals([q(2, 1), q(0, 1), q(0, 1), q(1, 2)]).unwrap();
        assert_eq!(m.den(), &BigInt::from(2));
        assert_eq!(m.translation_length(), 2.0 * (1.25f64).acosh());
        assert!(Mat2::from_rationals([q(2, 1), q(0, 1), q(0, 1), q(1, 3)]).is_err());
    }

    #[test]
    fn fixed_points_of_golden_matrix() {
        let m = Mat2::from_ints(2, 1, 1, 1).unwrap();
        let fp = m.fixed_points();
        assert_eq!(fp.len(), 2);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((fp[0].to_f64() - phi).abs() < 1e-12);
        assert!((fp[1].to_f64() - (1.0 - phi)).abs() < 1e-12);
        // Both are fixed exactly.
        for z in &fp {
            assert_eq!(&m.act_boundary(z), z);
        }
    }

    #[test]
    fn parabolic_fixed_point_is_infinity() {
        let t = Mat2::from_ints(1, 1, 0, 1).unwrap();
        assert_eq!(t.fixed_points(), vec![Boundary::Infinity]);
        assert_eq!(t.cmp_trace_with_two(), Ordering::Equal);
    }

    #[test]
    fn translation_length_of_huge_powers_is_additive() {
        let g = Mat2::from_ints(2, 1, 1, 1).unwrap();
        let base = g.translation_length();
        let big = g.pow(5000);
        assert!((big.translation_length() - 5000.0 * base).abs() < 1e-9 * 5000.0 * base);
    }

    #[test]
    fn residues_respect_products() {
        let a = Mat2::from_ints(1, 2, 0, 1).unwrap();
        let b = Mat2::from_ints(1, 0, 2, 1).unwrap();
        let p = 1_000_000_007;
        let ab = a.mul(&b).residue(p).unwrap();
        assert_eq!(ab, a.residue(p).unwrap().mul(&b.residue(p).unwrap()));
        assert!(a.pow(7).inverse().mul(&a.pow(7)).residue(p).unwrap().is_pm_identity());
    }

    #[test]
    fn quad_equality_handles_scaled_discriminants() {
        let x = QuadPoint::new(q(1, 2), q(1, 2), 5.into());
        let y = QuadPoint::new(q(1, 2), q(1, 4), 20.into());
        assert_eq!(x, y);
        let z = QuadPoint::new(q(1, 2), q(-1, 4), 20.into());
        assert_ne!(x, z);
        let r = QuadPoint::new(q(1, 1), q(1, 1), 4.into());
        assert!(r.is_rational());
        assert_eq!(r.r, q(3, 1));
    }

    #[test]
    fn big_ln_matches_f64() {
        let n = BigInt::from(10).pow(400);
        assert!((big_ln(&n) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }
}
