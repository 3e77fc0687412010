//! Exact arithmetic in cyclotomic fields.
//!
//! A [`Cyclotomic`] stores the residue of its coefficient polynomial modulo
//! the cyclotomic polynomial of its conductor, so two values at the same
//! conductor are equal iff their term lists are identical. Values at
//! different conductors are compared after lifting both to the lcm.
//!
//! The inner loops of the tensor computations never touch rationals: they
//! accumulate integer counts of `L`-th roots of unity in a [`RootHistogram`]
//! and only convert to canonical form once per entry, using a [`Reducer`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Integer coefficients of `Φ_N`, lowest degree first.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    assert!(n >= 1, "conductor must be positive");
    // x^n - 1 divided by every Φ_d with d a proper divisor of n
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let div = cyclotomic_polynomial(d);
            num = exact_div(&num, &div);
        }
    }
    let result = Arc::new(num);
    cache.lock().unwrap().insert(n, result.clone());
    result
}

fn exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = *den.last().unwrap();
    debug_assert_eq!(lead, 1);
    let mut quot = vec![0i64; rem.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dd];
        quot[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "inexact cyclotomic division");
    quot
}

pub fn euler_phi(n: u64) -> u64 {
    (cyclotomic_polynomial(n).len() - 1) as u64
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Reduces a dense coefficient vector modulo `Φ_N` into a sorted term list.
fn reduce_dense(mut dense: Vec<BigRational>, n: u64) -> Vec<(u64, BigRational)> {
    let phi = cyclotomic_polynomial(n);
    let deg = phi.len() - 1;
    for i in (deg..dense.len()).rev() {
        if dense[i].is_zero() {
            continue;
        }
        let c = std::mem::take(&mut dense[i]);
        for (j, &pj) in phi.iter().enumerate().take(deg) {
            if pj != 0 {
                dense[i - deg + j] -= &c * rat(pj);
            }
        }
    }
    dense.truncate(deg);
    dense
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k as u64, c))
        .collect()
}

/// Element of `Q(ζ_N)` in canonical reduced form.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    conductor: u64,
    terms: Vec<(u64, BigRational)>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Cyclotomic { conductor: 1, terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    pub fn from_rational(c: BigRational) -> Self {
        let terms = if c.is_zero() { Vec::new() } else { vec![(0, c)] };
        Cyclotomic { conductor: 1, terms }
    }

    /// `ζ_N^k` with `ζ_N = exp(2πi/N)`.
    pub fn root_of_unity(n: u64, k: i64) -> Self {
        Self::monomial(n, k, BigRational::one())
    }

    /// `c · ζ_N^k`.
    pub fn monomial(n: u64, k: i64, c: BigRational) -> Self {
        assert!(n >= 1, "conductor must be positive");
        let k = k.rem_euclid(n as i64) as usize;
        let mut dense = vec![BigRational::zero(); n as usize];
        dense[k] = c;
        Cyclotomic { conductor: n, terms: reduce_dense(dense, n) }
    }

    /// Builds a value from arbitrary (not necessarily reduced) exponent/coefficient pairs.
    pub fn from_terms(n: u64, terms: impl IntoIterator<Item = (i64, BigRational)>) -> Self {
        let mut dense = vec![BigRational::zero(); n as usize];
        for (k, c) in terms {
            dense[k.rem_euclid(n as i64) as usize] += c;
        }
        Cyclotomic { conductor: n, terms: reduce_dense(dense, n) }
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Canonical `(exponent, coefficient)` pairs, ascending, nonzero.
    pub fn terms(&self) -> &[(u64, BigRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(0, c)] => Some(c.clone()),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational().filter(|c| c.is_integer()).map(|c| c.to_integer())
    }

    /// Canonical form at conductor `m`, a multiple of the current conductor.
    pub fn lift(&self, m: u64) -> Self {
        if m == self.conductor {
            return self.clone();
        }
        assert!(m % self.conductor == 0, "cannot lift conductor {} to {m}", self.conductor);
        let step = m / self.conductor;
        Self::from_terms(m, self.terms.iter().map(|(k, c)| ((k * step) as i64, c.clone())))
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        let m = self.conductor.lcm(&other.conductor);
        (self.lift(m), other.lift(m))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.common(other);
        let mut map: std::collections::BTreeMap<u64, BigRational> = a.terms.into_iter().collect();
        for (k, c) in b.terms {
            *map.entry(k).or_insert_with(BigRational::zero) += c;
        }
        Cyclotomic {
            conductor: a.conductor,
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Cyclotomic {
            conductor: self.conductor,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let (a, b) = self.common(other);
        let n = a.conductor;
        let mut dense = vec![BigRational::zero(); 2 * euler_phi(n) as usize];
        for (i, ci) in &a.terms {
            for (j, cj) in &b.terms {
                dense[(i + j) as usize] += ci * cj;
            }
        }
        Cyclotomic { conductor: n, terms: reduce_dense(dense, n) }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Cyclotomic {
            conductor: self.conductor,
            terms: self.terms.iter().map(|(k, x)| (*k, x * c)).collect(),
        }
    }

    /// Complex conjugation `ζ_N ↦ ζ_N^{-1}`.
    pub fn conjugate(&self) -> Self {
        let n = self.conductor as i64;
        Self::from_terms(self.conductor, self.terms.iter().map(|(k, c)| (-(*k as i64), c.clone())).map(|(k, c)| (k.rem_euclid(n), c)))
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Floating-point value, for sanity checks only.
    pub fn to_complex(&self) -> (f64, f64) {
        let n = self.conductor as f64;
        self.terms.iter().fold((0.0, 0.0), |(re, im), (k, c)| {
            let v = c.to_f64().unwrap_or(f64::NAN);
            let t = 2.0 * std::f64::consts::PI * (*k as f64) / n;
            (re + v * t.cos(), im + v * t.sin())
        })
    }

    /// `(m, k)` with `self = ζ_m^k` and `m` minimal, if `self` is a root of unity.
    pub fn as_root_of_unity(&self) -> Option<(u64, u64)> {
        let n = self.conductor;
        // A root of unity in Q(ζ_N) is ±ζ_N^j; for odd N the sign is absorbed by ζ_{2N}.
        let candidates: Vec<(u64, u64)> = if n % 2 == 0 {
            (0..n).map(|j| (n, j)).collect()
        } else {
            (0..2 * n).map(|j| (2 * n, j)).collect()
        };
        let target = if n % 2 == 0 { self.clone() } else { self.lift(2 * n) };
        for (m, j) in candidates {
            let cand = Self::root_of_unity(m, j as i64);
            if cand.terms == target.terms {
                let g = j.gcd(&m);
                return Some((m / g, j / g));
            }
        }
        None
    }

    pub fn parse(s: &str) -> Result<Self> {
        Parser { src: s.as_bytes(), pos: 0 }.expression()
    }

    /// Deterministic text form: ascending exponents at the stored conductor,
    /// or `E(m)^k` with minimal `m` for pure roots of unity.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        if let Some(c) = self.as_rational() {
            return c.to_string();
        }
        if let Some((m, k)) = self.as_root_of_unity() {
            return format!("E({m})^{k}");
        }
        let mut out = String::new();
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if *k == 0 {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&format!("E({})^{k}", self.conductor));
            } else {
                out.push_str(&format!("{abs}*E({})^{k}", self.conductor));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| json!([k, big_to_json(c.numer()), big_to_json(c.denom())]))
            .collect();
        json!({ "N": self.conductor, "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Schema(format!("cyclotomic: {m}"));
        let n = v.get("N").and_then(Value::as_u64).filter(|&n| n >= 1).ok_or_else(|| bad("missing N"))?;
        let terms = v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))?;
        let mut parsed = Vec::with_capacity(terms.len());
        for t in terms {
            let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("term must be a triple"))?;
            let k = t[0].as_i64().ok_or_else(|| bad("exponent"))?;
            let num = json_to_big(&t[1]).ok_or_else(|| bad("numerator"))?;
            let den = json_to_big(&t[2]).filter(|d| !d.is_zero()).ok_or_else(|| bad("denominator"))?;
            parsed.push((k, BigRational::new(num, den)));
        }
        Ok(Self::from_terms(n, parsed))
    }
}

fn big_to_json(b: &BigInt) -> Value {
    match b.to_i64() {
        Some(v) => json!(v),
        None => json!(b.to_string()),
    }
}

fn json_to_big(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.conductor == other.conductor {
            return self.terms == other.terms;
        }
        let (a, b) = self.common(other);
        a.terms == b.terms
    }
}

impl Eq for Cyclotomic {}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(text.parse().unwrap())
    }

    fn signed_small(&mut self) -> Result<i64> {
        let neg = self.eat(b'-');
        let v = self.integer()?;
        let v = v.to_i64().map_or_else(|| self.err("exponent too large"), Ok)?;
        Ok(if neg { -v } else { v })
    }

    fn root(&mut self) -> Result<(u64, i64)> {
        if !(self.eat(b'E') && self.eat(b'(')) {
            return self.err("expected E(N)");
        }
        let n = self.integer()?;
        let n = match n.to_u64() {
            Some(n) if n >= 1 && n <= 1 << 20 => n,
            _ => return self.err("conductor out of range"),
        };
        if !self.eat(b')') {
            return self.err("expected ')'");
        }
        let k = if self.eat(b'^') { self.signed_small()? } else { 1 };
        Ok((n, k))
    }

    fn term(&mut self) -> Result<(BigRational, Option<(u64, i64)>)> {
        match self.peek() {
            Some(b'E') => Ok((BigRational::one(), Some(self.root()?))),
            Some(c) if c.is_ascii_digit() => {
                let num = self.integer()?;
                let den = if self.eat(b'/') { self.integer()? } else { BigInt::one() };
                if den.is_zero() {
                    return self.err("zero denominator");
                }
                let c = BigRational::new(num, den);
                if self.eat(b'*') {
                    Ok((c, Some(self.root()?)))
                } else {
                    Ok((c, None))
                }
            }
            _ => self.err("expected term"),
        }
    }

    fn expression(&mut self) -> Result<Cyclotomic> {
        let mut terms = Vec::new();
        let mut neg = self.eat(b'-');
        if !neg {
            self.eat(b'+');
        }
        loop {
            let (c, root) = self.term()?;
            let c = if neg { -c } else { c };
            terms.push((c, root.unwrap_or((1, 0))));
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    neg = false;
                }
                Some(b'-') => {
                    self.pos += 1;
                    neg = true;
                }
                Some(_) => return self.err("unexpected character"),
            }
        }
        let n = terms.iter().fold(1u64, |acc, (_, (m, _))| acc.lcm(m));
        Ok(Cyclotomic::from_terms(
            n,
            terms.into_iter().map(|(c, (m, k))| (k * (n / m) as i64, c)),
        ))
    }
}

/// `exp(2πi·value/modulus)`; the integer-only monomial used inside tensor loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnityExponent {
    pub modulus: u64,
    pub value: u64,
}

impl RootOfUnityExponent {
    pub fn new(modulus: u64, value: i64) -> Self {
        RootOfUnityExponent { modulus, value: value.rem_euclid(modulus as i64) as u64 }
    }

    pub fn one() -> Self {
        RootOfUnityExponent { modulus: 1, value: 0 }
    }

    pub fn is_one(&self) -> bool {
        self.value == 0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.modulus.lcm(&other.modulus);
        let v = self.value * (m / self.modulus) + other.value * (m / other.modulus);
        Self::new(m, v as i64)
    }

    pub fn at_modulus(&self, m: u64) -> u64 {
        assert!(m % self.modulus == 0);
        self.value * (m / self.modulus)
    }

    pub fn to_cyclotomic(&self) -> Cyclotomic {
        Cyclotomic::root_of_unity(self.modulus, self.value as i64)
    }
}

/// Canonical forms of `x^i mod Φ_L` for `i < L`, with integer coefficients.
#[derive(Debug)]
pub struct Reducer {
    modulus: u64,
    phi: usize,
    powers: Vec<Vec<(u32, i64)>>,
}

impl Reducer {
    pub fn new(modulus: u64) -> Self {
        let poly = cyclotomic_polynomial(modulus);
        let phi = poly.len() - 1;
        let mut powers = Vec::with_capacity(modulus as usize);
        let mut cur = vec![0i64; phi.max(1)];
        if phi > 0 {
            cur[0] = 1;
        }
        for _ in 0..modulus {
            powers.push(cur.iter().enumerate().filter(|(_, c)| **c != 0).map(|(k, c)| (k as u32, *c)).collect());
            // multiply by x and reduce the degree-phi term
            let top = cur[phi - 1];
            for k in (1..phi).rev() {
                cur[k] = cur[k - 1];
            }
            cur[0] = 0;
            if top != 0 {
                for k in 0..phi {
                    cur[k] -= top * poly[k];
                }
            }
        }
        Reducer { modulus, phi, powers }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Integer canonical coefficients of `Σ_i counts[i] ζ_L^i`, nonzero only.
    pub fn reduce_integral(&self, counts: &[i64]) -> Vec<(u32, i128)> {
        let mut acc = vec![0i128; self.phi];
        for (i, &c) in counts.iter().enumerate() {
            if c != 0 {
                for &(k, v) in &self.powers[i] {
                    acc[k as usize] += c as i128 * v as i128;
                }
            }
        }
        acc.into_iter().enumerate().filter(|(_, c)| *c != 0).map(|(k, c)| (k as u32, c)).collect()
    }

    /// The value with canonical integer coefficients `terms` (as returned by
    /// [`Reducer::reduce_integral`]) times `scale`.
    pub fn from_integral(&self, terms: &[(u32, i128)], scale: &BigRational) -> Cyclotomic {
        let terms = if scale.is_zero() {
            Vec::new()
        } else {
            terms.iter().map(|&(k, c)| (k as u64, BigRational::from_integer(BigInt::from(c)) * scale)).collect()
        };
        Cyclotomic { conductor: self.modulus, terms }
    }

    /// Canonical value of `scale · Σ_i counts[i] ζ_L^i`.
    pub fn reduce(&self, counts: &[i64], scale: &BigRational) -> Cyclotomic {
        let mut acc = vec![0i128; self.phi];
        for (i, &c) in counts.iter().enumerate() {
            if c != 0 {
                for &(k, v) in &self.powers[i] {
                    acc[k as usize] += c as i128 * v as i128;
                }
            }
        }
        let terms = acc
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0)
            .map(|(k, c)| (k as u64, BigRational::from_integer(BigInt::from(c)) * scale))
            .collect();
        Cyclotomic { conductor: self.modulus, terms }
    }
}

/// Integer combination of `L`-th roots of unity: `Σ count[i] ζ_L^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootHistogram {
    counts: Vec<i64>,
}

impl RootHistogram {
    pub fn new(modulus: u64) -> Self {
        RootHistogram { counts: vec![0; modulus as usize] }
    }

    pub fn modulus(&self) -> u64 {
        self.counts.len() as u64
    }

    #[inline]
    pub fn add(&mut self, exponent: u64, count: i64) {
        let l = self.counts.len() as u64;
        let slot = &mut self.counts[(exponent % l) as usize];
        *slot = slot.checked_add(count).expect("root histogram overflow");
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn to_cyclotomic(&self, reducer: &Reducer, scale: &BigRational) -> Cyclotomic {
        assert_eq!(reducer.modulus(), self.modulus());
        reducer.reduce(&self.counts, scale)
    }
}

/// A value written as a short integer combination of `L`-th roots of unity,
/// divided by a fixed denominator carried by the owner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSum {
    pub terms: Vec<(u64, i64)>,
}

impl RootSum {
    pub fn monomial(exponent: u64) -> Self {
        RootSum { terms: vec![(exponent, 1)] }
    }

    /// Writes `x` (scaled by `denominator`) over the `modulus`-th roots.
    /// Fails if the conductor does not divide `modulus` or the scaled
    /// coefficients are not integers.
    pub fn from_cyclotomic(x: &Cyclotomic, modulus: u64, denominator: &BigInt) -> Option<Self> {
        if modulus % x.conductor() != 0 {
            return None;
        }
        let step = modulus / x.conductor();
        let mut terms = Vec::with_capacity(x.terms().len());
        for (k, c) in x.terms() {
            let scaled = c * BigRational::from_integer(denominator.clone());
            if !scaled.is_integer() {
                return None;
            }
            terms.push((k * step, scaled.to_integer().to_i64()?));
        }
        Some(RootSum { terms })
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].1 == 1
    }
}
