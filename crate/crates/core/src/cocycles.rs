//! Normalized 3-cocycles stored as exponent tables, the 2-cocycles `α_g`
//! they induce, and coboundary solving on abelian subgroups.
//!
//! All values are additive exponents: an entry `v` at modulus `e` stands for
//! `exp(2πi·v/e)`.

use std::sync::Arc;

use num_integer::Integer;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteGroup};

#[derive(Clone, Debug)]
pub struct ThreeCocycle {
    group: Arc<FiniteGroup>,
    modulus: u64,
    values: Vec<u32>,
}

impl ThreeCocycle {
    /// Validates and wraps a flat row-major `n^3` exponent table.
    pub fn new(group: Arc<FiniteGroup>, modulus: u64, values: Vec<u64>) -> Result<Self> {
        let n = group.order();
        if modulus == 0 || modulus > u32::MAX as u64 {
            return Err(Error::Parameter(format!("modulus {modulus} out of range")));
        }
        if values.len() != n * n * n {
            return Err(Error::Schema(format!(
                "cocycle table has {} entries, expected {}",
                values.len(),
                n * n * n
            )));
        }
        let values = values.into_iter().map(|v| (v % modulus) as u32).collect();
        let c = ThreeCocycle { group, modulus, values };
        c.validate()?;
        Ok(c)
    }

    pub fn trivial(group: Arc<FiniteGroup>) -> Self {
        let n = group.order();
        ThreeCocycle { group, modulus: 1, values: vec![0; n * n * n] }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn value(&self, x: Elem, y: Elem, z: Elem) -> u64 {
        let n = self.group.order();
        self.values[(x * n + y) * n + z] as u64
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Every quadruple violating the cocycle identity, up to `limit`.
    pub fn violations(&self, limit: usize) -> Vec<[Elem; 4]> {
        let g = &*self.group;
        let n = g.order();
        let e = self.modulus;
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let xy = g.mul(x, y);
                for z in 0..n {
                    let yz = g.mul(y, z);
                    let a = self.value(x, y, z);
                    for w in 0..n {
                        let lhs = self.value(y, z, w) + self.value(x, yz, w) + a;
                        let rhs = self.value(xy, z, w) + self.value(x, y, g.mul(z, w));
                        if lhs % e != rhs % e {
                            out.push([x, y, z, w]);
                            if out.len() >= limit {
                                return out;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.group.order();
        for x in 0..n {
            for y in 0..n {
                for (a, b, c) in [(0, x, y), (x, 0, y), (x, y, 0)] {
                    if self.value(a, b, c) != 0 {
                        return Err(Error::NotNormalized(a, b, c));
                    }
                }
            }
        }
        match self.violations(1).first() {
            Some(&[x, y, z, w]) => Err(Error::CocycleViolation(x, y, z, w)),
            None => Ok(()),
        }
    }

    /// `ω(x, y, z) = ω_Q(π x, π y, π z)` for a surjective homomorphism `π: G → Q`.
    pub fn inflate(quotient: &ThreeCocycle, group: Arc<FiniteGroup>, projection: &[Elem]) -> Result<Self> {
        let q = &**quotient.group();
        let n = group.order();
        if projection.len() != n || projection.iter().any(|&v| v >= q.order()) {
            return Err(Error::Parameter("projection has the wrong shape".into()));
        }
        for x in 0..n {
            for y in 0..n {
                if projection[group.mul(x, y)] != q.mul(projection[x], projection[y]) {
                    return Err(Error::NotHomomorphism(x, y));
                }
            }
        }
        let mut hit = vec![false; q.order()];
        projection.iter().for_each(|&v| hit[v] = true);
        if !hit.iter().all(|&h| h) {
            return Err(Error::Parameter("projection is not surjective".into()));
        }
        let mut values = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    values.push(quotient.value(projection[x], projection[y], projection[z]));
                }
            }
        }
        Self::new(group, quotient.modulus, values)
    }

    /// The cocycle `ω^u` on `Z/q ⋊ Z/p`, inflated from
    /// `ω(b^i, b^j, b^k) = u[i]([j] + [k] - [j+k]) / p^2` on `<b>`.
    pub fn pq_cocycle(group: Arc<FiniteGroup>, u: u64) -> Result<Self> {
        let pq = group
            .pq_params()
            .ok_or_else(|| Error::Parameter("pq cocycles need a group built by pq_group".into()))?;
        if u >= pq.p {
            return Err(Error::Parameter(format!("u={u} must lie in 0..{}", pq.p)));
        }
        let p = pq.p as usize;
        let cyclic = Arc::new(FiniteGroup::cyclic(p));
        let mut values = Vec::with_capacity(p * p * p);
        for i in 0..p {
            for j in 0..p {
                for k in 0..p {
                    values.push(u * (i * (j + k - (j + k) % p)) as u64);
                }
            }
        }
        let base = ThreeCocycle::new(cyclic, pq.p * pq.p, values)?;
        let projection: Vec<Elem> = (0..group.order()).map(|x| pq.coords(x).1 as Elem).collect();
        Self::inflate(&base, group, &projection)
    }

    /// Exponent table of `α_g(x, y) = ω(x,y,g) - ω(x, y▷g, y) + ω(xy▷g, x, y)`
    /// for every `g, x, y` in `G`.
    pub fn alpha_table(&self) -> AlphaTable {
        let g = &*self.group;
        let n = g.order();
        let e = self.modulus;
        let mut values = vec![0u32; n * n * n];
        for base in 0..n {
            for x in 0..n {
                for y in 0..n {
                    let yg = g.conjugate(y, base);
                    let xyg = g.conjugate(g.mul(x, y), base);
                    let v = self.value(x, y, base) + e - self.value(x, yg, y) + self.value(xyg, x, y);
                    values[(base * n + x) * n + y] = (v % e) as u32;
                }
            }
        }
        AlphaTable { n, modulus: e, values }
    }

    /// `α_g` restricted to `C_G(g)`, with the 2-cocycle identity checked.
    pub fn alpha(&self, g: Elem) -> Result<TwoCocycleOnCentralizer> {
        let grp = &*self.group;
        let domain = grp.centralizer(g).to_vec();
        let e = self.modulus;
        let m = domain.len();
        let mut values = vec![0u64; m * m];
        for (i, &x) in domain.iter().enumerate() {
            for (j, &y) in domain.iter().enumerate() {
                let v = self.value(x, y, g) + e - self.value(x, grp.conjugate(y, g), y)
                    + self.value(grp.conjugate(grp.mul(x, y), g), x, y);
                values[i * m + j] = v % e;
            }
        }
        let alpha = TwoCocycleOnCentralizer { group: self.group.clone(), base: g, modulus: e, domain, values };
        alpha.check()?;
        Ok(alpha)
    }

    pub fn from_json(group: Arc<FiniteGroup>, text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let modulus = v
            .get("modulus")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Schema("cocycle: missing modulus".into()))?;
        let values = v
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("cocycle: missing values".into()))?
            .iter()
            .map(|x| x.as_u64().ok_or_else(|| Error::Schema("cocycle: values must be nonnegative integers".into())))
            .collect::<Result<Vec<u64>>>()?;
        Self::new(group, modulus, values)
    }

    pub fn to_json(&self) -> Value {
        json!({ "modulus": self.modulus, "values": self.values })
    }
}

/// `α_g(x, y)` for all `g, x, y ∈ G`, as exponents at the cocycle's modulus.
#[derive(Clone, Debug)]
pub struct AlphaTable {
    n: usize,
    modulus: u64,
    values: Vec<u32>,
}

impl AlphaTable {
    #[inline]
    pub fn get(&self, g: Elem, x: Elem, y: Elem) -> u64 {
        self.values[(g * self.n + x) * self.n + y] as u64
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

#[derive(Clone, Debug)]
pub struct TwoCocycleOnCentralizer {
    group: Arc<FiniteGroup>,
    base: Elem,
    modulus: u64,
    domain: Vec<Elem>,
    values: Vec<u64>,
}

impl TwoCocycleOnCentralizer {
    /// Direct constructor for a 2-cocycle on a subgroup; used for tests and
    /// externally supplied data.
    pub fn from_values(group: Arc<FiniteGroup>, base: Elem, modulus: u64, domain: Vec<Elem>, values: Vec<u64>) -> Result<Self> {
        if !group.is_subgroup(&domain) || values.len() != domain.len() * domain.len() {
            return Err(Error::Parameter("2-cocycle domain must be a subgroup with a full table".into()));
        }
        let mut domain_sorted = domain.clone();
        domain_sorted.sort_unstable();
        if domain_sorted != domain {
            return Err(Error::Parameter("2-cocycle domain must be sorted".into()));
        }
        let alpha = TwoCocycleOnCentralizer {
            group,
            base,
            modulus,
            values: values.into_iter().map(|v| v % modulus).collect(),
            domain,
        };
        alpha.check()?;
        Ok(alpha)
    }

    pub fn base(&self) -> Elem {
        self.base
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn domain(&self) -> &[Elem] {
        &self.domain
    }

    fn pos(&self, x: Elem) -> usize {
        self.domain.binary_search(&x).expect("element outside the 2-cocycle domain")
    }

    pub fn get(&self, x: Elem, y: Elem) -> u64 {
        self.values[self.pos(x) * self.domain.len() + self.pos(y)]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.domain.iter().all(|&x| self.domain.iter().all(|&y| self.get(x, y) == self.get(y, x)))
    }

    fn check(&self) -> Result<()> {
        let g = &*self.group;
        let e = self.modulus;
        for &x in &self.domain {
            if self.get(0, x) != 0 || self.get(x, 0) != 0 {
                return Err(Error::TwoCocycleViolation(0, x, 0));
            }
            for &y in &self.domain {
                let xy = g.mul(x, y);
                for &z in &self.domain {
                    let lhs = self.get(x, y) + self.get(xy, z);
                    let rhs = self.get(y, z) + self.get(x, g.mul(y, z));
                    if lhs % e != rhs % e {
                        return Err(Error::TwoCocycleViolation(x, y, z));
                    }
                }
            }
        }
        Ok(())
    }

    /// Finds `μ` with `μ(x) + μ(y) - μ(xy) = α(x, y)` on an abelian domain,
    /// first at the cocycle's modulus `e`, then at `e·|H|`.
    pub fn solve_coboundary(&self) -> Result<OneCochain> {
        let g = &*self.group;
        g.is_abelian_subset(&self.domain)?;
        if !self.is_symmetric() {
            return Err(Error::Unsolvable(format!(
                "α_{} is not symmetric, so it is not a coboundary on an abelian group",
                self.base
            )));
        }
        let gens = abelian_generators(g, &self.domain);
        for modulus in [self.modulus, self.modulus * self.domain.len() as u64] {
            if let Some(mu) = self.try_solve(&gens, modulus) {
                return Ok(mu);
            }
        }
        Err(Error::Unsolvable(format!("no cochain found for α_{} at modulus {}", self.base, self.modulus * self.domain.len() as u64)))
    }

    fn try_solve(&self, gens: &[Elem], modulus: u64) -> Option<OneCochain> {
        let g = &*self.group;
        let scale = modulus / self.modulus;
        let alpha = |x: Elem, y: Elem| self.get(x, y) * scale;
        let mut mu: Vec<Option<u64>> = vec![None; g.order()];
        mu[0] = Some(0);
        let mut known = vec![0usize];
        for &gen in gens {
            // least m with gen^m in the current subgroup
            let mut powers = vec![0usize];
            let mut cur = gen;
            while mu[cur].is_none() {
                powers.push(cur);
                cur = g.mul(cur, gen);
            }
            let m = powers.len() as u64;
            // mu(gen^j) = j t - S_j with S_j = sum_{i<j} alpha(gen^i, gen)
            let mut partial = vec![0u64; powers.len() + 1];
            for j in 0..powers.len() {
                partial[j + 1] = (partial[j] + alpha(powers[j], gen)) % modulus;
            }
            let rhs = (mu[cur].unwrap() + partial[powers.len()]) % modulus;
            let t = solve_linear_congruence(m % modulus, rhs, modulus)?;
            let mut power_mu = vec![0u64; powers.len()];
            for j in 1..powers.len() {
                power_mu[j] = ((j as u64 * t) % modulus + modulus - partial[j]) % modulus;
            }
            let mut next = known.clone();
            for &k in &known {
                for (j, &pj) in powers.iter().enumerate().skip(1) {
                    let x = g.mul(k, pj);
                    let v = (mu[k].unwrap() + power_mu[j] + modulus - alpha(k, pj)) % modulus;
                    mu[x] = Some(v);
                    next.push(x);
                }
            }
            known = next;
        }
        let values: Vec<u64> = self.domain.iter().map(|&x| mu[x].expect("generators span the domain")).collect();
        let cochain = OneCochain { domain: self.domain.clone(), modulus, values };
        self.domain
            .iter()
            .all(|&x| {
                self.domain.iter().all(|&y| {
                    (cochain.get(x) + cochain.get(y) + modulus - cochain.get(g.mul(x, y))) % modulus == alpha(x, y) % modulus
                })
            })
            .then_some(cochain)
    }
}

/// Least `t` in `[0, m)` with `a t = b (mod m)`.
fn solve_linear_congruence(a: u64, b: u64, m: u64) -> Option<u64> {
    let d = a.gcd(&m);
    if b % d != 0 {
        return None;
    }
    let (a1, b1, m1) = (a / d, b / d, m / d);
    if m1 == 1 {
        return Some(0);
    }
    let ext = (a1 as i64).extended_gcd(&(m1 as i64));
    let inv = ext.x.rem_euclid(m1 as i64) as u64;
    Some(((b1 as u128 * inv as u128) % m1 as u128) as u64)
}

/// Greedy generating sequence of an abelian subgroup: each step adds the
/// element (least index on ties) that enlarges the generated subgroup most.
pub fn abelian_generators(g: &FiniteGroup, domain: &[Elem]) -> Vec<Elem> {
    let mut gens = Vec::new();
    let mut span = vec![0usize];
    while span.len() < domain.len() {
        let mut best: Option<(usize, Elem, Vec<Elem>)> = None;
        for &x in domain {
            if span.binary_search(&x).is_ok() {
                continue;
            }
            let mut trial = gens.clone();
            trial.push(x);
            let sub = g.generated_subgroup(&trial);
            if best.as_ref().map_or(true, |(size, _, _)| sub.len() > *size) {
                best = Some((sub.len(), x, sub));
            }
        }
        let (_, x, sub) = best.expect("domain is a subgroup");
        gens.push(x);
        span = sub;
    }
    gens
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneCochain {
    domain: Vec<Elem>,
    modulus: u64,
    values: Vec<u64>,
}

impl OneCochain {
    pub fn zero(domain: Vec<Elem>) -> Self {
        let values = vec![0; domain.len()];
        OneCochain { domain, modulus: 1, values }
    }

    pub fn domain(&self) -> &[Elem] {
        &self.domain
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, x: Elem) -> u64 {
        self.values[self.domain.binary_search(&x).expect("element outside the cochain domain")]
    }
}
