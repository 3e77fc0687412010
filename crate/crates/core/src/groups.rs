//! Finite groups stored as full multiplication tables.
//!
//! Elements are indices `0..n` with `0` the identity. Conjugacy classes are
//! ordered by their least-index member, which is also the class representative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an element in the group's fixed enumeration.
pub type Elem = usize;

/// Parameters of the nonabelian group of order `pq` built by [`FiniteGroup::pq_group`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PqParams {
    pub p: u64,
    pub q: u64,
    /// Least `n > 1` with `n^p = 1 (mod q)`; `b a b^-1 = a^n`.
    pub n: u64,
}

impl PqParams {
    /// Index of `a^l b^k`.
    pub fn element(&self, l: u64, k: u64) -> Elem {
        ((l % self.q) * self.p + (k % self.p)) as Elem
    }

    /// `(l, k)` with `x = a^l b^k`.
    pub fn coords(&self, x: Elem) -> (u64, u64) {
        let x = x as u64;
        (x / self.p, x % self.p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugacyClassInfo {
    pub representative: Elem,
    pub members: Vec<Elem>,
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    mul: Vec<Elem>,
    inv: Vec<Elem>,
    classes: Vec<ConjugacyClassInfo>,
    class_of: Vec<usize>,
    centralizers: Vec<Vec<Elem>>,
    transporter: Vec<Elem>,
    pq: Option<PqParams>,
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    name: String,
    order: usize,
    mul: Vec<Vec<usize>>,
}

impl FiniteGroup {
    pub fn from_multiplication_table(table: Vec<Vec<usize>>, name: &str) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidTable("empty table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidTable(format!("row {i} has length {}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidTable(format!("entry {bad} in row {i} out of range")));
            }
        }
        for x in 0..n {
            if table[0][x] != x || table[x][0] != x {
                return Err(Error::InvalidTable(format!(
                    "element 0 is not a two-sided identity (fails at {x})"
                )));
            }
        }
        let mut seen = vec![usize::MAX; n];
        for (i, row) in table.iter().enumerate() {
            for &v in row {
                if seen[v] == i {
                    return Err(Error::InvalidTable(format!("row {i} is not a permutation")));
                }
                seen[v] = i;
            }
        }
        let mut seen = vec![usize::MAX; n];
        for j in 0..n {
            for row in &table {
                let v = row[j];
                if seen[v] == j {
                    return Err(Error::InvalidTable(format!("column {j} is not a permutation")));
                }
                seen[v] = j;
            }
        }
        let mul: Vec<Elem> = table.into_iter().flatten().collect();
        for x in 0..n {
            for y in 0..n {
                let xy = mul[x * n + y];
                for z in 0..n {
                    if mul[xy * n + z] != mul[x * n + mul[y * n + z]] {
                        return Err(Error::NotAssociative(x, y, z));
                    }
                }
            }
        }
        let mut inv = vec![0; n];
        for x in 0..n {
            inv[x] = (0..n)
                .find(|&y| mul[x * n + y] == 0)
                .ok_or(Error::MissingInverse(x))?;
        }
        Ok(Self::assemble(name.to_string(), n, mul, inv, None))
    }

    fn assemble(name: String, n: usize, mul: Vec<Elem>, inv: Vec<Elem>, pq: Option<PqParams>) -> Self {
        let mut g = FiniteGroup {
            name,
            order: n,
            mul,
            inv,
            classes: Vec::new(),
            class_of: vec![usize::MAX; n],
            centralizers: Vec::new(),
            transporter: vec![usize::MAX; n],
            pq,
        };
        for x in 0..n {
            if g.class_of[x] != usize::MAX {
                continue;
            }
            let mut members: Vec<Elem> = (0..n).map(|f| g.conjugate(f, x)).collect();
            members.sort_unstable();
            members.dedup();
            for f in 0..n {
                let y = g.conjugate(f, x);
                if g.transporter[y] == usize::MAX {
                    g.transporter[y] = f;
                }
            }
            let idx = g.classes.len();
            for &m in &members {
                g.class_of[m] = idx;
            }
            g.classes.push(ConjugacyClassInfo { representative: x, members });
        }
        g.centralizers = (0..n)
            .map(|x| (0..n).filter(|&y| g.mul(x, y) == g.mul(y, x)).collect())
            .collect();
        g
    }

    /// The nonabelian group `<a, b | a^q = b^p = 1, b a b^-1 = a^n>` with
    /// elements `a^l b^k` enumerated in lexicographic `(l, k)` order.
    pub fn pq_group(p: u64, q: u64) -> Result<Self> {
        if p < 3 || !is_prime(p) || q < 3 || !is_prime(q) {
            return Err(Error::Parameter(format!("p={p} and q={q} must be odd primes")));
        }
        if (q - 1) % p != 0 {
            return Err(Error::Parameter(format!("{p} does not divide {q}-1")));
        }
        let n = (2..q)
            .find(|&n| pow_mod(n, p, q) == 1)
            .ok_or_else(|| Error::Parameter(format!("no element of order {p} mod {q}")))?;
        let params = PqParams { p, q, n };
        let order = (p * q) as usize;
        let mut mul = vec![0; order * order];
        let mut inv = vec![0; order];
        for x in 0..order {
            let (l1, k1) = params.coords(x);
            for y in 0..order {
                let (l2, k2) = params.coords(y);
                let l = (l1 + pow_mod(n, k1, q) * l2) % q;
                mul[x * order + y] = params.element(l, k1 + k2);
            }
            // (a^l b^k)^-1 = b^-k a^-l = a^{-n^{-k} l} b^-k
            let kinv = (p - k1) % p;
            let l = (q - (pow_mod(n, kinv, q) * l1) % q) % q;
            inv[x] = params.element(l, kinv);
        }
        Ok(Self::assemble(format!("pq:{p},{q}"), order, mul, inv, Some(params)))
    }

    /// Cyclic group `Z/m` with element `k` the `k`-th power of the generator.
    pub fn cyclic(m: usize) -> Self {
        assert!(m >= 1);
        let mul = (0..m * m).map(|i| (i / m + i % m) % m).collect();
        let inv = (0..m).map(|k| (m - k) % m).collect();
        Self::assemble(format!("Z{m}"), m, mul, inv, None)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: GroupJson = serde_json::from_str(text)?;
        if parsed.order != parsed.mul.len() {
            return Err(Error::Schema(format!(
                "order {} does not match table size {}",
                parsed.order,
                parsed.mul.len()
            )));
        }
        Self::from_multiplication_table(parsed.mul, &parsed.name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<usize>> = (0..self.order)
            .map(|x| self.mul[x * self.order..(x + 1) * self.order].to_vec())
            .collect();
        serde_json::json!({ "name": self.name, "order": self.order, "mul": rows })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn pq_params(&self) -> Option<PqParams> {
        self.pq
    }

    #[inline]
    pub fn mul(&self, x: Elem, y: Elem) -> Elem {
        self.mul[x * self.order + y]
    }

    #[inline]
    pub fn inv(&self, x: Elem) -> Elem {
        self.inv[x]
    }

    /// `g ▷ h = g h g^-1`.
    #[inline]
    pub fn conjugate(&self, g: Elem, h: Elem) -> Elem {
        self.mul(self.mul(g, h), self.inv[g])
    }

    /// `[g, h] = g h g^-1 h^-1`.
    #[inline]
    pub fn commutator(&self, g: Elem, h: Elem) -> Elem {
        self.mul(self.mul(g, h), self.mul(self.inv[g], self.inv[h]))
    }

    #[inline]
    pub fn commute(&self, g: Elem, h: Elem) -> bool {
        self.mul(g, h) == self.mul(h, g)
    }

    pub fn pow(&self, g: Elem, k: u64) -> Elem {
        (0..k).fold(0, |acc, _| self.mul(acc, g))
    }

    pub fn element_order(&self, g: Elem) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// Least common multiple of all element orders.
    pub fn exponent(&self) -> u64 {
        (0..self.order).fold(1u64, |acc, g| num_integer::lcm(acc, self.element_order(g) as u64))
    }

    pub fn conjugacy_classes(&self) -> &[ConjugacyClassInfo] {
        &self.classes
    }

    pub fn class_of(&self, g: Elem) -> usize {
        self.class_of[g]
    }

    pub fn class_size(&self, g: Elem) -> usize {
        self.classes[self.class_of[g]].members.len()
    }

    /// Least `f` with `f▷r = x`, where `r` represents the class of `x`.
    pub fn transporter(&self, x: Elem) -> Elem {
        self.transporter[x]
    }

    pub fn representative(&self, x: Elem) -> Elem {
        self.classes[self.class_of[x]].representative
    }

    /// Sorted element list of `C_G(g)`.
    pub fn centralizer(&self, g: Elem) -> &[Elem] {
        &self.centralizers[g]
    }

    pub fn is_abelian_subset(&self, elems: &[Elem]) -> Result<()> {
        for (i, &x) in elems.iter().enumerate() {
            for &y in &elems[i + 1..] {
                if !self.commute(x, y) {
                    return Err(Error::NotAbelian(x, y));
                }
            }
        }
        Ok(())
    }

    /// Sorted subgroup generated by `gens`.
    pub fn generated_subgroup(&self, gens: &[Elem]) -> Vec<Elem> {
        let mut inside = vec![false; self.order];
        inside[0] = true;
        let mut list = vec![0];
        let mut i = 0;
        while i < list.len() {
            let x = list[i];
            for &g in gens {
                let y = self.mul(x, g);
                if !inside[y] {
                    inside[y] = true;
                    list.push(y);
                }
            }
            i += 1;
        }
        list.sort_unstable();
        list
    }

    pub fn is_subgroup(&self, elems: &[Elem]) -> bool {
        let mut inside = vec![false; self.order];
        for &x in elems {
            if x >= self.order {
                return false;
            }
            inside[x] = true;
        }
        inside[0]
            && elems
                .iter()
                .all(|&x| inside[self.inv(x)] && elems.iter().all(|&y| inside[self.mul(x, y)]))
    }

    pub fn is_normal_subgroup(&self, elems: &[Elem]) -> bool {
        let mut inside = vec![false; self.order];
        for &x in elems {
            inside[x] = true;
        }
        self.is_subgroup(elems)
            && (0..self.order).all(|f| elems.iter().all(|&x| inside[self.conjugate(f, x)]))
    }
}

pub(crate) fn pow_mod(base: u64, exp: u64, m: u64) -> u64 {
    let mut result = 1 % m;
    let mut b = base % m;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    result
}

pub(crate) fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}
