//! Character tables of subgroups, their monomial representations, and the
//! projective characters attached to simple objects of the center.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use crate::cocycles::{abelian_generators, AlphaTable, OneCochain};
use crate::cyclotomic::{Cyclotomic, RootOfUnityExponent};
use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteGroup};

/// A matrix with exactly one root of unity per column: basis vector `j` is
/// sent to `scalar · e_target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMatrix {
    pub columns: Vec<(usize, RootOfUnityExponent)>,
}

impl MonomialMatrix {
    pub fn identity(dim: usize) -> Self {
        MonomialMatrix { columns: (0..dim).map(|j| (j, RootOfUnityExponent::one())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// `self · other`, i.e. apply `other` first.
    pub fn compose(&self, other: &MonomialMatrix) -> MonomialMatrix {
        let columns = other
            .columns
            .iter()
            .map(|(t, s)| {
                let (t2, s2) = &self.columns[*t];
                (*t2, s.mul(s2))
            })
            .collect();
        MonomialMatrix { columns }
    }

    pub fn scaled(&self, s: &RootOfUnityExponent) -> MonomialMatrix {
        MonomialMatrix { columns: self.columns.iter().map(|(t, x)| (*t, x.mul(s))).collect() }
    }

    pub fn trace(&self) -> Cyclotomic {
        self.columns
            .iter()
            .enumerate()
            .filter(|(j, (t, _))| j == t)
            .fold(Cyclotomic::zero(), |acc, (_, (_, s))| acc.add(&s.to_cyclotomic()))
    }

    fn same_as(&self, other: &MonomialMatrix) -> bool {
        self.columns.len() == other.columns.len()
            && self.columns.iter().zip(&other.columns).all(|((t, s), (t2, s2))| {
                let m = s.modulus.lcm(&s2.modulus);
                t == t2 && s.at_modulus(m) % m == s2.at_modulus(m) % m
            })
    }

    fn conductor(&self) -> u64 {
        self.columns.iter().fold(1, |acc, (_, s)| acc.lcm(&s.modulus))
    }
}

/// Rows of (possibly projective) irreducible characters of a subgroup `H`,
/// each given on every element of `H` in sorted order.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    subgroup: Vec<Elem>,
    rows: Vec<Vec<Cyclotomic>>,
    reps: Vec<Option<Vec<MonomialMatrix>>>,
    projective: bool,
}

impl CharacterTable {
    /// Validates a table. `reps[r]`, when present, gives a monomial matrix for
    /// every subgroup element. Projective tables skip the class-function and
    /// homomorphism checks, which depend on the 2-cocycle.
    pub fn new(
        group: &FiniteGroup,
        subgroup: Vec<Elem>,
        rows: Vec<Vec<Cyclotomic>>,
        reps: Vec<Option<Vec<MonomialMatrix>>>,
        projective: bool,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::CharacterTable(msg));
        let mut sorted = subgroup.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != subgroup || !group.is_subgroup(&subgroup) {
            return bad("subgroup must be a sorted list of the elements of a subgroup".into());
        }
        let h = subgroup.len();
        if reps.len() != rows.len() {
            return bad("reps must have one entry per row".into());
        }
        let mut degree_squares = 0u64;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != h {
                return bad(format!("row {r} has {} values, expected {h}", row.len()));
            }
            match row[0].as_integer().and_then(|d| d.to_u64()) {
                Some(d) if d > 0 => degree_squares += d * d,
                _ => return bad(format!("row {r} has degree {} at the identity", row[0])),
            }
        }
        if degree_squares != h as u64 {
            return bad(format!("squared degrees sum to {degree_squares}, expected {h}"));
        }
        let table = CharacterTable { subgroup, rows, reps, projective };
        let pos = |x: Elem| table.subgroup.binary_search(&x).unwrap();
        if !projective {
            for (r, row) in table.rows.iter().enumerate() {
                for &f in &table.subgroup {
                    for &c in &table.subgroup {
                        if row[pos(group.conjugate(f, c))] != row[pos(c)] {
                            return bad(format!("row {r} is not a class function at {c}"));
                        }
                    }
                }
            }
            let classes = count_classes(group, &table.subgroup);
            if table.rows.len() != classes {
                return bad(format!("{} rows for {classes} classes", table.rows.len()));
            }
        }
        let conj: Vec<Vec<Cyclotomic>> = table.rows.iter().map(|r| r.iter().map(Cyclotomic::conjugate).collect()).collect();
        for r in 0..table.rows.len() {
            for s in r..table.rows.len() {
                let mut acc = Cyclotomic::zero();
                for i in 0..h {
                    acc = acc.add(&table.rows[r][i].mul(&conj[s][i]));
                }
                let expected = Cyclotomic::from_integer(if r == s { h as i64 } else { 0 });
                if acc != expected {
                    return bad(format!("rows {r} and {s} are not orthonormal"));
                }
            }
        }
        for (r, rep) in table.reps.iter().enumerate() {
            let Some(rep) = rep else { continue };
            let d = table.degree(r) as usize;
            if rep.len() != h || rep.iter().any(|m| m.dim() != d || m.columns.iter().any(|(t, _)| *t >= d)) {
                return bad(format!("representation of row {r} has the wrong shape"));
            }
            for (i, m) in rep.iter().enumerate() {
                if m.trace() != table.rows[r][i] {
                    return bad(format!("representation of row {r} has the wrong trace at {}", table.subgroup[i]));
                }
            }
            if !projective {
                for (i, &x) in table.subgroup.iter().enumerate() {
                    for (j, &y) in table.subgroup.iter().enumerate() {
                        if !rep[i].compose(&rep[j]).same_as(&rep[pos(group.mul(x, y))]) {
                            return bad(format!("representation of row {r} is not a homomorphism at ({x}, {y})"));
                        }
                    }
                }
            }
        }
        Ok(table)
    }

    pub fn subgroup(&self) -> &[Elem] {
        &self.subgroup
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    pub fn row(&self, r: usize) -> &[Cyclotomic] {
        &self.rows[r]
    }

    pub fn value(&self, r: usize, x: Elem) -> &Cyclotomic {
        &self.rows[r][self.subgroup.binary_search(&x).expect("element outside the subgroup")]
    }

    pub fn degree(&self, r: usize) -> u64 {
        self.rows[r][0].as_integer().and_then(|d| d.to_u64()).unwrap()
    }

    /// Monomial matrices of row `r` on every subgroup element; degree-1 rows
    /// are read off their values.
    pub fn representation(&self, r: usize) -> Result<Vec<MonomialMatrix>> {
        if let Some(rep) = &self.reps[r] {
            return Ok(rep.clone());
        }
        if self.degree(r) != 1 {
            return Err(Error::UnsupportedRepresentation(format!("row {r} has degree {} and no matrices", self.degree(r))));
        }
        self.rows[r]
            .iter()
            .map(|v| {
                let (m, k) = v
                    .as_root_of_unity()
                    .ok_or_else(|| Error::UnsupportedRepresentation(format!("linear row {r} takes the non-root value {v}")))?;
                Ok(MonomialMatrix { columns: vec![(0, RootOfUnityExponent::new(m, k as i64))] })
            })
            .collect()
    }

    pub fn has_representation(&self, r: usize) -> bool {
        self.reps[r].is_some() || self.degree(r) == 1
    }

    /// Least common multiple of the conductors of all values and matrices.
    pub fn conductor(&self) -> u64 {
        let values = self.rows.iter().flatten().fold(1u64, |acc, v| acc.lcm(&v.conductor()));
        self.reps.iter().flatten().flatten().fold(values, |acc, m| acc.lcm(&m.conductor()))
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cyclotomic::to_json).collect())).collect();
        let mut out = json!({ "subgroup": self.subgroup, "rows": rows });
        if self.reps.iter().any(Option::is_some) {
            let reps: Vec<Value> = self
                .reps
                .iter()
                .map(|rep| match rep {
                    None => Value::Null,
                    Some(ms) => Value::Array(
                        ms.iter()
                            .map(|m| Value::Array(m.columns.iter().map(|(t, s)| json!([t, s.value, s.modulus])).collect()))
                            .collect(),
                    ),
                })
                .collect();
            out["reps"] = Value::Array(reps);
        }
        if self.projective {
            out["projective"] = Value::Bool(true);
        }
        out
    }

    /// Accepts one table object or `{"tables": [...]}`.
    pub fn load_all(group: &FiniteGroup, text: &str) -> Result<Vec<CharacterTable>> {
        let v: Value = serde_json::from_str(text)?;
        match v.get("tables") {
            Some(Value::Array(ts)) => ts.iter().map(|t| Self::from_json_value(group, t)).collect(),
            Some(_) => Err(Error::Schema("tables must be an array".into())),
            None => Ok(vec![Self::from_json_value(group, &v)?]),
        }
    }

    pub fn from_json_value(group: &FiniteGroup, v: &Value) -> Result<Self> {
        let schema = |m: &str| Error::Schema(format!("character table: {m}"));
        let subgroup = v
            .get("subgroup")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("missing subgroup"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as Elem).ok_or_else(|| schema("subgroup entries must be indices")))
            .collect::<Result<Vec<_>>>()?;
        if subgroup.iter().any(|&x| x >= group.order()) {
            return Err(schema("subgroup index out of range"));
        }
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| schema("missing rows"))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| schema("rows must be arrays"))?
                    .iter()
                    .map(|c| match c {
                        Value::String(s) => Cyclotomic::parse(s),
                        other => Cyclotomic::from_json(other),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let reps = match v.get("reps") {
            None | Some(Value::Null) => vec![None; rows.len()],
            Some(Value::Array(rs)) => rs.iter().map(parse_rep).collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(schema("reps must be an array")),
        };
        let projective = v.get("projective").and_then(Value::as_bool).unwrap_or(false);
        Self::new(group, subgroup, rows, reps, projective)
    }
}

fn parse_rep(v: &Value) -> Result<Option<Vec<MonomialMatrix>>> {
    let schema = |m: &str| Error::Schema(format!("representation: {m}"));
    let Some(ms) = v.as_array() else {
        return if v.is_null() { Ok(None) } else { Err(schema("expected null or an array of matrices")) };
    };
    ms.iter()
        .map(|m| {
            let columns = m
                .as_array()
                .ok_or_else(|| schema("matrix must be an array of columns"))?
                .iter()
                .map(|c| {
                    let c = c.as_array().filter(|c| c.len() == 3).ok_or_else(|| schema("column must be [target, k, N]"))?;
                    let t = c[0].as_u64().ok_or_else(|| schema("target must be an index"))? as usize;
                    let k = c[1].as_i64().ok_or_else(|| schema("k must be an integer"))?;
                    let n = c[2].as_u64().filter(|&n| n > 0).ok_or_else(|| schema("N must be positive"))?;
                    Ok((t, RootOfUnityExponent::new(n, k)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MonomialMatrix { columns })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn count_classes(group: &FiniteGroup, subgroup: &[Elem]) -> usize {
    let mut seen = vec![false; group.order()];
    let mut count = 0;
    for &x in subgroup {
        if seen[x] {
            continue;
        }
        count += 1;
        for &f in subgroup {
            seen[group.conjugate(f, x)] = true;
        }
    }
    count
}

/// Characters of an abelian subgroup. With greedy generators `g_1, g_2, ...`
/// (see [`abelian_generators`]) each row is fixed by exponents `t_i` with
/// `χ(g_i) = ζ_E^{t_i}`, `E` the subgroup exponent; rows are listed in
/// lexicographic order of `(t_1, t_2, ...)`.
pub fn abelian_character_table(group: &FiniteGroup, subgroup: &[Elem]) -> Result<CharacterTable> {
    group.is_abelian_subset(subgroup)?;
    if !group.is_subgroup(subgroup) {
        return Err(Error::CharacterTable("not a subgroup".into()));
    }
    let mut subgroup = subgroup.to_vec();
    subgroup.sort_unstable();
    let gens = abelian_generators(group, &subgroup);
    let exp = subgroup.iter().fold(1u64, |acc, &x| acc.lcm(&(group.element_order(x) as u64)));
    // each element as a product of generator powers, and the relation g_i^{m_i} = (word in earlier generators)
    let n = group.order();
    let mut coords: Vec<Option<Vec<u64>>> = vec![None; n];
    coords[0] = Some(vec![0; gens.len()]);
    let mut known = vec![0usize];
    let mut relations: Vec<(u64, Vec<u64>)> = Vec::new();
    for (i, &g) in gens.iter().enumerate() {
        let mut m = 1u64;
        let mut cur = g;
        while coords[cur].is_none() {
            m += 1;
            cur = group.mul(cur, g);
        }
        relations.push((m, coords[cur].clone().unwrap()));
        let mut next = known.clone();
        let mut power = 0usize;
        for j in 1..m {
            power = group.mul(power, g);
            for &k in &known {
                let x = group.mul(k, power);
                let mut c = coords[k].clone().unwrap();
                c[i] = j;
                coords[x] = Some(c);
                next.push(x);
            }
        }
        known = next;
    }
    let mut assignments: Vec<Vec<u64>> = vec![Vec::new()];
    for (m, rel) in &relations {
        let mut grown = Vec::new();
        for a in &assignments {
            let target = rel.iter().zip(a).map(|(c, t)| c * t).sum::<u64>() % exp;
            for t in 0..exp {
                if (m * t) % exp == target {
                    let mut b = a.clone();
                    b.push(t);
                    grown.push(b);
                }
            }
        }
        assignments = grown;
    }
    let rows = assignments
        .iter()
        .map(|t| {
            subgroup
                .iter()
                .map(|&x| {
                    let c = coords[x].as_ref().unwrap();
                    let k = c.iter().zip(t).map(|(a, b)| a * b).sum::<u64>() % exp;
                    Cyclotomic::root_of_unity(exp, k as i64)
                })
                .collect()
        })
        .collect::<Vec<Vec<_>>>();
    let reps = vec![None; rows.len()];
    CharacterTable::new(group, subgroup, rows, reps, false)
}

/// Irreducible characters of `Z/q ⋊ Z/p`: first the `p` linear characters
/// `a^l b^k ↦ ζ_p^{rk}`, then the `(q-1)/p` induced characters of degree `p`,
/// one for each coset of `<n>` in `(Z/q)^×`, taken by least representative.
/// The induced rows carry monomial matrices on the basis `e_m = b^m ⊗ v`.
pub fn pq_character_table(group: &FiniteGroup) -> Result<CharacterTable> {
    let pq = group
        .pq_params()
        .ok_or_else(|| Error::CharacterTable("group was not built by pq_group".into()))?;
    let (p, q, n) = (pq.p, pq.q, pq.n);
    let elems: Vec<Elem> = (0..group.order()).collect();
    let mut rows = Vec::new();
    let mut reps = Vec::new();
    for r in 0..p {
        rows.push(elems.iter().map(|&x| Cyclotomic::root_of_unity(p, (r * pq.coords(x).1) as i64)).collect());
        reps.push(None);
    }
    let powers_of_n: Vec<u64> = (0..p).map(|m| crate::groups::pow_mod(n, m, q)).collect();
    let n_inv = crate::groups::pow_mod(n, p - 1, q);
    let mut covered = vec![false; q as usize];
    for s in 1..q {
        if covered[s as usize] {
            continue;
        }
        for &nm in &powers_of_n {
            covered[(s * nm % q) as usize] = true;
        }
        let row = elems
            .iter()
            .map(|&x| {
                let (l, k) = pq.coords(x);
                if k != 0 {
                    Cyclotomic::zero()
                } else {
                    Cyclotomic::from_terms(q, powers_of_n.iter().map(|nm| ((s * nm % q * l % q) as i64, One::one())))
                }
            })
            .collect();
        // a^l b^k e_m = ζ_q^{s l n^{-(m+k)}} e_{m+k}
        let rep = elems
            .iter()
            .map(|&x| {
                let (l, k) = pq.coords(x);
                let columns = (0..p)
                    .map(|m| {
                        let t = (m + k) % p;
                        let e = s * l % q * crate::groups::pow_mod(n_inv, t, q) % q;
                        (t as usize, RootOfUnityExponent::new(q, e as i64))
                    })
                    .collect();
                MonomialMatrix { columns }
            })
            .collect();
        rows.push(row);
        reps.push(Some(rep));
    }
    CharacterTable::new(group, elems, rows, reps, false)
}

/// `χ̃ = χ · ζ_{e'}^{μ}` on the centralizer of a class representative.
#[derive(Clone, Debug)]
pub struct ProjectiveCharacter {
    base: Elem,
    domain: Vec<Elem>,
    values: Vec<Cyclotomic>,
    twist: OneCochain,
    degree: u64,
}

impl ProjectiveCharacter {
    pub fn new(base: Elem, table: &CharacterTable, row: usize, twist: OneCochain) -> Result<Self> {
        if twist.domain() != table.subgroup() {
            return Err(Error::Precondition("cochain and table live on different subgroups".into()));
        }
        let values = table
            .subgroup()
            .iter()
            .zip(table.row(row))
            .map(|(&c, v)| v.mul(&Cyclotomic::root_of_unity(twist.modulus(), twist.get(c) as i64)))
            .collect();
        Ok(ProjectiveCharacter { base, domain: table.subgroup().to_vec(), values, twist, degree: table.degree(row) })
    }

    pub fn base(&self) -> Elem {
        self.base
    }

    pub fn domain(&self) -> &[Elem] {
        &self.domain
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn twist(&self) -> &OneCochain {
        &self.twist
    }

    pub fn value(&self, c: Elem) -> Result<&Cyclotomic> {
        self.domain
            .binary_search(&c)
            .map(|i| &self.values[i])
            .map_err(|_| Error::Precondition(format!("{c} is not in the centralizer of {}", self.base)))
    }

    pub fn values(&self) -> &[Cyclotomic] {
        &self.values
    }
}

/// Exponent (at the cocycle modulus) and evaluation point of the conjugated
/// character: `χ^{(x)}(c) = ζ^{α_g(c,f) - α_g(f, f⁻¹▷c)} χ(f⁻¹▷c)` with `f▷g = x`.
pub fn conjugation_data(group: &FiniteGroup, alpha: &AlphaTable, g: Elem, f: Elem, c: Elem) -> (u64, Elem) {
    let e = alpha.modulus();
    let fi = group.inv(f);
    let d = group.conjugate(fi, c);
    ((alpha.get(g, c, f) + e - alpha.get(g, f, d)) % e, d)
}

/// The conjugated character `χ^{(x)}(c)` using the least `f` with `f▷g = x`.
pub fn conjugated_character(
    group: &FiniteGroup,
    alpha: &AlphaTable,
    chi: &ProjectiveCharacter,
    x: Elem,
    c: Elem,
) -> Result<Cyclotomic> {
    let g = chi.base();
    if group.class_of(x) != group.class_of(g) || group.representative(x) != g {
        return Err(Error::Precondition(format!("{x} is not conjugate to the representative {g}")));
    }
    conjugated_character_via(group, alpha, chi, group.transporter(x), c)
}

/// As [`conjugated_character`] but with an explicit `f` satisfying `f▷g = x`.
pub fn conjugated_character_via(
    group: &FiniteGroup,
    alpha: &AlphaTable,
    chi: &ProjectiveCharacter,
    f: Elem,
    c: Elem,
) -> Result<Cyclotomic> {
    let x = group.conjugate(f, chi.base());
    if !group.commute(x, c) {
        return Err(Error::Precondition(format!("{c} is not in the centralizer of {x}")));
    }
    let (k, d) = conjugation_data(group, alpha, chi.base(), f, c);
    Ok(chi.value(d)?.mul(&Cyclotomic::root_of_unity(alpha.modulus(), k as i64)))
}

/// Shared handle for character tables keyed by subgroup.
#[derive(Clone, Debug, Default)]
pub struct CharacterLibrary {
    tables: Vec<Arc<CharacterTable>>,
}

impl CharacterLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, table: CharacterTable) {
        self.tables.push(Arc::new(table));
    }

    pub fn extend(&mut self, tables: impl IntoIterator<Item = CharacterTable>) {
        tables.into_iter().for_each(|t| self.add(t));
    }

    pub fn find(&self, subgroup: &[Elem]) -> Option<&Arc<CharacterTable>> {
        self.tables.iter().find(|t| t.subgroup() == subgroup)
    }
}
