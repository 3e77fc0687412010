//! Closed forms for the twisted doubles of `Z/q ⋊ Z/p` and the end-to-end
//! check that `(T, B)` separates the `p` cocycle twists while `(S, T)` does not.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::center::{Category, FillOptions, InvariantBundle, Tensor3, TensorMode};
use crate::cocycles::ThreeCocycle;
use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};
use crate::groups::{is_prime, pow_mod, Elem, FiniteGroup};
use crate::matcher::{match_bundles, InvariantSet};
use crate::reps::CharacterLibrary;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PqCategorySpec {
    pub p: u64,
    pub q: u64,
    pub u: u64,
    pub n: u64,
}

impl PqCategorySpec {
    pub fn new(p: u64, q: u64, u: u64) -> Result<Self> {
        if p % 2 == 0 || q % 2 == 0 || !is_prime(p) || !is_prime(q) || (q - 1) % p != 0 {
            return Err(Error::Parameter(format!("need odd primes p | q-1, got p={p}, q={q}")));
        }
        if u >= p {
            return Err(Error::Parameter(format!("u={u} must lie in 0..{p}")));
        }
        let n = (2..q).find(|&n| pow_mod(n, p, q) == 1).expect("a unit of order p exists when p | q-1");
        Ok(PqCategorySpec { p, q, u, n })
    }

    pub fn group(&self) -> Result<Arc<FiniteGroup>> {
        Ok(Arc::new(FiniteGroup::pq_group(self.p, self.q)?))
    }

    pub fn category(&self) -> Result<Category> {
        let g = self.group()?;
        Category::new(g.clone(), ThreeCocycle::pq_cocycle(g, self.u)?, &CharacterLibrary::new())
    }

    fn n_inverse(&self) -> u64 {
        pow_mod(self.n, self.p - 1, self.q)
    }

    /// `t` with `2t ≡ k (mod p)`.
    pub fn half(&self, k: u64) -> u64 {
        k % self.p * (self.p + 1) / 2 % self.p
    }

    /// Least representatives of the cosets of `⟨n⟩` in `(Z/q)^×`.
    pub fn coset_representatives(&self) -> Vec<u64> {
        let mut covered = vec![false; self.q as usize];
        let mut reps = Vec::new();
        for l in 1..self.q {
            if !covered[l as usize] {
                reps.push(l);
                for m in 0..self.p {
                    covered[(l * pow_mod(self.n, m, self.q) % self.q) as usize] = true;
                }
            }
        }
        reps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PqFamily {
    /// `(1, χ)`: the first `p` characters are linear (`b ↦ ζ_p^r`), the rest
    /// are induced from `a ↦ ζ_q^s` for a coset representative `s`.
    Unit { character: usize },
    /// `(a^l, χ_q^s)`.
    AClass { l: u64, s: u64 },
    /// `(b^k, χ̃_p^r)`.
    BClass { k: u64, r: u64 },
}

#[derive(Clone, Debug)]
pub struct PqSimple {
    pub family: PqFamily,
    pub representative: Elem,
    /// Projective character values on the sorted centralizer.
    pub values: Vec<Cyclotomic>,
}

/// The three families of simples with their characters in closed form.
pub fn pq_simples(spec: &PqCategorySpec) -> Vec<PqSimple> {
    let PqCategorySpec { p, q, u, n } = *spec;
    let elem = |l: u64, k: u64| (l * p + k) as Elem;
    let mut out = Vec::new();
    for r in 0..p {
        let values = (0..p * q).map(|x| Cyclotomic::root_of_unity(p, (r * (x % p)) as i64)).collect();
        out.push(PqSimple { family: PqFamily::Unit { character: r as usize }, representative: 0, values });
    }
    for (i, s) in spec.coset_representatives().into_iter().enumerate() {
        let values = (0..p * q)
            .map(|x| {
                let (l, k) = (x / p, x % p);
                if k != 0 {
                    Cyclotomic::zero()
                } else {
                    Cyclotomic::from_terms(q, (0..p).map(|m| ((s * l % q * pow_mod(n, m, q) % q) as i64, BigRational::one())))
                }
            })
            .collect();
        out.push(PqSimple { family: PqFamily::Unit { character: p as usize + i }, representative: 0, values });
    }
    for l in spec.coset_representatives() {
        for s in 0..q {
            let values = (0..q).map(|m| Cyclotomic::root_of_unity(q, (s * m) as i64)).collect();
            out.push(PqSimple { family: PqFamily::AClass { l, s }, representative: elem(l, 0), values });
        }
    }
    for k in 1..p {
        for r in 0..p {
            // χ_p^r · μ with μ(b^j) = ζ_{p²}^{u k j}
            let values = (0..p).map(|j| Cyclotomic::root_of_unity(p * p, (p * r * j + u * k * j) as i64)).collect();
            out.push(PqSimple { family: PqFamily::BClass { k, r }, representative: elem(0, k), values });
        }
    }
    out
}

/// Position of every closed-form simple in the category's enumeration,
/// matched by representative and character values; errors unless this is a
/// bijection.
pub fn match_simples(cat: &Category, simples: &[PqSimple]) -> Result<Vec<usize>> {
    if simples.len() != cat.len() {
        return Err(Error::InternalConsistency(format!("{} closed-form simples, {} enumerated", simples.len(), cat.len())));
    }
    let mut used = vec![false; cat.len()];
    simples
        .iter()
        .map(|s| {
            let hits: Vec<usize> = (0..cat.len())
                .filter(|&i| {
                    let c = &cat.simples()[i];
                    c.representative == s.representative && c.chi.values() == s.values.as_slice()
                })
                .collect();
            match hits.as_slice() {
                [i] if !std::mem::replace(&mut used[*i], true) => Ok(*i),
                _ => Err(Error::InternalConsistency(format!("{:?} matches {} enumerated simples", s.family, hits.len()))),
            }
        })
        .collect()
}

/// `T` of a closed-form simple.
pub fn pq_t_closed_form(spec: &PqCategorySpec, simple: &PqSimple) -> Cyclotomic {
    let PqCategorySpec { p, q, u, .. } = *spec;
    match simple.family {
        PqFamily::Unit { .. } => Cyclotomic::one(),
        PqFamily::AClass { l, s } => Cyclotomic::root_of_unity(q, (s * l % q) as i64),
        PqFamily::BClass { k, r } => Cyclotomic::root_of_unity(p * p, (p * k * r + k * k * u) as i64),
    }
}

/// `B_{(a^l,χ_q^s),(a^l,χ_q^s),(b^k,χ_p^r)} = pq Σ_m ζ_q^{sl(n^{-t}-n^t)(n^m-n^{-m})}`, `2t ≡ k`.
pub fn pq_b_closed_form(spec: &PqCategorySpec, l: u64, s: u64, k: u64, _r: u64) -> Result<Cyclotomic> {
    let PqCategorySpec { p, q, n, .. } = *spec;
    if k % p == 0 {
        return Err(Error::Parameter("k must be a unit mod p".into()));
    }
    let t = spec.half(k);
    let ninv = spec.n_inverse();
    let diff = |m: u64| (pow_mod(n, m, q) + q - pow_mod(ninv, m, q)) % q;
    let coeff = s % q * (l % q) % q * ((q - diff(t)) % q) % q;
    let terms = (0..p).map(|m| ((coeff * diff(m) % q) as i64, BigRational::from_integer((p * q).into())));
    Ok(Cyclotomic::from_terms(q, terms))
}

#[derive(Clone, Debug)]
pub struct ProofSupport {
    /// `{n^m - n^{-m} : 0 ≤ m < p}` in `Z/q`.
    pub differences: Vec<u64>,
    pub distinct: bool,
    /// `(t, Σ_{x ∈ M_t} x², -2p(n^t - n^{-t})²)` in `Z/q`.
    pub square_sums: Vec<(u64, u64, u64)>,
}

impl ProofSupport {
    pub fn ok(&self) -> bool {
        self.distinct && self.square_sums.iter().all(|&(_, a, b)| a == b)
    }
}

pub fn proof_support_checks(p: u64, q: u64) -> Result<ProofSupport> {
    let spec = PqCategorySpec::new(p, q, 0)?;
    let (n, ninv) = (spec.n, spec.n_inverse());
    let diff = |m: u64| (pow_mod(n, m, q) + q - pow_mod(ninv, m, q)) % q;
    let differences: Vec<u64> = (0..p).map(diff).collect();
    let mut sorted = differences.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let distinct = sorted.len() == p as usize;
    let square_sums = (1..=(p - 1) / 2)
        .map(|t| {
            let dt = diff(t);
            let lhs = (0..p).map(|m| (dt * diff(m) % q).pow(2) % q).sum::<u64>() % q;
            let rhs = (q - 2 * p % q * (dt * dt % q) % q) % q;
            (t, lhs, rhs)
        })
        .collect();
    Ok(ProofSupport { differences, distinct, square_sums })
}

#[derive(Clone, Copy, Debug)]
pub struct TheoremOptions {
    /// Restrict `B` to the entries the uniqueness argument consumes.
    pub fast: bool,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub p: u64,
    pub q: u64,
    pub invariants: InvariantSet,
    pub fast: bool,
    pub matches: Vec<Vec<bool>>,
    pub classes: Vec<Vec<u64>>,
}

impl TheoremReport {
    pub fn is_identity(&self) -> bool {
        self.matches.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &m)| m == (i == j)))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "q": self.q,
            "invariants": self.invariants.to_string(),
            "fast": self.fast,
            "matches": self.matches,
            "classes": self.classes,
        })
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p={} q={} invariants={}{}", self.p, self.q, self.invariants, if self.fast { " (fast)" } else { "" })?;
        for row in &self.matches {
            let cells: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "." }).collect();
            writeln!(f, "  {}", cells.join(" "))?;
        }
        let classes: Vec<String> = self
            .classes
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(u64::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "classes: {}", classes.join(" "))
    }
}

/// Multiplicative order of a root of unity, if `x` is one.
fn root_order(x: &Cyclotomic) -> Option<u64> {
    x.as_root_of_unity().map(|(m, _)| m)
}

/// Bundle with `T` and a masked `B`: indices are those whose `T` has order
/// `q` or `p²`, and only entries `(i, j, k)` with `T_i, T_j` of order `q` and
/// `T_k` of order `p²` are kept; all others are zero. A relabeling that
/// preserves the full `T` and `B` preserves these sets and hence the mask.
pub fn fast_bundle(spec: &PqCategorySpec, cat: &Category) -> Result<InvariantBundle> {
    let (p, q) = (spec.p, spec.q);
    let t = cat.t_matrix();
    let orders: Vec<Option<u64>> = t.iter().map(root_order).collect();
    let keep: Vec<usize> = (0..cat.len()).filter(|&i| orders[i] == Some(q) || orders[i] == Some(p * p)).collect();
    let inflation = cat.find_inflation_subgroup();
    let m = keep.len();
    let entries: Vec<Vec<Cyclotomic>> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut row = Vec::with_capacity(m * m);
            for bb in 0..m {
                for c in 0..m {
                    let (i, j, k) = (keep[a], keep[bb], keep[c]);
                    let wanted = orders[i] == Some(q) && orders[j] == Some(q) && orders[k] == Some(p * p);
                    row.push(if wanted { cat.b_entry(i, j, k, inflation.as_ref())? } else { Cyclotomic::zero() });
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let b = Tensor3::from_fn(m, |a, bb, c| entries[a][bb * m + c].clone());
    Ok(InvariantBundle {
        simples: keep.iter().map(|&i| cat.simples()[i].label()).collect(),
        dims: keep.iter().map(|&i| cat.dims()[i]).collect(),
        t: keep.iter().map(|&i| t[i].clone()).collect(),
        s: None,
        b: Some(b),
    })
}

fn theorem_bundle(spec: &PqCategorySpec, which: InvariantSet, options: TheoremOptions) -> Result<InvariantBundle> {
    let cat = spec.category()?;
    if which.b && options.fast {
        return fast_bundle(spec, &cat);
    }
    let b = if which.b {
        Some(cat.b_tensor(FillOptions { mode: TensorMode::Auto, cyclic: true, jobs: options.jobs })?)
    } else {
        None
    };
    Ok(cat.bundle(which.s, b))
}

/// Pairwise matching of the `p` categories `u = 0..p`.
pub fn verify_theorem(p: u64, q: u64, which: InvariantSet, options: TheoremOptions) -> Result<TheoremReport> {
    let specs = (0..p).map(|u| PqCategorySpec::new(p, q, u)).collect::<Result<Vec<_>>>()?;
    let run = || -> Result<TheoremReport> {
        let bundles = specs.iter().map(|s| theorem_bundle(s, which, options)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..p as usize).flat_map(|i| (0..p as usize).map(move |j| (i, j))).collect();
        let found = pairs
            .par_iter()
            .map(|&(i, j)| {
                // masked bundles of different sizes already differ in T
                if bundles[i].len() != bundles[j].len() {
                    return Ok(false);
                }
                Ok(match_bundles(&bundles[i], &bundles[j], which)?.found())
            })
            .collect::<Result<Vec<bool>>>()?;
        let matches: Vec<Vec<bool>> = found.chunks(p as usize).map(<[bool]>::to_vec).collect();
        let mut classes: Vec<Vec<u64>> = Vec::new();
        for u in 0..p as usize {
            match classes.iter_mut().find(|c| matches[c[0] as usize][u]) {
                Some(c) => c.push(u as u64),
                None => classes.push(vec![u as u64]),
            }
        }
        for c in &classes {
            for &x in c {
                for &y in c {
                    if !matches[x as usize][y as usize] {
                        return Err(Error::InternalConsistency(format!("matching is not transitive on {c:?}")));
                    }
                }
            }
        }
        Ok(TheoremReport { p, q, invariants: which, fast: options.fast, matches, classes })
    };
    match options.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parameters() {
        assert_eq!(PqCategorySpec::new(3, 7, 0).unwrap().n, 2);
        assert_eq!(PqCategorySpec::new(5, 11, 4).unwrap().n, 3);
        assert!(PqCategorySpec::new(3, 5, 0).is_err());
        assert!(PqCategorySpec::new(3, 7, 3).is_err());
        let s = PqCategorySpec::new(5, 11, 0).unwrap();
        for k in 1..5 {
            assert_eq!(2 * s.half(k) % 5, k);
        }
    }

    #[test]
    fn family_counts() {
        for (p, q, total) in [(3, 7, 25), (5, 11, 49)] {
            let spec = PqCategorySpec::new(p, q, 1).unwrap();
            let simples = pq_simples(&spec);
            assert_eq!(simples.len(), total);
            let second = simples.iter().filter(|s| matches!(s.family, PqFamily::AClass { .. })).count();
            assert_eq!(second as u64, (q - 1) / p * q);
        }
    }

    #[test]
    fn closed_form_simples_match_enumeration() {
        for (p, q) in [(3, 7), (5, 11)] {
            for u in 0..p {
                let spec = PqCategorySpec::new(p, q, u).unwrap();
                let cat = spec.category().unwrap();
                let simples = pq_simples(&spec);
                let pos = match_simples(&cat, &simples).unwrap();
                let t = cat.t_matrix();
                for (s, &i) in simples.iter().zip(&pos) {
                    assert_eq!(pq_t_closed_form(&spec, s), t[i], "{:?}", s.family);
                    if let PqFamily::BClass { k, .. } = s.family {
                        assert_eq!(t[i].pow(p as u32), Cyclotomic::root_of_unity(p, (k * k * u) as i64));
                    }
                }
            }
        }
    }

    #[test]
    fn b_closed_form_example() {
        let spec = PqCategorySpec::new(3, 7, 1).unwrap();
        let v = pq_b_closed_form(&spec, 1, 1, 2, 0).unwrap();
        let expected = Cyclotomic::from_terms(7, [0i64, 3, 4].map(|e| (e, BigRational::from_integer(21.into()))));
        assert_eq!(v, expected);
        assert_eq!(pq_b_closed_form(&spec, 1, 0, 1, 0).unwrap(), Cyclotomic::from_integer(63));
        assert!(pq_b_closed_form(&spec, 1, 1, 3, 0).is_err());
    }

    #[test]
    fn b_closed_form_is_symmetric_in_t() {
        let spec = PqCategorySpec::new(5, 11, 2).unwrap();
        for k in 1..5 {
            let t = spec.half(k);
            let minus = spec.half(5 - k);
            assert_eq!((t + minus) % 5, 0);
            assert_eq!(pq_b_closed_form(&spec, 1, 3, k, 0).unwrap(), pq_b_closed_form(&spec, 1, 3, 5 - k, 2).unwrap());
        }
    }

    #[test]
    fn b_closed_form_matches_general_at_order_21() {
        for u in 0..3 {
            let spec = PqCategorySpec::new(3, 7, u).unwrap();
            let cat = spec.category().unwrap();
            let simples = pq_simples(&spec);
            let pos = match_simples(&cat, &simples).unwrap();
            for (x, &i) in simples.iter().zip(&pos) {
                let PqFamily::AClass { l, s } = x.family else { continue };
                for (y, &k) in simples.iter().zip(&pos) {
                    let PqFamily::BClass { k: kk, r } = y.family else { continue };
                    let closed = pq_b_closed_form(&spec, l, s, kk, r).unwrap();
                    assert_eq!(closed, cat.b_entry_general(i, i, k).unwrap(), "u={u} l={l} s={s} k={kk} r={r}");
                }
            }
        }
    }

    #[test]
    fn proof_support() {
        let r = proof_support_checks(3, 7).unwrap();
        let mut d = r.differences.clone();
        d.sort_unstable();
        assert_eq!(d, vec![0, 2, 5]);
        // unscaled: 0 + 25 + 4 = 29 ≡ 1 ≡ -2p (mod 7)
        assert_eq!(r.differences.iter().map(|x| x * x).sum::<u64>(), 29);
        assert_eq!(29 % 7, (7 * 7 - 6) % 7);
        assert_eq!(r.square_sums, vec![(1, 4, 4)]);
        assert!(r.ok());
        assert!(proof_support_checks(5, 11).unwrap().ok());
    }

    #[test]
    fn theorem_at_order_21() {
        let fast = TheoremOptions { fast: true, jobs: None };
        let r = verify_theorem(3, 7, InvariantSet::TB, fast).unwrap();
        assert!(r.is_identity(), "{r}");
        let full = TheoremOptions { fast: false, jobs: None };
        let r = verify_theorem(3, 7, InvariantSet::TB, full).unwrap();
        assert!(r.is_identity(), "{r}");
        let r = verify_theorem(3, 7, InvariantSet::ST, full).unwrap();
        // three twists, three distinct modular data at p = 3
        assert_eq!(r.classes, vec![vec![0], vec![1], vec![2]], "{r}");
    }
}
