//! Equality of invariant bundles up to a simultaneous relabeling of simples.
//!
//! Indices are first split into blocks by a relabeling-invariant fingerprint,
//! then assigned one at a time in a round-robin order across blocks. A partial
//! assignment is extended only if it preserves every requested invariant on
//! the indices assigned so far; on a dead end the search jumps back to the
//! deepest level involved in a violation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::center::InvariantBundle;
use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};

/// Which invariants must be preserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct InvariantSet {
    pub t: bool,
    pub s: bool,
    pub b: bool,
}

impl InvariantSet {
    pub const ST: InvariantSet = InvariantSet { t: true, s: true, b: false };
    pub const TB: InvariantSet = InvariantSet { t: true, s: false, b: true };
}

impl FromStr for InvariantSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = InvariantSet::default();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "T" => out.t = true,
                "S" => out.s = true,
                "B" => out.b = true,
                _ => return Err(Error::Parameter(format!("unknown invariant {tok:?}; expected T, S or B"))),
            }
        }
        if out == InvariantSet::default() {
            return Err(Error::Parameter("no invariants requested".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for InvariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.t, "T"), (self.s, "S"), (self.b, "B")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&names.join(","))
    }
}

/// First coordinate at which a relabeling fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Dim(usize),
    T(usize),
    S(usize, usize),
    B(usize, usize, usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dim(i) => write!(f, "dim at {i}"),
            Violation::T(i) => write!(f, "T at {i}"),
            Violation::S(i, j) => write!(f, "S at ({i}, {j})"),
            Violation::B(i, j, k) => write!(f, "B at ({i}, {j}, {k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Some fingerprint occurs a different number of times in the two bundles.
    FingerprintMismatch { fingerprint: usize, left: usize, right: usize },
    /// Fingerprints agree as multisets but the induced block sizes do not.
    BlockStructure,
    /// Every block-respecting assignment was ruled out.
    Exhausted { nodes: u64 },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::FingerprintMismatch { fingerprint, left, right } => {
                write!(f, "fingerprint mismatch: class {fingerprint} has {left} indices on the left and {right} on the right")
            }
            Certificate::BlockStructure => f.write_str("block structure mismatch"),
            Certificate::Exhausted { nodes } => write!(f, "search exhausted after {nodes} nodes"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    /// `permutation[i]` is the right-hand index matched to left index `i`.
    pub permutation: Option<Vec<usize>>,
    pub certificate: Option<Certificate>,
}

impl MatchResult {
    pub fn found(&self) -> bool {
        self.permutation.is_some()
    }

    pub fn to_json(&self) -> Value {
        match (&self.permutation, &self.certificate) {
            (Some(p), _) => json!({ "found": true, "permutation": p }),
            (None, Some(c)) => json!({ "found": false, "certificate": c.to_string() }),
            (None, None) => json!({ "found": false }),
        }
    }
}

/// Per-index fingerprints and the blocks of indices sharing one.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    /// Block id of every index; blocks are numbered in fingerprint order.
    pub labels: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

/// Both bundles rewritten over a shared palette of value ids.
struct Interned {
    n: usize,
    dims: [Vec<u64>; 2],
    t: [Vec<u32>; 2],
    s: Option<[Vec<u32>; 2]>,
    b: Option<[Vec<u32>; 2]>,
}

#[derive(Default)]
struct Interner {
    conductor: u64,
    ids: HashMap<Vec<(u64, BigRational)>, u32>,
}

impl Interner {
    fn new(values: &[&Cyclotomic]) -> Self {
        let conductor = values.iter().fold(1u64, |acc, v| acc.lcm(&v.conductor()));
        Interner { conductor, ids: HashMap::new() }
    }

    fn id(&mut self, v: &Cyclotomic) -> u32 {
        let key = v.lift(self.conductor).terms().to_vec();
        let next = self.ids.len() as u32;
        *self.ids.entry(key).or_insert(next)
    }
}

fn require(bundle: &InvariantBundle, which: InvariantSet) -> Result<()> {
    if which.s && bundle.s.is_none() {
        return Err(Error::MissingInvariant("S"));
    }
    if which.b && bundle.b.is_none() {
        return Err(Error::MissingInvariant("B"));
    }
    Ok(())
}

fn intern(a: &InvariantBundle, b: &InvariantBundle, which: InvariantSet) -> Result<Interned> {
    require(a, which)?;
    require(b, which)?;
    if a.len() != b.len() {
        return Err(Error::Incompatible(format!("{} simples against {}", a.len(), b.len())));
    }
    let n = a.len();
    let mut all: Vec<&Cyclotomic> = a.t.iter().chain(&b.t).collect();
    if which.s {
        for x in [a, b] {
            all.extend(x.s.as_ref().unwrap().iter().flatten());
        }
    }
    if which.b {
        for x in [a, b] {
            all.extend(x.b.as_ref().unwrap().palette());
        }
    }
    let mut interner = Interner::new(&all);
    let t = [a, b].map(|x| x.t.iter().map(|v| interner.id(v)).collect());
    let s = which.s.then(|| [a, b].map(|x| x.s.as_ref().unwrap().iter().flatten().map(|v| interner.id(v)).collect()));
    let bt = which.b.then(|| {
        [a, b].map(|x| {
            let tensor = x.b.as_ref().unwrap();
            let palette: Vec<u32> = tensor.palette().iter().map(|v| interner.id(v)).collect();
            let mut ids = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        ids.push(palette[tensor.id(i, j, k) as usize]);
                    }
                }
            }
            ids
        })
    });
    Ok(Interned { n, dims: [a.dims.clone(), b.dims.clone()], t, s, b: bt })
}

type Fingerprint = (u32, u64, Vec<u32>, Vec<u32>);

impl Interned {
    fn fingerprints(&self, side: usize, which: InvariantSet) -> Vec<Fingerprint> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let t = if which.t { self.t[side][i] } else { 0 };
                let mut s_part = Vec::new();
                if let Some(s) = &self.s {
                    let s = &s[side];
                    s_part.push(s[i * n + i]);
                    let mut row: Vec<u32> = s[i * n..(i + 1) * n].to_vec();
                    row.sort_unstable();
                    s_part.extend(row);
                }
                let mut b_part = Vec::new();
                if let Some(b) = &self.b {
                    let b = &b[side];
                    for j in 0..n {
                        b_part.push(b[(i * n + i) * n + j]);
                        b_part.push(b[(i * n + j) * n + i]);
                        b_part.push(b[(j * n + i) * n + i]);
                    }
                    b_part.sort_unstable();
                }
                (t, self.dims[side][i], s_part, b_part)
            })
            .collect()
    }
}

fn partition(prints: &[Fingerprint], order: &BTreeMap<&Fingerprint, usize>) -> BlockPartition {
    let mut blocks = vec![Vec::new(); order.len()];
    let labels: Vec<usize> = prints.iter().map(|f| order[f]).collect();
    for (i, &l) in labels.iter().enumerate() {
        blocks[l].push(i);
    }
    BlockPartition { labels, blocks }
}

/// Fingerprint blocks of one bundle on its own.
pub fn fingerprint(bundle: &InvariantBundle, which: InvariantSet) -> Result<BlockPartition> {
    let data = intern(bundle, bundle, which)?;
    let prints = data.fingerprints(0, which);
    let order: BTreeMap<&Fingerprint, usize> = {
        let mut keys: Vec<&Fingerprint> = prints.iter().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    let mut p = partition(&prints, &order);
    p.blocks.retain(|b| !b.is_empty());
    Ok(p)
}

/// Checks every requested invariant coordinate-wise under `perm`.
pub fn verify_permutation(
    a: &InvariantBundle,
    b: &InvariantBundle,
    perm: &[usize],
    which: InvariantSet,
) -> Result<std::result::Result<(), Violation>> {
    require(a, which)?;
    require(b, which)?;
    let n = a.len();
    if b.len() != n || perm.len() != n {
        return Err(Error::Incompatible("bundles and permutation have different sizes".into()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Parameter("not a permutation".into()));
        }
    }
    for i in 0..n {
        if a.dims[i] != b.dims[perm[i]] {
            return Ok(Err(Violation::Dim(i)));
        }
        if which.t && a.t[i] != b.t[perm[i]] {
            return Ok(Err(Violation::T(i)));
        }
    }
    if which.s {
        let (sa, sb) = (a.s.as_ref().unwrap(), b.s.as_ref().unwrap());
        for i in 0..n {
            for j in 0..n {
                if sa[i][j] != sb[perm[i]][perm[j]] {
                    return Ok(Err(Violation::S(i, j)));
                }
            }
        }
    }
    if which.b {
        let (ba, bb) = (a.b.as_ref().unwrap(), b.b.as_ref().unwrap());
        // equal-value map between the two palettes
        let same: Vec<Vec<bool>> = ba.palette().iter().map(|x| bb.palette().iter().map(|y| x == y).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (x, y) = (ba.id(i, j, k), bb.id(perm[i], perm[j], perm[k]));
                    if !same[x as usize][y as usize] {
                        return Ok(Err(Violation::B(i, j, k)));
                    }
                }
            }
        }
    }
    Ok(Ok(()))
}

struct Search<'a> {
    data: &'a Interned,
    which: InvariantSet,
    order: Vec<usize>,
    candidates: Vec<&'a [usize]>,
    /// right-hand index assigned at each level
    assigned: Vec<usize>,
    level_of: Vec<Option<usize>>,
    nodes: u64,
}

enum Outcome {
    Found,
    /// Back up to the given level (`None`: the whole search fails).
    Fail(Option<usize>),
}

impl Search<'_> {
    /// The lowest level whose assignment conflicts with placing `r` at level
    /// `l`, as `Some(None)` for a conflict not involving earlier levels.
    fn conflict(&self, l: usize, r: usize) -> Option<Option<usize>> {
        let n = self.data.n;
        let left = &self.order;
        let right = |lvl: usize| if lvl == l { r } else { self.assigned[lvl] };
        let s_eq = |x: usize, y: usize| {
            let s = self.data.s.as_ref().unwrap();
            s[0][left[x] * n + left[y]] == s[1][right(x) * n + right(y)]
        };
        let b_eq = |x: usize, y: usize, z: usize| {
            let b = self.data.b.as_ref().unwrap();
            b[0][(left[x] * n + left[y]) * n + left[z]] == b[1][(right(x) * n + right(y)) * n + right(z)]
        };
        if self.which.s && !s_eq(l, l) {
            return Some(None);
        }
        if self.which.b && !b_eq(l, l, l) {
            return Some(None);
        }
        for m in 0..l {
            if self.which.s && (!s_eq(l, m) || !s_eq(m, l)) {
                return Some(Some(m));
            }
            if self.which.b {
                let pairs = [(l, l, m), (l, m, l), (m, l, l), (l, m, m), (m, l, m), (m, m, l)];
                if pairs.iter().any(|&(x, y, z)| !b_eq(x, y, z)) {
                    return Some(Some(m));
                }
                for j in 0..m {
                    let triples = [(l, m, j), (l, j, m), (m, l, j), (j, l, m), (m, j, l), (j, m, l)];
                    if triples.iter().any(|&(x, y, z)| !b_eq(x, y, z)) {
                        return Some(Some(m));
                    }
                }
            }
        }
        None
    }

    fn run(&mut self, l: usize) -> Outcome {
        if l == self.order.len() {
            return Outcome::Found;
        }
        self.nodes += 1;
        let mut deepest: Option<usize> = None;
        let mut descended = false;
        for idx in 0..self.candidates[l].len() {
            let r = self.candidates[l][idx];
            let reason = match self.level_of[r] {
                Some(used) => Some(Some(used)),
                None => self.conflict(l, r),
            };
            if let Some(reason) = reason {
                deepest = deepest.max(reason);
                continue;
            }
            self.assigned.push(r);
            self.level_of[r] = Some(l);
            let out = self.run(l + 1);
            if let Outcome::Found = out {
                return out;
            }
            self.level_of[r] = None;
            self.assigned.pop();
            match out {
                Outcome::Found => unreachable!(),
                Outcome::Fail(Some(j)) if j == l => descended = true,
                Outcome::Fail(j) => return Outcome::Fail(j),
            }
        }
        if descended {
            Outcome::Fail(l.checked_sub(1))
        } else {
            Outcome::Fail(deepest)
        }
    }
}

/// Searches for `perm` with `a ≅ b ∘ perm` on every requested invariant.
pub fn match_bundles(a: &InvariantBundle, b: &InvariantBundle, which: InvariantSet) -> Result<MatchResult> {
    let data = intern(a, b, which)?;
    let n = data.n;
    let prints = [data.fingerprints(0, which), data.fingerprints(1, which)];
    let mut counts: BTreeMap<&Fingerprint, [usize; 2]> = BTreeMap::new();
    for side in 0..2 {
        for f in &prints[side] {
            counts.entry(f).or_default()[side] += 1;
        }
    }
    if let Some((pos, c)) = counts.values().enumerate().find(|(_, c)| c[0] != c[1]) {
        return Ok(MatchResult {
            permutation: None,
            certificate: Some(Certificate::FingerprintMismatch { fingerprint: pos, left: c[0], right: c[1] }),
        });
    }
    let order: BTreeMap<&Fingerprint, usize> = counts.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let left = partition(&prints[0], &order);
    let right = partition(&prints[1], &order);
    if left.blocks.iter().zip(&right.blocks).any(|(x, y)| x.len() != y.len()) {
        return Ok(MatchResult { permutation: None, certificate: Some(Certificate::BlockStructure) });
    }
    // round-robin over blocks, smallest blocks first
    let mut by_size: Vec<usize> = (0..left.blocks.len()).collect();
    by_size.sort_by_key(|&b| (left.blocks[b].len(), b));
    let mut visit = Vec::with_capacity(n);
    for round in 0.. {
        let before = visit.len();
        for &blk in &by_size {
            if let Some(&i) = left.blocks[blk].get(round) {
                visit.push(i);
            }
        }
        if visit.len() == before {
            break;
        }
    }
    let candidates = visit.iter().map(|&i| right.blocks[left.labels[i]].as_slice()).collect();
    let mut search = Search {
        data: &data,
        which,
        order: visit,
        candidates,
        assigned: Vec::with_capacity(n),
        level_of: vec![None; n],
        nodes: 0,
    };
    match search.run(0) {
        Outcome::Found => {
            let mut perm = vec![0; n];
            for (&i, &r) in search.order.iter().zip(&search.assigned) {
                perm[i] = r;
            }
            if let Err(v) = verify_permutation(a, b, &perm, which)? {
                return Err(Error::InternalConsistency(format!("matcher returned a permutation violating {v}")));
            }
            Ok(MatchResult { permutation: Some(perm), certificate: None })
        }
        Outcome::Fail(_) => Ok(MatchResult {
            permutation: None,
            certificate: Some(Certificate::Exhausted { nodes: search.nodes }),
        }),
    }
}

/// Exhaustive search over all `n!` relabelings; for cross-checking on small bundles.
pub fn brute_force_match(a: &InvariantBundle, b: &InvariantBundle, which: InvariantSet) -> Result<Option<Vec<usize>>> {
    let n = a.len();
    if n > 9 {
        return Err(Error::Parameter("brute force is limited to 9 simples".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if verify_permutation(a, b, &perm, which)?.is_ok() {
            return Ok(Some(perm));
        }
        if !next_permutation(&mut perm) {
            return Ok(None);
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::center::Tensor3;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bundle(rng: &mut ChaCha8Rng, n: usize, alphabet: i64) -> InvariantBundle {
        let value = |rng: &mut ChaCha8Rng| Cyclotomic::root_of_unity(3, rng.gen_range(0..alphabet));
        let t = (0..n).map(|_| value(rng)).collect();
        let mut s = vec![vec![Cyclotomic::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = value(rng);
                s[i][j] = v.clone();
                s[j][i] = v;
            }
        }
        let b = Tensor3::from_fn(n, |_, _, _| value(rng));
        InvariantBundle { simples: (0..n).map(|i| (i, 0)).collect(), dims: vec![1; n], t, s: Some(s), b: Some(b) }
    }

    fn shuffled(rng: &mut ChaCha8Rng, x: &InvariantBundle) -> (InvariantBundle, Vec<usize>) {
        let mut perm: Vec<usize> = (0..x.len()).collect();
        perm.shuffle(rng);
        (x.permuted(&perm), perm)
    }

    #[test]
    fn parses_invariant_sets() {
        assert_eq!("T,B".parse::<InvariantSet>().unwrap(), InvariantSet::TB);
        assert_eq!("S, T".parse::<InvariantSet>().unwrap(), InvariantSet::ST);
        assert!("T,X".parse::<InvariantSet>().is_err());
        assert!("".parse::<InvariantSet>().is_err());
        assert_eq!(InvariantSet::TB.to_string(), "T,B");
    }

    #[test]
    fn permuted_bundle_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for which in [InvariantSet::ST, InvariantSet::TB, "T,S,B".parse().unwrap()] {
            for _ in 0..10 {
                let a = random_bundle(&mut rng, 12, 2);
                let (b, perm) = shuffled(&mut rng, &a);
                assert!(verify_permutation(&a, &b, &perm, which).unwrap().is_ok());
                let m = match_bundles(&a, &b, which).unwrap();
                let found = m.permutation.expect("planted permutation");
                assert!(verify_permutation(&a, &b, &found, which).unwrap().is_ok());
            }
        }
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..200 {
            let n = rng.gen_range(1..=7);
            let a = random_bundle(&mut rng, n, 2);
            let (mut b, _) = shuffled(&mut rng, &a);
            if trial % 2 == 1 {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                let old = b.b.as_ref().unwrap().clone();
                let flip = old.get(i, j, k).mul(&Cyclotomic::root_of_unity(3, 1));
                b.b = Some(Tensor3::from_fn(n, |x, y, z| if (x, y, z) == (i, j, k) { flip.clone() } else { old.get(x, y, z).clone() }));
            }
            for which in [InvariantSet::ST, InvariantSet::TB] {
                let fast = match_bundles(&a, &b, which).unwrap();
                let slow = brute_force_match(&a, &b, which).unwrap();
                assert_eq!(fast.found(), slow.is_some(), "trial {trial} {which}");
            }
        }
    }

    #[test]
    fn different_t_multisets_fail_on_fingerprints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_bundle(&mut rng, 5, 3);
        let mut b = a.clone();
        b.t[0] = b.t[0].mul(&Cyclotomic::root_of_unity(5, 1));
        let m = match_bundles(&a, &b, InvariantSet::ST).unwrap();
        assert!(matches!(m.certificate, Some(Certificate::FingerprintMismatch { .. })));
        assert_eq!(verify_permutation(&a, &b, &[0, 1, 2, 3, 4], InvariantSet::ST).unwrap(), Err(Violation::T(0)));
    }

    #[test]
    fn distinct_t_gives_singleton_blocks() {
        let t: Vec<Cyclotomic> = (0..6).map(|k| Cyclotomic::root_of_unity(6, k)).collect();
        let bundle = InvariantBundle { simples: (0..6).map(|i| (i, 0)).collect(), dims: vec![1; 6], t, s: None, b: None };
        let p = fingerprint(&bundle, "T".parse().unwrap()).unwrap();
        assert_eq!(p.blocks.len(), 6);
        assert!(matches!(fingerprint(&bundle, InvariantSet::ST), Err(Error::MissingInvariant("S"))));
    }

    #[test]
    fn symmetric_bundles_still_match() {
        // constant data: every permutation works, the search must not stall
        let n = 20;
        let bundle = InvariantBundle {
            simples: (0..n).map(|i| (i, 0)).collect(),
            dims: vec![1; n],
            t: vec![Cyclotomic::one(); n],
            s: Some(vec![vec![Cyclotomic::one(); n]; n]),
            b: Some(Tensor3::from_fn(n, |_, _, _| Cyclotomic::one())),
        };
        assert!(match_bundles(&bundle, &bundle, "T,S,B".parse().unwrap()).unwrap().found());
    }
}
