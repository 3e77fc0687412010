//! Direct evaluation of braid closures on explicit objects of the center.
//!
//! Every simple is realised as a graded vector space with a basis `v_{x,j}`
//! (`x` in the class, `j` in the fiber) and a quasi-action by monomial maps.
//! Braidings, inverse braidings and associators then act on basis vectors of
//! `(X ⊗ Y) ⊗ Z` by a single scalar each, so a trace is a sum of roots of unity
//! at the fixed basis vectors.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::center::{Category, SimpleObject};
use crate::cocycles::AlphaTable;
use crate::cyclotomic::{Cyclotomic, Reducer};
use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteGroup};

/// A map sending basis vector `v` to `ζ_L^{images[v].1} · e_{images[v].0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMap {
    pub modulus: u64,
    pub images: Vec<(usize, u64)>,
}

impl MonomialMap {
    pub fn identity(modulus: u64, dim: usize) -> Self {
        MonomialMap { modulus, images: (0..dim).map(|v| (v, 0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.images.len()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MonomialMap) -> MonomialMap {
        assert_eq!(self.modulus, other.modulus);
        let images = other
            .images
            .iter()
            .map(|&(t, e)| {
                let (t2, e2) = self.images[t];
                (t2, (e + e2) % self.modulus)
            })
            .collect();
        MonomialMap { modulus: self.modulus, images }
    }

    pub fn trace(&self) -> Cyclotomic {
        let mut counts = vec![0i64; self.modulus as usize];
        for (v, &(t, e)) in self.images.iter().enumerate() {
            if t == v {
                counts[e as usize] += 1;
            }
        }
        Reducer::new(self.modulus).reduce(&counts, &BigRational::one())
    }
}

/// A simple object with its basis and quasi-action written out.
#[derive(Clone, Debug)]
pub struct ExplicitSimple {
    /// Degree of each basis vector.
    pub degrees: Vec<Elem>,
    /// Dimension of each homogeneous component.
    pub fiber: usize,
    /// `action[h]` is the map `v ↦ h▷v`.
    pub action: Vec<MonomialMap>,
}

impl ExplicitSimple {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Multiplies the scalar of `h▷v` by `ζ_L^delta`.
    pub fn perturb_scalar(&mut self, h: Elem, v: usize, delta: u64) {
        let m = &mut self.action[h];
        m.images[v].1 = (m.images[v].1 + delta) % m.modulus;
    }
}

/// Builds `X = ⊕_{x ∈ ḡ} V_x` with `v_{x,j} = f_x▷v_{g,j}`, `f_x` the least
/// element conjugating `g` to `x`. Scalars are exponents of `ζ_L`; `L` must be
/// a multiple of the cocycle modulus and of every representation modulus.
pub fn build_explicit(cat: &Category, simple: &SimpleObject, modulus: u64) -> Result<ExplicitSimple> {
    let g = &**cat.group();
    let alpha = cat.alpha();
    let e = alpha.modulus();
    if modulus % e != 0 {
        return Err(Error::Parameter(format!("modulus {modulus} is not a multiple of {e}")));
    }
    let rep = simple.representation()?;
    let d = simple.degree() as usize;
    let base = simple.representative;
    let class = &g.conjugacy_classes()[simple.class].members;
    let domain = simple.chi.domain();
    let lift = |x: u64| x % e * (modulus / e);
    let mut action = Vec::with_capacity(g.order());
    for h in 0..g.order() {
        let mut images = Vec::with_capacity(class.len() * d);
        for &x in class {
            let fx = g.transporter(x);
            let hx = g.conjugate(h, x);
            let fhx = g.transporter(hx);
            let c = g.mul(g.mul(g.inv(fhx), h), fx);
            let pos = domain
                .binary_search(&c)
                .map_err(|_| Error::InternalConsistency(format!("{c} does not centralize {base}")))?;
            let target_block = class.binary_search(&hx).unwrap() * d;
            let twist = lift(alpha.get(base, h, fx) + e - alpha.get(base, fhx, c));
            for j in 0..d {
                let (t, s) = rep[pos].columns[j];
                if modulus % s.modulus != 0 {
                    return Err(Error::Parameter(format!(
                        "modulus {modulus} is not a multiple of representation modulus {}",
                        s.modulus
                    )));
                }
                images.push((target_block + t, (twist + s.at_modulus(modulus)) % modulus));
            }
        }
        action.push(MonomialMap { modulus, images });
    }
    let degrees = class.iter().flat_map(|&x| std::iter::repeat(x).take(d)).collect();
    Ok(ExplicitSimple { degrees, fiber: d, action })
}

/// Checks `|h▷v| = h▷|v|`, `e▷v = v` and `g▷(h▷v) = ζ^{α_{|v|}(g,h)} (gh)▷v`.
pub fn verify_quasi_action(group: &FiniteGroup, alpha: &AlphaTable, x: &ExplicitSimple) -> Result<()> {
    let n = group.order();
    let l = x.action[0].modulus;
    let step = l / alpha.modulus();
    for v in 0..x.dim() {
        if x.action[0].images[v] != (v, 0) {
            return Err(Error::QuasiAction { g: 0, h: 0, v });
        }
    }
    for h in 0..n {
        for v in 0..x.dim() {
            let (t, _) = x.action[h].images[v];
            if x.degrees[t] != group.conjugate(h, x.degrees[v]) {
                return Err(Error::QuasiAction { g: h, h: 0, v });
            }
        }
    }
    for g in 0..n {
        for h in 0..n {
            let gh = group.mul(g, h);
            for v in 0..x.dim() {
                let (t1, e1) = x.action[h].images[v];
                let (t2, e2) = x.action[g].images[t1];
                let (t3, e3) = x.action[gh].images[v];
                let expected = (e3 + alpha.get(x.degrees[v], g, h) * step) % l;
                if t2 != t3 || (e1 + e2) % l != expected {
                    return Err(Error::QuasiAction { g, h, v });
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BraidGenerator {
    S1,
    S1Inv,
    S2,
    S2Inv,
}

impl BraidGenerator {
    fn swaps(self) -> (usize, usize) {
        match self {
            BraidGenerator::S1 | BraidGenerator::S1Inv => (0, 1),
            BraidGenerator::S2 | BraidGenerator::S2Inv => (1, 2),
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            BraidGenerator::S1 => BraidGenerator::S1Inv,
            BraidGenerator::S1Inv => BraidGenerator::S1,
            BraidGenerator::S2 => BraidGenerator::S2Inv,
            BraidGenerator::S2Inv => BraidGenerator::S2,
        }
    }
}

/// A braid on three strands, written as an operator product: the last
/// generator acts first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BraidWord(pub Vec<BraidGenerator>);

impl BraidWord {
    /// `(σ₂⁻¹σ₁)³`.
    pub fn borromean() -> Self {
        use BraidGenerator::*;
        BraidWord([S2Inv, S1].repeat(3))
    }

    /// `σ₁²`.
    pub fn hopf() -> Self {
        BraidWord(vec![BraidGenerator::S1, BraidGenerator::S1])
    }

    /// Where the strand starting at position `p` ends up.
    pub fn permutation(&self) -> [usize; 3] {
        let mut at = [0, 1, 2];
        for g in self.0.iter().rev() {
            let (a, b) = g.swaps();
            at.swap(a, b);
        }
        // at[p] = strand now at position p
        let mut out = [0; 3];
        for (p, &s) in at.iter().enumerate() {
            out[s] = p;
        }
        out
    }
}

impl FromStr for BraidWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut pos = 0;
        for tok in s.split(|c: char| c.is_whitespace() || c == ',') {
            if !tok.is_empty() {
                out.push(match tok {
                    "s1" => BraidGenerator::S1,
                    "s1'" => BraidGenerator::S1Inv,
                    "s2" => BraidGenerator::S2,
                    "s2'" => BraidGenerator::S2Inv,
                    _ => return Err(Error::Parse { pos, msg: format!("unknown braid generator {tok:?}") }),
                });
            }
            pos += tok.len() + 1;
        }
        Ok(BraidWord(out))
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let toks: Vec<&str> = self
            .0
            .iter()
            .map(|g| match g {
                BraidGenerator::S1 => "s1",
                BraidGenerator::S1Inv => "s1'",
                BraidGenerator::S2 => "s2",
                BraidGenerator::S2Inv => "s2'",
            })
            .collect();
        f.write_str(&toks.join(" "))
    }
}

/// Which of the two equivalent expressions for `f⁻¹⧫v` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseAction {
    /// `ζ^{-α_{|v|}(f, f⁻¹)} f⁻¹▷v`.
    First,
    /// `ζ^{-α_{f⁻¹▷|v|}(f⁻¹, f)} f⁻¹▷v`.
    Second,
}

/// A basis vector of `(X_a ⊗ X_b) ⊗ X_c`: colors and basis indices per slot.
type State = [(usize, usize); 3];

/// Explicit simples of one category and the braid-group action on triple
/// tensor products.
pub struct Oracle<'a> {
    cat: &'a Category,
    modulus: u64,
    reducer: Reducer,
    simples: Vec<ExplicitSimple>,
    inverse: InverseAction,
}

impl<'a> Oracle<'a> {
    pub fn new(cat: &'a Category) -> Result<Self> {
        let mut modulus = cat.conductor();
        for s in cat.simples() {
            for m in s.representation()? {
                modulus = m.columns.iter().fold(modulus, |acc, (_, r)| acc.lcm(&r.modulus));
            }
        }
        let simples = cat.simples().iter().map(|s| build_explicit(cat, s, modulus)).collect::<Result<Vec<_>>>()?;
        Ok(Oracle { cat, modulus, reducer: Reducer::new(modulus), simples, inverse: InverseAction::First })
    }

    pub fn with_inverse_action(mut self, inverse: InverseAction) -> Self {
        self.inverse = inverse;
        self
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn explicit(&self, s: usize) -> &ExplicitSimple {
        &self.simples[s]
    }

    pub fn verify_all(&self) -> Result<()> {
        for x in &self.simples {
            verify_quasi_action(self.cat.group(), self.cat.alpha(), x)?;
        }
        Ok(())
    }

    #[inline]
    fn omega(&self, a: Elem, b: Elem, c: Elem) -> u64 {
        self.cat.cocycle().value(a, b, c) * (self.modulus / self.cat.cocycle().modulus())
    }

    #[inline]
    fn alpha(&self, g: Elem, x: Elem, y: Elem) -> u64 {
        self.cat.alpha().get(g, x, y) * (self.modulus / self.cat.cocycle().modulus())
    }

    #[inline]
    fn degree(&self, slot: (usize, usize)) -> Elem {
        self.simples[slot.0].degrees[slot.1]
    }

    /// `f▷w`.
    #[inline]
    fn act(&self, f: Elem, w: (usize, usize)) -> ((usize, usize), u64) {
        let (t, e) = self.simples[w.0].action[f].images[w.1];
        ((w.0, t), e)
    }

    /// `f⁻¹⧫w`, the inverse of `f▷` applied to `w`.
    fn act_inverse(&self, f: Elem, w: (usize, usize)) -> ((usize, usize), u64) {
        let g = &**self.cat.group();
        let l = self.modulus;
        let fi = g.inv(f);
        let (img, e) = self.act(fi, w);
        let correction = match self.inverse {
            InverseAction::First => self.alpha(self.degree(w), f, fi),
            InverseAction::Second => self.alpha(g.conjugate(fi, self.degree(w)), fi, f),
        };
        (img, (e + l - correction) % l)
    }

    fn step(&self, gen: BraidGenerator, s: State) -> (State, u64) {
        let g = &**self.cat.group();
        let l = self.modulus;
        let [a, b, c] = s;
        match gen {
            BraidGenerator::S1 => {
                let (b2, e) = self.act(self.degree(a), b);
                ([b2, a, c], e)
            }
            BraidGenerator::S1Inv => {
                let (a2, e) = self.act_inverse(self.degree(b), a);
                ([b, a2, c], e)
            }
            BraidGenerator::S2 => {
                let (da, db, dc) = (self.degree(a), self.degree(b), self.degree(c));
                let (c2, e) = self.act(db, c);
                let out = self.omega(da, db, dc) + e + l - self.omega(da, g.conjugate(db, dc), db);
                ([a, c2, b], out % l)
            }
            BraidGenerator::S2Inv => {
                let (da, db, dc) = (self.degree(a), self.degree(b), self.degree(c));
                let (b2, e) = self.act_inverse(dc, b);
                let out = self.omega(da, db, dc) + e + l - self.omega(da, dc, self.degree(b2));
                ([a, c, b2], out % l)
            }
        }
    }

    /// Trace of the braid word on `(X_i ⊗ X_j) ⊗ X_k`.
    pub fn braid_word_trace(&self, word: &BraidWord, colors: [usize; 3]) -> Result<Cyclotomic> {
        let perm = word.permutation();
        for p in 0..3 {
            if colors[perm[p]] != colors[p] {
                return Err(Error::BraidWord(format!(
                    "the closure of {word} does not return strand colors {colors:?} to their positions"
                )));
            }
        }
        if colors.iter().any(|&c| c >= self.simples.len()) {
            return Err(Error::BraidWord(format!("color out of range in {colors:?}")));
        }
        let dims = colors.map(|c| self.simples[c].dim());
        let l = self.modulus;
        let counts = (0..dims[0])
            .into_par_iter()
            .map(|u| {
                let mut counts = vec![0i64; l as usize];
                for v in 0..dims[1] {
                    for w in 0..dims[2] {
                        let start: State = [(colors[0], u), (colors[1], v), (colors[2], w)];
                        let mut state = start;
                        let mut e = 0;
                        for &gen in word.0.iter().rev() {
                            let (next, de) = self.step(gen, state);
                            state = next;
                            e += de;
                        }
                        if state == start {
                            counts[(e % l) as usize] += 1;
                        }
                    }
                }
                counts
            })
            .reduce(
                || vec![0i64; l as usize],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Ok(self.reducer.reduce(&counts, &BigRational::one()))
    }

    /// `tr σ₁²` on `X_i ⊗ X_j ⊗ 1`.
    pub fn s_entry(&self, i: usize, j: usize) -> Result<Cyclotomic> {
        self.braid_word_trace(&BraidWord::hopf(), [i, j, 0])
    }

    /// `tr (σ₂⁻¹σ₁)³` on `(X_i ⊗ X_j) ⊗ X_k`.
    pub fn b_entry(&self, i: usize, j: usize, k: usize) -> Result<Cyclotomic> {
        self.braid_word_trace(&BraidWord::borromean(), [i, j, k])
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cocycles::ThreeCocycle;
    use crate::groups::tests::s3;
    use crate::reps::tests::{s3_table, s3_table_with_reps};
    use crate::reps::CharacterLibrary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pq_cat(p: u64, q: u64, u: u64) -> Category {
        let g = Arc::new(FiniteGroup::pq_group(p, q).unwrap());
        Category::new(g.clone(), ThreeCocycle::pq_cocycle(g, u).unwrap(), &CharacterLibrary::new()).unwrap()
    }

    #[test]
    fn word_parsing_and_permutation() {
        let w: BraidWord = "s2' s1 s2' s1 s2' s1".parse().unwrap();
        assert_eq!(w, BraidWord::borromean());
        assert_eq!(w.to_string(), "s2' s1 s2' s1 s2' s1");
        assert_eq!(w.permutation(), [0, 1, 2]);
        let single: BraidWord = "s1".parse().unwrap();
        assert_eq!(single.permutation(), [1, 0, 2]);
        assert!("s3".parse::<BraidWord>().is_err());
        assert_eq!("".parse::<BraidWord>().unwrap(), BraidWord::default());
    }

    #[test]
    fn quasi_actions_hold() {
        for u in 0..3 {
            let cat = pq_cat(3, 7, u);
            let oracle = Oracle::new(&cat).unwrap();
            oracle.verify_all().unwrap();
        }
    }

    #[test]
    fn explicit_shapes() {
        let cat = pq_cat(3, 7, 1);
        let oracle = Oracle::new(&cat).unwrap();
        assert_eq!(oracle.explicit(0).dim(), 1);
        let pq = cat.group().pq_params().unwrap();
        let a = cat.index_of((cat.group().class_of(pq.element(1, 0)), 1)).unwrap();
        assert_eq!(oracle.explicit(a).dim(), 3);
        let b = cat.index_of((cat.group().class_of(pq.element(0, 1)), 0)).unwrap();
        assert_eq!(oracle.explicit(b).dim(), 7);
    }

    #[test]
    fn fault_injection_is_caught() {
        let cat = pq_cat(3, 7, 1);
        let oracle = Oracle::new(&cat).unwrap();
        let mut x = oracle.explicit(5).clone();
        x.perturb_scalar(4, 0, 1);
        assert!(matches!(verify_quasi_action(cat.group(), cat.alpha(), &x), Err(Error::QuasiAction { .. })));
    }

    #[test]
    fn empty_word_gives_dimensions() {
        let cat = pq_cat(3, 7, 2);
        let oracle = Oracle::new(&cat).unwrap();
        let dims = cat.dims();
        let v = oracle.braid_word_trace(&BraidWord::default(), [3, 7, 20]).unwrap();
        assert_eq!(v, Cyclotomic::from_integer((dims[3] * dims[7] * dims[20]) as i64));
    }

    #[test]
    fn non_pure_braids_are_rejected() {
        let cat = pq_cat(3, 7, 0);
        let oracle = Oracle::new(&cat).unwrap();
        let w: BraidWord = "s1".parse().unwrap();
        assert!(matches!(oracle.braid_word_trace(&w, [1, 2, 0]), Err(Error::BraidWord(_))));
        assert!(oracle.braid_word_trace(&w, [2, 2, 0]).is_ok());
    }

    #[test]
    fn oracle_s_matches_formula() {
        for u in 0..3 {
            let cat = pq_cat(3, 7, u);
            let oracle = Oracle::new(&cat).unwrap();
            let s = cat.s_matrix();
            for i in 0..cat.len() {
                for j in 0..cat.len() {
                    assert_eq!(oracle.s_entry(i, j).unwrap(), s[i][j], "u={u} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn s3_needs_matrices_for_the_degree_two_row() {
        let g = Arc::new(s3());
        let mut lib = CharacterLibrary::new();
        lib.add(s3_table(&g));
        let cat = Category::new(g.clone(), ThreeCocycle::trivial(g.clone()), &lib).unwrap();
        assert!(matches!(Oracle::new(&cat), Err(Error::UnsupportedRepresentation(_))));

        let mut lib = CharacterLibrary::new();
        lib.add(s3_table_with_reps(&g));
        let cat = Category::new(g.clone(), ThreeCocycle::trivial(g), &lib).unwrap();
        let oracle = Oracle::new(&cat).unwrap();
        oracle.verify_all().unwrap();
        let s = cat.s_matrix();
        for i in 0..cat.len() {
            for j in 0..cat.len() {
                assert_eq!(oracle.s_entry(i, j).unwrap(), s[i][j]);
            }
        }
    }

    #[test]
    fn inverse_action_expressions_agree() {
        let cat = pq_cat(3, 7, 1);
        let first = Oracle::new(&cat).unwrap();
        let second = Oracle::new(&cat).unwrap().with_inverse_action(InverseAction::Second);
        let g = &**cat.group();
        for s in 0..cat.len() {
            for f in 0..g.order() {
                for v in 0..first.explicit(s).dim() {
                    assert_eq!(first.act_inverse(f, (s, v)), second.act_inverse(f, (s, v)));
                    // f▷(f⁻¹⧫v) = v
                    let (w, e1) = first.act_inverse(f, (s, v));
                    let (back, e2) = first.act(f, w);
                    assert_eq!(back, (s, v));
                    assert_eq!((e1 + e2) % first.modulus(), 0);
                }
            }
        }
    }

    #[test]
    fn generator_times_inverse_is_identity() {
        use BraidGenerator::*;
        let cat = pq_cat(3, 7, 1);
        let oracle = Oracle::new(&cat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gens = [S1, S1Inv, S2, S2Inv];
        for _ in 0..40 {
            let c = rng.gen_range(0..cat.len());
            let colors = [c, c, c];
            let len = rng.gen_range(0..5);
            let word: Vec<BraidGenerator> = (0..len).map(|_| gens[rng.gen_range(0..4)]).collect();
            let g = gens[rng.gen_range(0..4)];
            let mut padded = vec![g, g.inverse()];
            padded.extend(&word);
            assert_eq!(
                oracle.braid_word_trace(&BraidWord(padded), colors).unwrap(),
                oracle.braid_word_trace(&BraidWord(word), colors).unwrap()
            );
        }
    }

    #[test]
    fn braid_relation_holds() {
        use BraidGenerator::*;
        let cat = pq_cat(3, 7, 1);
        let oracle = Oracle::new(&cat).unwrap();
        let lhs = BraidWord(vec![S1, S2, S1]);
        let rhs = BraidWord(vec![S2, S1, S2]);
        // compare the maps vector by vector on colors (c,c,c)
        for c in [0, 3, 8, 15, 22] {
            let d = oracle.explicit(c).dim();
            for u in 0..d {
                for v in 0..d {
                    for w in 0..d {
                        let start: State = [(c, u), (c, v), (c, w)];
                        let run = |word: &BraidWord| {
                            word.0.iter().rev().fold((start, 0u64), |(s, e), &gen| {
                                let (n, de) = oracle.step(gen, s);
                                (n, (e + de) % oracle.modulus())
                            })
                        };
                        assert_eq!(run(&lhs), run(&rhs), "color {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn borromean_closure_is_cyclic_in_colors() {
        let cat = pq_cat(3, 7, 2);
        let oracle = Oracle::new(&cat).unwrap();
        for (i, j, k) in [(3, 8, 15), (1, 5, 22), (6, 6, 20), (11, 19, 24)] {
            let b = oracle.b_entry(i, j, k).unwrap();
            assert_eq!(b, oracle.b_entry(j, k, i).unwrap());
            assert_eq!(b, oracle.b_entry(k, i, j).unwrap());
        }
    }

    #[test]
    fn monomial_map_trace() {
        let m = MonomialMap { modulus: 4, images: vec![(0, 1), (2, 0), (1, 0)] };
        assert_eq!(m.trace(), Cyclotomic::root_of_unity(4, 1));
        assert_eq!(m.compose(&m).images, vec![(0, 2), (1, 0), (2, 0)]);
        assert_eq!(MonomialMap::identity(4, 3).compose(&m), m);
    }
}
