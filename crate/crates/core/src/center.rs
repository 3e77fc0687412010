//! Simple objects of the twisted Drinfeld center `Z(Vect_G^ω)` and the
//! character formulas for the twists `T`, the unnormalized `S`-matrix and the
//! Borromean tensor `B`.
//!
//! All sums are accumulated as integer histograms over the `L`-th roots of
//! unity, `L` being the category's conductor, and reduced exactly at the end.

pub mod bundle;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::cocycles::{AlphaTable, OneCochain, ThreeCocycle};
use crate::cyclotomic::{Cyclotomic, Reducer, RootOfUnityExponent, RootSum};
use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteGroup};
use crate::reps::{
    abelian_character_table, conjugation_data, pq_character_table, CharacterLibrary, CharacterTable,
    MonomialMatrix, ProjectiveCharacter,
};

pub use bundle::{InvariantBundle, Tensor3};

/// Which term list is used for the scalar `Ω(x, y, z)` of the Borromean tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OmegaVariant {
    /// Twelve terms: six `ω` values and six `α` values.
    Code,
    /// Nine terms: six `ω` values with the opposite sign and three `α` values.
    Display,
    /// The code variant with its last term dropped; used for fault injection.
    Perturbed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorMode {
    General,
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct FillOptions {
    pub mode: TensorMode,
    /// Compute one entry per orbit of cyclic index rotation.
    pub cyclic: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for FillOptions {
    fn default() -> Self {
        FillOptions { mode: TensorMode::General, cyclic: true, jobs: None }
    }
}

#[derive(Clone, Debug)]
pub struct SimpleObject {
    pub class: usize,
    pub row: usize,
    pub representative: Elem,
    pub class_size: usize,
    pub chi: ProjectiveCharacter,
    table: Arc<CharacterTable>,
}

impl SimpleObject {
    pub fn label(&self) -> (usize, usize) {
        (self.class, self.row)
    }

    pub fn degree(&self) -> u64 {
        self.chi.degree()
    }

    pub fn dim(&self) -> u64 {
        self.class_size as u64 * self.degree()
    }

    pub fn table(&self) -> &Arc<CharacterTable> {
        &self.table
    }

    /// Monomial matrices of the projective representation `ρ · ζ^μ` on every
    /// element of the centralizer, in sorted element order.
    pub fn representation(&self) -> Result<Vec<MonomialMatrix>> {
        let rep = self.table.representation(self.row)?;
        let mu = self.chi.twist();
        Ok(rep
            .iter()
            .zip(self.chi.domain())
            .map(|(m, &c)| m.scaled(&RootOfUnityExponent::new(mu.modulus(), mu.get(c) as i64)))
            .collect())
    }
}

/// One admissible pair `(x, y)` of the two-sum `B` formula for fixed classes,
/// with its `Ω` exponent at the conductor and the three evaluation points.
#[derive(Clone, Copy, Debug)]
struct BTerm {
    x: Elem,
    y: Elem,
    omega: u64,
    at1: Elem,
    at2: Elem,
    at3: Elem,
}

#[derive(Debug)]
pub struct Category {
    group: Arc<FiniteGroup>,
    cocycle: ThreeCocycle,
    alpha: AlphaTable,
    conductor: u64,
    reducer: Arc<Reducer>,
    simples: Vec<SimpleObject>,
    /// `conj[s][x·n + c]`: `χ_s^{(x)}(c)` as a root sum at the conductor.
    conj: Vec<Vec<Option<RootSum>>>,
    variant: OmegaVariant,
}

impl Category {
    /// Enumerates the simples `(g, χ)` ordered by class index, then row.
    ///
    /// Characters of `C_G(g)` come from `library` when it holds a table for
    /// that subgroup, otherwise from the built-in table of the whole pq group
    /// (central `g`), otherwise from the abelian construction. A nonzero `α_g`
    /// is absorbed by a cochain `μ` with `dμ = α_g` on abelian centralizers.
    pub fn new(group: Arc<FiniteGroup>, cocycle: ThreeCocycle, library: &CharacterLibrary) -> Result<Self> {
        if cocycle.group().order() != group.order() {
            return Err(Error::Incompatible("cocycle and group have different orders".into()));
        }
        let n = group.order();
        let mut pq_table: Option<Arc<CharacterTable>> = None;
        let mut simples = Vec::new();
        for (ci, class) in group.conjugacy_classes().iter().enumerate() {
            let g = class.representative;
            let cent = group.centralizer(g).to_vec();
            let alpha = cocycle.alpha(g)?;
            let abelian = group.is_abelian_subset(&cent).is_ok();
            let zero = || OneCochain::zero(cent.clone());
            let solve = || -> Result<OneCochain> {
                if alpha.is_zero() {
                    Ok(zero())
                } else if abelian {
                    alpha.solve_coboundary()
                } else {
                    Err(Error::UnsupportedCentralizer(g))
                }
            };
            let (table, twist) = if let Some(t) = library.find(&cent) {
                if t.is_projective() {
                    check_projective_table(&group, t, &alpha_values(&cocycle, g, &cent), cocycle.modulus())?;
                    (t.clone(), zero())
                } else {
                    (t.clone(), solve()?)
                }
            } else if cent.len() == n && group.pq_params().is_some() {
                let t = match &pq_table {
                    Some(t) => t.clone(),
                    None => {
                        let t = Arc::new(pq_character_table(&group)?);
                        pq_table = Some(t.clone());
                        t
                    }
                };
                (t, solve()?)
            } else if abelian {
                (Arc::new(abelian_character_table(&group, &cent)?), solve()?)
            } else {
                return Err(Error::UnsupportedCentralizer(g));
            };
            for row in 0..table.len() {
                let chi = ProjectiveCharacter::new(g, &table, row, twist.clone())?;
                simples.push(SimpleObject {
                    class: ci,
                    row,
                    representative: g,
                    class_size: class.members.len(),
                    chi,
                    table: table.clone(),
                });
            }
        }
        let conductor = simples.iter().fold(cocycle.modulus(), |acc, s| {
            acc.lcm(&s.chi.twist().modulus()).lcm(&s.table.conductor())
        });
        let alpha = cocycle.alpha_table();
        let reducer = Arc::new(Reducer::new(conductor));
        let mut cat = Category {
            group,
            cocycle,
            alpha,
            conductor,
            reducer,
            simples,
            conj: Vec::new(),
            variant: OmegaVariant::Code,
        };
        cat.conj = cat.build_conjugated()?;
        Ok(cat)
    }

    fn build_conjugated(&self) -> Result<Vec<Vec<Option<RootSum>>>> {
        let g = &*self.group;
        let n = g.order();
        let l = self.conductor;
        let step = l / self.cocycle.modulus();
        let one = BigInt::one();
        self.simples
            .iter()
            .map(|s| {
                let tilde = s
                    .chi
                    .values()
                    .iter()
                    .map(|v| {
                        RootSum::from_cyclotomic(v, l, &one).ok_or_else(|| {
                            Error::InternalConsistency(format!("character value {v} is not an integral sum of roots"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut table = vec![None; n * n];
                for &x in &g.conjugacy_classes()[s.class].members {
                    let f = g.transporter(x);
                    for &c in g.centralizer(x) {
                        let (k, d) = conjugation_data(g, &self.alpha, s.representative, f, c);
                        let pos = s.chi.domain().binary_search(&d).unwrap();
                        let shifted = RootSum {
                            terms: tilde[pos].terms.iter().map(|&(e, m)| ((e + k * step) % l, m)).collect(),
                        };
                        table[x * n + c] = Some(shifted);
                    }
                }
                Ok(table)
            })
            .collect()
    }

    pub fn with_variant(mut self, variant: OmegaVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn variant(&self) -> OmegaVariant {
        self.variant
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn cocycle(&self) -> &ThreeCocycle {
        &self.cocycle
    }

    pub fn alpha(&self) -> &AlphaTable {
        &self.alpha
    }

    /// Common root-of-unity order `L` of every scalar in the category.
    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn simples(&self) -> &[SimpleObject] {
        &self.simples
    }

    pub fn len(&self) -> usize {
        self.simples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simples.is_empty()
    }

    pub fn labels(&self) -> Vec<(usize, usize)> {
        self.simples.iter().map(SimpleObject::label).collect()
    }

    pub fn dims(&self) -> Vec<u64> {
        self.simples.iter().map(SimpleObject::dim).collect()
    }

    /// `Σ dim²`.
    pub fn global_dimension(&self) -> u64 {
        self.simples.iter().map(|s| s.dim() * s.dim()).sum()
    }

    /// Index of the simple labelled `(class, row)`.
    pub fn index_of(&self, label: (usize, usize)) -> Option<usize> {
        self.simples.iter().position(|s| s.label() == label)
    }

    /// `χ_s^{(x)}(c)` as a root sum, `None` when `x ∉ class(s)` or `c ∉ C_G(x)`.
    pub fn conjugated(&self, s: usize, x: Elem, c: Elem) -> Option<&RootSum> {
        self.conj[s][x * self.group.order() + c].as_ref()
    }

    pub fn conjugated_value(&self, s: usize, x: Elem, c: Elem) -> Option<Cyclotomic> {
        self.conjugated(s, x, c).map(|r| self.root_sum_value(r))
    }

    fn root_sum_value(&self, r: &RootSum) -> Cyclotomic {
        let mut counts = vec![0i64; self.conductor as usize];
        for &(e, m) in &r.terms {
            counts[e as usize] += m;
        }
        self.reducer.reduce(&counts, &BigRational::one())
    }

    fn finish(&self, counts: &mut [i64], scale: &BigRational) -> Cyclotomic {
        let terms = self.reducer.reduce_integral(counts);
        counts.iter_mut().for_each(|c| *c = 0);
        self.reducer.from_integral(&terms, scale)
    }

    #[inline]
    fn lift(&self, exponent_at_e: u64) -> u64 {
        exponent_at_e * (self.conductor / self.cocycle.modulus())
    }

    /// `T_s = χ̃(g) / χ̃(1)`.
    pub fn t_entry(&self, s: usize) -> Cyclotomic {
        let simple = &self.simples[s];
        let v = simple.chi.value(simple.representative).unwrap();
        v.scale(&BigRational::new(BigInt::one(), BigInt::from(simple.degree())))
    }

    pub fn t_matrix(&self) -> Vec<Cyclotomic> {
        (0..self.len()).map(|s| self.t_entry(s)).collect()
    }

    /// `S_{(g,χ₁),(h,χ₂)} = |h̄| Σ_{x ∈ ḡ, [x,h] = 1} χ₁^{(x)}(h) χ₂(x)`.
    pub fn s_entry(&self, i: usize, j: usize) -> Cyclotomic {
        let g = &*self.group;
        let (si, sj) = (&self.simples[i], &self.simples[j]);
        let h = sj.representative;
        let mut counts = vec![0i64; self.conductor as usize];
        for &x in &g.conjugacy_classes()[si.class].members {
            if !g.commute(x, h) {
                continue;
            }
            let a = self.conjugated(i, x, h).unwrap();
            let b = self.conjugated(j, h, x).unwrap();
            accumulate(&mut counts, self.conductor, 0, &[a, b]);
        }
        self.finish(&mut counts, &BigRational::from_integer(BigInt::from(sj.class_size)))
    }

    /// Double sum `Σ_{x ∈ ḡ, y ∈ h̄, [x,y] = 1} χ₁^{(x)}(y) χ₂^{(y)}(x)`.
    pub fn s_entry_oracle(&self, i: usize, j: usize) -> Cyclotomic {
        let g = &*self.group;
        let classes = g.conjugacy_classes();
        let mut counts = vec![0i64; self.conductor as usize];
        for &x in &classes[self.simples[i].class].members {
            for &y in &classes[self.simples[j].class].members {
                if !g.commute(x, y) {
                    continue;
                }
                let a = self.conjugated(i, x, y).unwrap();
                let b = self.conjugated(j, y, x).unwrap();
                accumulate(&mut counts, self.conductor, 0, &[a, b]);
            }
        }
        self.finish(&mut counts, &BigRational::one())
    }

    pub fn s_matrix(&self) -> Vec<Vec<Cyclotomic>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.s_entry(i, j)).collect()).collect()
    }

    pub fn s_matrix_oracle(&self) -> Vec<Vec<Cyclotomic>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.s_entry_oracle(i, j)).collect()).collect()
    }

    /// `Ω(x, y, z)` as an exponent at the cocycle modulus, for this category's variant.
    pub fn omega_exponent(&self, x: Elem, y: Elem, z: Elem) -> u64 {
        match self.variant {
            OmegaVariant::Code => omega_code(&self.group, &self.cocycle, &self.alpha, x, y, z, true),
            OmegaVariant::Perturbed => omega_code(&self.group, &self.cocycle, &self.alpha, x, y, z, false),
            OmegaVariant::Display => omega_display(&self.group, &self.cocycle, &self.alpha, x, y, z),
        }
    }

    /// Admissible `(x, y) ∈ ḡ × h̄` for the third class representative `k`.
    fn b_terms(&self, class_g: usize, class_h: usize, k: Elem) -> Vec<BTerm> {
        let g = &*self.group;
        let classes = g.conjugacy_classes();
        let ki = g.inv(k);
        let mut out = Vec::new();
        for &x in &classes[class_g].members {
            let xi = g.inv(x);
            let at2 = g.commutator(ki, xi);
            for &y in &classes[class_h].members {
                let at1 = g.commutator(y, k);
                let at3 = g.commutator(g.inv(y), x);
                if g.commutator(at1, x) != 0 || g.commutator(at3, k) != 0 {
                    continue;
                }
                let omega = self.lift(self.omega_exponent(x, y, k));
                out.push(BTerm { x, y, omega, at1, at2, at3 });
            }
        }
        out
    }

    fn b_from_terms(&self, i: usize, j: usize, k: usize, terms: &[BTerm], counts: &mut [i64]) -> Result<Cyclotomic> {
        let kk = self.simples[k].representative;
        for t in terms {
            let a = self.conjugated(i, t.x, t.at1);
            let b = self.conjugated(j, t.y, t.at2);
            let c = self.conjugated(k, kk, t.at3);
            match (a, b, c) {
                (Some(a), Some(b), Some(c)) => accumulate(counts, self.conductor, t.omega, &[a, b, c]),
                _ => {
                    counts.iter_mut().for_each(|c| *c = 0);
                    return Err(Error::InternalConsistency(format!(
                        "character argument outside its centralizer at x={}, y={}, k={kk}",
                        t.x, t.y
                    )));
                }
            }
        }
        let scale = BigRational::from_integer(BigInt::from(self.simples[k].class_size));
        Ok(self.finish(counts, &scale))
    }

    /// `B = |k̄| Σ Ω(x,y,k) χ₁^{(x)}([y,k]) χ₂^{(y)}([k⁻¹,x⁻¹]) χ₃([y⁻¹,x])` over
    /// `x ∈ ḡ, y ∈ h̄` with `[[k,y],x] = [[y⁻¹,x],k] = 1`.
    pub fn b_entry_general(&self, i: usize, j: usize, k: usize) -> Result<Cyclotomic> {
        let s = &self.simples;
        let terms = self.b_terms(s[i].class, s[j].class, s[k].representative);
        let mut counts = vec![0i64; self.conductor as usize];
        self.b_from_terms(i, j, k, &terms, &mut counts)
    }

    /// Three-sum form over `x ∈ ḡ, y ∈ h̄, z ∈ k̄` with all three degree conditions.
    pub fn b_entry_oracle_formula(&self, i: usize, j: usize, k: usize) -> Result<Cyclotomic> {
        let g = &*self.group;
        let classes = g.conjugacy_classes();
        let s = &self.simples;
        let mut counts = vec![0i64; self.conductor as usize];
        for &x in &classes[s[i].class].members {
            for &y in &classes[s[j].class].members {
                for &z in &classes[s[k].class].members {
                    if !borromean_condition(g, x, y, z) {
                        continue;
                    }
                    let at1 = g.commutator(y, z);
                    let at2 = g.commutator(g.inv(z), g.inv(x));
                    let at3 = g.commutator(g.inv(y), x);
                    let omega = self.lift(self.omega_exponent(x, y, z));
                    match (self.conjugated(i, x, at1), self.conjugated(j, y, at2), self.conjugated(k, z, at3)) {
                        (Some(a), Some(b), Some(c)) => accumulate(&mut counts, self.conductor, omega, &[a, b, c]),
                        _ => {
                            return Err(Error::InternalConsistency(format!(
                                "character argument outside its centralizer at ({x}, {y}, {z})"
                            )))
                        }
                    }
                }
            }
        }
        Ok(self.finish(&mut counts, &BigRational::one()))
    }

    /// Checks that `a` is an abelian normal subgroup with `ω` constant on its cosets.
    pub fn inflation_subgroup(&self, a: &[Elem]) -> Result<InflationSubgroup> {
        let g = &*self.group;
        let mut sorted = a.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if !g.is_normal_subgroup(&sorted) {
            return Err(Error::Precondition("A must be a normal subgroup".into()));
        }
        g.is_abelian_subset(&sorted).map_err(|_| Error::Precondition("A must be abelian".into()))?;
        let n = g.order();
        let w = &self.cocycle;
        for &t in sorted.iter().skip(1) {
            for x in 0..n {
                let xt = g.mul(x, t);
                for y in 0..n {
                    let yt = g.mul(y, t);
                    for z in 0..n {
                        let v = w.value(x, y, z);
                        if w.value(xt, y, z) != v || w.value(x, yt, z) != v || w.value(x, y, g.mul(z, t)) != v {
                            return Err(Error::Precondition("the cocycle is not inflated from G/A".into()));
                        }
                    }
                }
            }
        }
        let mut member = vec![false; n];
        sorted.iter().for_each(|&x| member[x] = true);
        Ok(InflationSubgroup { elements: sorted, member })
    }

    /// The largest normal cyclic subgroup that is abelian and carries an
    /// inflated cocycle, if any is nontrivial.
    pub fn find_inflation_subgroup(&self) -> Option<InflationSubgroup> {
        let g = &*self.group;
        let mut candidates: Vec<Vec<Elem>> = (1..g.order()).map(|x| g.generated_subgroup(&[x])).collect();
        candidates.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        candidates.dedup();
        candidates.into_iter().find_map(|a| self.inflation_subgroup(&a).ok())
    }

    fn simplified_preconditions(&self, i: usize, j: usize, a: &InflationSubgroup) -> Result<()> {
        let s = &self.simples;
        if !a.contains(s[i].representative) || !a.contains(s[j].representative) {
            return Err(Error::Precondition("the first two simples must be graded by elements of A".into()));
        }
        Ok(())
    }

    /// `B = |k̄| χ₃(1) Σ_{x ∈ ḡ, y ∈ h̄} χ₁(p⁻¹▷[y,k]) χ₂(q⁻¹▷[k⁻¹,x⁻¹])`
    /// with `p▷g = x`, `q▷h = y`, valid when `g, h ∈ A`.
    pub fn b_entry_simplified(&self, i: usize, j: usize, k: usize, a: &InflationSubgroup) -> Result<Cyclotomic> {
        self.simplified_preconditions(i, j, a)?;
        let g = &*self.group;
        let classes = g.conjugacy_classes();
        let s = &self.simples;
        let kk = s[k].representative;
        let (gg, hh) = (s[i].representative, s[j].representative);
        let mut counts = vec![0i64; self.conductor as usize];
        for &x in &classes[s[i].class].members {
            let p = g.transporter(x);
            let at2 = g.commutator(g.inv(kk), g.inv(x));
            for &y in &classes[s[j].class].members {
                let q = g.transporter(y);
                let at1 = g.commutator(y, kk);
                let c1 = self.conjugated(i, gg, g.conjugate(g.inv(p), at1));
                let c2 = self.conjugated(j, hh, g.conjugate(g.inv(q), at2));
                match (c1, c2) {
                    (Some(c1), Some(c2)) => accumulate(&mut counts, self.conductor, 0, &[c1, c2]),
                    _ => return Err(Error::InternalConsistency("simplified argument outside its centralizer".into())),
                }
            }
        }
        let scale = BigInt::from(s[k].class_size as u64 * s[k].degree());
        Ok(self.finish(&mut counts, &BigRational::from_integer(scale)))
    }

    /// `B = |k̄| |Q| χ₃(1) / (|C_Q(g)| |C_Q(h)|) Σ_{r ∈ Q} χ₁(r▷[h,k]) χ₂(r⁻¹▷[k⁻¹,g⁻¹])`
    /// for a subgroup `Q ⊆ C_G(k)` whose orbits through `g` and `h` are the full classes.
    pub fn b_entry_fast(&self, i: usize, j: usize, k: usize, a: &InflationSubgroup, q: &[Elem]) -> Result<Cyclotomic> {
        self.simplified_preconditions(i, j, a)?;
        let g = &*self.group;
        let s = &self.simples;
        let (gg, hh, kk) = (s[i].representative, s[j].representative, s[k].representative);
        self.check_transversal_subgroup(q, gg, hh, kk)?;
        let at1 = g.commutator(hh, kk);
        let at2 = g.commutator(g.inv(kk), g.inv(gg));
        let mut counts = vec![0i64; self.conductor as usize];
        for &r in q {
            let c1 = self.conjugated(i, gg, g.conjugate(r, at1));
            let c2 = self.conjugated(j, hh, g.conjugate(g.inv(r), at2));
            match (c1, c2) {
                (Some(c1), Some(c2)) => accumulate(&mut counts, self.conductor, 0, &[c1, c2]),
                _ => return Err(Error::InternalConsistency("fast-path argument outside its centralizer".into())),
            }
        }
        let cq = |x: Elem| q.iter().filter(|&&r| g.commute(r, x)).count() as u64;
        let scale = BigRational::new(
            BigInt::from(s[k].class_size as u64 * q.len() as u64 * s[k].degree()),
            BigInt::from(cq(gg) * cq(hh)),
        );
        Ok(self.finish(&mut counts, &scale))
    }

    fn check_transversal_subgroup(&self, q: &[Elem], g: Elem, h: Elem, k: Elem) -> Result<()> {
        let grp = &*self.group;
        if !grp.is_subgroup(q) || q.iter().any(|&r| !grp.commute(r, k)) {
            return Err(Error::Precondition("Q must be a subgroup of C_G(k)".into()));
        }
        for x in [g, h] {
            let mut orbit: Vec<Elem> = q.iter().map(|&r| grp.conjugate(r, x)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            if orbit.len() != grp.class_size(x) {
                return Err(Error::Precondition(format!("Q does not act transitively on the class of {x}")));
            }
        }
        Ok(())
    }

    /// Value from the fastest applicable formula, trying the cyclic rotations
    /// of the index triple.
    fn b_entry_auto(&self, i: usize, j: usize, k: usize, a: Option<&InflationSubgroup>) -> Option<Cyclotomic> {
        let a = a?;
        for (p, q, r) in [(i, j, k), (j, k, i), (k, i, j)] {
            if self.simplified_preconditions(p, q, a).is_err() {
                continue;
            }
            let cent = self.group.centralizer(self.simples[r].representative).to_vec();
            if let Ok(v) = self.b_entry_fast(p, q, r, a, &cent) {
                return Some(v);
            }
            if let Ok(v) = self.b_entry_simplified(p, q, r, a) {
                return Some(v);
            }
        }
        None
    }

    /// One entry, by a fast path when `inflation` admits one.
    pub fn b_entry(&self, i: usize, j: usize, k: usize, inflation: Option<&InflationSubgroup>) -> Result<Cyclotomic> {
        match self.b_entry_auto(i, j, k, inflation) {
            Some(v) => Ok(v),
            None => self.b_entry_general(i, j, k),
        }
    }

    /// The full Borromean tensor.
    pub fn b_tensor(&self, opts: FillOptions) -> Result<Tensor3> {
        match opts.jobs {
            Some(j) => rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
                .install(|| self.b_tensor_inner(opts)),
            None => self.b_tensor_inner(opts),
        }
    }

    fn b_tensor_inner(&self, opts: FillOptions) -> Result<Tensor3> {
        let n = self.len();
        let classes = self.group.conjugacy_classes().len();
        let class_reps: Vec<Elem> = self.group.conjugacy_classes().iter().map(|c| c.representative).collect();
        let triples: Vec<(usize, usize, usize)> = (0..classes)
            .flat_map(|a| (0..classes).flat_map(move |b| (0..classes).map(move |c| (a, b, c))))
            .collect();
        let term_lists: Vec<Vec<BTerm>> =
            triples.par_iter().map(|&(a, b, c)| self.b_terms(a, b, class_reps[c])).collect();
        let inflation = match opts.mode {
            TensorMode::Auto => self.find_inflation_subgroup(),
            TensorMode::General => None,
        };
        let rows: Vec<Vec<((usize, usize, usize), Cyclotomic)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut counts = vec![0i64; self.conductor as usize];
                let mut out = Vec::new();
                for j in 0..n {
                    for k in 0..n {
                        if opts.cyclic && !is_rotation_minimal(i, j, k) {
                            continue;
                        }
                        let v = match self.b_entry_auto(i, j, k, inflation.as_ref()) {
                            Some(v) => v,
                            None => {
                                let s = &self.simples;
                                let t = (s[i].class * classes + s[j].class) * classes + s[k].class;
                                self.b_from_terms(i, j, k, &term_lists[t], &mut counts)?
                            }
                        };
                        out.push(((i, j, k), v));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut tensor = Tensor3::builder(n);
        for ((i, j, k), v) in rows.into_iter().flatten() {
            let id = tensor.intern(v);
            tensor.set(i, j, k, id);
            if opts.cyclic {
                tensor.set(j, k, i, id);
                tensor.set(k, i, j, id);
            }
        }
        tensor.finish()
    }

    pub fn bundle(&self, with_s: bool, b: Option<Tensor3>) -> InvariantBundle {
        InvariantBundle {
            simples: self.labels(),
            dims: self.dims(),
            t: self.t_matrix(),
            s: with_s.then(|| self.s_matrix()),
            b,
        }
    }

    /// `S · S` divided by `D² = Σ dim²`, checked to be a permutation matrix;
    /// returns the permutation `i ↦ i*`.
    pub fn duality_permutation(&self, s: &[Vec<Cyclotomic>]) -> Result<Vec<usize>> {
        let n = s.len();
        let rows = self.matrix_root_sums(s)?;
        let d2 = BigRational::new(BigInt::one(), BigInt::from(self.global_dimension()));
        let one = Cyclotomic::one();
        let mut perm = vec![usize::MAX; n];
        let mut counts = vec![0i64; self.conductor as usize];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    accumulate(&mut counts, self.conductor, 0, &[&rows[i][m], &rows[m][j]]);
                }
                let c = self.finish(&mut counts, &d2);
                if c == one {
                    if perm[i] != usize::MAX {
                        return Err(Error::NotPermutation(format!("row {i} has two unit entries")));
                    }
                    perm[i] = j;
                } else if !c.is_zero() {
                    return Err(Error::NotPermutation(format!("entry ({i}, {j}) is {c}")));
                }
            }
            if perm[i] == usize::MAX {
                return Err(Error::NotPermutation(format!("row {i} has no unit entry")));
            }
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::NotPermutation(format!("column {p} is hit twice")));
            }
        }
        Ok(perm)
    }

    /// Whether `S · conj(S)ᵀ = D² · Id` holds exactly.
    pub fn s_is_unitary(&self, s: &[Vec<Cyclotomic>]) -> Result<bool> {
        let n = s.len();
        let rows = self.matrix_root_sums(s)?;
        let conj: Vec<Vec<RootSum>> = rows.iter().map(|r| r.iter().map(|x| conjugate_sum(x, self.conductor)).collect()).collect();
        let d2 = Cyclotomic::from_integer(self.global_dimension() as i64);
        let mut counts = vec![0i64; self.conductor as usize];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    accumulate(&mut counts, self.conductor, 0, &[&rows[i][m], &conj[j][m]]);
                }
                let v = self.finish(&mut counts, &BigRational::one());
                let expected = if i == j { d2.clone() } else { Cyclotomic::zero() };
                if v != expected {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Fusion coefficients `N_{ij}^k = (1/D²) Σ_m S_{im} S_{jm} conj(S_{km}) / dim_m`,
    /// indexed `[i][j][k]`; errors if any is not a rational number.
    pub fn verlinde(&self, s: &[Vec<Cyclotomic>]) -> Result<Vec<Vec<Vec<BigRational>>>> {
        let n = s.len();
        let dims = self.dims();
        let rows = self.matrix_root_sums(s)?;
        let conj: Vec<Vec<RootSum>> = rows.iter().map(|r| r.iter().map(|x| conjugate_sum(x, self.conductor)).collect()).collect();
        let dl = dims.iter().fold(1u64, |acc, d| acc.lcm(d));
        let scale = BigRational::new(BigInt::one(), BigInt::from(dl) * BigInt::from(self.global_dimension()));
        let mut counts = vec![0i64; self.conductor as usize];
        let mut out = vec![vec![vec![BigRational::default(); n]; n]; n];
        for i in 0..n {
            for j in i..n {
                // products S_im S_jm (dl / dim_m), as root sums
                let prods: Vec<RootSum> = (0..n)
                    .map(|m| {
                        accumulate(&mut counts, self.conductor, 0, &[&rows[i][m], &rows[j][m]]);
                        let w = (dl / dims[m]) as i64;
                        let terms = counts
                            .iter_mut()
                            .enumerate()
                            .filter(|(_, c)| **c != 0)
                            .map(|(e, c)| (e as u64, std::mem::take(c) * w))
                            .collect();
                        RootSum { terms }
                    })
                    .collect();
                for k in 0..n {
                    for m in 0..n {
                        accumulate(&mut counts, self.conductor, 0, &[&prods[m], &conj[k][m]]);
                    }
                    let v = self.finish(&mut counts, &scale);
                    let r = v
                        .as_rational()
                        .ok_or_else(|| Error::InternalConsistency(format!("fusion coefficient ({i},{j},{k}) is {v}")))?;
                    out[i][j][k] = r.clone();
                    out[j][i][k] = r;
                }
            }
        }
        Ok(out)
    }

    fn matrix_root_sums(&self, s: &[Vec<Cyclotomic>]) -> Result<Vec<Vec<RootSum>>> {
        let one = BigInt::one();
        s.iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        RootSum::from_cyclotomic(v, self.conductor, &one)
                            .ok_or_else(|| Error::InternalConsistency(format!("{v} is not integral at the conductor")))
                    })
                    .collect()
            })
            .collect()
    }
}

/// An abelian normal subgroup `A` with the cocycle inflated from `G/A`.
#[derive(Clone, Debug)]
pub struct InflationSubgroup {
    elements: Vec<Elem>,
    member: Vec<bool>,
}

impl InflationSubgroup {
    pub fn elements(&self) -> &[Elem] {
        &self.elements
    }

    pub fn contains(&self, x: Elem) -> bool {
        self.member[x]
    }
}

fn is_rotation_minimal(i: usize, j: usize, k: usize) -> bool {
    (i, j, k) <= (j, k, i) && (i, j, k) <= (k, i, j)
}

fn conjugate_sum(x: &RootSum, l: u64) -> RootSum {
    RootSum { terms: x.terms.iter().map(|&(e, m)| ((l - e) % l, m)).collect() }
}

/// Adds `ζ^shift · Π factors` into `counts`.
#[inline]
fn accumulate(counts: &mut [i64], l: u64, shift: u64, factors: &[&RootSum]) {
    match factors {
        [a, b] => {
            for &(e1, m1) in &a.terms {
                for &(e2, m2) in &b.terms {
                    counts[((shift + e1 + e2) % l) as usize] += m1 * m2;
                }
            }
        }
        [a, b, c] => {
            for &(e1, m1) in &a.terms {
                for &(e2, m2) in &b.terms {
                    let (e12, m12) = (shift + e1 + e2, m1 * m2);
                    for &(e3, m3) in &c.terms {
                        counts[((e12 + e3) % l) as usize] += m12 * m3;
                    }
                }
            }
        }
        _ => unreachable!("two or three factors"),
    }
}

/// `[[y⁻¹,x],z] = [[z,y],x] = [[z⁻¹,x⁻¹],y] = 1`.
pub fn borromean_condition(g: &FiniteGroup, x: Elem, y: Elem, z: Elem) -> bool {
    g.commutator(g.commutator(g.inv(y), x), z) == 0
        && g.commutator(g.commutator(z, y), x) == 0
        && g.commutator(g.commutator(g.inv(z), g.inv(x)), y) == 0
}

/// `P(x, y, z) = (x▷y, z, z⁻¹▷x)`, the degree map of one `σ₂⁻¹σ₁` step.
pub fn degree_step(g: &FiniteGroup, x: Elem, y: Elem, z: Elem) -> (Elem, Elem, Elem) {
    (g.conjugate(x, y), z, g.conjugate(g.inv(z), x))
}

fn omega_code(g: &FiniteGroup, w: &ThreeCocycle, a: &AlphaTable, x: Elem, y: Elem, z: Elem, complete: bool) -> u64 {
    let e = w.modulus() as i64;
    let om = |a1, a2, a3| w.value(a1, a2, a3) as i64;
    let al = |b, a1, a2| a.get(b, a1, a2) as i64;
    let xy = g.conjugate(x, y);
    let yz = g.conjugate(y, z);
    let zi = g.inv(z);
    let yi = g.inv(y);
    let zix = g.conjugate(zi, x);
    let zixi = g.conjugate(zi, g.inv(x));
    let mut v = om(xy, x, z) - om(xy, z, zix) + om(yz, xy, zix) - om(yz, zix, y) + om(x, yz, y) - om(x, y, z)
        - al(x, z, zi)
        + al(x, yz, zi)
        - al(xy, zix, zixi)
        + al(y, zixi, x)
        - al(yz, y, yi);
    if complete {
        v += al(z, yi, xy);
    }
    v.rem_euclid(e) as u64
}

fn omega_display(g: &FiniteGroup, w: &ThreeCocycle, a: &AlphaTable, x: Elem, y: Elem, z: Elem) -> u64 {
    let e = w.modulus() as i64;
    let om = |a1, a2, a3| w.value(a1, a2, a3) as i64;
    let al = |b, a1, a2| a.get(b, a1, a2) as i64;
    let xy = g.conjugate(x, y);
    let yz = g.conjugate(y, z);
    let zi = g.inv(z);
    let yi = g.inv(y);
    let zix = g.conjugate(zi, x);
    let zixi = g.conjugate(zi, g.inv(x));
    let v = om(xy, z, zix) - om(xy, x, z) - al(x, z, zi) + om(yz, zix, y) - om(yz, xy, zix) - al(y, zixi, zix)
        + om(x, y, z)
        - om(x, yz, y)
        + al(z, yi, y);
    v.rem_euclid(e) as u64
}

/// `Ω(x, y, z)` from the twelve-term list.
pub fn omega_factor(w: &ThreeCocycle, alpha: &AlphaTable, x: Elem, y: Elem, z: Elem) -> RootOfUnityExponent {
    RootOfUnityExponent::new(w.modulus(), omega_code(w.group(), w, alpha, x, y, z, true) as i64)
}

/// `Ω(x, y, z)` from the nine-term product of three partial factors.
pub fn omega_factor_display(w: &ThreeCocycle, alpha: &AlphaTable, x: Elem, y: Elem, z: Elem) -> RootOfUnityExponent {
    RootOfUnityExponent::new(w.modulus(), omega_display(w.group(), w, alpha, x, y, z) as i64)
}

fn alpha_values(w: &ThreeCocycle, g: Elem, domain: &[Elem]) -> HashMap<(Elem, Elem), u64> {
    let a = w.alpha_table();
    let mut out = HashMap::new();
    for &x in domain {
        for &y in domain {
            out.insert((x, y), a.get(g, x, y));
        }
    }
    out
}

/// A projective table's matrices, when given, must satisfy
/// `ρ(c)ρ(d) = ζ_e^{α(c,d)} ρ(cd)`.
fn check_projective_table(g: &FiniteGroup, t: &CharacterTable, alpha: &HashMap<(Elem, Elem), u64>, e: u64) -> Result<()> {
    for r in 0..t.len() {
        let Ok(rep) = t.representation(r) else { continue };
        let pos = |x: Elem| t.subgroup().binary_search(&x).unwrap();
        for (i, &c) in t.subgroup().iter().enumerate() {
            for (j, &d) in t.subgroup().iter().enumerate() {
                let lhs = rep[i].compose(&rep[j]);
                let rhs = rep[pos(g.mul(c, d))].scaled(&RootOfUnityExponent::new(e, alpha[&(c, d)] as i64));
                let same = lhs.columns.iter().zip(&rhs.columns).all(|((t1, s1), (t2, s2))| {
                    let m = s1.modulus.lcm(&s2.modulus);
                    t1 == t2 && s1.at_modulus(m) % m == s2.at_modulus(m) % m
                });
                if !same {
                    return Err(Error::CharacterTable(format!("row {r} is not α-projective at ({c}, {d})")));
                }
            }
        }
    }
    Ok(())
}

/// Categories for every `u ∈ 0..p` of the pq family.
pub fn pq_categories(p: u64, q: u64) -> Result<Vec<Category>> {
    let g = Arc::new(FiniteGroup::pq_group(p, q)?);
    (0..p)
        .map(|u| Category::new(g.clone(), ThreeCocycle::pq_cocycle(g.clone(), u)?, &CharacterLibrary::new()))
        .collect()
}

/// Integer value of an exact rational, if it is one.
pub fn as_u64(r: &BigRational) -> Option<u64> {
    r.is_integer().then(|| r.to_integer().to_u64()).flatten()
}
