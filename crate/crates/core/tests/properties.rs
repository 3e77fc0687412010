use std::sync::{Arc, OnceLock};

use drinfeld::center::{Category, InvariantBundle, Tensor3};
use drinfeld::cocycles::ThreeCocycle;
use drinfeld::cyclotomic::Cyclotomic;
use drinfeld::groups::FiniteGroup;
use drinfeld::matcher::{match_bundles, verify_permutation, InvariantSet};
use drinfeld::oracle::{BraidGenerator, BraidWord, Oracle};
use drinfeld::pq_family::{pq_b_closed_form, PqCategorySpec};
use proptest::prelude::*;

const PQ: [(u64, u64); 4] = [(3, 7), (3, 13), (5, 11), (7, 29)];

fn groups() -> &'static [Arc<FiniteGroup>] {
    static G: OnceLock<Vec<Arc<FiniteGroup>>> = OnceLock::new();
    G.get_or_init(|| PQ.iter().map(|&(p, q)| Arc::new(FiniteGroup::pq_group(p, q).unwrap())).collect())
}

fn order21() -> &'static [Category] {
    static C: OnceLock<Vec<Category>> = OnceLock::new();
    C.get_or_init(|| (0..3).map(|u| PqCategorySpec::new(3, 7, u).unwrap().category().unwrap()).collect())
}

fn pure_block() -> impl Strategy<Value = Vec<BraidGenerator>> {
    use BraidGenerator::*;
    prop::sample::select(vec![
        vec![S1, S1],
        vec![S2, S2],
        vec![S1Inv, S1Inv],
        vec![S2Inv, S2Inv],
        vec![S1, S2, S2, S1Inv],
        vec![S2Inv, S1, S1, S2],
        vec![S1, S2, S1, S2, S1, S2],
    ])
}

fn pure_word() -> impl Strategy<Value = BraidWord> {
    prop::collection::vec(pure_block(), 0..3).prop_map(|bs| BraidWord(bs.concat()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugation_stays_in_class(gi in 0usize..4, f in 0usize..1000, g in 0usize..1000) {
        let grp = &groups()[gi];
        let (f, g) = (f % grp.order(), g % grp.order());
        prop_assert_eq!(grp.class_of(grp.conjugate(f, g)), grp.class_of(g));
        prop_assert_eq!(grp.class_size(g) * grp.centralizer(g).len(), grp.order());
        prop_assert_eq!(grp.inv(grp.commutator(f, g)), grp.commutator(g, f));
    }

    #[test]
    fn pq_relations(gi in 0usize..4) {
        let grp = &groups()[gi];
        let pq = grp.pq_params().unwrap();
        let (a, b) = (pq.element(1, 0), pq.element(0, 1));
        prop_assert_eq!(grp.pow(a, pq.q), 0);
        prop_assert_eq!(grp.pow(b, pq.p), 0);
        prop_assert_eq!(grp.conjugate(b, a), grp.pow(a, pq.n));
        let total: usize = grp.conjugacy_classes().iter().map(|c| c.members.len()).sum();
        prop_assert_eq!(total, grp.order());
    }

    #[test]
    fn root_of_unity_order(n in 1u64..40, k in 0i64..80) {
        let z = Cyclotomic::root_of_unity(n, k);
        let order = n / num_integer::gcd(n, k as u64);
        prop_assert_eq!(z.pow(order as u32), Cyclotomic::one());
        for d in 1..order {
            prop_assert_ne!(z.pow(d as u32), Cyclotomic::one());
        }
    }

    #[test]
    fn alpha_is_a_two_cocycle(gi in 0usize..2, u in 0u64..3, g in 0usize..100, xs in prop::collection::vec(0usize..100, 3)) {
        let grp = &groups()[gi];
        let w = ThreeCocycle::pq_cocycle(grp.clone(), u).unwrap();
        let alpha = w.alpha_table();
        let g = g % grp.order();
        let cent = grp.centralizer(g);
        let [x, y, z] = [0, 1, 2].map(|i| cent[xs[i] % cent.len()]);
        let e = alpha.modulus();
        let lhs = (alpha.get(g, x, y) + alpha.get(g, grp.mul(x, y), z)) % e;
        let rhs = (alpha.get(g, y, z) + alpha.get(g, x, grp.mul(y, z))) % e;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pq_cocycle_is_additive_in_the_exponent(gi in 0usize..3, u in 0u64..7, v in 0u64..7, xs in prop::collection::vec(0usize..1000, 3)) {
        let grp = &groups()[gi];
        let p = grp.pq_params().unwrap().p;
        let (u, v) = (u % p, v % p);
        let [x, y, z] = [0, 1, 2].map(|i| xs[i] % grp.order());
        let wu = ThreeCocycle::pq_cocycle(grp.clone(), u).unwrap();
        let wv = ThreeCocycle::pq_cocycle(grp.clone(), v).unwrap();
        let wsum = ThreeCocycle::pq_cocycle(grp.clone(), (u + v) % p).unwrap();
        let e = p * p;
        prop_assert_eq!((wu.value(x, y, z) + wv.value(x, y, z)) % e, wsum.value(x, y, z) % e);
    }

    #[test]
    fn inserting_a_cancelling_pair_keeps_the_trace(u in 0usize..3, w in pure_word(), cs in prop::collection::vec(0usize..25, 3), at in 0usize..8) {
        let cat = &order21()[u];
        let oracle = Oracle::new(cat).unwrap();
        let colors = [cs[0], cs[1], cs[2]];
        let mut longer = w.0.clone();
        let pos = at.min(longer.len());
        longer.splice(pos..pos, [BraidGenerator::S1, BraidGenerator::S1Inv]);
        let a = oracle.braid_word_trace(&w, colors).unwrap();
        let b = oracle.braid_word_trace(&BraidWord(longer), colors).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn borromean_trace_rotates(u in 0usize..3, cs in prop::collection::vec(0usize..25, 3)) {
        let cat = &order21()[u];
        let oracle = Oracle::new(cat).unwrap();
        let word = BraidWord::borromean();
        let b = oracle.braid_word_trace(&word, [cs[0], cs[1], cs[2]]).unwrap();
        prop_assert_eq!(&b, &oracle.braid_word_trace(&word, [cs[1], cs[2], cs[0]]).unwrap());
        prop_assert_eq!(&b, &cat.b_entry_general(cs[0], cs[1], cs[2]).unwrap());
    }

    #[test]
    fn closed_form_b_ignores_r_and_the_sign_of_t(gi in 0usize..3, u in 0u64..7, l in 1u64..29, s in 0u64..29, k in 1u64..7, r1 in 0u64..7, r2 in 0u64..7) {
        let (p, q) = PQ[gi];
        let spec = PqCategorySpec::new(p, q, u % p).unwrap();
        let k = 1 + (k - 1) % (p - 1);
        let (r1, r2) = (r1 % p, r2 % p);
        let v = pq_b_closed_form(&spec, l % q, s % q, k, r1).unwrap();
        prop_assert_eq!(&v, &pq_b_closed_form(&spec, l % q, s % q, k, r2).unwrap());
        prop_assert_eq!(&v, &pq_b_closed_form(&spec, l % q, s % q, p - k, r1).unwrap());
    }

    #[test]
    fn planted_permutations_are_recovered(seed in any::<u64>(), n in 1usize..12, which in 0usize..3) {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let which = [InvariantSet::TB, InvariantSet::ST, InvariantSet { t: true, s: true, b: true }][which];
        let root = |k: u64| Cyclotomic::root_of_unity(4, k as i64);
        let mut s = vec![vec![Cyclotomic::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = root(rng.gen_range(0..2));
                s[i][j] = v.clone();
                s[j][i] = v;
            }
        }
        let a = InvariantBundle {
            simples: (0..n).map(|i| (i, 0)).collect(),
            dims: vec![1; n],
            t: (0..n).map(|_| root(rng.gen_range(0..2))).collect(),
            s: Some(s),
            b: Some(Tensor3::from_fn(n, |_, _, _| root(rng.gen_range(0..3)))),
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let b = a.permuted(&perm);
        let found = match_bundles(&a, &b, which).unwrap().permutation;
        prop_assert!(found.is_some());
        prop_assert!(verify_permutation(&a, &b, &found.unwrap(), which).unwrap().is_ok());
    }
}
