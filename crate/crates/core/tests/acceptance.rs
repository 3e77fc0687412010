use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use drinfeld::center::{as_u64, Category, FillOptions, InvariantBundle, OmegaVariant, Tensor3, TensorMode};
use drinfeld::cocycles::ThreeCocycle;
use drinfeld::cyclotomic::Cyclotomic;
use drinfeld::groups::FiniteGroup;
use drinfeld::matcher::{brute_force_match, match_bundles, verify_permutation, InvariantSet};
use drinfeld::oracle::Oracle;
use drinfeld::pq_family::{
    match_simples, pq_b_closed_form, pq_simples, pq_t_closed_form, proof_support_checks, verify_theorem, PqCategorySpec,
    PqFamily, TheoremOptions,
};
use drinfeld::reps::{CharacterLibrary, CharacterTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const FULL_THEOREM_BUDGET: Duration = Duration::from_secs(60 * 60);
const FAST_THEOREM_BUDGET: Duration = Duration::from_secs(2 * 60);
const PLANTED_TRIALS: usize = 100;
const PLANTED_SIZE: usize = 25;
const BRUTE_TRIALS: usize = 300;
const BRUTE_MAX_SIZE: usize = 8;
const SEED: u64 = 0x5eed_b0b0;

type Outcome = std::result::Result<String, String>;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn order21(u: u64) -> Category {
    PqCategorySpec::new(3, 7, u).unwrap().category().unwrap()
}

/// Every entry of the Borromean trace, indexed `(i·n + j)·n + k`.
fn oracle_tensor(cat: &Category) -> Vec<Cyclotomic> {
    let oracle = Oracle::new(cat).unwrap();
    let n = cat.len();
    (0..n * n * n)
        .into_par_iter()
        .map(|t| oracle.b_entry(t / (n * n), t / n % n, t % n).unwrap())
        .collect()
}

fn general_mismatches(cat: &Category, reference: &[Cyclotomic]) -> usize {
    let n = cat.len();
    (0..n * n * n)
        .into_par_iter()
        .filter(|&t| cat.b_entry_general(t / (n * n), t / n % n, t % n).unwrap() != reference[t])
        .count()
}

fn criterion_1(oracles: &[Vec<Cyclotomic>]) -> Outcome {
    let mut total = 0;
    for u in 0..3 {
        let bad = general_mismatches(&order21(u), &oracles[u as usize]);
        if bad > 0 {
            return Err(format!("u={u}: {bad} of {} entries differ", oracles[u as usize].len()));
        }
        total += oracles[u as usize].len();
    }
    Ok(format!("{total} entries equal over u=0,1,2"))
}

fn criterion_2() -> Outcome {
    for u in 0..3 {
        let cat = order21(u);
        let single = cat.s_matrix();
        if single != cat.s_matrix_oracle() {
            return Err(format!("u={u}: single and double sums differ"));
        }
        let oracle = Oracle::new(&cat).unwrap();
        for i in 0..cat.len() {
            for j in 0..cat.len() {
                if oracle.s_entry(i, j).unwrap() != single[i][j] {
                    return Err(format!("u={u}: Hopf trace differs at ({i},{j})"));
                }
            }
        }
    }
    let g = Arc::new(FiniteGroup::from_json(&fixture("s3_group.json")).unwrap());
    let mut library = CharacterLibrary::new();
    library.extend(CharacterTable::load_all(&g, &fixture("s3_chars.json")).unwrap());
    let cat = Category::new(g.clone(), ThreeCocycle::trivial(g), &library).unwrap();
    let single = cat.s_matrix();
    if single != cat.s_matrix_oracle() {
        return Err("S3: single and double sums differ".into());
    }
    let oracle = Oracle::new(&cat).unwrap();
    for i in 0..cat.len() {
        for j in 0..cat.len() {
            if oracle.s_entry(i, j).unwrap() != single[i][j] {
                return Err(format!("S3: Hopf trace differs at ({i},{j})"));
            }
        }
    }
    Ok("order 21 (u=0,1,2) and S3 with file-supplied characters".into())
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    for (p, q) in [(3, 7), (5, 11)] {
        for u in 0..p {
            let spec = PqCategorySpec::new(p, q, u).unwrap();
            let cat = spec.category().unwrap();
            let simples = pq_simples(&spec);
            let pos = match_simples(&cat, &simples).map_err(|e| e.to_string())?;
            let t = cat.t_matrix();
            for (s, &i) in simples.iter().zip(&pos) {
                if pq_t_closed_form(&spec, s) != t[i] {
                    return Err(format!("({p},{q}) u={u}: {:?}", s.family));
                }
                if let PqFamily::BClass { k, .. } = s.family {
                    if t[i].pow(p as u32) != Cyclotomic::root_of_unity(p, (k * k * u) as i64) {
                        return Err(format!("({p},{q}) u={u}: p-th power of T at {:?}", s.family));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} simples"))
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for (p, q) in [(3, 7), (5, 11)] {
        for u in 0..p {
            let spec = PqCategorySpec::new(p, q, u).unwrap();
            let cat = spec.category().unwrap();
            let simples = pq_simples(&spec);
            let pos = match_simples(&cat, &simples).map_err(|e| e.to_string())?;
            let pairs: Vec<(usize, usize)> = (0..simples.len())
                .flat_map(|x| (0..simples.len()).map(move |y| (x, y)))
                .filter(|&(x, y)| {
                    matches!(simples[x].family, PqFamily::AClass { .. }) && matches!(simples[y].family, PqFamily::BClass { .. })
                })
                .collect();
            let bad: Vec<String> = pairs
                .par_iter()
                .filter_map(|&(x, y)| {
                    let (PqFamily::AClass { l, s }, PqFamily::BClass { k, r }) = (simples[x].family, simples[y].family) else {
                        unreachable!()
                    };
                    let closed = pq_b_closed_form(&spec, l, s, k, r).unwrap();
                    let general = cat.b_entry_general(pos[x], pos[x], pos[y]).unwrap();
                    (closed != general).then(|| format!("({p},{q}) u={u} l={l} s={s} k={k} r={r}"))
                })
                .collect();
            if let Some(first) = bad.first() {
                return Err(format!("{} mismatches, first {first}", bad.len()));
            }
            checked += pairs.len();
        }
    }
    Ok(format!("{checked} entries"))
}

fn criterion_5() -> Outcome {
    let mut notes = Vec::new();
    let full = TheoremOptions { fast: false, jobs: None };
    let start = Instant::now();
    let tb = verify_theorem(5, 11, InvariantSet::TB, full).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !tb.is_identity() {
        return Err(format!("full T,B matrix is not the identity:\n{tb}"));
    }
    if elapsed > FULL_THEOREM_BUDGET {
        return Err(format!("full T,B took {elapsed:?}"));
    }
    notes.push(format!("T,B full {:.1}s", elapsed.as_secs_f64()));

    let start = Instant::now();
    let fast = verify_theorem(5, 11, InvariantSet::TB, TheoremOptions { fast: true, jobs: None }).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !fast.is_identity() {
        return Err(format!("fast T,B matrix is not the identity:\n{fast}"));
    }
    if elapsed > FAST_THEOREM_BUDGET {
        return Err(format!("fast T,B took {elapsed:?}"));
    }
    notes.push(format!("T,B fast {:.1}s", elapsed.as_secs_f64()));

    let st = verify_theorem(5, 11, InvariantSet::ST, full).map_err(|e| e.to_string())?;
    if st.classes != vec![vec![0], vec![1, 4], vec![2, 3]] {
        return Err(format!("S,T classes {:?}", st.classes));
    }
    notes.push("S,T classes {0} {1,4} {2,3}".into());
    let facts = proof_support_checks(5, 11).map_err(|e| e.to_string())?;
    if !facts.ok() {
        return Err(format!("number-theoretic facts fail: {facts:?}"));
    }
    Ok(notes.join(", "))
}

fn full_general_tensor(cat: &Category) -> Tensor3 {
    cat.b_tensor(FillOptions { mode: TensorMode::General, cyclic: false, jobs: None }).unwrap()
}

fn criterion_6() -> Outcome {
    for u in 0..3 {
        let cat = order21(u);
        let b = full_general_tensor(&cat);
        let dual = cat.duality_permutation(&cat.s_matrix()).map_err(|e| e.to_string())?;
        let n = cat.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = b.get(i, j, k);
                    if v != b.get(j, k, i) {
                        return Err(format!("u={u}: rotation fails at ({i},{j},{k})"));
                    }
                    if v != b.get(j, i, dual[k]) {
                        return Err(format!("u={u}: transposition with dual fails at ({i},{j},{k})"));
                    }
                    if *v != b.get(k, j, i).conjugate() {
                        return Err(format!("u={u}: reversal fails at ({i},{j},{k})"));
                    }
                }
            }
        }
    }
    Ok("all 25³ entries, u=0,1,2".into())
}

fn criterion_7() -> Outcome {
    for u in 0..3 {
        let cat = order21(u);
        let dims = cat.dims();
        let total: u64 = dims.iter().map(|d| d * d).sum();
        if total != 21 * 21 {
            return Err(format!("u={u}: Σdim² = {total}"));
        }
        let s = cat.s_matrix();
        let n = cat.len();
        for i in 0..n {
            if s[0][i] != Cyclotomic::from_integer(dims[i] as i64) {
                return Err(format!("u={u}: unit row differs at {i}"));
            }
            for j in 0..n {
                if s[i][j] != s[j][i] {
                    return Err(format!("u={u}: S not symmetric at ({i},{j})"));
                }
            }
        }
        if !cat.s_is_unitary(&s).map_err(|e| e.to_string())? {
            return Err(format!("u={u}: S·conj(S)ᵀ ≠ D²·Id"));
        }
        for i in 0..n {
            for j in 0..n {
                if cat.b_entry_general(i, j, 0).unwrap() != Cyclotomic::from_integer((dims[i] * dims[j]) as i64) {
                    return Err(format!("u={u}: B[{i}][{j}][unit]"));
                }
            }
        }
        let fusion = cat.verlinde(&s).map_err(|e| e.to_string())?;
        if let Some(bad) = fusion.iter().flatten().flatten().find(|c| as_u64(c).is_none()) {
            return Err(format!("u={u}: fusion coefficient {bad}"));
        }
    }
    Ok("u=0,1,2".into())
}

fn random_bundle(rng: &mut ChaCha8Rng, n: usize) -> InvariantBundle {
    let root = |k: u64| Cyclotomic::root_of_unity(3, k as i64);
    let mut s = vec![vec![Cyclotomic::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = Cyclotomic::from_integer(rng.gen_range(0..2));
            s[i][j] = v.clone();
            s[j][i] = v;
        }
    }
    InvariantBundle {
        simples: (0..n).map(|i| (i, 0)).collect(),
        dims: (0..n).map(|_| rng.gen_range(1..3)).collect(),
        t: (0..n).map(|_| root(rng.gen_range(0..2))).collect(),
        s: Some(s),
        b: Some(Tensor3::from_fn(n, |_, _, _| root(rng.gen_range(0..2)))),
    }
}

fn perturb(rng: &mut ChaCha8Rng, bundle: &mut InvariantBundle) {
    let n = bundle.len();
    let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
    match rng.gen_range(0..3) {
        0 => bundle.t[i] = bundle.t[i].mul(&Cyclotomic::root_of_unity(3, 1)),
        1 => {
            let s = bundle.s.as_mut().unwrap();
            let v = s[i][j].add(&Cyclotomic::one());
            s[i][j] = v.clone();
            s[j][i] = v;
        }
        _ => {
            let b = bundle.b.take().unwrap();
            bundle.b = Some(Tensor3::from_fn(n, |x, y, z| {
                let v = b.get(x, y, z).clone();
                if (x, y, z) == (i, j, k) {
                    v.mul(&Cyclotomic::root_of_unity(3, 1))
                } else {
                    v
                }
            }));
        }
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sets = [InvariantSet::TB, InvariantSet::ST, InvariantSet { t: true, s: true, b: true }];
    let bundles: Vec<InvariantBundle> = (0..3)
        .map(|u| {
            let cat = order21(u);
            let b = cat.b_tensor(FillOptions { mode: TensorMode::Auto, cyclic: true, jobs: None }).unwrap();
            cat.bundle(true, Some(b))
        })
        .collect();
    assert_eq!(bundles[0].len(), PLANTED_SIZE);
    for trial in 0..PLANTED_TRIALS {
        let which = sets[trial % 3];
        let base = &bundles[trial / 3 % 3];
        let mut perm: Vec<usize> = (0..PLANTED_SIZE).collect();
        perm.shuffle(&mut rng);
        let shuffled = base.permuted(&perm);
        let result = match_bundles(base, &shuffled, which).map_err(|e| e.to_string())?;
        let Some(found) = result.permutation else {
            return Err(format!("planted trial {trial} ({which}) not recovered"));
        };
        if verify_permutation(base, &shuffled, &found, which).unwrap().is_err() {
            return Err(format!("planted trial {trial}: returned permutation fails verification"));
        }
    }
    let mut agreements = [0usize; 2];
    for trial in 0..BRUTE_TRIALS {
        let n = rng.gen_range(1..=BRUTE_MAX_SIZE);
        let which = sets[trial % 3];
        let a = random_bundle(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut b = a.permuted(&perm);
        if trial % 2 == 1 {
            perturb(&mut rng, &mut b);
        }
        let fast = match_bundles(&a, &b, which).map_err(|e| e.to_string())?;
        let slow = brute_force_match(&a, &b, which).map_err(|e| e.to_string())?;
        if fast.found() != slow.is_some() {
            return Err(format!("trial {trial} (n={n}, {which}): matcher {} vs brute force {}", fast.found(), slow.is_some()));
        }
        if let Some(p) = &fast.permutation {
            if verify_permutation(&a, &b, p, which).unwrap().is_err() {
                return Err(format!("trial {trial}: returned permutation fails verification"));
            }
        }
        agreements[fast.found() as usize] += 1;
    }
    Ok(format!(
        "{PLANTED_TRIALS} planted at {PLANTED_SIZE} indices; brute force agrees on {BRUTE_TRIALS} ({} match, {} no match)",
        agreements[1], agreements[0]
    ))
}

fn criterion_9(oracles: &[Vec<Cyclotomic>]) -> Outcome {
    let mismatches = |variant: OmegaVariant| -> usize {
        (0..3).map(|u| general_mismatches(&order21(u).with_variant(variant), &oracles[u as usize])).sum()
    };
    let code = mismatches(OmegaVariant::Code);
    let display = mismatches(OmegaVariant::Display);
    let total: usize = oracles.iter().map(Vec::len).sum();
    let summary = format!("code-variant {code}/{total} mismatches, display-variant {display}/{total} mismatches");
    match (code == 0, display == 0) {
        (true, false) => Ok(format!("code-variant agrees with the oracle; {summary}")),
        (false, true) => Ok(format!("display-variant agrees with the oracle; {summary}")),
        _ => Err(summary),
    }
}

fn main() {
    let start = Instant::now();
    let oracles: Vec<Vec<Cyclotomic>> = (0..3).map(|u| oracle_tensor(&order21(u))).collect();
    println!("Borromean traces for order 21 computed in {:.1}s", start.elapsed().as_secs_f64());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("B formula equals Borromean trace", Box::new(|| criterion_1(&oracles))),
        ("S formulas equal Hopf trace", Box::new(criterion_2)),
        ("closed-form T", Box::new(criterion_3)),
        ("closed-form B", Box::new(criterion_4)),
        ("theorem at (5,11)", Box::new(criterion_5)),
        ("B symmetries", Box::new(criterion_6)),
        ("structural invariants", Box::new(criterion_7)),
        ("matcher soundness and completeness", Box::new(criterion_8)),
        ("Ω adjudication", Box::new(|| criterion_9(&oracles))),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.1}s]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}) [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
