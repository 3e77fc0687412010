//! Command-line front end. Exit codes: 0 success, 1 no match or failed
//! self-test, 2 usage error, 3 validation error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::center::{Category, FillOptions, InvariantBundle, OmegaVariant, TensorMode};
use crate::cocycles::ThreeCocycle;
use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteGroup};
use crate::matcher::{match_bundles, InvariantSet};
use crate::oracle::{BraidWord, Oracle};
use crate::pq_family::{self, PqCategorySpec, TheoremOptions};
use crate::reps::{abelian_character_table, pq_character_table, CharacterLibrary, CharacterTable};

/// Environment variable holding the default worker count for tensor fills.
pub const JOBS_ENV: &str = "ZWG_JOBS";

#[derive(Parser, Debug)]
#[command(name = "drinfeld", version, about = "Modular data and Borromean tensors of twisted Drinfeld doubles")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Finite groups: `pq:P,Q`, `cyclic:M`, `trivial`, or a JSON file.
    #[command(subcommand)]
    Group(GroupCmd),
    #[command(subcommand)]
    Cocycle(CocycleCmd),
    #[command(subcommand)]
    Chars(CharsCmd),
    /// List the simple objects.
    Simples(CategoryArgs),
    /// Bundle with T.
    Tmatrix(CategoryArgs),
    /// Bundle with T and S.
    Smatrix {
        #[command(flatten)]
        cat: CategoryArgs,
        /// Use the double-sum formula.
        #[arg(long)]
        double_sum: bool,
    },
    /// Bundle with T and B.
    Btensor {
        #[command(flatten)]
        cat: CategoryArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Compute every entry instead of one per cyclic orbit.
        #[arg(long)]
        full: bool,
        /// Include S.
        #[arg(long)]
        with_s: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Compare two bundles up to relabeling of simples.
    Match {
        #[arg(long, default_value = "T,B")]
        invariants: InvariantSet,
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Pq(PqCmd),
    /// Property suite at order at most 21.
    Selftest {
        /// Perturb one Ω term in the formula evaluation.
        #[arg(long)]
        inject_fault: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    General,
    Auto,
}

#[derive(Args, Debug)]
struct CategoryArgs {
    group: String,
    /// `trivial`, `pq:U` on a pq group, or a JSON file.
    cocycle: String,
    /// Character tables for nonabelian centralizers (repeatable).
    #[arg(long = "chars")]
    chars: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GroupCmd {
    /// Order, classes and centralizer sizes.
    Info { group: String },
    /// Multiplication table JSON.
    Export {
        group: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CocycleCmd {
    /// Check normalization and the cocycle identity.
    Verify { group: String, cocycle: PathBuf },
    /// The generating cocycle of the pq group raised to the power `u`.
    Pq {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        u: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CharsCmd {
    /// Character table of an abelian subgroup.
    Abelian {
        group: String,
        /// Subgroup element indices, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "centralizer")]
        subgroup: Vec<Elem>,
        /// Use the centralizer of this element.
        #[arg(long)]
        centralizer: Option<Elem>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Irreducible characters of the pq group.
    Pq {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a character table file.
    Load { group: String, file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Closure trace of a pure braid word colored by three simples.
    Trace {
        #[arg(long, default_value = "s2' s1 s2' s1 s2' s1")]
        word: BraidWord,
        /// Three simple indices, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        colors: Vec<usize>,
        #[command(flatten)]
        cat: CategoryArgs,
    },
}

#[derive(Subcommand, Debug)]
enum PqCmd {
    /// Pairwise matching of the p twisted doubles.
    Verify {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value = "T,B")]
        invariants: InvariantSet,
        /// Restrict B to the entries the uniqueness argument uses.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bundle of one twisted double.
    Bundle {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        u: u64,
        #[arg(long, default_value = "S,T")]
        invariants: InvariantSet,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The two number-theoretic facts behind the uniqueness argument.
    Facts {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
    },
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}

fn default_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    match flag {
        Some(j) => Ok(Some(j)),
        None => match std::env::var(JOBS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::Parameter(format!("{JOBS_ENV} must be a positive integer, got {v:?}"))),
            Err(_) => Ok(None),
        },
    }
}

/// Resolves `pq:P,Q`, `cyclic:M`, `trivial`, or a JSON file.
pub fn load_group(spec: &str) -> Result<Arc<FiniteGroup>> {
    let parse = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::Parameter(format!("bad number {s:?} in {spec:?}")));
    let g = if let Some(rest) = spec.strip_prefix("pq:") {
        let (p, q) = rest.split_once(',').ok_or_else(|| Error::Parameter(format!("expected pq:P,Q, got {spec:?}")))?;
        FiniteGroup::pq_group(parse(p)?, parse(q)?)?
    } else if let Some(m) = spec.strip_prefix("cyclic:") {
        let m = parse(m)?;
        if m == 0 {
            return Err(Error::Parameter("cyclic group order must be positive".into()));
        }
        FiniteGroup::cyclic(m as usize)
    } else if spec == "trivial" {
        FiniteGroup::cyclic(1)
    } else {
        FiniteGroup::from_json(&read(Path::new(spec))?)?
    };
    Ok(Arc::new(g))
}

/// Resolves `trivial`, `pq:U`, or a JSON file.
pub fn load_cocycle(group: &Arc<FiniteGroup>, spec: &str) -> Result<ThreeCocycle> {
    if spec == "trivial" {
        Ok(ThreeCocycle::trivial(group.clone()))
    } else if let Some(u) = spec.strip_prefix("pq:") {
        let u = u.trim().parse().map_err(|_| Error::Parameter(format!("bad exponent in {spec:?}")))?;
        ThreeCocycle::pq_cocycle(group.clone(), u)
    } else {
        ThreeCocycle::from_json(group.clone(), &read(Path::new(spec))?)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| io_error(path, e);
    let name = path.file_name().ok_or_else(|| io(std::io::ErrorKind::InvalidInput.into()))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(Error::from)
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string(v)?;
    text.push('\n');
    emit(out, &text)
}

fn category(args: &CategoryArgs) -> Result<Category> {
    let group = load_group(&args.group)?;
    let cocycle = load_cocycle(&group, &args.cocycle)?;
    let mut library = CharacterLibrary::new();
    for path in &args.chars {
        library.extend(CharacterTable::load_all(&group, &read(path)?)?);
    }
    Category::new(group, cocycle, &library)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Group(GroupCmd::Info { group }) => {
            let g = load_group(&group)?;
            let mut text = format!("name: {}\norder: {}\nclasses: {}\n", g.name(), g.order(), g.conjugacy_classes().len());
            for (i, c) in g.conjugacy_classes().iter().enumerate() {
                text += &format!(
                    "  class {i}: representative {} size {} centralizer {}\n",
                    c.representative,
                    c.members.len(),
                    g.centralizer(c.representative).len()
                );
            }
            emit(None, &text)?;
        }
        Command::Group(GroupCmd::Export { group, out }) => emit_json(out.as_deref(), &load_group(&group)?.to_json())?,
        Command::Cocycle(CocycleCmd::Verify { group, cocycle }) => {
            let g = load_group(&group)?;
            let w = ThreeCocycle::from_json(g, &read(&cocycle)?)?;
            emit(None, &format!("ok: normalized 3-cocycle with values mod {}\n", w.modulus()))?;
        }
        Command::Cocycle(CocycleCmd::Pq { p, q, u, out }) => {
            let g = Arc::new(FiniteGroup::pq_group(p, q)?);
            emit_json(out.as_deref(), &ThreeCocycle::pq_cocycle(g, u)?.to_json())?;
        }
        Command::Chars(CharsCmd::Abelian { group, subgroup, centralizer, out }) => {
            let g = load_group(&group)?;
            let h = match centralizer {
                Some(x) if x < g.order() => g.centralizer(x).to_vec(),
                Some(x) => return Err(Error::Parameter(format!("element {x} out of range"))),
                None if subgroup.is_empty() => return Err(Error::Parameter("give --subgroup or --centralizer".into())),
                None => {
                    let mut h = subgroup;
                    h.sort_unstable();
                    h.dedup();
                    h
                }
            };
            emit_json(out.as_deref(), &abelian_character_table(&g, &h)?.to_json())?;
        }
        Command::Chars(CharsCmd::Pq { p, q, out }) => {
            let g = FiniteGroup::pq_group(p, q)?;
            emit_json(out.as_deref(), &pq_character_table(&g)?.to_json())?;
        }
        Command::Chars(CharsCmd::Load { group, file }) => {
            let g = load_group(&group)?;
            let tables = CharacterTable::load_all(&g, &read(&file)?)?;
            let mut text = String::new();
            for t in &tables {
                let degrees: Vec<String> = (0..t.len()).map(|r| t.degree(r).to_string()).collect();
                text += &format!(
                    "subgroup of order {}: {} rows, degrees [{}]{}\n",
                    t.subgroup().len(),
                    t.len(),
                    degrees.join(", "),
                    if t.is_projective() { ", projective" } else { "" }
                );
            }
            emit(None, &text)?;
        }
        Command::Simples(args) => {
            let cat = category(&args)?;
            let rows: Vec<Value> = cat
                .simples()
                .iter()
                .map(|s| {
                    json!({
                        "label": [s.class, s.row],
                        "representative": s.representative,
                        "class_size": s.class_size,
                        "degree": s.degree(),
                        "dim": s.dim(),
                    })
                })
                .collect();
            emit_json(args.out.as_deref(), &json!({ "simples": rows, "global_dimension": cat.global_dimension() }))?;
        }
        Command::Tmatrix(args) => {
            let cat = category(&args)?;
            emit_json(args.out.as_deref(), &cat.bundle(false, None).to_json())?;
        }
        Command::Smatrix { cat: args, double_sum } => {
            let cat = category(&args)?;
            let mut bundle = cat.bundle(true, None);
            if double_sum {
                bundle.s = Some(cat.s_matrix_oracle());
            }
            emit_json(args.out.as_deref(), &bundle.to_json())?;
        }
        Command::Btensor { cat: args, mode, full, with_s, jobs } => {
            let cat = category(&args)?;
            let mode = match mode {
                ModeArg::General => TensorMode::General,
                ModeArg::Auto => TensorMode::Auto,
            };
            let b = cat.b_tensor(FillOptions { mode, cyclic: !full, jobs: default_jobs(jobs)? })?;
            emit_json(args.out.as_deref(), &cat.bundle(with_s, Some(b)).to_json())?;
        }
        Command::Oracle(OracleCmd::Trace { word, colors, cat: args }) => {
            if colors.len() != 3 {
                return Err(Error::Parameter(format!("expected three colors, got {}", colors.len())));
            }
            let cat = category(&args)?;
            if let Some(&c) = colors.iter().find(|&&c| c >= cat.len()) {
                return Err(Error::Parameter(format!("color {c} out of range (0..{})", cat.len())));
            }
            let oracle = Oracle::new(&cat)?;
            let v = oracle.braid_word_trace(&word, [colors[0], colors[1], colors[2]])?;
            emit(args.out.as_deref(), &format!("{}\n", v.render()))?;
        }
        Command::Match { invariants, a, b, out } => {
            let load = |p: &Path| -> Result<InvariantBundle> { InvariantBundle::from_json(&serde_json::from_str(&read(p)?)?) };
            let result = match_bundles(&load(&a)?, &load(&b)?, invariants)?;
            emit_json(out.as_deref(), &result.to_json())?;
            return Ok(if result.found() { 0 } else { 1 });
        }
        Command::Pq(PqCmd::Verify { p, q, invariants, fast, jobs, out }) => {
            let report = pq_family::verify_theorem(p, q, invariants, TheoremOptions { fast, jobs: default_jobs(jobs)? })?;
            emit(None, &format!("{report}\n"))?;
            if let Some(path) = out {
                emit_json(Some(&path), &report.to_json())?;
            }
        }
        Command::Pq(PqCmd::Bundle { p, q, u, invariants, jobs, out }) => {
            let cat = PqCategorySpec::new(p, q, u)?.category()?;
            let b = if invariants.b {
                Some(cat.b_tensor(FillOptions { mode: TensorMode::Auto, cyclic: true, jobs: default_jobs(jobs)? })?)
            } else {
                None
            };
            emit_json(out.as_deref(), &cat.bundle(invariants.s, b).to_json())?;
        }
        Command::Pq(PqCmd::Facts { p, q }) => {
            let r = pq_family::proof_support_checks(p, q)?;
            let mut text = format!("differences n^m - n^-m mod q: {:?} distinct: {}\n", r.differences, r.distinct);
            for (t, lhs, rhs) in &r.square_sums {
                text += &format!("t={t}: sum of squares {lhs}, -2p(n^t - n^-t)^2 = {rhs}\n");
            }
            emit(None, &text)?;
            return Ok(if r.ok() { 0 } else { 1 });
        }
        Command::Selftest { inject_fault } => {
            let report = selftest(if inject_fault { OmegaVariant::Perturbed } else { OmegaVariant::Code });
            let mut text = String::new();
            for (name, outcome) in &report {
                match outcome {
                    Ok(()) => text += &format!("PASS {name}\n"),
                    Err(e) => text += &format!("FAIL {name}: {e}\n"),
                }
            }
            emit(None, &text)?;
            return Ok(if report.iter().all(|(_, r)| r.is_ok()) { 0 } else { 1 });
        }
    }
    Ok(0)
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InternalConsistency(what()))
    }
}

/// Deterministic spread of `count` index triples over `0..n`.
fn sample_triples(n: usize, count: usize) -> Vec<[usize; 3]> {
    let total = n * n * n;
    let stride = (total / count.max(1)).max(1);
    (0..total).step_by(stride).map(|t| [t / (n * n), t / n % n, t % n]).collect()
}

/// Property suite on the order-21 group; `variant` selects the Ω term list
/// used by the formulas, so a wrong list shows up as oracle disagreement.
pub fn selftest(variant: OmegaVariant) -> Vec<(&'static str, Result<()>)> {
    let mut out: Vec<(&'static str, Result<()>)> = Vec::new();
    let cats: Result<Vec<Category>> = (0..3)
        .map(|u| Ok(PqCategorySpec::new(3, 7, u)?.category()?.with_variant(variant)))
        .collect();
    let cats = match cats {
        Ok(c) => c,
        Err(e) => return vec![("construct categories", Err(e))],
    };
    let each = |f: &dyn Fn(&Category) -> Result<()>| cats.iter().try_for_each(f);

    out.push(("sum of squared dimensions", each(&|c| {
        let total: u64 = c.dims().iter().map(|d| d * d).sum();
        check(total == 441, || format!("got {total}"))
    })));
    out.push(("quasi-action axioms", each(&|c| Oracle::new(c)?.verify_all())));
    out.push(("single-sum S equals double-sum S", each(&|c| {
        check(c.s_matrix() == c.s_matrix_oracle(), || "S formulas disagree".into())
    })));
    out.push(("S equals Hopf-link trace", each(&|c| {
        let s = c.s_matrix();
        let o = Oracle::new(c)?;
        for (i, j) in sample_triples(c.len(), 120).into_iter().map(|[i, j, _]| (i, j)) {
            check(o.s_entry(i, j)? == s[i][j], || format!("S[{i}][{j}]"))?;
        }
        Ok(())
    })));
    out.push(("S symmetric, unitary, unit row", each(&|c| {
        let s = c.s_matrix();
        let dims = c.dims();
        for i in 0..c.len() {
            check(s[0][i] == crate::cyclotomic::Cyclotomic::from_integer(dims[i] as i64), || format!("S[0][{i}]"))?;
            for j in 0..c.len() {
                check(s[i][j] == s[j][i], || format!("S[{i}][{j}] not symmetric"))?;
            }
        }
        check(c.s_is_unitary(&s)?, || "S is not unitary".into())
    })));
    out.push(("T closed form", cats.iter().enumerate().try_for_each(|(u, c)| {
        let spec = PqCategorySpec::new(3, 7, u as u64)?;
        let simples = pq_family::pq_simples(&spec);
        let pos = pq_family::match_simples(c, &simples)?;
        let t = c.t_matrix();
        for (s, &i) in simples.iter().zip(&pos) {
            check(pq_family::pq_t_closed_form(&spec, s) == t[i], || format!("{:?}", s.family))?;
        }
        Ok(())
    })));
    out.push(("B formula equals Borromean trace", each(&|c| {
        let o = Oracle::new(c)?;
        for [i, j, k] in sample_triples(c.len(), 150) {
            check(o.b_entry(i, j, k)? == c.b_entry_general(i, j, k)?, || format!("B[{i}][{j}][{k}]"))?;
        }
        Ok(())
    })));
    out.push(("B two-sum equals three-sum", each(&|c| {
        for [i, j, k] in sample_triples(c.len(), 400) {
            check(c.b_entry_general(i, j, k)? == c.b_entry_oracle_formula(i, j, k)?, || format!("B[{i}][{j}][{k}]"))?;
        }
        Ok(())
    })));
    out.push(("B cyclic and conjugation symmetry", each(&|c| {
        for [i, j, k] in sample_triples(c.len(), 300) {
            let b = c.b_entry_general(i, j, k)?;
            check(b == c.b_entry_general(j, k, i)?, || format!("B[{i}][{j}][{k}] rotation"))?;
            check(b == c.b_entry_general(k, j, i)?.conjugate(), || format!("B[{i}][{j}][{k}] reversal"))?;
        }
        Ok(())
    })));
    out.push(("B with a unit color", each(&|c| {
        let dims = c.dims();
        for i in 0..c.len() {
            for j in 0..c.len() {
                let want = crate::cyclotomic::Cyclotomic::from_integer((dims[i] * dims[j]) as i64);
                check(c.b_entry_general(i, j, 0)? == want, || format!("B[{i}][{j}][0]"))?;
            }
        }
        Ok(())
    })));
    out.push(("uniqueness facts", pq_family::proof_support_checks(3, 7).and_then(|r| check(r.ok(), || format!("{r:?}")))));
    out.push(("(T,B) separates the twists", {
        pq_family::verify_theorem(3, 7, InvariantSet::TB, TheoremOptions { fast: true, jobs: None })
            .and_then(|r| check(r.is_identity(), || r.to_string()))
    }));
    out.push(("unsupported centralizer is reported", {
        let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let idx = |p: [usize; 3]| perms.iter().position(|&q| q == p).expect("closed under composition");
        let table = perms.iter().map(|x| perms.iter().map(|y| idx([x[y[0]], x[y[1]], x[y[2]]])).collect()).collect();
        let s3 = FiniteGroup::from_multiplication_table(table, "S3").map(Arc::new);
        match s3.and_then(|g| Category::new(g.clone(), ThreeCocycle::trivial(g), &CharacterLibrary::new())) {
            Err(Error::UnsupportedCentralizer(_)) => Ok(()),
            Err(e) => Err(e),
            Ok(_) => Err(Error::InternalConsistency("nonabelian centralizer accepted without a table".into())),
        }
    }));
    out
}
