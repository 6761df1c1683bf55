//! The `alba` command line: classify, reduce, verify, lemmas.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{dotted_roles, is_inductive, is_meta_inductive, is_sahlqvist};
use crate::engine::{is_safe, parse_script, run_alba, trace_jsonl, Derivation, Mode, Status, Strategy};
use crate::models::{
    check_lemma_suite, parse_lattice, random_dle, role_axioms_hold, verify_correspondence, verify_steps, Agreement, FiniteDLE,
};
use crate::signature::{parse_inequality, parse_signature, print_inequality, Inequality, Layer, Signature};

pub const EXIT_OK: i32 = 0;
/// verification found a divergence or a failing lemma
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_UNCLASSIFIED: i32 = 3;
pub const EXIT_REDUCE: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

const SAFE_BUDGET: usize = 5;

#[derive(Parser, Debug)]
#[command(name = "alba", version, about = "Correspondence for distributive lattice expansions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Alba,
    Albae,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// signature file; the modal signature (dia, box) when omitted
    #[arg(long)]
    pub sig: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "albae")]
    pub mode: ModeArg,
    /// `auto` or a script file with one rule application per line
    #[arg(long, default_value = "auto")]
    pub strategy: String,
    /// largest poset size for generated lattices
    #[arg(long, default_value_t = 3)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// number of generated lattices
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// check a single lattice file instead of generated ones
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// allow --budget above 5
    #[arg(long)]
    pub unsafe_budget: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    Classify {
        #[command(flatten)]
        common: Common,
        inequality: String,
    },
    /// Runs ALBA / ALBA^e; `--out` receives the JSONL trace.
    Reduce {
        #[command(flatten)]
        common: Common,
        inequality: String,
    },
    Verify {
        #[command(flatten)]
        common: Common,
        inequality: String,
    },
    Lemmas {
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_PARSE, format!("{}: {}", path.display(), e)))
}

fn load_sig(c: &Common) -> Result<Signature, Failure> {
    match &c.sig {
        None => Ok(Signature::modal()),
        Some(p) => parse_signature(&read(p)?).map_err(|e| fail(EXIT_PARSE, format!("{}: {}", p.display(), e))),
    }
}

fn load_ineq(src: &str, sig: &Signature) -> Result<Inequality, Failure> {
    parse_inequality(src, sig, Layer::DlePlus).map_err(|e| fail(EXIT_PARSE, format!("inequality: {}", e)))
}

fn mode(c: &Common) -> Mode {
    match c.mode {
        ModeArg::Alba => Mode::Alba,
        ModeArg::Albae => Mode::AlbaE,
    }
}

fn strategy(c: &Common) -> Result<Strategy, Failure> {
    if c.strategy == "auto" {
        return Ok(Strategy::Auto);
    }
    let p = PathBuf::from(&c.strategy);
    parse_script(&read(&p)?).map(Strategy::Scripted).map_err(|e| fail(EXIT_PARSE, format!("{}: {}", p.display(), e)))
}

fn check_budget(c: &Common) -> Result<(), Failure> {
    if c.budget == 0 || c.budget > crate::models::MAX_POINTS {
        return Err(fail(EXIT_PARSE, format!("--budget must be between 1 and {}", crate::models::MAX_POINTS)));
    }
    if c.budget > SAFE_BUDGET && !c.unsafe_budget {
        return Err(fail(EXIT_PARSE, format!("--budget above {SAFE_BUDGET} needs --unsafe-budget")));
    }
    Ok(())
}

/// The lattice file, or `samples` random algebras for `sig` from `seed`.
fn lattices(c: &Common, sig: &Signature) -> Result<Vec<FiniteDLE>, Failure> {
    if let Some(p) = &c.lattice {
        let m = parse_lattice(&read(p)?, sig).map_err(|e| fail(EXIT_PARSE, format!("{}: {}", p.display(), e)))?;
        return Ok(vec![m]);
    }
    check_budget(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    Ok((0..c.samples)
        .map(|_| {
            let n = rng.gen_range(1..=c.budget);
            random_dle(sig, n, &mut rng)
        })
        .collect())
}

fn classify(c: &Common, src: &str, out: &mut String) -> Result<i32, Failure> {
    let sig = load_sig(c)?;
    let i = load_ineq(src, &sig)?;
    let err = |e: crate::classify::ClassifyError| fail(EXIT_PARSE, e.to_string());
    let mut any = false;
    match is_sahlqvist(&i, &sig).map_err(err)? {
        Some(e) => {
            any = true;
            writeln!(out, "sahlqvist eps={}", e).unwrap();
        }
        None => writeln!(out, "sahlqvist: no").unwrap(),
    }
    match is_inductive(&i, &sig).map_err(err)? {
        Some(w) => {
            any = true;
            let omega: Vec<String> = w.omega.iter().map(|(a, b)| format!("{a}<{b}")).collect();
            writeln!(out, "inductive eps={} omega={{{}}}", w.epsilon, omega.join(",")).unwrap();
        }
        None => writeln!(out, "inductive: no").unwrap(),
    }
    if sig.registered.is_empty() {
        writeln!(out, "meta-inductive: no roles registered").unwrap();
    } else {
        match is_meta_inductive(&i, &sig).map_err(err)? {
            Some((pre, _)) => {
                any = true;
                let roles: Vec<&str> = dotted_roles(&pre.lhs).into_iter().chain(dotted_roles(&pre.rhs)).map(|r| r.name()).collect();
                let mut roles = roles;
                roles.sort();
                roles.dedup();
                writeln!(out, "meta-inductive via {} preimage: {}", roles.join(","), print_inequality(&pre)).unwrap();
            }
            None => writeln!(out, "meta-inductive: no").unwrap(),
        }
    }
    Ok(if any { EXIT_OK } else { EXIT_UNCLASSIFIED })
}

fn reduce_report(d: &Derivation, out: &mut String) {
    match &d.status {
        Status::Success(systems) => {
            writeln!(out, "status: success").unwrap();
            for (k, s) in systems.iter().enumerate() {
                writeln!(out, "output {}: {}", k + 1, s.quasi_text()).unwrap();
                for (i, f) in s.ineqs.iter().zip(&s.side) {
                    if *f {
                        writeln!(out, "  side condition: {}", print_inequality(i)).unwrap();
                    }
                }
            }
            writeln!(out, "safe: {}", is_safe(d)).unwrap();
        }
        Status::Failure(r) => {
            writeln!(out, "status: failure").unwrap();
            write!(out, "{}", r).unwrap();
        }
        Status::Running => writeln!(out, "status: running").unwrap(),
    }
}

fn derive(c: &Common, sig: &Signature, i: &Inequality) -> Result<Derivation, Failure> {
    run_alba(i, sig, mode(c), &strategy(c)?).map_err(|e| fail(EXIT_REDUCE, e.to_string()))
}

fn reduce(c: &Common, src: &str, out: &mut String) -> Result<i32, Failure> {
    let sig = load_sig(c)?;
    let i = load_ineq(src, &sig)?;
    let d = derive(c, &sig, &i)?;
    if let Some(p) = &c.out {
        std::fs::write(p, trace_jsonl(&d)).map_err(|e| fail(EXIT_REDUCE, format!("{}: {}", p.display(), e)))?;
    }
    reduce_report(&d, out);
    Ok(if d.is_success() { EXIT_OK } else { EXIT_REDUCE })
}

fn verify(c: &Common, src: &str, out: &mut String) -> Result<i32, Failure> {
    let sig = load_sig(c)?;
    let i = load_ineq(src, &sig)?;
    let d = derive(c, &sig, &i)?;
    reduce_report(&d, out);
    if !d.is_success() {
        return Ok(EXIT_REDUCE);
    }
    let ev_err = |e: crate::models::EvalError| fail(EXIT_FAILED, e.to_string());
    let (mut diverged, mut exceeded) = (false, false);
    for (k, m) in lattices(c, &sig)?.into_iter().enumerate() {
        let n = m.lat.poset.n;
        if d.mode == Mode::AlbaE && !role_axioms_hold(&m, &sig).map_err(ev_err)? {
            writeln!(out, "lattice {k}: points={n} skipped (role axioms fail)").unwrap();
            continue;
        }
        let rep = verify_correspondence(&i, &d, &sig, [m.clone()]).map_err(ev_err)?;
        let steps = verify_steps(&d, &m, &sig).map_err(ev_err)?;
        let sound = steps.iter().filter(|(_, a)| matches!(a, Agreement::Agree(_))).count();
        let bad: Vec<String> = steps
            .iter()
            .filter(|(_, a)| matches!(a, Agreement::Diverge { .. }))
            .map(|(node, _)| node.to_string())
            .collect();
        exceeded |= rep.budget_exceeded > 0 || steps.iter().any(|(_, a)| *a == Agreement::BudgetExceeded);
        let verdict = match (rep.divergences.first(), rep.budget_exceeded) {
            (_, x) if x > 0 => "budget exceeded".to_string(),
            (Some(dv), _) => {
                diverged = true;
                format!("DIVERGES input={} output={}", dv.input_valid, dv.output_valid)
            }
            (None, _) => "agree".to_string(),
        };
        if !bad.is_empty() {
            diverged = true;
        }
        write!(out, "lattice {k}: points={n} {verdict} steps={sound}/{}", steps.len()).unwrap();
        if !bad.is_empty() {
            write!(out, " unsound at nodes {}", bad.join(",")).unwrap();
        }
        out.push('\n');
    }
    Ok(if exceeded {
        EXIT_BUDGET
    } else if diverged {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}

fn lemmas(c: &Common, out: &mut String) -> Result<i32, Failure> {
    let sig = load_sig(c)?;
    if sig.registered.is_empty() {
        return Err(fail(EXIT_PARSE, "the signature registers no roles"));
    }
    let mut ok = true;
    for (k, m) in lattices(c, &sig)?.into_iter().enumerate() {
        let r = check_lemma_suite(&m, &sig).map_err(|e| fail(EXIT_FAILED, e.to_string()))?;
        ok &= r.ok();
        writeln!(out, "lattice {k}: points={} {}", m.lat.poset.n, if r.ok() { "ok" } else { "FAIL" }).unwrap();
        for line in r.to_string().lines() {
            writeln!(out, "  {line}").unwrap();
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

/// Runs one command, writing the report to `stdout` (and to `--out` for
/// classify, verify and lemmas). Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{}", e.render()) } else { write!(stdout, "{}", e.render()) };
            return code;
        }
    };
    let mut out = String::new();
    let (res, common) = match &cli.command {
        Command::Classify { common, inequality } => (classify(common, inequality, &mut out), common),
        Command::Reduce { common, inequality } => (reduce(common, inequality, &mut out), common),
        Command::Verify { common, inequality } => (verify(common, inequality, &mut out), common),
        Command::Lemmas { common } => (lemmas(common, &mut out), common),
    };
    let _ = stdout.write_all(out.as_bytes());
    if !matches!(cli.command, Command::Reduce { .. }) {
        if let Some(p) = &common.out {
            if let Err(e) = std::fs::write(p, &out) {
                let _ = writeln!(stderr, "{}: {}", p.display(), e);
                return EXIT_FAILED;
            }
        }
    }
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.msg);
            f.code
        }
    }
}
