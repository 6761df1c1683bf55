//! Acceptance suite: one line per criterion, exits non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use alba::classify::{is_inductive, is_meta_inductive, is_sahlqvist};
use alba::engine::{
    check_compact_appropriate, check_topological_adequacy, is_safe, parse_script, run_alba, same_up_to_renaming, Derivation, Mode, Stage,
    Status, Strategy, System,
};
use alba::models::{
    check_lemma_suite, check_validity, random_dle, relational_modal_algebras, relational_op, role_axioms_hold, system_verdict,
    verify_correspondence, verify_steps, Agreement, Evaluator, FiniteDLE, Lattice, Poset, DEFAULT_BUDGET,
};
use alba::signature::{
    parse_inequality, parse_signature, print_inequality, Eps, Family, Inequality, Layer, OrderType, Signature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest poset used by the exhaustive and random sweeps.
const MAX_POSET: usize = 4;
/// Relations in the lemma sweep live on at most this many points.
const LEMMA_REL_POINTS: usize = 3;
const MIN_RANDOM_INDUCTIVE: usize = 200;
const MAX_VARS: usize = 3;
const MAX_DEPTH: usize = 5;
const MIN_PHI_IMAGES: usize = 100;
/// Lattices satisfying the role axioms checked per derivation.
const MIN_LATTICES_PER_STEP: usize = 20;
/// Attempts per derivation at finding such lattices.
const MAX_LATTICE_ATTEMPTS: usize = 2000;
/// Required success rates, as exact fractions.
const REQUIRED_SUCCESS: f64 = 1.0;
const SEED: u64 = 20_240_601;

const GEACH_SIG: &str = "f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))\nterm sigma = box(p)";

struct Outcome {
    pass: bool,
    detail: String,
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn ineqs(src: &[&str], sig: &Signature) -> Vec<Inequality> {
    src.iter().map(|s| parse_inequality(s, sig, Layer::DlePP).unwrap()).collect()
}

fn outputs(d: &Derivation) -> Vec<System> {
    match &d.status {
        Status::Success(v) => v.clone(),
        _ => vec![],
    }
}

/// A derivation whose rule steps criterion 5 re-checks.
struct Recorded {
    label: String,
    sig: Signature,
    d: Derivation,
}

fn criterion_1(rec: &mut Vec<Recorded>) -> Outcome {
    let t = Instant::now();
    let sig = Signature::modal();
    let i = parse_inequality("dia(box(p)) <= box(dia(p))", &sig, Layer::Dle).unwrap();
    let d = run_alba(&i, &sig, Mode::Alba, &Strategy::Auto).unwrap();
    let out = outputs(&d);
    if out.len() != 1 {
        return Outcome { pass: false, detail: format!("expected one pure system, got {:?}", d.status) };
    }
    let lattices = relational_modal_algebras(MAX_POSET, None);
    let rep = verify_correspondence(&i, &d, &sig, lattices.iter().cloned()).unwrap();
    // the pure output against the pure Church-Rosser condition
    let eq10 = parse_inequality("res(box,1)(dia(#j)) <= dia(res(box,1)(#j))", &sig, Layer::DlePP).unwrap();
    let mut eq10_mismatch = 0;
    for m in &lattices {
        let ev = Evaluator::new(m, &sig);
        let a = system_verdict(&ev, &out[0], DEFAULT_BUDGET).unwrap().holds();
        let b = check_validity(&eq10, m, &sig).unwrap().holds();
        if a.is_none() || a != b {
            eq10_mismatch += 1;
        }
    }
    rec.push(Recorded { label: "church-rosser".into(), sig, d });
    Outcome {
        pass: rep.ok() && rep.checked == lattices.len() && eq10_mismatch == 0,
        detail: format!(
            "{} relational algebras (posets n<={MAX_POSET}, all relations up to isomorphism), {} divergences, {} budget overruns, {} mismatches with the pure condition, {:.1}s",
            lattices.len(),
            rep.divergences.len(),
            rep.budget_exceeded,
            eq10_mismatch,
            t.elapsed().as_secs_f64()
        ),
    }
}

fn criterion_2(rec: &mut Vec<Recorded>) -> Outcome {
    let sig = parse_signature(GEACH_SIG).unwrap();
    let mut problems = Vec::new();

    let add = parse_inequality("pi(p | q) <= pi(p) | pi(q)", &sig, Layer::DlePlus).unwrap();
    let script = parse_script(&std::fs::read_to_string(golden("additivity.script")).unwrap()).unwrap();
    let d = run_alba(&add, &sig, Mode::AlbaE, &Strategy::Scripted(script)).unwrap();
    let out = outputs(&d);
    let want = ineqs(&["#i0 <= pi(bsq[pi](@m0) | bsq[pi](@m0))", "pi(bot) <= @m0"], &sig);
    let side_ok = out.len() == 1 && out[0].ineqs.iter().zip(&out[0].side).any(|(i, f)| *f && print_inequality(i) == "pi(bot) <= @m0");
    if out.len() != 1 || !same_up_to_renaming(&out[0].ineqs, &want) || !side_ok {
        problems.push(format!("additivity: {:?}", out.iter().map(|s| s.quasi_text()).collect::<Vec<_>>()));
    }
    rec.push(Recorded { label: "additivity".into(), sig: sig.clone(), d });

    let geach = parse_inequality("pi(sigma(p)) <= sigma(pi(p))", &sig, Layer::DlePlus).unwrap();
    let d = run_alba(&geach, &sig, Mode::AlbaE, &Strategy::Auto).unwrap();
    let out = outputs(&d);
    let a = ineqs(&["#i0 <= pi(bot)", "sigma(pi(bot)) <= @m0"], &sig);
    let b = ineqs(&["#i0 <= Dia[pi](#j1)", "sigma(pi(bdia[sigma](#j1))) <= @m0", "#j1 <= sigma(top)"], &sig);
    let ok = out.len() == 2
        && same_up_to_renaming(&out[0].ineqs, &a)
        && same_up_to_renaming(&out[1].ineqs, &b)
        && out[1].ineqs.iter().zip(&out[1].side).any(|(i, f)| *f && print_inequality(i).ends_with("<= sigma(top)"));
    if !ok {
        problems.push(format!("geach: {:?}", out.iter().map(|s| s.quasi_text()).collect::<Vec<_>>()));
    }
    rec.push(Recorded { label: "geach".into(), sig, d });
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "additivity and Geach final systems match up to renaming, side conditions flagged".into()
        } else {
            problems.join("; ")
        },
    }
}

fn criterion_3(rec: &mut Vec<Recorded>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut found, mut ok, mut sahlqvist, mut drawn) = (0, 0, 0, 0);
    let mut failures = Vec::new();
    while found < MIN_RANDOM_INDUCTIVE {
        drawn += 1;
        let sig = common::random_signature(&mut rng);
        let i = common::random_inequality(&sig, MAX_DEPTH - 1, false, &mut rng);
        if i.vars().len() > MAX_VARS || i.lhs.depth().max(i.rhs.depth()) > MAX_DEPTH {
            continue;
        }
        if is_inductive(&i, &sig).unwrap().is_none() {
            continue;
        }
        found += 1;
        if is_sahlqvist(&i, &sig).unwrap().is_some() {
            sahlqvist += 1;
        }
        match run_alba(&i, &sig, Mode::Alba, &Strategy::Auto) {
            Ok(d) if d.is_success() && outputs(&d).iter().all(|s| s.is_pure()) => {
                ok += 1;
                rec.push(Recorded { label: format!("random inductive {}", print_inequality(&i)), sig, d });
            }
            other => {
                if failures.len() < 3 {
                    let why = match other {
                        Ok(d) => format!("{:?}", d.status),
                        Err(e) => e.to_string(),
                    };
                    failures.push(format!("{} ({})", print_inequality(&i), why));
                }
            }
        }
    }
    let rate = ok as f64 / found as f64;
    Outcome {
        pass: rate >= REQUIRED_SUCCESS,
        detail: format!(
            "{ok}/{found} inductive inequalities reduced to pure systems ({sahlqvist} Sahlqvist, {drawn} drawn){}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    }
}

fn every_system_audited(d: &Derivation, sig: &Signature) -> bool {
    d.nodes.iter().all(|n| match &n.stage {
        Stage::Sys(s) => check_topological_adequacy(s) && check_compact_appropriate(s, sig),
        Stage::Pre(_) => true,
    })
}

fn criterion_4(rec: &mut Vec<Recorded>) -> Outcome {
    let sig = parse_signature(GEACH_SIG).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut found, mut ok, mut drawn) = (0, 0, 0);
    let mut failures = Vec::new();
    while found < MIN_PHI_IMAGES {
        drawn += 1;
        let pre = common::random_inequality(&sig, MAX_DEPTH - 1, true, &mut rng);
        let has_dot = [&pre.lhs, &pre.rhs].iter().any(|t| {
            let mut seen = false;
            t.walk(&mut |n| seen |= matches!(n, alba::signature::Term::Dot(..)));
            seen
        });
        if !has_dot || pre.vars().len() > MAX_VARS || is_inductive(&pre, &sig).unwrap().is_none() {
            continue;
        }
        found += 1;
        let image = pre.map(|t| sig.phi_substitute(t));
        match run_alba(&image, &sig, Mode::AlbaE, &Strategy::Auto) {
            Ok(d) if d.is_success() && is_safe(&d) && every_system_audited(&d, &sig) => {
                ok += 1;
                rec.push(Recorded { label: format!("phi-image of {}", print_inequality(&pre)), sig: sig.clone(), d });
            }
            other => {
                if failures.len() < 3 {
                    let why = match other {
                        Ok(d) if d.is_success() => format!("safe={} audits={}", is_safe(&d), every_system_audited(&d, &sig)),
                        Ok(d) => format!("{:?}", d.status),
                        Err(e) => e.to_string(),
                    };
                    failures.push(format!("{} ({})", print_inequality(&pre), why));
                }
            }
        }
    }
    let rate = ok as f64 / found as f64;
    Outcome {
        pass: rate >= REQUIRED_SUCCESS,
        detail: format!(
            "{ok}/{found} Phi-images reduced safely with adequacy and compact-appropriateness at every node ({drawn} drawn){}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    }
}

fn criterion_5(rec: &[Recorded]) -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let (mut steps, mut checks, mut short) = (0usize, 0usize, 0usize);
    let mut bad = Vec::new();
    for r in rec {
        let needs_axioms = r.d.mode == Mode::AlbaE;
        let mut lattices: Vec<FiniteDLE> = Vec::new();
        let mut attempts = 0;
        while lattices.len() < MIN_LATTICES_PER_STEP && attempts < MAX_LATTICE_ATTEMPTS {
            attempts += 1;
            let n = rng.gen_range(1..=MAX_POSET);
            let m = random_dle(&r.sig, n, &mut rng);
            if !needs_axioms || role_axioms_hold(&m, &r.sig).unwrap() {
                lattices.push(m);
            }
        }
        if lattices.len() < MIN_LATTICES_PER_STEP {
            short += 1;
        }
        steps += r.d.steps().len();
        for m in &lattices {
            for (node, a) in verify_steps(&r.d, m, &r.sig).unwrap() {
                checks += 1;
                if !matches!(a, Agreement::Agree(_)) && bad.len() < 3 {
                    bad.push(format!("{} node {} on {} points: {:?}", r.label, node, m.lat.poset.n, a));
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty() && short == 0,
        detail: format!(
            "{} derivations, {steps} rule applications, {checks} step checks on >= {MIN_LATTICES_PER_STEP} lattices each, {short} derivations short of lattices, {:.1}s{}",
            rec.len(),
            t.elapsed().as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!("; unsound: {}", bad.join("; ")) }
        ),
    }
}

fn criterion_6() -> Outcome {
    let sig = parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))").unwrap();
    let lattices = relational_modal_algebras(MAX_POSET, Some(LEMMA_REL_POINTS));
    let (mut additive, mut failing) = (0, Vec::new());
    for (k, m) in lattices.iter().enumerate() {
        let r = check_lemma_suite(m, &sig).unwrap();
        additive += r.roles.iter().filter(|x| x.axiom).count();
        if !r.ok() && failing.len() < 3 {
            failing.push(format!("algebra {k}: {}", r));
        }
    }
    // π(p) = h(p, p) for h(X, Y) = {0} if 0 ∈ X and 1 ∈ Y, on the 2-point antichain
    let wsig = parse_signature("f h 2 (1,1)\nterm pi = h(p, p)").unwrap();
    let lat = Lattice::new(Poset::antichain(2));
    let h = relational_op(&lat, "h", Family::F, &[Eps::One, Eps::One], &[vec![0, 0, 1]]);
    let w = check_lemma_suite(&FiniteDLE::new_unchecked(lat, vec![h], vec![]), &wsig).unwrap();
    let pi = &w.roles[0];
    let witness = !pi.axiom && pi.identity.is_some() && pi.pseudo.is_some();
    Outcome {
        pass: failing.is_empty() && witness,
        detail: format!(
            "{} algebras, pi additive on {additive}, {} failing; non-additive witness breaks identity and C: {witness}{}",
            lattices.len(),
            failing.len(),
            if failing.is_empty() { String::new() } else { format!("\n{}", failing.join("\n")) }
        ),
    }
}

fn criterion_7() -> Outcome {
    let modal = Signature::modal();
    let sig = parse_signature(GEACH_SIG).unwrap();
    let mck = parse_inequality("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))", &sig, Layer::Dle).unwrap();
    let cr = parse_inequality("dia(box(p)) <= box(dia(p))", &modal, Layer::Dle).unwrap();
    let rejected = is_sahlqvist(&mck, &sig).unwrap().is_none() && is_inductive(&mck, &sig).unwrap().is_none();
    let meta = is_meta_inductive(&mck, &sig).unwrap();
    let meta_ok = meta.as_ref().is_some_and(|(pre, _)| pre.map(|t| sig.phi_substitute(t)) == mck);
    let cr_eps = is_sahlqvist(&cr, &modal).unwrap();
    let cr_ok = cr_eps == Some(OrderType(vec![Eps::One]));
    Outcome {
        pass: rejected && meta_ok && cr_ok,
        detail: format!(
            "McKinsey rejected at DLE layer: {rejected}; meta-inductive preimage: {}; Church-Rosser Sahlqvist eps: {}",
            meta.map_or("none".into(), |(p, _)| print_inequality(&p)),
            cr_eps.map_or("none".into(), |e| e.to_string())
        ),
    }
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_alba")).args(args).output().expect("binary runs");
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn criterion_8() -> Outcome {
    let dir = std::env::temp_dir().join(format!("alba-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sig = golden("geach.sig");
    let sig = sig.to_str().unwrap();
    let mut same = true;
    let mut codes = Vec::new();
    for (name, args) in [
        ("trace", vec!["reduce", "--sig", sig, "pi(sigma(p)) <= sigma(pi(p))"]),
        ("verify", vec!["verify", "--sig", sig, "--budget", "4", "--samples", "30", "--seed", "11", "pi(sigma(p)) <= sigma(pi(p))"]),
        ("lemmas", vec!["lemmas", "--sig", sig, "--budget", "4", "--samples", "10", "--seed", "11"]),
    ] {
        let mut files = Vec::new();
        for k in 0..2 {
            let out = dir.join(format!("{name}{k}"));
            let mut a = args.clone();
            let o = out.to_str().unwrap().to_string();
            a.extend(["--out", o.as_str()]);
            let (code, stdout) = run_cli(&a);
            codes.push(code);
            files.push((std::fs::read(&out).unwrap_or_default(), stdout));
        }
        same &= files[0] == files[1] && !files[0].0.is_empty();
    }
    let _ = std::fs::remove_dir_all(&dir);
    Outcome {
        pass: same && codes.iter().all(|&c| c == 0),
        detail: format!("reduce trace, verify and lemmas reports byte-identical across runs: {same}; exit codes {codes:?}"),
    }
}

fn main() {
    let mut rec = Vec::new();
    let results = vec![
        ("1 Church-Rosser correspondence", criterion_1(&mut rec)),
        ("2 golden final systems", criterion_2(&mut rec)),
        ("3 random inductive (ALBA)", criterion_3(&mut rec)),
        ("4 Phi-images (ALBAe)", criterion_4(&mut rec)),
    ];
    let mut results = results;
    results.push(("5 rule soundness oracle", criterion_5(&rec)));
    results.push(("6 algebraic lemma suite", criterion_6()));
    results.push(("7 classification ground truth", criterion_7()));
    results.push(("8 determinism", criterion_8()));
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
