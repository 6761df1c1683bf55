mod common;

use std::collections::BTreeMap;

use alba::classify::{is_inductive, is_sahlqvist, polarity, Polarity};
use alba::engine::{run_alba, Mode, Strategy};
use alba::models::{
    check_lemma_suite, check_normal, random_dle, random_poset, random_relation, relational_op, verify_correspondence, Evaluator,
    FiniteDLE, Lattice, Valuation,
};
use alba::signature::{parse_inequality, parse_signature, print_inequality, substitute, Eps, Family, Signature, Term};
use common::{random_inequality, random_signature, random_term, VARS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_valuation<R: Rng>(m: &FiniteDLE, rng: &mut R) -> Valuation {
    let mut v = Valuation::default();
    for x in VARS {
        v.vars.insert(x.to_string(), rng.gen_range(0..m.lat.size()));
    }
    v
}

fn setup(seed: u64) -> (ChaCha8Rng, Signature) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = random_signature(&mut rng);
    (rng, sig)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>(), dots in any::<bool>()) {
        let (mut rng, sig) = setup(seed);
        let i = random_inequality(&sig, 4, dots, &mut rng);
        let src = print_inequality(&i);
        let back = parse_inequality(&src, &sig, i.layer()).unwrap();
        prop_assert_eq!(back, i);
    }

    #[test]
    fn subterms_sit_in_lower_layers(seed in any::<u64>()) {
        let (mut rng, sig) = setup(seed);
        let t = random_term(&sig, 5, true, &mut rng);
        let top = t.layer();
        let mut ok = true;
        t.walk(&mut |s| ok &= s.layer() <= top);
        prop_assert!(ok);
    }

    #[test]
    fn sahlqvist_implies_inductive(seed in any::<u64>()) {
        let (mut rng, sig) = setup(seed);
        let i = random_inequality(&sig, 3, false, &mut rng);
        if is_sahlqvist(&i, &sig).unwrap().is_some() {
            prop_assert!(is_inductive(&i, &sig).unwrap().is_some());
        }
    }

    #[test]
    fn substitution_is_a_homomorphism(seed in any::<u64>(), n in 1usize..=3) {
        let (mut rng, sig) = setup(seed);
        let m = random_dle(&sig, n, &mut rng);
        let ev = Evaluator::new(&m, &sig);
        let t = random_term(&sig, 3, false, &mut rng);
        let by: BTreeMap<String, Term> = VARS.iter().map(|x| (x.to_string(), random_term(&sig, 2, false, &mut rng))).collect();
        let v = random_valuation(&m, &mut rng);
        let mut w = Valuation::default();
        for (x, s) in &by {
            w.vars.insert(x.clone(), ev.eval(s, &v).unwrap());
        }
        prop_assert_eq!(ev.eval(&substitute(&t, &by), &v).unwrap(), ev.eval(&t, &w).unwrap());
    }

    #[test]
    fn polarity_matches_monotonicity(seed in any::<u64>(), n in 1usize..=3) {
        let (mut rng, sig) = setup(seed);
        let m = random_dle(&sig, n, &mut rng);
        let ev = Evaluator::new(&m, &sig);
        let t = random_term(&sig, 3, false, &mut rng);
        let l = &m.lat;
        let mut v = random_valuation(&m, &mut rng);
        let pol = polarity(&t, "p", &sig);
        for a in 0..l.size() {
            for b in 0..l.size() {
                if !l.leq(a, b) {
                    continue;
                }
                v.vars.insert("p".into(), a);
                let x = ev.eval(&t, &v).unwrap();
                v.vars.insert("p".into(), b);
                let y = ev.eval(&t, &v).unwrap();
                match pol {
                    Polarity::Positive => prop_assert!(l.leq(x, y)),
                    Polarity::Negative => prop_assert!(l.leq(y, x)),
                    Polarity::Absent => prop_assert_eq!(x, y),
                    Polarity::Both => {}
                }
            }
        }
    }

    #[test]
    fn relational_operations_are_normal(seed in any::<u64>(), n in 1usize..=4, arity in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = Lattice::new(random_poset(n, 0.4, &mut rng));
        let family = if rng.gen_bool(0.5) { Family::F } else { Family::G };
        let eps: Vec<Eps> = (0..arity).map(|_| if rng.gen_bool(0.5) { Eps::One } else { Eps::Partial }).collect();
        let rel = random_relation(n, arity + 1, 0.3, &mut rng);
        let op = relational_op(&lat, "h", family, &eps, &rel);
        prop_assert!(check_normal(&lat, &op).is_ok());
    }

    #[test]
    fn lemma_suite_on_random_algebras(seed in any::<u64>(), n in 1usize..=3) {
        let sig = parse_signature(
            "f dia 1 (1); g box 1 (1); f l 1 (d); g r 1 (d)\n\
             term pi = dia(box(dia(p)))\nterm sigma = box(p)\nterm lambda = l(box(p))\nterm rho = r(dia(p))",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_dle(&sig, n, &mut rng);
        let r = check_lemma_suite(&m, &sig).unwrap();
        prop_assert!(r.ok(), "{}", r);
    }

    #[test]
    fn inductive_reductions_agree_on_random_algebras(seed in any::<u64>()) {
        let (mut rng, sig) = setup(seed);
        let i = random_inequality(&sig, 3, false, &mut rng);
        if is_inductive(&i, &sig).unwrap().is_some() {
            let d = run_alba(&i, &sig, Mode::Alba, &Strategy::Auto).unwrap();
            prop_assert!(d.is_success());
            let ms: Vec<FiniteDLE> = (1..=3).map(|n| random_dle(&sig, n, &mut rng)).collect();
            let rep = verify_correspondence(&i, &d, &sig, ms).unwrap();
            prop_assert!(rep.ok(), "{:?}", rep.divergences);
        }
    }
}
