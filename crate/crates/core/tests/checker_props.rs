//! Checker properties over the corpus: symbolic proofs against bounded
//! enumeration, the reductions between methods and replayable witnesses.

mod common;

use glpt::checkers::{check, CheckConfig, Verdict, Witness};
use glpt::term::Literal;

use common::*;

#[test]
fn symbolic_proofs_agree_with_enumeration() {
    cross_check_agreement().unwrap();
}

#[test]
fn refutations_persist_at_greater_depth() {
    for (program, annotation, _) in cases() {
        let (p, a) = load(program, annotation);
        let d = cross_depth(program);
        let low = check(&p, &a, CheckConfig { depth: Some(d - 1), cross_check: false });
        // Support is the one condition a deeper search can newly satisfy.
        let Verdict::Refuted { witness } = &low.status else { continue };
        if matches!(witness, Witness::Unsupported { .. }) {
            continue;
        }
        let high = check(&p, &a, CheckConfig { depth: Some(d), cross_check: false });
        assert!(matches!(high.status, Verdict::Refuted { .. }), "{program} {annotation}\n{low}\n{high}");
    }
}

#[test]
fn witnesses_replay() {
    let mut seen = 0;
    for (program, annotation, _) in cases() {
        let (_, a) = load(program, annotation);
        let (p, _) = load(program, annotation);
        let r = check(&p, &a, CheckConfig::default());
        let Verdict::Refuted { witness } = &r.status else { continue };
        match witness {
            Witness::Decrease { literal, strict, guard, instance, head_level, body_level, .. } => {
                assert!(instance.head.is_ground() && instance.body.iter().all(Literal::is_ground));
                let (Literal::Pos(b) | Literal::Neg(b)) = &instance.body[*literal] else { panic!("{instance}") };
                assert_eq!(a.level.eval(&instance.head).unwrap(), *head_level, "{program}");
                assert_eq!(a.level.eval(b).unwrap(), *body_level, "{program}");
                let need = body_level + u64::from(*strict);
                assert!(*head_level < need, "{program}: {witness}");
                for &g in guard {
                    assert_eq!(a.model.satisfies(&instance.body[g]), Some(true), "{program}: guard {g} of {instance}");
                }
                seen += 1;
            }
            Witness::Model { instance, .. } => {
                assert_eq!(a.model.holds(&instance.head), Some(false), "{program}: {instance}");
                for l in &instance.body {
                    assert_ne!(a.model.satisfies(l), Some(false), "{program}: {l} in {instance}");
                }
                seen += 1;
            }
            _ => {}
        }
    }
    assert!(seen >= 3, "only {seen} replayable witnesses");
}

#[test]
fn methods_reduce_to_simpler_ones() {
    reduction_laws().unwrap();
}

/// Per-program cost of the bounded-query smoke run.
#[test]
#[ignore]
fn smoke_timing() {
    for (program, annotation) in passing() {
        let (p, a) = load(program, annotation);
        let qs = rigid_queries(&p, &a, 200);
        let t = std::time::Instant::now();
        let (done, hit) = first_budget_hit(&p, &qs);
        println!("{program}: {done} done in {:.1}s, hit {hit:?}", t.elapsed().as_secs_f64());
    }
}
