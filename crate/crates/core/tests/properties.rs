use creditfair::credit_audit::{audit_explicit, refute_credit_existence};
use creditfair::mechanisms::{run, Mechanism};
use creditfair::model::{check_sharing_incentives, is_pareto_efficient, Instance};
use creditfair::num::Num;
use creditfair::pswc::{solve, Limit, PswcProblem};
use creditfair::repro::random_small_instance;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn num() -> impl Strategy<Value = Num> {
    (-1000i64..1000, 1i64..60).prop_map(|(n, d)| Num::ratio(n, d))
}

fn instance(max_agents: usize, max_rounds: usize) -> impl Strategy<Value = Instance> {
    (1..=max_agents, 1..=max_rounds)
        .prop_flat_map(|(n, t)| {
            (
                prop::collection::vec(1i64..=3, n),
                prop::collection::vec(prop::collection::vec(0i64..=12, n), t),
            )
        })
        .prop_map(|(e, d)| {
            let half = |v: i64| Num::ratio(v, 2);
            Instance::new(
                e.into_iter().map(Num::from).collect(),
                d.into_iter().map(|r| r.into_iter().map(half).collect()).collect(),
            )
            .unwrap()
        })
}

fn pswc_problem() -> impl Strategy<Value = PswcProblem> {
    (1usize..=8)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((1i64..=9, 1i64..=3), n),
                prop::collection::vec((0i64..=6, prop::option::weighted(0.8, 0i64..=8)), n),
                0i64..=1000,
            )
        })
        .prop_map(|(w, bounds, frac)| {
            let weights = w.into_iter().map(|(a, b)| Num::ratio(a, b)).collect();
            let minima: Vec<Num> = bounds.iter().map(|(m, _)| Num::from(*m)).collect();
            let limits: Vec<Limit> = bounds
                .iter()
                .map(|(m, l)| l.map_or(Limit::Unbounded, |l| Limit::Finite(Num::from(m + l))))
                .collect();
            let low: Num = minima.iter().sum();
            let span = if limits.iter().all(|l| l.finite().is_some()) {
                limits.iter().filter_map(Limit::finite).sum::<Num>() - &low
            } else {
                Num::from(40)
            };
            let capacity = &low + span * Num::ratio(frac, 1000);
            PswcProblem::new(capacity, weights, minima, limits)
        })
}

proptest! {
    #[test]
    fn num_arithmetic_is_a_field(a in num(), b in num(), c in num()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &(&b + &c), &a * &b + &a * &c);
        prop_assert_eq!(&(&a - &b) + &b, a.clone());
        if !b.is_zero() {
            prop_assert_eq!(&(&a / &b) * &b, a.clone());
        }
        prop_assert_eq!(a.to_string().parse::<Num>().unwrap(), a);
    }

    #[test]
    fn pswc_is_a_clamp_that_fills_capacity(p in pswc_problem()) {
        let s = solve(&p).unwrap();
        prop_assert_eq!(&s.allocation, &p.allocation_at(&s.level));
        prop_assert_eq!(s.allocation.iter().sum::<Num>(), p.capacity.clone());
    }

    #[test]
    fn pswc_is_monotone_in_capacity(p in pswc_problem(), frac in 0i64..=100) {
        let s = solve(&p).unwrap();
        let low: Num = p.minima.iter().sum();
        let mut smaller = p.clone();
        smaller.capacity = &low + (&p.capacity - &low) * Num::ratio(frac, 100);
        let s2 = solve(&smaller).unwrap();
        for (a, b) in s2.allocation.iter().zip(&s.allocation) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn lendrecoup_is_credit_fair_on_fractional_demands(inst in instance(5, 8)) {
        let out = run(&Mechanism::LendRecoup, &inst).unwrap();
        let audit = audit_explicit(&inst, &out.trace).unwrap();
        prop_assert!(audit.passed(), "{}", audit.render_table());
        prop_assert!(is_pareto_efficient(&inst, &out.trace).unwrap().passed());
        prop_assert!(check_sharing_incentives(&inst, &out.trace).unwrap().passed());
        prop_assert!(!refute_credit_existence(&inst, &out.trace).unwrap().is_refuted());
    }

    #[test]
    fn mechanisms_are_pareto_efficient(inst in instance(4, 6)) {
        for mech in [Mechanism::LendRecoup, Mechanism::Smmf, Mechanism::Dmmf, Mechanism::Karma { alpha: Num::ratio(1, 2) }] {
            let out = run(&mech, &inst).unwrap();
            prop_assert!(is_pareto_efficient(&inst, &out.trace).unwrap().passed(), "{}", mech);
            for (a, d) in out.trace.allocations.iter().zip(inst.demands()) {
                prop_assert_eq!(a.iter().sum::<Num>(), inst.total_endowment());
                prop_assert!(a.iter().all(|x| !x.is_negative()));
                if d.iter().sum::<Num>() <= inst.total_endowment() {
                    prop_assert!(a.iter().zip(d).all(|(a, d)| a >= d), "{}", mech);
                }
            }
        }
    }

    #[test]
    fn relabelling_agents_permutes_allocations(inst in instance(4, 6), shift in 0usize..4) {
        let n = inst.agents();
        let perm: Vec<usize> = (0..n).map(|k| (k + shift) % n).collect();
        let moved = inst.permute_agents(&perm);
        for mech in [Mechanism::LendRecoup, Mechanism::Smmf, Mechanism::Dmmf] {
            let a = run(&mech, &inst).unwrap().trace.allocations;
            let b = run(&mech, &moved).unwrap().trace.allocations;
            for (ra, rb) in a.iter().zip(&b) {
                let permuted: Vec<Num> = perm.iter().map(|&j| ra[j].clone()).collect();
                prop_assert_eq!(&permuted, rb, "{}", mech);
            }
        }
    }

    #[test]
    fn trace_documents_round_trip(inst in instance(3, 4)) {
        let out = run(&Mechanism::LendRecoup, &inst).unwrap();
        let doc = creditfair::io::TraceDocument::new(Mechanism::LendRecoup, inst, out);
        let back = creditfair::io::TraceDocument::from_json(&doc.to_json(), "mem").unwrap();
        prop_assert_eq!(back, doc);
    }
}

#[test]
fn refuter_catches_a_dmmf_sharing_incentive_violation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let witness = (0..5000)
        .map(|_| random_small_instance(&mut rng, 4, 6, 6))
        .find_map(|inst| {
            let trace = run(&Mechanism::Dmmf, &inst).unwrap().trace;
            let si = check_sharing_incentives(&inst, &trace).unwrap();
            (!si.passed()).then_some((inst, trace))
        })
        .expect("seeded search finds a DMMF trace violating sharing incentives");
    let (inst, trace) = witness;
    assert!(
        refute_credit_existence(&inst, &trace).unwrap().is_refuted(),
        "endowments {:?} demands {:?} allocations {:?}",
        inst.endowments(),
        inst.demands(),
        trace.allocations
    );
}
