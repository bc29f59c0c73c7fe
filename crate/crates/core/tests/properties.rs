use dexchange::gf::FieldSpec;
use dexchange::model::{
    generate_instance, CutSetOracle, GenerateSpec, InstanceKind, ProblemInstance, UserSubset,
};
use dexchange::netcode::{
    construct_code, decode, random_packets, randomized_alloc, verify_decodable, RngSpec,
    TransmissionSchedule,
};
use dexchange::oracle::{dilworth_value, submodularity_violation};
use dexchange::ratealloc::{
    convex_alloc, min_sum_rate, modified_edmonds, Backend, CapacityVector, CostFunction,
};
use dexchange::sfm::{min_pinned, GroundSet};
use proptest::prelude::*;

fn instances(max_m: usize, max_n: usize) -> impl Strategy<Value = ProblemInstance> {
    instances_over(max_m, max_n, vec![2, 3, 5, 257])
}

fn instances_over(
    max_m: usize,
    max_n: usize,
    fields: Vec<u32>,
) -> impl Strategy<Value = ProblemInstance> {
    (
        1..=max_m,
        1..=max_n,
        prop::sample::select(fields),
        any::<u64>(),
        any::<bool>(),
    )
        .prop_flat_map(|(m, n, q, seed, raw)| {
            (prop::collection::vec(0..=n, m), Just((n, q, seed, raw)))
        })
        .prop_filter_map(
            "rows cannot span the file",
            |(coverage, (n, q, seed, raw))| {
                generate_instance(&GenerateSpec {
                    kind: if raw {
                        InstanceKind::Raw
                    } else {
                        InstanceKind::Coded
                    },
                    packets: n,
                    field: FieldSpec::new(q).unwrap(),
                    coverage,
                    seed,
                })
                .ok()
            },
        )
}

fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u8..=5, m).prop_map(|w| w.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_set_function_shape(inst in instances(5, 6)) {
        let o = CutSetOracle::new(inst);
        let n = o.packets() as i64;
        let all = o.all_users();
        for s in all.subsets() {
            for t in all.subsets() {
                if s.is_subset_of(t) {
                    prop_assert!(o.joint_rank(s) <= o.joint_rank(t));
                }
            }
        }
        for beta in 0..=n + 1 {
            prop_assert_eq!(submodularity_violation(&o, beta, true), None);
            if beta >= n {
                prop_assert_eq!(submodularity_violation(&o, beta, false), None);
            }
        }
        for beta in 0..=n {
            for s in all.subsets() {
                prop_assert!(dilworth_value(&o, beta, s) <= o.cut_set_f(beta, s));
            }
        }
    }

    #[test]
    fn pinned_minimization(inst in instances(4, 6), seed in any::<u64>()) {
        let o = CutSetOracle::new(inst);
        let m = o.users();
        let rates: Vec<i64> = (0..m).map(|k| (seed >> (4 * k) & 3) as i64).collect();
        for beta in 0..=o.packets() as i64 {
            for i in 0..m {
                let free = o.all_users().without(i);
                let g = |s: UserSubset| o.cut_set_f(beta, s.with(i)) - s.sum_of(&rates);
                for s in free.subsets() {
                    for t in free.subsets() {
                        prop_assert!(g(s) + g(t) >= g(s.union(t)) + g(s.intersection(t)));
                    }
                }
                let best = min_pinned(&o, beta, &rates, GroundSet::new(i, free));
                prop_assert!(best.value <= o.cut_set_f(beta, UserSubset::singleton(i)));
                prop_assert_eq!(best.value, free.subsets().map(g).min().unwrap());
                prop_assert_eq!(g(best.argmin), best.value);
            }
        }
    }

    #[test]
    fn solver_outputs_are_feasible(inst in instances(4, 6), w in weights(4), caps in prop::collection::vec(0i64..=6, 4)) {
        let o = CutSetOracle::new(inst);
        let m = o.users();
        let w = &w[..m];
        for caps in [CapacityVector::unbounded(), CapacityVector::new(caps[..m].to_vec()).unwrap()] {
            for beta in 0..=o.packets() as i64 {
                for r in [
                    modified_edmonds(&o, beta, w, &caps, Backend::Sfm).ok(),
                    convex_alloc(&o, beta, &CostFunction::Fair, &caps, Backend::Sfm).ok().map(|a| a.rates),
                ].into_iter().flatten() {
                    prop_assert_eq!(r.sum(), beta);
                    prop_assert!(o.in_rate_region(&r));
                    prop_assert!((0..m).all(|i| r[i] <= caps.cap(i)));
                }
            }
        }
        let least = min_sum_rate(&o, &CapacityVector::unbounded(), Backend::Sfm).unwrap();
        prop_assert!(least <= o.packets() as i64);
        prop_assert!(modified_edmonds(&o, least, &vec![1.0; m], &CapacityVector::unbounded(), Backend::Sfm).is_ok());
        if least > 0 {
            prop_assert!(modified_edmonds(&o, least - 1, &vec![1.0; m], &CapacityVector::unbounded(), Backend::Sfm).is_err());
        }
    }

    #[test]
    fn schedules_are_consistent(inst in instances(4, 6), seed in any::<u64>()) {
        let o = CutSetOracle::new(inst);
        let n = o.packets() as i64;
        if let Ok(a) = randomized_alloc(&o, n, &CostFunction::Fair, &CapacityVector::unbounded(), RngSpec::new(seed)) {
            prop_assert!(a.schedule.check_against(o.instance()).is_ok());
            prop_assert_eq!(a.schedule.rates(o.users()), a.rates.to_vec());
            let back = TransmissionSchedule::from_json(&a.schedule.to_json()).unwrap();
            prop_assert_eq!(&back, &a.schedule);
            let again = randomized_alloc(&o, n, &CostFunction::Fair, &CapacityVector::unbounded(), RngSpec::new(seed)).unwrap();
            prop_assert_eq!(again.schedule, a.schedule);
        }
    }

    #[test]
    fn accepted_codes_decode(inst in instances_over(4, 6, vec![257]), seed in any::<u64>()) {
        let o = CutSetOracle::new(inst);
        let m = o.users();
        let least = min_sum_rate(&o, &CapacityVector::unbounded(), Backend::Sfm).unwrap();
        let rates = modified_edmonds(&o, least, &vec![1.0; m], &CapacityVector::unbounded(), Backend::Sfm).unwrap();
        if let Ok(code) = construct_code(o.instance(), &rates, RngSpec::new(seed), 64) {
            prop_assert!(verify_decodable(o.instance(), &code.schedule).all);
            let w = random_packets(o.instance().field(), o.packets(), RngSpec::new(seed).with_stream(9));
            let v = code.schedule.transmit(&w).unwrap();
            for user in 0..m {
                let x = o.instance().observe(user, &w).unwrap();
                prop_assert_eq!(decode(o.instance(), user, &code.schedule, &x, &v).unwrap(), w.clone());
            }
        }
    }

    #[test]
    fn instance_files_round_trip(inst in instances(5, 8)) {
        let back = ProblemInstance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(back.digest(), inst.digest());
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn draws_replay(seed in any::<u64>(), stream in any::<u64>()) {
        let f = FieldSpec::new(257).unwrap();
        let spec = RngSpec::new(seed).with_stream(stream);
        prop_assert_eq!(random_packets(f, 16, spec), random_packets(f, 16, spec));
    }
}
