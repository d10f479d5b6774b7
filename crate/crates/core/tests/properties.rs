// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use qss_core::access::{self, AccessStructure, Subset};
use qss_core::capacity::{self, OptimizerOptions};
use qss_core::channels::{self, direct_family, ChannelSpec, KrausChannel};
use qss_core::qudit::{self, DensityMatrix, PureState, RegisterShape};
use qss_core::schemes::{self, ThresholdScheme};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn dim() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![2usize, 3, 5])
}

fn random_state(dims: &[usize], seed: u64) -> DensityMatrix {
    let labels: Vec<String> = (0..dims.len()).map(|i| format!("R{i}")).collect();
    let shape = RegisterShape::new(dims.to_vec(), labels).unwrap();
    DensityMatrix::random(shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn brute_axioms(k: usize, qualified: &[Subset]) -> (bool, bool, bool) {
    let is_q = |s: Subset| qualified.contains(&s);
    let full = (1u32 << k) - 1;
    let (mut up, mut disjoint_free, mut dual) = (true, true, true);
    for a in 0..=full {
        for b in 0..=full {
            up &= !(is_q(a) && a & b == a && !is_q(b));
            disjoint_free &= !(is_q(a) && is_q(b) && a & b == 0);
        }
        dual &= is_q(a) != is_q(full & !a);
    }
    (up, disjoint_free, dual)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn named_channels_are_trace_preserving(d in dim(), a in 0.0f64..=1.0, seed in any::<u64>()) {
        let rho = random_state(&[d], seed);
        for ch in [KrausChannel::dephasing(d, a).unwrap(), KrausChannel::depolarizing(d, a).unwrap()] {
            prop_assert!(ch.completeness_defect() <= 1e-10);
            let out = ch.apply_all(&rho).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
            prop_assert!(out.eigenvalues().iter().all(|&e| e >= 0.0));
            prop_assert!(out.validate().is_ok());
        }
    }

    #[test]
    fn marginal_of_a_product_is_the_kept_factor(q1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, seed in any::<u64>()) {
        let a = KrausChannel::dephasing(3, q1).unwrap();
        let b = KrausChannel::depolarizing(2, p2).unwrap();
        let prod = channels::broadcast_product(&[a.clone(), b.clone()]).unwrap();
        prop_assert!(prod.completeness_defect() <= 1e-10);
        let rho = random_state(&[3, 2], seed);

        let kept = prod.marginal(&[0]).unwrap();
        let via_marginal = kept.apply_all(&rho).unwrap();
        let via_trace = channels::apply_then_trace(&prod, &rho, &[0, 1], &[0]).unwrap();
        let direct = a.apply_all(&rho.partial_trace(&[0]).unwrap()).unwrap();
        prop_assert!(qudit::trace_distance(&via_marginal, &via_trace).unwrap() <= 1e-10);
        prop_assert!(qudit::trace_distance(&via_marginal, &direct).unwrap() <= 1e-10);

        let second = prod.marginal(&[1]).unwrap().apply_all(&rho).unwrap();
        let direct = b.apply_all(&rho.partial_trace(&[1]).unwrap()).unwrap();
        prop_assert!(qudit::trace_distance(&second, &direct).unwrap() <= 1e-10);
    }

    #[test]
    fn dephasing_commutes_with_diagonal_unitaries(q in 0.0f64..=1.0, phases in prop::collection::vec(-3.2f64..3.2, 3), seed in any::<u64>()) {
        let ch = KrausChannel::dephasing(3, q).unwrap();
        let u = channels::diagonal_unitary(&phases);
        let rho = random_state(&[3], seed);
        let a = ch.apply_all(&rho.apply_unitary(&u, &[0]).unwrap()).unwrap();
        let b = ch.apply_all(&rho).unwrap().apply_unitary(&u, &[0]).unwrap();
        prop_assert!((a.matrix() - b.matrix()).camax() <= 1e-12);
    }

    #[test]
    fn entropy_bounds_and_unitary_invariance(d in dim(), a in 0usize..5, b in 0usize..5, seed in any::<u64>()) {
        let rho = random_state(&[d], seed);
        let s = qudit::von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-12 && s <= (d as f64).log2() + 1e-12);
        let w = qudit::weyl(d, a % d, b % d);
        let rotated = rho.apply_unitary(&w, &[0]).unwrap();
        prop_assert!((qudit::von_neumann_entropy(&rotated) - s).abs() <= 1e-9);
        let mixed = DensityMatrix::maximally_mixed(rho.shape().clone());
        prop_assert!((qudit::von_neumann_entropy(&mixed) - (d as f64).log2()).abs() <= 1e-12);
    }

    #[test]
    fn subadditivity_and_pure_state_marginals(seed in any::<u64>()) {
        let rho = random_state(&[2, 3], seed);
        let s_ab = qudit::von_neumann_entropy(&rho);
        let s_a = qudit::von_neumann_entropy(&rho.partial_trace(&[0]).unwrap());
        let s_b = qudit::von_neumann_entropy(&rho.partial_trace(&[1]).unwrap());
        prop_assert!(s_ab <= s_a + s_b + 1e-9);
        prop_assert!((s_a - s_b).abs() <= s_ab + 1e-9);

        let shape = RegisterShape::new(vec![2, 3], vec!["A", "B"]).unwrap();
        let psi = PureState::random(shape, &mut ChaCha8Rng::seed_from_u64(seed));
        let ea = qudit::von_neumann_entropy(&psi.reduced(&[0]).unwrap());
        let eb = qudit::von_neumann_entropy(&psi.reduced(&[1]).unwrap());
        prop_assert!((ea - eb).abs() <= 1e-9);
    }

    #[test]
    fn fidelity_and_trace_distance_bounds(d in dim(), s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let (r, s, t) = (random_state(&[d], s1), random_state(&[d], s2), random_state(&[d], s3));
        let f = qudit::fidelity(&r, &s).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - qudit::fidelity(&s, &r).unwrap()).abs() <= 1e-9);
        prop_assert!((qudit::fidelity(&r, &r).unwrap() - 1.0).abs() <= 1e-9);

        let td = qudit::trace_distance(&r, &s).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&td));
        prop_assert!((td - qudit::trace_distance(&s, &r).unwrap()).abs() <= 1e-12);
        prop_assert!(td <= qudit::trace_distance(&r, &t).unwrap() + qudit::trace_distance(&t, &s).unwrap() + 1e-12);
        prop_assert!(1.0 - f.sqrt() <= td + 1e-9 && td <= (1.0 - f).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn partial_traces_compose(d in dim(), seed in any::<u64>(), s2 in any::<u64>()) {
        let rho = random_state(&[2, d, 2], seed);
        let direct = rho.partial_trace(&[2]).unwrap();
        let staged = rho.partial_trace(&[1, 2]).unwrap().partial_trace(&[1]).unwrap();
        prop_assert!(qudit::trace_distance(&direct, &staged).unwrap() <= 1e-12);
        prop_assert!((direct.trace().re - 1.0).abs() <= 1e-12);

        // tracing a product returns its factors
        let a = random_state(&[d], s2);
        let prod = a.tensor(&direct).unwrap();
        prop_assert!(qudit::trace_distance(&prod.partial_trace(&[0]).unwrap(), &a).unwrap() <= 1e-12);
        prop_assert!(qudit::trace_distance(&prod.partial_trace(&[1]).unwrap(), &direct).unwrap() <= 1e-12);

        // permuting registers then tracing agrees with tracing directly
        let swapped = rho.permute(&[2, 0, 1]).unwrap();
        let kept = swapped.partial_trace(&[1]).unwrap();
        prop_assert!(qudit::trace_distance(&kept, &rho.partial_trace(&[0]).unwrap()).unwrap() <= 1e-12);
    }

    #[test]
    fn decoders_are_unitary_and_recover(case in 0usize..4, members in Just((1..=5).collect::<Vec<usize>>()).prop_shuffle(), extra in 0usize..3, seed in any::<u64>()) {
        let (q, t, k) = [(3u32, 2usize, 3usize), (5, 2, 3), (5, 3, 4), (5, 3, 5)][case];
        let chosen: Vec<usize> = members.into_iter().filter(|&m| m <= k).take((t + extra).min(k)).collect();
        let scheme = ThresholdScheme::new(q, t, k).unwrap();
        let set = access::subset_from_participants(k, &chosen).unwrap();
        let decoder = schemes::build_decoder(&scheme, set, None).unwrap();
        prop_assert!(qudit::unitarity_defect(&decoder.unitary().unwrap()) <= 1e-10);

        let shape = RegisterShape::single(q as usize, "S").unwrap();
        let psi = PureState::random(shape, &mut ChaCha8Rng::seed_from_u64(seed));
        let decoded = decoder.apply(&schemes::encode(&scheme, &psi).unwrap()).unwrap();
        let reg = decoded.share_register(decoder.secret_participant());
        let out = decoded.state().reduced(&[reg]).unwrap();
        prop_assert!(qudit::fidelity(&out, &psi.to_density()).unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn structure_checks_match_brute_force(k in 1usize..=6, masks in prop::collection::vec(any::<u32>(), 0..12), close in any::<bool>()) {
        let full = (1u32 << k) - 1;
        let mut sets: Vec<Subset> = masks.iter().map(|m| m & full).filter(|&m| m != 0).collect();
        if close {
            let seeds = sets.clone();
            sets = (1..=full).filter(|&s| seeds.iter().any(|&m| s & m == m)).collect();
        }
        sets.sort();
        sets.dedup();
        let lists: Vec<Vec<usize>> = sets.iter().map(|&s| access::participants(s)).collect();
        let structure = AccessStructure::from_qualified(k, &lists).unwrap();
        let r = structure.validate();
        prop_assert_eq!((r.upward_closed, r.no_disjoint_qualified, r.self_dual), brute_axioms(k, &sets));
        if close {
            prop_assert!(r.upward_closed);
        }
    }

    #[test]
    fn coherent_info_bounds_and_routes(d in prop::sample::select(vec![2usize, 3]), a in 0.0f64..=1.0, seed in any::<u64>()) {
        let rho = random_state(&[d], seed);
        let bound = (d as f64).log2() + 1e-9;
        for ch in [KrausChannel::dephasing(d, a).unwrap(), KrausChannel::depolarizing(d, a).unwrap()] {
            let i = capacity::coherent_info(&ch, &rho).unwrap();
            prop_assert!(-bound <= i && i <= bound);
            let j = capacity::coherent_info_via_purification(&ch, &rho).unwrap();
            prop_assert!((i - j).abs() <= 1e-9);
        }
    }

    #[test]
    fn objective_ignores_member_order(q in prop::collection::vec(0.0f64..=0.5, 3), seed in any::<u64>()) {
        let specs: Vec<ChannelSpec> = q.iter().enumerate().map(|(i, &q)| ChannelSpec::dephasing(&format!("m{i}"), q)).collect();
        let family = direct_family(3, &specs).unwrap();
        let rho = random_state(&[3], seed);
        let a = capacity::compound_objective(&family, &rho).unwrap();
        let b = capacity::compound_objective(&family.reordered(&[2, 0, 1]).unwrap(), &rho).unwrap();
        prop_assert_eq!(a.min_bits, b.min_bits);

        // at the maximally mixed input the member order follows H₂(q)
        let mixed = DensityMatrix::maximally_mixed(RegisterShape::single(3, "A").unwrap());
        let at_mixed = capacity::compound_objective(&family, &mixed).unwrap();
        for (i, (_, vi)) in at_mixed.per_member.iter().enumerate() {
            for (j, (_, vj)) in at_mixed.per_member.iter().enumerate() {
                if q[i] < q[j] {
                    prop_assert!(*vi >= vj - 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn optimizer_is_deterministic(q in prop::collection::vec(0.0f64..=0.5, 1..3), seed in any::<u64>()) {
        let specs: Vec<ChannelSpec> = q.iter().enumerate().map(|(i, &q)| ChannelSpec::dephasing(&format!("m{i}"), q)).collect();
        let family = direct_family(2, &specs).unwrap();
        let opts = OptimizerOptions { max_evals: 300, restarts: 3, seed, ..OptimizerOptions::default() };
        let a = capacity::maximize_min_coherent_info(&family, &opts).unwrap();
        let b = capacity::maximize_min_coherent_info(&family, &opts).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert!(a == b);
        let min = a.per_member_bits.values().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((a.value_bits - min).abs() <= 1e-12);
        prop_assert!(a.value_bits <= 1.0 + 1e-9);
    }
}
