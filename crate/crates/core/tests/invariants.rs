//! Property tests over generated instances.

mod common;

use common::{bundles, ids, Reference};
use efx_core::gen::{self, GenSpec, SplitMix64, Topology};
use efx_core::io;
use efx_core::{
    cuts, solve, AgentId, Allocation, Bundle, CheckLevel, GoodId, Instance, SolveConfig,
    ValuationClass,
};
use proptest::prelude::*;

fn class_strategy() -> impl Strategy<Value = ValuationClass> {
    prop_oneof![
        Just(ValuationClass::Additive),
        Just(ValuationClass::TransformedAdditive),
        Just(ValuationClass::MonotoneTable),
    ]
}

fn topology_strategy() -> impl Strategy<Value = Topology> {
    prop::sample::select(Topology::ALL.to_vec())
}

/// A generated instance, or `None` for specs the generator rejects.
/// Sizes are clamped to what the topology can carry.
fn instance(seed: u64, n: usize, m: usize, t: Topology, class: ValuationClass) -> Option<Instance> {
    let n = if t == Topology::CycleEven {
        (n + n % 2).max(4)
    } else {
        n
    };
    let m = m.min(gen::max_goods(t, n, 4)?);
    let mut spec = GenSpec::additive(seed, n, m, t);
    spec.valuation_class = class;
    spec.v_max = 20;
    if class == ValuationClass::MonotoneTable {
        spec.max_degree = Some(8);
    }
    gen::gen_instance(&spec).ok()
}

fn random_bundle(rng: &mut SplitMix64, m: usize) -> Bundle {
    Bundle::from_goods(m, (0..m).filter(|_| rng.below(2) == 1).map(GoodId))
}

fn subset_of(rng: &mut SplitMix64, t: &Bundle) -> Bundle {
    Bundle::from_goods(t.capacity(), t.iter().filter(|_| rng.below(2) == 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn locality(seed in any::<u64>(), n in 2usize..8, m in 0usize..16,
                t in topology_strategy(), class in class_strategy()) {
        let inst = instance(seed, n, m, t, class);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let mut rng = SplitMix64::new(seed);
        for a in inst.agents() {
            let s = random_bundle(&mut rng, inst.good_count());
            let local = s.intersection(inst.incident_goods(a));
            prop_assert_eq!(inst.value(a, &s), inst.value(a, &local));
            prop_assert_eq!(inst.value(a, &inst.empty_bundle()), 0);
        }
    }

    #[test]
    fn tables_are_monotone(seed in any::<u64>(), n in 2usize..6, m in 1usize..12,
                           t in topology_strategy()) {
        let inst = instance(seed, n, m, t, ValuationClass::MonotoneTable);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let mut rng = SplitMix64::new(seed ^ 1);
        for a in inst.agents() {
            for _ in 0..1000 {
                let big = subset_of(&mut rng, inst.incident_goods(a));
                let small = subset_of(&mut rng, &big);
                prop_assert!(inst.value(a, &small) <= inst.value(a, &big));
            }
        }
    }

    #[test]
    fn additive_classes_are_cancelable(seed in any::<u64>(), n in 2usize..6, m in 1usize..14,
                                       t in topology_strategy(), transformed in any::<bool>()) {
        let class = if transformed { ValuationClass::TransformedAdditive } else { ValuationClass::Additive };
        let inst = instance(seed, n, m, t, class);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let mut rng = SplitMix64::new(seed ^ 2);
        for a in inst.agents() {
            let e = inst.incident_goods(a).clone();
            for g in e.iter() {
                let rest = e.without(g);
                let s = subset_of(&mut rng, &rest);
                let t = subset_of(&mut rng, &rest);
                if inst.value(a, &s.with(g)) > inst.value(a, &t.with(g)) {
                    prop_assert!(inst.value(a, &s) > inst.value(a, &t));
                }
            }
        }
    }

    #[test]
    fn cuts_meet_the_definition(seed in any::<u64>(), m in 0usize..14, class in class_strategy()) {
        let inst = instance(seed, 2, m, Topology::Path, class);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let r = Reference::new(&inst);
        let mut rng = SplitMix64::new(seed ^ 3);
        for cutter in [AgentId(0), AgentId(1)] {
            let s = subset_of(&mut rng, inst.incident_goods(cutter));
            let cut = cuts::efx_cut(&inst, cutter, &s).unwrap();
            prop_assert!(cut.first.is_disjoint(&cut.second));
            prop_assert_eq!(cut.first.union(&cut.second), s.clone());
            prop_assert!(r.is_cut(cutter.index(), &ids(&cut.first), &ids(&cut.second)));
            prop_assert!(cuts::is_efx_cut(&inst, cutter, &cut.first, &cut.second));
            if class == ValuationClass::Additive {
                prop_assert_eq!(cut.moves, 0);
            }
        }
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), n in 1usize..8, m in 0usize..16,
                                t in topology_strategy(), class in class_strategy()) {
        let inst = instance(seed, n, m, t, class);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let text = io::instance_to_json(&inst);
        prop_assert_eq!(io::parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn allocation_json_round_trip(seed in any::<u64>(), n in 2usize..8, m in 0usize..16,
                                  t in topology_strategy()) {
        let inst = instance(seed, n, m, t, ValuationClass::Additive);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let res = solve(&inst, &SolveConfig::default()).unwrap();
        let text = io::allocation_to_json(&res.allocation, Some(&res.sigma));
        let (x, sigma) = io::parse_allocation(&text, &inst).unwrap();
        prop_assert_eq!(bundles(&x), bundles(&res.allocation));
        prop_assert_eq!(sigma, Some(res.sigma));
    }

    #[test]
    fn solver_output_is_complete_and_efx(seed in any::<u64>(), n in 2usize..9, m in 0usize..20,
                                         t in topology_strategy(), class in class_strategy()) {
        let inst = instance(seed, n, m, t, class);
        prop_assume!(inst.is_some());
        let inst = inst.unwrap();
        let res = solve(&inst, &SolveConfig::with_checks(CheckLevel::Every)).unwrap();
        prop_assert!(res.allocation.is_complete());
        prop_assert!(Reference::new(&inst).is_efx(&bundles(&res.allocation)));
    }

    #[test]
    fn allocations_stay_disjoint(seed in any::<u64>(), m in 1usize..30) {
        let mut rng = SplitMix64::new(seed);
        let mut x = Allocation::empty(3, m);
        for _ in 0..40 {
            let a = AgentId(rng.index(3));
            let b = random_bundle(&mut rng, m);
            let before = x.clone();
            if x.add_to(a, &b).is_err() {
                prop_assert_eq!(&x, &before);
            }
            let total: usize = x.bundles().iter().map(Bundle::len).sum();
            prop_assert_eq!(total, x.allocated().len());
        }
    }
}
