use conc_ai_core::ids::{GlobalId, LocalId, Lockset};
use conc_ai_core::lattice::{AbsVal, AbstractEnv, MinAntichain, ValueD};
use proptest::prelude::*;

const K: usize = 5;

fn value() -> impl Strategy<Value = ValueD> {
    let elem = prop_oneof![4 => (-3i64..4).prop_map(AbsVal::Int), 1 => (0u32..2).prop_map(AbsVal::Tid)];
    prop_oneof![1 => Just(ValueD::Top), 6 => prop::collection::btree_set(elem, 0..=4).prop_map(ValueD::Set)]
}

fn antichain() -> impl Strategy<Value = MinAntichain> {
    prop::collection::vec(0u64..16, 0..4).prop_map(|v| v.into_iter().map(Lockset::from_bits).collect())
}

fn bottom_env() -> AbstractEnv {
    let mut e = AbstractEnv::initial(2, 2);
    e.set_local(LocalId(0), ValueD::bottom());
    e.set_local(LocalId(1), ValueD::bottom());
    e
}

fn env() -> impl Strategy<Value = AbstractEnv> {
    prop::collection::vec(value(), 4).prop_map(|vs| {
        let mut e = bottom_env();
        e.set_local(LocalId(0), vs[0].clone());
        e.set_local(LocalId(1), vs[1].clone());
        e.set_global(GlobalId(0), vs[2].clone());
        e.set_global(GlobalId(1), vs[3].clone());
        e
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn value_join_laws(a in value(), b in value(), c in value()) {
        prop_assert_eq!(a.join(&b, K), b.join(&a, K));
        prop_assert_eq!(a.join(&b, K).join(&c, K), a.join(&b.join(&c, K), K));
        prop_assert_eq!(a.join(&a, K), a.clone());
        prop_assert!(a.leq(&a.join(&b, K)) && b.leq(&a.join(&b, K)));
        prop_assert_eq!(a.leq(&b), a.join(&b, K) == b);
        prop_assert_eq!(ValueD::bottom().join(&a, K), a.clone());
    }

    #[test]
    fn value_join_is_least(a in value(), b in value(), c in value()) {
        if a.leq(&c) && b.leq(&c) {
            prop_assert!(a.join(&b, K).leq(&c));
        }
    }

    #[test]
    fn value_order(a in value(), b in value(), c in value()) {
        prop_assert!(a.leq(&a));
        if a.leq(&b) && b.leq(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.leq(&b) && b.leq(&c) {
            prop_assert!(a.leq(&c));
        }
    }

    #[test]
    fn value_meet(a in value(), b in value(), c in value()) {
        let m = a.meet(&b);
        prop_assert_eq!(&m, &b.meet(&a));
        prop_assert!(m.leq(&a) && m.leq(&b));
        if c.leq(&a) && c.leq(&b) {
            prop_assert!(c.leq(&m));
        }
    }

    #[test]
    fn value_join_assign_reports_change(a in value(), b in value()) {
        let mut x = a.clone();
        let changed = x.join_assign(&b, K);
        prop_assert_eq!(&x, &a.join(&b, K));
        prop_assert_eq!(changed, x != a);
    }

    #[test]
    fn antichain_join_laws(a in antichain(), b in antichain(), c in antichain()) {
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
        prop_assert_eq!(a.join(&a), a.clone());
        prop_assert!(a.leq(&a.join(&b)) && b.leq(&a.join(&b)));
        prop_assert_eq!(a.leq(&b), a.join(&b) == b);
        prop_assert!(MinAntichain::empty().leq(&a) && a.leq(&MinAntichain::full()));
        if a.leq(&c) && b.leq(&c) {
            prop_assert!(a.join(&b).leq(&c));
        }
    }

    #[test]
    fn antichain_order(a in antichain(), b in antichain(), c in antichain()) {
        if a.leq(&b) && b.leq(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.leq(&b) && b.leq(&c) {
            prop_assert!(a.leq(&c));
        }
    }

    #[test]
    fn antichain_elements_are_minimal(a in antichain(), s in 0u64..16) {
        let elems: Vec<Lockset> = a.iter().collect();
        for x in &elems {
            prop_assert!(elems.iter().all(|y| y == x || !y.is_subset(*x)));
        }
        let s = Lockset::from_bits(s);
        prop_assert_eq!(a.covers(s), elems.iter().any(|e| e.is_subset(s)));
    }

    #[test]
    fn env_join_laws(a in env(), b in env(), c in env()) {
        let j = |x: &AbstractEnv, y: &AbstractEnv| x.join(y, K).unwrap();
        let l = |x: &AbstractEnv, y: &AbstractEnv| x.leq(y).unwrap();
        prop_assert_eq!(j(&a, &b), j(&b, &a));
        prop_assert_eq!(j(&j(&a, &b), &c), j(&a, &j(&b, &c)));
        prop_assert_eq!(j(&a, &a), a.clone());
        prop_assert!(l(&a, &j(&a, &b)) && l(&b, &j(&a, &b)));
        prop_assert_eq!(l(&a, &b), j(&a, &b) == b);
        prop_assert_eq!(j(&bottom_env(), &a), a.clone());
        if l(&a, &b) && l(&b, &c) {
            prop_assert!(l(&a, &c));
        }
    }
}

#[test]
fn env_shapes_must_match() {
    let a = AbstractEnv::initial(1, 1);
    let b = AbstractEnv::initial(2, 1);
    assert!(a.join(&b, K).is_err());
    assert!(a.leq(&b).is_err());
}
