use super::*;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec;

type Set = BTreeSet<i64>;
type Rhs = Box<dyn Fn(&mut dyn Env<Toy>) -> RhsOutput<u32, Set>>;

/// Unknowns are numbers; keys `>= 100` form one family.
struct Toy {
    rhs: BTreeMap<u32, Vec<Rhs>>,
    seeds: Vec<(u32, Set)>,
}

impl System for Toy {
    type Key = u32;
    type Value = Set;
    type Family = ();

    fn bottom(&self, _: &u32) -> Set {
        Set::new()
    }

    fn join_into(&self, _: &u32, acc: &mut Set, v: &Set) -> bool {
        let n = acc.len();
        acc.extend(v.iter().copied());
        acc.len() != n
    }

    fn leq(&self, _: &u32, a: &Set, b: &Set) -> bool {
        a.is_subset(b)
    }

    fn family_of(&self, k: &u32) -> Option<()> {
        (*k >= 100).then_some(())
    }

    fn seeds(&self) -> Vec<(u32, Set)> {
        self.seeds.clone()
    }

    fn rhs_count(&self, k: &u32) -> usize {
        self.rhs.get(k).map_or(0, |v| v.len())
    }

    fn eval(&self, k: &u32, i: usize, env: &mut dyn Env<Self>) -> RhsOutput<u32, Set> {
        (self.rhs[k][i])(env)
    }
}

fn set(xs: &[i64]) -> Set {
    xs.iter().copied().collect()
}

fn out(side: Vec<(u32, Set)>, contribution: Set) -> RhsOutput<u32, Set> {
    RhsOutput { side, contribution }
}

#[test]
fn constant_contribution() {
    let mut rhs: BTreeMap<u32, Vec<Rhs>> = BTreeMap::new();
    rhs.insert(0, vec![Box::new(|_| out(vec![], set(&[5])))]);
    let sys = Toy { rhs, seeds: vec![] };
    let sol = solve(&sys, &[0], SolverConfig::default()).unwrap();
    assert_eq!(sol.values[&0], set(&[5]));
    assert!(verify_post_solution(&sys, &sol.values, &[0]).is_empty());
}

#[test]
fn side_effect_is_accounted() {
    let mut rhs: BTreeMap<u32, Vec<Rhs>> = BTreeMap::new();
    rhs.insert(0, vec![Box::new(|_| out(vec![(1, set(&[1]))], Set::new()))]);
    let sys = Toy { rhs, seeds: vec![(1, Set::new())] };
    let sol = solve(&sys, &[0], SolverConfig::default()).unwrap();
    assert_eq!(sol.values[&1], set(&[1]));
}

fn chain() -> Toy {
    // 0 ⊒ {1}; 1 ⊒ 0 ∪ {2}; 2 ⊒ {x+1 | x ∈ 1, x < 5}; 2 side-effects 100
    let mut rhs: BTreeMap<u32, Vec<Rhs>> = BTreeMap::new();
    rhs.insert(0, vec![Box::new(|_| out(vec![], set(&[1])))]);
    rhs.insert(
        1,
        vec![Box::new(|env| {
            let mut v = env.get(&0);
            v.insert(2);
            v.extend(env.get(&2));
            out(vec![], v)
        })],
    );
    rhs.insert(
        2,
        vec![Box::new(|env| {
            let v: Set = env.get(&1).iter().filter(|x| **x < 5).map(|x| x + 1).collect();
            out(vec![(100, v.clone())], v)
        })],
    );
    rhs.insert(
        3,
        vec![Box::new(|env| {
            let all: Set = env.family(&()).into_iter().flat_map(|(_, v)| v).collect();
            out(vec![], all)
        })],
    );
    Toy { rhs, seeds: vec![] }
}

#[test]
fn dependencies_reach_fixpoint() {
    let sys = chain();
    let sol = solve(&sys, &[1, 3], SolverConfig::default()).unwrap();
    assert_eq!(sol.values[&1], set(&[1, 2, 3, 4, 5]));
    assert_eq!(sol.values[&100], set(&[2, 3, 4, 5]));
    // the family reader saw the late side-effect
    assert_eq!(sol.values[&3], set(&[2, 3, 4, 5]));
    assert!(verify_post_solution(&sys, &sol.values, &[1, 3]).is_empty());
}

#[test]
fn fifo_and_lifo_agree() {
    let sys = chain();
    let a = solve(&sys, &[3, 1], SolverConfig::default()).unwrap();
    let b = solve(&sys, &[3, 1], SolverConfig { order: Order::Fifo, ..Default::default() }).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn lowered_value_is_a_violation() {
    let sys = chain();
    let mut sol = solve(&sys, &[1], SolverConfig::default()).unwrap();
    sol.values.insert(0, Set::new());
    let v = verify_post_solution(&sys, &sol.values, &[1]);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].unknown, "0");
}

#[test]
fn seeds_only_is_not_a_solution() {
    let sys = chain();
    let v = verify_post_solution(&sys, &BTreeMap::new(), &[0, 1]);
    assert!(!v.is_empty());
}

#[test]
fn budget_is_enforced() {
    let mut rhs: BTreeMap<u32, Vec<Rhs>> = BTreeMap::new();
    rhs.insert(
        0,
        vec![Box::new(|env| {
            let v = env.get(&0);
            let next = v.iter().next_back().copied().unwrap_or(0) + 1;
            out(vec![], set(&[next]))
        })],
    );
    let sys = Toy { rhs, seeds: vec![] };
    let err = solve(&sys, &[0], SolverConfig { budget: 50, ..Default::default() }).unwrap_err();
    match err {
        SolveError::Budget { growing, .. } => assert!(growing[0].starts_with('0')),
        e => panic!("{e:?}"),
    }
}

#[test]
fn unreachable_unknowns_stay_unmaterialized() {
    let sys = chain();
    let sol = solve(&sys, &[0], SolverConfig::default()).unwrap();
    assert!(!sol.values.contains_key(&2));
    assert!(!sol.values.contains_key(&100));
}

#[test]
fn restart_when_watched_value_grows_after_read() {
    // 10 reads watched 50 and publishes it to 11; 12 later grows 50.
    let mut rhs: BTreeMap<u32, Vec<Rhs>> = BTreeMap::new();
    rhs.insert(
        10,
        vec![Box::new(|env| {
            let w = env.get(&50);
            let v = if w.is_empty() { set(&[0]) } else { Set::new() };
            out(vec![(11, v)], Set::new())
        })],
    );
    rhs.insert(12, vec![Box::new(|env| out(vec![(50, set(&[1]))], env.get(&13)))]);
    let sys = Toy { rhs, seeds: vec![] };
    let mut n = 0;
    let sol = solve_with_restarts(&sys, &[12, 10], &[50], 3, SolverConfig::default(), &mut |_| n += 1)
        .unwrap();
    assert_eq!(sol.stats.restarts, 1);
    assert_eq!(sol.values.get(&11).cloned().unwrap_or_default(), Set::new());
    assert!(n > 0);
}
