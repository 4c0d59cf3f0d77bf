//! Replays a counterexample model on the concrete CFA.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::Cfa;
use crate::solver::Model;
use crate::transform::single_loop_transform;

use super::interp::step;

/// Whether some execution of `cfa` reaches an error location after exactly
/// `depth` traversals of its single-loop form, drawing every nondeterministic value from the
/// values `model` assigns to that variable.
pub fn replay(cfa: &Cfa, model: &Model, depth: usize) -> bool {
    let mut values: BTreeMap<String, BTreeSet<i64>> = BTreeMap::new();
    for (v, x) in model {
        values.entry(v.name.to_string()).or_default().insert(*x);
    }
    let havoc = |x: &str| -> Vec<i64> {
        match values.get(x) {
            Some(s) => s.iter().copied().collect(),
            None => vec![0],
        }
    };
    let cfa = &single_loop_transform(cfa);
    let heads = cfa.loop_heads();
    let mut stack = vec![(cfa.initial, BTreeMap::new(), 0usize)];
    while let Some((l, env, visits)) = stack.pop() {
        let visits = visits + usize::from(heads.contains(&l));
        if visits > depth + 1 {
            continue;
        }
        if cfa.errors.contains(&l) {
            if visits.max(1) - 1 == depth {
                return true;
            }
            continue;
        }
        for e in cfa.out_edges(l) {
            for n in step(&e.op, &env, &havoc, None).0 {
                stack.push((e.dst, n, visits));
            }
        }
    }
    false
}
