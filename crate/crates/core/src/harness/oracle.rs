//! Explicit-state bounded exploration used as an independent oracle.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{Cfa, Loc};
use crate::transform::{live_variables, single_loop_transform};

use super::interp::step;

/// Upper bound on the number of distinct loop-head states explored.
const STATE_CAP: usize = 200_000;

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Loop traversals after which an error location is reachable.
    pub error_depths: BTreeSet<usize>,
    /// Every reachable state was explored, so `error_depths` is complete up
    /// to repetition (relative to the havoc domain).
    pub exhaustive: bool,
    /// Some execution left the value domain and was cut.
    pub truncated: bool,
    /// Loop-head states after exactly `i` traversals, over `vars`. Variables
    /// dead at the head are reported as 0.
    pub layers: Vec<BTreeSet<Vec<i64>>>,
    pub vars: Vec<String>,
    pub head: Option<Loc>,
}

impl OracleResult {
    pub fn min_error_depth(&self) -> Option<usize> {
        self.error_depths.iter().next().copied()
    }

    /// Layer `i` projected onto the named variables.
    pub fn layer_projection(&self, i: usize, names: &[String]) -> Option<BTreeSet<Vec<i64>>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.vars.iter().position(|v| v == n))
            .collect::<Option<_>>()?;
        self.layers
            .get(i)
            .map(|l| l.iter().map(|s| idx.iter().map(|&k| s[k]).collect()).collect())
    }
}

struct Explorer<'a> {
    cfa: &'a Cfa,
    head: Option<Loc>,
    bound: i64,
    truncated: bool,
}

type Env = BTreeMap<String, i64>;

impl Explorer<'_> {
    /// Runs from `(l, env)` until the loop head, an error, or the exit.
    fn segment(&mut self, l: Loc, env: Env) -> (Vec<Env>, bool) {
        let b = self.bound;
        let havoc = |_: &str| (-b..=b).collect::<Vec<_>>();
        let mut heads = Vec::new();
        let mut error = false;
        let mut stack = vec![(l, env, true)];
        while let Some((l, env, first)) = stack.pop() {
            if !first && Some(l) == self.head {
                heads.push(env);
                continue;
            }
            if self.cfa.errors.contains(&l) {
                error = true;
                continue;
            }
            for e in self.cfa.out_edges(l) {
                let (succ, cut) = step(&e.op, &env, &havoc, Some(b));
                self.truncated |= cut;
                stack.extend(succ.into_iter().map(|n| (e.dst, n, false)));
            }
        }
        (heads, error)
    }
}

/// Breadth-first exploration by loop traversals, at most `max_steps` deep,
/// with havoc values drawn from `[-domain_bound, domain_bound]`.
pub fn interpret_bounded(cfa: &Cfa, max_steps: usize, domain_bound: i64) -> OracleResult {
    const MIN_LAYERS: usize = 5;
    let cfa = &single_loop_transform(cfa);
    let head = cfa.loop_heads().into_iter().next();
    let live = live_variables(cfa);
    let vars = cfa.vars.clone();
    let canon = |env: &Env| -> Vec<i64> {
        vars.iter()
            .map(|v| match head {
                Some(h) if !live[&h].contains(v) => 0,
                _ => env.get(v).copied().unwrap_or(0),
            })
            .collect()
    };
    let to_env = |s: &Vec<i64>| -> Env { vars.iter().cloned().zip(s.iter().copied()).collect() };
    let mut ex = Explorer {
        cfa,
        head,
        bound: domain_bound,
        truncated: false,
    };

    let mut error_depths = BTreeSet::new();
    let (first, err) = ex.segment(cfa.initial, Env::new());
    if err {
        error_depths.insert(0);
    }
    let mut layers = vec![first.iter().map(canon).collect::<BTreeSet<_>>()];
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut saturated = head.is_none();
    let mut capped = false;
    let mut i = 0;
    while let Some(h) = head.filter(|_| i < max_steps) {
        let layer = layers[i].clone();
        seen.extend(layer.iter().cloned());
        let mut next = BTreeSet::new();
        for s in &layer {
            let (hs, err) = ex.segment(h, to_env(s));
            if err {
                error_depths.insert(i);
            }
            next.extend(hs.iter().map(canon));
        }
        if !saturated && next.is_subset(&seen) {
            saturated = true;
        }
        if seen.len() + next.len() > STATE_CAP {
            capped = true;
            break;
        }
        layers.push(next);
        i += 1;
        if saturated && i >= MIN_LAYERS {
            break;
        }
    }
    OracleResult {
        error_depths,
        exhaustive: saturated && !ex.truncated && !capped,
        truncated: ex.truncated,
        layers,
        vars,
        head,
    }
}
