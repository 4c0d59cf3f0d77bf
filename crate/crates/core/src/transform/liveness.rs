use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{Cfa, Loc};

/// Variables live on entry to each location (backward may-analysis).
pub fn live_variables(cfa: &Cfa) -> BTreeMap<Loc, BTreeSet<String>> {
    let mut live: BTreeMap<Loc, BTreeSet<String>> =
        cfa.locations.iter().map(|l| (*l, BTreeSet::new())).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for e in cfa.edges.iter().rev() {
            let mut s: BTreeSet<String> = live[&e.dst].clone();
            if let Some(d) = e.op.def() {
                s.remove(d);
            }
            s.extend(e.op.uses());
            let cur = live.get_mut(&e.src).expect("edge source is a location");
            let before = cur.len();
            cur.extend(s);
            changed |= cur.len() != before;
        }
    }
    live
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfa, parse};

    #[test]
    fn nondet_temporaries_are_dead_at_the_loop_head() {
        let c = build_cfa(
            &parse("int x; x = 0; while (nondet()) { x = x + 2; } if (x % 2) { ERROR: return; }").unwrap(),
        )
        .unwrap();
        let head = *c.loop_heads().iter().next().unwrap();
        let live = live_variables(&c);
        assert_eq!(live[&head], BTreeSet::from(["x".to_string()]));
        assert!(live[&c.initial].is_empty());
    }
}
