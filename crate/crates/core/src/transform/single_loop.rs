use crate::frontend::ast::{Cond, Expr, RelOp};
use crate::frontend::{Cfa, Edge, Op};

/// Name of the dispatch variable introduced for multi-loop programs.
pub const PC_VAR: &str = "__pc";

/// Rewrites a CFA with several loop heads into one with a single dispatch head.
///
/// Every edge `u -op-> h_j` into loop head `h_j` becomes
/// `u -op-> m -[__pc := j]-> lH`, and `lH -[__pc == j]-> h_j` dispatches back.
/// Visits to `lH` correspond one-to-one with visits to original loop heads.
pub fn single_loop_transform(cfa: &Cfa) -> Cfa {
    let heads: Vec<_> = cfa.loop_heads().into_iter().collect();
    if heads.len() <= 1 {
        return cfa.clone();
    }
    let mut out = cfa.clone();
    let mut next = cfa.fresh_loc();
    let mut fresh = || {
        let l = next;
        next += 1;
        l
    };
    let lh = fresh();
    out.locations.insert(lh);
    out.vars.push(PC_VAR.to_string());
    let mut edges = Vec::with_capacity(cfa.edges.len() * 2 + heads.len());
    for e in &cfa.edges {
        match heads.iter().position(|h| *h == e.dst) {
            Some(j) => {
                let mid = fresh();
                out.locations.insert(mid);
                edges.push(Edge {
                    src: e.src,
                    op: e.op.clone(),
                    dst: mid,
                });
                edges.push(Edge {
                    src: mid,
                    op: Op::Assign(PC_VAR.to_string(), Expr::Num(j as i64 + 1)),
                    dst: lh,
                });
            }
            None => edges.push(e.clone()),
        }
    }
    for (j, h) in heads.iter().enumerate() {
        edges.push(Edge {
            src: lh,
            op: Op::Assume(Cond::Rel(
                RelOp::Eq,
                Expr::var(PC_VAR),
                Expr::Num(j as i64 + 1),
            )),
            dst: *h,
        });
    }
    out.edges = edges;
    out.isolate_initial();
    out.prune();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{build_cfa, parse};

    fn cfa(src: &str) -> Cfa {
        build_cfa(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn single_loop_is_unchanged() {
        let c = cfa("int x; x = 0; while (nondet()) { x = x + 2; } if (x % 2) { ERROR: return; }");
        assert_eq!(single_loop_transform(&c), c);
    }

    #[test]
    fn sequential_loops_get_one_head() {
        let c = cfa("int x; int y; while (x < 3) { x = x + 1; } while (y < 2) { y = y + 1; } assert(x + y == 5);");
        assert_eq!(c.loop_heads().len(), 2);
        let t = single_loop_transform(&c);
        assert_eq!(t.loop_heads().len(), 1);
        assert!(t.vars.iter().any(|v| v == PC_VAR));
        let pc_values: Vec<_> = t
            .edges
            .iter()
            .filter_map(|e| match &e.op {
                Op::Assign(v, Expr::Num(n)) if v == PC_VAR => Some(*n),
                _ => None,
            })
            .collect();
        assert!(pc_values.contains(&1) && pc_values.contains(&2));
    }

    #[test]
    fn nested_loops_get_one_head() {
        let c = cfa("int i; int j; while (i < 3) { j = 0; while (j < 3) { j = j + 1; } i = i + 1; } assert(i + j != 4);");
        let t = single_loop_transform(&c);
        assert_eq!(t.loop_heads().len(), 1);
        assert!(t.edges.iter().all(|e| e.dst != t.initial));
    }
}
