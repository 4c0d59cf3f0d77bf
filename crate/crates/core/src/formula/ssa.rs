use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use super::{Formula, FormulaError, SsaVar};

/// Current SSA index of each program variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SsaMap(BTreeMap<Arc<str>, u32>);

impl SsaMap {
    pub fn new() -> Self {
        SsaMap::default()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<Arc<str>>, index: u32) {
        self.0.insert(name.into(), index);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, u32)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    /// The variables of this map as SSA variables.
    pub fn vars(&self) -> impl Iterator<Item = SsaVar> + '_ {
        self.0.iter().map(|(k, v)| SsaVar::new(k.clone(), *v))
    }

    pub fn var(&self, name: &str) -> Option<SsaVar> {
        self.0
            .get_key_value(name)
            .map(|(k, v)| SsaVar::new(k.clone(), *v))
    }
}

impl<N: Into<Arc<str>>> FromIterator<(N, u32)> for SsaMap {
    fn from_iter<I: IntoIterator<Item = (N, u32)>>(iter: I) -> Self {
        SsaMap(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl fmt::Display for SsaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}↦{v}")?;
        }
        f.write_str("}")
    }
}

/// A block formula with its entry and exit SSA generations.
///
/// Variables in `body` at their `in_map` index are entry variables; every
/// other occurrence (exit values, intermediate assignments, havoced
/// temporaries) is local to the block and renamed on instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormulaTemplate {
    pub body: Formula,
    pub in_map: SsaMap,
    pub out_map: SsaMap,
}

impl FormulaTemplate {
    pub fn constant(body: Formula) -> Self {
        FormulaTemplate {
            body,
            in_map: SsaMap::new(),
            out_map: SsaMap::new(),
        }
    }
}

/// Issues fresh SSA indices for one verification run.
///
/// Indices are monotone per variable and never reissued, so two
/// instantiations can never share a local variable.
#[derive(Clone, Debug, Default)]
pub struct IndexPool {
    next: HashMap<Arc<str>, u32>,
    issued: HashSet<SsaVar>,
}

impl IndexPool {
    pub fn new() -> Self {
        IndexPool::default()
    }

    pub fn fresh(&mut self, name: &Arc<str>) -> Result<SsaVar, FormulaError> {
        let next = self.next.entry(name.clone()).or_insert(0);
        let v = SsaVar::new(name.clone(), *next);
        *next += 1;
        if !self.issued.insert(v.clone()) {
            return Err(FormulaError::IndexCollision(v));
        }
        Ok(v)
    }

    /// Marks every variable of `map` as issued.
    pub fn reserve(&mut self, map: &SsaMap) {
        for v in map.vars() {
            let next = self.next.entry(v.name.clone()).or_insert(0);
            *next = (*next).max(v.index + 1);
            self.issued.insert(v);
        }
    }

    pub fn issued_count(&self) -> usize {
        self.issued.len()
    }
}

/// Instantiates `template` with its entry variables rebased onto `base`.
///
/// Local indices are drawn from `pool`. Returns the instantiated body and the
/// exit SSA map. Instantiating TRANS repeatedly, feeding each exit map back
/// as the next base, builds the chain `T(s0,s1) ∧ … ∧ T(s_{k-1},s_k)`.
pub fn instantiate(
    template: &FormulaTemplate,
    base: &SsaMap,
    pool: &mut IndexPool,
) -> Result<(Formula, SsaMap), FormulaError> {
    for (name, _) in template.in_map.iter() {
        if !base.contains(name) {
            return Err(FormulaError::MissingBase(name.to_string()));
        }
    }
    pool.reserve(base);
    let mut renamed: HashMap<SsaVar, SsaVar> = HashMap::new();
    let mut rename = |v: &SsaVar, pool: &mut IndexPool| -> Result<SsaVar, FormulaError> {
        if template.in_map.get(&v.name) == Some(v.index) {
            return Ok(base.var(&v.name).expect("checked above"));
        }
        if let Some(r) = renamed.get(v) {
            return Ok(r.clone());
        }
        let r = pool.fresh(&v.name)?;
        renamed.insert(v.clone(), r.clone());
        Ok(r)
    };
    let body = template.body.try_map_vars(&mut |v| rename(v, pool))?;
    let mut exit = SsaMap::new();
    for v in template.out_map.vars() {
        let r = rename(&v, pool)?;
        exit.insert(r.name.clone(), r.index);
    }
    Ok((body, exit))
}

/// Renames every `(v, source[v])` occurrence to `(v, target[v])`.
pub fn shift_variable_index(
    f: &Formula,
    target: &SsaMap,
    source: &SsaMap,
) -> Result<Formula, FormulaError> {
    f.try_map_vars(&mut |v| {
        if source.get(&v.name) != Some(v.index) {
            return Err(FormulaError::UnboundVariable(v.clone()));
        }
        target
            .var(&v.name)
            .ok_or_else(|| FormulaError::UnboundVariable(v.clone()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{to_smtlib, Term};

    fn even_trans() -> FormulaTemplate {
        // havoc r; assume r != 0; x := x + 2   (entry x!0, exit x!1)
        FormulaTemplate {
            body: Formula::and([
                Formula::not(Formula::eq(Term::var("r", 0), Term::Const(0))),
                Formula::eq(
                    Term::var("x", 1),
                    Term::add(Term::var("x", 0), Term::Const(2)),
                ),
            ]),
            in_map: [("x", 0)].into_iter().collect(),
            out_map: [("x", 1)].into_iter().collect(),
        }
    }

    #[test]
    fn instantiating_trans_matches_the_worked_example() {
        let mut pool = IndexPool::new();
        let base: SsaMap = [("x", 0)].into_iter().collect();
        let (f, exit) = instantiate(&even_trans(), &base, &mut pool).unwrap();
        assert_eq!(to_smtlib(&f), "(and (not (= r!0 0)) (= x!1 (+ x!0 2)))");
        assert_eq!(exit, [("x", 1)].into_iter().collect());

        let (g, exit2) = instantiate(&even_trans(), &exit, &mut pool).unwrap();
        assert_eq!(to_smtlib(&g), "(and (not (= r!1 0)) (= x!2 (+ x!1 2)))");
        assert_eq!(exit2.get("x"), Some(2));
    }

    #[test]
    fn instantiating_false_keeps_base() {
        let t = FormulaTemplate::constant(Formula::FALSE);
        let base: SsaMap = [("x", 3)].into_iter().collect();
        let (f, exit) = instantiate(&t, &base, &mut IndexPool::new()).unwrap();
        assert!(f.is_false());
        assert!(exit.is_empty());
    }

    #[test]
    fn missing_base_is_reported() {
        let err = instantiate(&even_trans(), &SsaMap::new(), &mut IndexPool::new()).unwrap_err();
        assert_eq!(err, FormulaError::MissingBase("x".into()));
    }

    #[test]
    fn shift_matches_worked_example() {
        let f = Formula::eq(Term::modulo(Term::var("x", 1), 2), Term::Const(0));
        let source: SsaMap = [("x", 1)].into_iter().collect();
        let target: SsaMap = [("x", 0)].into_iter().collect();
        let g = shift_variable_index(&f, &target, &source).unwrap();
        assert_eq!(to_smtlib(&g), "(= (mod x!0 2) 0)");
        assert_eq!(shift_variable_index(&f, &source, &source).unwrap(), f);
    }

    #[test]
    fn shift_rejects_foreign_variables() {
        let f = Formula::eq(Term::var("x", 2), Term::var("y", 1));
        let source: SsaMap = [("x", 2)].into_iter().collect();
        let target: SsaMap = [("x", 0)].into_iter().collect();
        assert_eq!(
            shift_variable_index(&f, &target, &source).unwrap_err(),
            FormulaError::UnboundVariable(SsaVar::new("y", 1))
        );
    }

    #[test]
    fn pool_never_reissues() {
        let mut pool = IndexPool::new();
        let x: Arc<str> = "x".into();
        pool.reserve(&[("x", 4)].into_iter().collect());
        assert_eq!(pool.fresh(&x).unwrap().index, 5);
        assert_eq!(pool.fresh(&x).unwrap().index, 6);
    }
}
