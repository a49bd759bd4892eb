use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::premises::PremiseSet;
use super::rules::{apply_rule, FunctionalDep, ProofStep, Rule};
use super::statement::{Atom, CIStatement, VarSet};
use super::CiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Largest universe (regime atom included) the engine accepts.
    pub max_atoms: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_atoms: 8 }
    }
}

const HARD_ATOM_LIMIT: usize = 16;

/// Statement over universe bit positions, normalized (`left`/`right` carry
/// no bit of `given`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Triple {
    l: u16,
    r: u16,
    g: u16,
}

impl Triple {
    fn new(l: u16, r: u16, g: u16) -> Self {
        Self {
            l: l & !g,
            r: r & !g,
            g,
        }
    }

    fn is_trivial(&self) -> bool {
        self.l == 0 || self.r == 0
    }
}

fn bits(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Non-empty subsets of `mask`.
fn subsets(mask: u16) -> impl Iterator<Item = u16> {
    let mut sub = mask;
    let mut done = mask == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = sub;
        sub = (sub - 1) & mask;
        if sub == 0 {
            done = true;
        }
        Some(out)
    })
}

#[derive(Debug, Clone)]
struct Node {
    stmt: Triple,
    rule: Rule,
    inputs: Vec<usize>,
    witness: Option<u16>,
    depth: usize,
}

struct Universe {
    atoms: Vec<Atom>,
    regime: u16,
    fds: Vec<(u16, u16)>,
}

impl Universe {
    fn build(universe: &VarSet, fds: &[FunctionalDep], cap: usize) -> Result<Self, CiError> {
        let cap = cap.min(HARD_ATOM_LIMIT);
        if universe.len() > cap {
            return Err(CiError::UniverseTooLarge {
                atoms: universe.len(),
                cap,
            });
        }
        let atoms: Vec<Atom> = universe.iter().cloned().collect();
        let regime = atoms
            .iter()
            .position(Atom::is_regime)
            .map_or(0, |i| 1u16 << i);
        let mut u = Self {
            atoms,
            regime,
            fds: Vec::new(),
        };
        for fd in fds {
            let dep = u.mask(&fd.dependent)?;
            let det = u.mask(&fd.determinant)?;
            u.fds.push((dep, det));
        }
        Ok(u)
    }

    fn mask(&self, set: &VarSet) -> Result<u16, CiError> {
        let mut m = 0u16;
        for a in set {
            let i = self
                .atoms
                .binary_search(a)
                .map_err(|_| CiError::OutsideUniverse(a.name().to_string()))?;
            m |= 1 << i;
        }
        Ok(m)
    }

    fn set(&self, mask: u16) -> VarSet {
        bits(mask).map(|i| self.atoms[i].clone()).collect()
    }

    fn triple(&self, s: &CIStatement) -> Result<Triple, CiError> {
        Ok(Triple::new(
            self.mask(s.left())?,
            self.mask(s.right())?,
            self.mask(s.given())?,
        ))
    }

    fn statement(&self, t: Triple) -> CIStatement {
        CIStatement::new(self.set(t.l), self.set(t.r), self.set(t.g))
            .expect("engine never builds regime-left statements")
    }

    fn determined(&self, mask: u16) -> u16 {
        let mut out = mask;
        loop {
            let before = out;
            for &(dep, det) in &self.fds {
                if det & !out == 0 {
                    out |= dep;
                }
            }
            if out == before {
                return out;
            }
        }
    }

    fn regime_right(&self, t: &Triple) -> bool {
        t.r & self.regime != 0
    }

    /// Ordering identical to `CIStatement`'s derived `Ord`.
    fn canonical_key(&self, t: &Triple) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        (bits(t.l).collect(), bits(t.r).collect(), bits(t.g).collect())
    }
}

/// Least fixed point of P1–P5 over a finite universe.
///
/// Only non-trivial statements are stored. Trivial statements (an empty
/// left or right term, i.e. the normalized P2 instances) are reported by
/// [`Closure::contains`] without being materialized.
pub struct Closure {
    universe: Universe,
    premises: PremiseSet,
    nodes: Vec<Node>,
    index: HashMap<Triple, usize>,
}

struct Builder<'a> {
    universe: &'a Universe,
    nodes: Vec<Node>,
    index: HashMap<Triple, usize>,
    by_left: HashMap<u16, Vec<usize>>,
    by_regime_right: HashMap<u16, Vec<usize>>,
    next: Vec<usize>,
}

impl Builder<'_> {
    fn offer(&mut self, stmt: Triple, rule: Rule, inputs: Vec<usize>, witness: Option<u16>, depth: usize) {
        if stmt.is_trivial() || self.index.contains_key(&stmt) {
            return;
        }
        debug_assert_eq!(stmt.l & self.universe.regime, 0);
        let id = self.nodes.len();
        self.nodes.push(Node {
            stmt,
            rule,
            inputs,
            witness,
            depth,
        });
        self.index.insert(stmt, id);
        self.by_left.entry(stmt.l).or_default().push(id);
        if self.universe.regime_right(&stmt) {
            self.by_regime_right.entry(stmt.r).or_default().push(id);
        }
        self.next.push(id);
    }

    fn expand(&mut self, id: usize) {
        let node_depth = self.nodes[id].depth;
        let s = self.nodes[id].stmt;
        let u = self.universe;
        let depth = node_depth + 1;
        let regime_right = u.regime_right(&s);

        if !regime_right {
            self.offer(Triple::new(s.r, s.l, s.g), Rule::P1, vec![id], None, depth);
        }

        let right_fn = u.determined(s.r);
        for w in subsets(right_fn) {
            self.offer(Triple::new(s.l, w, s.g), Rule::P3, vec![id], Some(w), depth);
            self.offer(Triple::new(s.l, s.r, s.g | w), Rule::P4, vec![id], Some(w), depth);
        }
        if regime_right {
            for w in subsets(u.determined(s.l)) {
                // a witness that also fits the right term is read the stored way
                if w & !right_fn == 0 {
                    continue;
                }
                self.offer(Triple::new(w, s.r, s.g), Rule::P3, vec![id], Some(w), depth);
                self.offer(Triple::new(s.l, s.r, s.g | w), Rule::P4, vec![id], Some(w), depth);
            }
        }

        // contraction: partners already known at this depth or earlier
        let partners: Vec<usize> = self.by_left.get(&s.l).cloned().unwrap_or_default();
        for p in partners {
            let t = self.nodes[p].stmt;
            if self.nodes[p].depth > node_depth {
                continue;
            }
            // s first: s = X ⟂ Y | Z, t = X ⟂ W | Y,Z
            if t.g == s.r | s.g {
                self.offer(Triple::new(s.l, s.r | t.r, s.g), Rule::P5, vec![id, p], None, depth);
            }
            // s second
            if s.g == t.r | t.g {
                self.offer(Triple::new(t.l, t.r | s.r, t.g), Rule::P5, vec![p, id], None, depth);
            }
        }
        if regime_right {
            let partners: Vec<usize> = self.by_regime_right.get(&s.r).cloned().unwrap_or_default();
            for p in partners {
                let t = self.nodes[p].stmt;
                if self.nodes[p].depth > node_depth {
                    continue;
                }
                if t.g == s.l | s.g && !(t.l == s.l && t.g == s.r | s.g) {
                    self.offer(Triple::new(s.l | t.l, s.r, s.g), Rule::P5, vec![id, p], None, depth);
                }
                if s.g == t.l | t.g && !(s.l == t.l && s.g == t.r | t.g) {
                    self.offer(Triple::new(t.l | s.l, t.r, t.g), Rule::P5, vec![p, id], None, depth);
                }
            }
        }
    }
}

fn check_universe(premises: &PremiseSet, universe: &VarSet) -> Result<(), CiError> {
    for a in premises.atoms().iter() {
        if !universe.contains(a) {
            return Err(CiError::OutsideUniverse(a.name().to_string()));
        }
    }
    Ok(())
}

/// Computes the closure of `premises` under P1–P5 on `universe`.
pub fn closure(
    premises: &PremiseSet,
    universe: &VarSet,
    config: &EngineConfig,
) -> Result<Closure, CiError> {
    check_universe(premises, universe)?;
    let u = Universe::build(universe, &premises.functional_deps, config.max_atoms)?;

    let mut initial: Vec<Triple> = Vec::new();
    for s in &premises.statements {
        let t = u.triple(s)?;
        if !t.is_trivial() && !initial.contains(&t) {
            initial.push(t);
        }
    }
    initial.sort_by_key(|t| u.canonical_key(t));

    let mut b = Builder {
        universe: &u,
        nodes: Vec::new(),
        index: HashMap::new(),
        by_left: HashMap::new(),
        by_regime_right: HashMap::new(),
        next: Vec::new(),
    };
    for t in initial {
        b.offer(t, Rule::Premise, Vec::new(), None, 0);
    }
    let mut layer = std::mem::take(&mut b.next);
    while !layer.is_empty() {
        for &id in &layer {
            b.expand(id);
        }
        let mut next = std::mem::take(&mut b.next);
        next.sort_by_key(|&id| u.canonical_key(&b.nodes[id].stmt));
        layer = next;
    }
    let Builder { nodes, index, .. } = b;
    Ok(Closure {
        universe: u,
        premises: premises.clone(),
        nodes,
        index,
    })
}

impl Closure {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn atoms(&self) -> VarSet {
        self.universe.atoms.iter().cloned().collect()
    }

    /// Non-trivial members in canonical order.
    pub fn statements(&self) -> Vec<CIStatement> {
        let set: BTreeSet<CIStatement> = self
            .nodes
            .iter()
            .map(|n| self.universe.statement(n.stmt))
            .collect();
        set.into_iter().collect()
    }

    pub fn contains(&self, s: &CIStatement) -> bool {
        if self.premises.contains(s) {
            return true;
        }
        let Ok(t) = self.universe.triple(s) else {
            return false;
        };
        if t.is_trivial() {
            return trivial_proof(s).is_some();
        }
        self.index.contains_key(&t)
    }

    /// Breadth-first depth at which `s` was first derived.
    pub fn depth_of(&self, s: &CIStatement) -> Option<usize> {
        let t = self.universe.triple(s).ok()?;
        self.index.get(&t).map(|&id| self.nodes[id].depth)
    }

    /// Proof of `s` extracted from the derivation DAG, numbered from 0.
    pub fn proof(&self, s: &CIStatement) -> Option<Vec<ProofStep>> {
        if self.premises.contains(s) {
            return Some(vec![ProofStep {
                rule: Rule::Premise,
                inputs: Vec::new(),
                output: s.clone(),
                function_witness: None,
            }]);
        }
        let t = self.universe.triple(s).ok()?;
        if t.is_trivial() {
            return trivial_proof(s);
        }
        let &target = self.index.get(&t)?;

        let mut needed = BTreeSet::new();
        let mut stack = vec![target];
        while let Some(id) = stack.pop() {
            if needed.insert(id) {
                stack.extend(self.nodes[id].inputs.iter().copied());
            }
        }
        let mut order: Vec<usize> = needed.into_iter().collect();
        order.sort_by_key(|&id| (self.nodes[id].depth, id));
        let position: HashMap<usize, usize> =
            order.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();
        Some(
            order
                .iter()
                .map(|&id| {
                    let n = &self.nodes[id];
                    ProofStep {
                        rule: n.rule,
                        inputs: n.inputs.iter().map(|i| position[i]).collect(),
                        output: self.universe.statement(n.stmt),
                        function_witness: n.witness.map(|w| self.universe.set(w)),
                    }
                })
                .collect(),
        )
    }
}

/// P2 (and P1) derivation of a trivial statement, when one exists.
fn trivial_proof(s: &CIStatement) -> Option<Vec<ProofStep>> {
    if s.given().has_regime() {
        return None;
    }
    let x = s.given().clone();
    if s.left().is_empty() {
        Some(vec![ProofStep {
            rule: Rule::P2,
            inputs: Vec::new(),
            output: s.clone(),
            function_witness: Some(x),
        }])
    } else if s.right().is_empty() {
        let p2 = CIStatement::new(x.clone(), s.left().clone(), x.clone()).ok()?;
        Some(vec![
            ProofStep {
                rule: Rule::P2,
                inputs: Vec::new(),
                output: p2,
                function_witness: Some(x),
            },
            ProofStep {
                rule: Rule::P1,
                inputs: vec![0],
                output: s.clone(),
                function_witness: None,
            },
        ])
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub premises: PremiseSet,
    pub target: CIStatement,
    pub steps: Vec<ProofStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeriveOutcome {
    Derived(Derivation),
    NotDerivable,
}

/// Searches for a breadth-first-minimal derivation of `target`.
pub fn derive(
    premises: &PremiseSet,
    target: &CIStatement,
    config: &EngineConfig,
) -> Result<DeriveOutcome, CiError> {
    let universe = premises.atoms().union(&target.atoms());
    let cl = closure(premises, &universe, config)?;
    Ok(match cl.proof(target) {
        Some(steps) => DeriveOutcome::Derived(Derivation {
            premises: premises.clone(),
            target: target.clone(),
            steps,
        }),
        None => DeriveOutcome::NotDerivable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub valid: bool,
    pub first_failure: Option<usize>,
}

impl Verification {
    fn fail(at: usize) -> Self {
        Self {
            valid: false,
            first_failure: Some(at),
        }
    }
}

/// Re-checks every step of a derivation and that it ends in its target.
pub fn verify_derivation(derivation: &Derivation) -> Verification {
    let steps = &derivation.steps;
    let fds = &derivation.premises.functional_deps;
    if steps.is_empty() {
        return Verification::fail(0);
    }
    for (i, step) in steps.iter().enumerate() {
        let ok = match step.rule {
            Rule::Premise => step.inputs.is_empty() && derivation.premises.contains(&step.output),
            rule => {
                if step.inputs.iter().any(|&j| j >= i) {
                    false
                } else {
                    let inputs: Vec<CIStatement> =
                        step.inputs.iter().map(|&j| steps[j].output.clone()).collect();
                    apply_rule(rule, &inputs, &step.witness_args(), fds)
                        .is_ok_and(|out| out == step.output)
                }
            }
        };
        if !ok {
            return Verification::fail(i);
        }
    }
    if steps.last().map(|s| &s.output) != Some(&derivation.target) {
        return Verification::fail(steps.len() - 1);
    }
    Verification {
        valid: true,
        first_failure: None,
    }
}
