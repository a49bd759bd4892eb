//! Independent oracles for the conditional-independence engine.
//!
//! `brute_force_closure` recomputes the closure by asking, for every
//! statement over the universe, whether some single rule application
//! produces it from what is already known, and iterating to a fixed point.
//! `soundness_check` samples random discrete Bayesian networks (the regime
//! atom a root with a uniform prior), keeps those in which every premise
//! holds numerically, and tests each derived statement in them.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdd_core::ci::{CIStatement, VarSet};

pub const SEMANTIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Tri {
    l: u8,
    r: u8,
    g: u8,
}

fn to_tri(atoms: &[&str], s: &CIStatement) -> Tri {
    let m = |set: &VarSet| {
        set.iter().fold(0u8, |acc, a| {
            let i = atoms.iter().position(|n| *n == a.name()).expect("atom in universe");
            acc | (1 << i)
        })
    };
    Tri {
        l: m(s.left()),
        r: m(s.right()),
        g: m(s.given()),
    }
}

fn from_tri(atoms: &[&str], t: Tri) -> CIStatement {
    let set = |mask: u8| {
        VarSet::of(
            (0..atoms.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| atoms[i].to_string()),
        )
    };
    CIStatement::new(set(t.l), set(t.r), set(t.g)).unwrap()
}

fn sub_masks(mask: u8) -> Vec<u8> {
    (1..=mask).filter(|s| s & !mask == 0).collect()
}

fn one_step(c: Tri, sigma: u8, known: &BTreeSet<Tri>) -> bool {
    let has = |l: u8, r: u8, g: u8| known.contains(&Tri { l, r, g });
    let regime_right = c.r & sigma != 0;
    // symmetry
    if !regime_right && has(c.r, c.l, c.g) {
        return true;
    }
    // decomposition
    if known.iter().any(|k| k.l == c.l && k.g == c.g && c.r & !k.r == 0) {
        return true;
    }
    if regime_right && known.iter().any(|k| k.r == c.r && k.g == c.g && c.l & !k.l == 0) {
        return true;
    }
    // weak union
    for w in sub_masks(c.g) {
        if has(c.l, c.r | w, c.g & !w) {
            return true;
        }
        if regime_right && has(c.l | w, c.r, c.g & !w) {
            return true;
        }
    }
    // contraction
    for y in sub_masks(c.r) {
        let w = c.r & !y;
        if w != 0 && has(c.l, y, c.g) && has(c.l, w, c.g | y) {
            return true;
        }
    }
    if regime_right {
        for l1 in sub_masks(c.l) {
            let l2 = c.l & !l1;
            if l2 != 0 && has(l1, c.r, c.g) && has(l2, c.r, c.g | l1) {
                return true;
            }
        }
    }
    false
}

/// Non-trivial disjoint statements over `atoms` derivable from `premises`.
pub fn brute_force_closure(atoms: &[&str], premises: &[CIStatement]) -> BTreeSet<CIStatement> {
    let n = atoms.len();
    let sigma = atoms
        .iter()
        .position(|a| *a == "Sigma")
        .map_or(0u8, |i| 1 << i);
    let mut candidates = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let (mut l, mut r, mut g) = (0u8, 0u8, 0u8);
        let mut c = code;
        for i in 0..n {
            match c % 4 {
                1 => l |= 1 << i,
                2 => r |= 1 << i,
                3 => g |= 1 << i,
                _ => {}
            }
            c /= 4;
        }
        if l != 0 && r != 0 && l & sigma == 0 {
            candidates.push(Tri { l, r, g });
        }
    }
    let mut known: BTreeSet<Tri> = premises
        .iter()
        .filter(|p| !p.is_trivial())
        .map(|p| to_tri(atoms, p))
        .collect();
    loop {
        let fresh: Vec<Tri> = candidates
            .iter()
            .copied()
            .filter(|c| !known.contains(c) && one_step(*c, sigma, &known))
            .collect();
        if fresh.is_empty() {
            break;
        }
        known.extend(fresh);
    }
    known.into_iter().map(|t| from_tri(atoms, t)).collect()
}

/// Joint distribution over discrete variables, row-major over `cards`.
pub struct DiscreteModel {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl DiscreteModel {
    fn index_to_values(&self, mut idx: usize) -> Vec<usize> {
        let mut v = vec![0; self.cards.len()];
        for i in (0..self.cards.len()).rev() {
            v[i] = idx % self.cards[i];
            idx /= self.cards[i];
        }
        v
    }

    fn marginal(&self, mask: u8) -> std::collections::HashMap<Vec<usize>, f64> {
        let mut out = std::collections::HashMap::new();
        for (idx, p) in self.probs.iter().enumerate() {
            let vals = self.index_to_values(idx);
            let key: Vec<usize> = (0..self.cards.len())
                .map(|i| if mask & (1 << i) != 0 { vals[i] } else { usize::MAX })
                .collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        out
    }

    /// `p(l, r, g) p(g) = p(l, g) p(r, g)` at every configuration.
    pub fn holds(&self, atoms: &[&str], s: &CIStatement) -> bool {
        let t = to_tri(atoms, s);
        let all = self.marginal(t.l | t.r | t.g);
        let pg = self.marginal(t.g);
        let plg = self.marginal(t.l | t.g);
        let prg = self.marginal(t.r | t.g);
        let project = |key: &Vec<usize>, mask: u8| -> Vec<usize> {
            key.iter()
                .enumerate()
                .map(|(i, &v)| if mask & (1 << i) != 0 { v } else { usize::MAX })
                .collect()
        };
        all.iter().all(|(key, &p)| {
            let lhs = p * pg[&project(key, t.g)];
            let rhs = plg[&project(key, t.l | t.g)] * prg[&project(key, t.r | t.g)];
            (lhs - rhs).abs() <= SEMANTIC_TOL
        })
    }
}

/// Random Bayesian network; the regime atom (if any) is a root with a
/// uniform prior over three regimes.
pub fn random_model(atoms: &[&str], rng: &mut ChaCha8Rng) -> DiscreteModel {
    let n = atoms.len();
    let cards: Vec<usize> = atoms
        .iter()
        .map(|a| if *a == "Sigma" { 3 } else { 2 })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    if let Some(s) = atoms.iter().position(|a| *a == "Sigma") {
        let pos = order.iter().position(|&o| o == s).unwrap();
        order.remove(pos);
        order.insert(0, s);
    }
    let edge_prob = rng.random_range(0.2..0.6);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &child) in order.iter().enumerate() {
        for &parent in &order[..k] {
            if rng.random::<f64>() < edge_prob {
                parents[child].push(parent);
            }
        }
    }
    // conditional tables keyed by parent configuration
    let mut cpts: Vec<std::collections::HashMap<Vec<usize>, Vec<f64>>> = vec![Default::default(); n];
    let total: usize = cards.iter().product();
    let mut probs = vec![0.0; total];
    let model = DiscreteModel {
        cards: cards.clone(),
        probs: vec![],
    };
    for (idx, p) in probs.iter_mut().enumerate() {
        let vals = model.index_to_values(idx);
        let mut prob = 1.0;
        for &v in &order {
            let key: Vec<usize> = parents[v].iter().map(|&q| vals[q]).collect();
            let dist = cpts[v].entry(key).or_insert_with(|| {
                if atoms[v] == "Sigma" {
                    vec![1.0 / cards[v] as f64; cards[v]]
                } else {
                    let w: Vec<f64> = (0..cards[v]).map(|_| rng.random::<f64>() + 0.05).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / s).collect()
                }
            });
            prob *= dist[vals[v]];
        }
        *p = prob;
    }
    DiscreteModel { cards, probs }
}

pub struct SoundnessReport {
    pub accepted: usize,
    pub refuted: Option<CIStatement>,
}

/// Samples models until `wanted` satisfy all premises (or `max_tries`), and
/// checks every statement of `derived` in each accepted model.
pub fn soundness_check(
    atoms: &[&str],
    premises: &[CIStatement],
    derived: &[CIStatement],
    seed: u64,
    wanted: usize,
    max_tries: usize,
) -> SoundnessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    for _ in 0..max_tries {
        if accepted >= wanted {
            break;
        }
        let m = random_model(atoms, &mut rng);
        if !premises.iter().all(|p| m.holds(atoms, p)) {
            continue;
        }
        accepted += 1;
        if let Some(bad) = derived.iter().find(|d| !m.holds(atoms, d)) {
            return SoundnessReport {
                accepted,
                refuted: Some(bad.clone()),
            };
        }
    }
    SoundnessReport {
        accepted,
        refuted: None,
    }
}

/// Fixed battery of premise sets over at most four atoms.
pub fn battery() -> Vec<(Vec<&'static str>, Vec<&'static str>)> {
    vec![
        (vec!["A", "B", "C"], vec!["A _||_ B, C"]),
        (vec!["A", "B", "C"], vec!["A _||_ B | C"]),
        (vec!["A", "B", "C"], vec!["A _||_ B", "A _||_ C | B"]),
        (vec!["A", "B", "C"], vec!["A _||_ B | C", "A _||_ C"]),
        (vec!["A", "B", "C"], vec!["A _||_ B | C", "A _||_ C | B"]),
        (vec!["A", "B", "C", "D"], vec!["A _||_ B", "C _||_ D | A"]),
        (vec!["A", "B", "C", "D"], vec!["A, B _||_ C | D", "D _||_ A"]),
        (vec!["A", "B", "Sigma"], vec!["A, B _||_ Sigma"]),
        (vec!["A", "B", "Sigma"], vec!["A _||_ Sigma", "B _||_ Sigma | A"]),
        (vec!["A", "B", "Sigma"], vec!["A _||_ B | Sigma", "A _||_ Sigma"]),
        (vec!["A", "B", "C", "Sigma"], vec!["B _||_ Sigma | A", "C _||_ A | B, Sigma"]),
        (vec!["C", "Sigma", "T", "X"], vec!["C, X _||_ Sigma", "T _||_ C | X, Sigma"]),
        (vec!["Sigma", "T", "X", "Y"], vec!["Y _||_ Sigma | X, T", "X _||_ Sigma"]),
        (vec!["A", "B", "C", "Sigma"], vec!["A _||_ B, Sigma | C"]),
        (vec!["A", "B", "Sigma"], vec![]),
    ]
}
