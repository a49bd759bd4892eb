use std::fmt;

use serde::{Deserialize, Serialize};

use super::statement::{CIStatement, VarSet};
use super::CiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    Premise,
    /// Symmetry.
    P1,
    /// `X ⟂ Y | X`.
    P2,
    /// Decomposition.
    P3,
    /// Weak union.
    P4,
    /// Contraction.
    P5,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Premise => "Premise",
            Rule::P1 => "P1",
            Rule::P2 => "P2",
            Rule::P3 => "P3",
            Rule::P4 => "P4",
            Rule::P5 => "P5",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A declared determinism `dependent <= determinant`: every atom of
/// `dependent` is a function of `determinant`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FunctionalDep {
    pub dependent: VarSet,
    pub determinant: VarSet,
}

impl FunctionalDep {
    pub fn new(dependent: VarSet, determinant: VarSet) -> Result<Self, CiError> {
        if dependent.has_regime() || determinant.has_regime() {
            return Err(CiError::Validity(
                "the regime atom cannot take part in a functional dependency".into(),
            ));
        }
        Ok(Self {
            dependent,
            determinant,
        })
    }
}

impl fmt::Display for FunctionalDep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.dependent, self.determinant)
    }
}

/// Atoms functionally determined by `set` (including `set` itself).
pub fn determined_by(set: &VarSet, fds: &[FunctionalDep]) -> VarSet {
    let mut out = set.clone();
    loop {
        let before = out.len();
        for fd in fds {
            if fd.determinant.is_subset(&out) {
                out = out.union(&fd.dependent);
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

/// `W ⪯ Y`: every atom of `W` is in `Y` or determined by it.
pub fn is_function_of(w: &VarSet, y: &VarSet, fds: &[FunctionalDep]) -> bool {
    w.is_subset(y) || w.is_subset(&determined_by(y, fds))
}

fn expect_inputs(rule: Rule, inputs: &[CIStatement], n: usize) -> Result<(), CiError> {
    if inputs.len() != n {
        return Err(CiError::PatternMismatch(format!(
            "{rule} takes {n} input statement(s), got {}",
            inputs.len()
        )));
    }
    Ok(())
}

fn single_witness(rule: Rule, witness: &[VarSet]) -> Result<&VarSet, CiError> {
    match witness {
        [w] => Ok(w),
        _ => Err(CiError::PatternMismatch(format!(
            "{rule} needs exactly one witness set W, got {}",
            witness.len()
        ))),
    }
}

/// Applies one axiom to its inputs.
///
/// `witness` carries `W` for P3/P4 and the pair `[X, Y]` for P2; it is empty
/// for P1 and P5. Statements with the regime atom on the right also stand for
/// their mirror image (regime on the left), so P3, P4 and P5 accept them in
/// either reading. P1 on such a statement would move the regime atom left and
/// is rejected.
pub fn apply_rule(
    rule: Rule,
    inputs: &[CIStatement],
    witness: &[VarSet],
    fds: &[FunctionalDep],
) -> Result<CIStatement, CiError> {
    match rule {
        Rule::Premise => Err(CiError::PatternMismatch(
            "Premise is not an inference rule".into(),
        )),
        Rule::P1 => {
            expect_inputs(rule, inputs, 1)?;
            let s = &inputs[0];
            CIStatement::new(s.right().clone(), s.left().clone(), s.given().clone())
        }
        Rule::P2 => {
            expect_inputs(rule, inputs, 0)?;
            let [x, y] = witness else {
                return Err(CiError::PatternMismatch(
                    "P2 needs the witness pair [X, Y]".into(),
                ));
            };
            CIStatement::new(x.clone(), y.clone(), x.clone())
        }
        Rule::P3 => {
            expect_inputs(rule, inputs, 1)?;
            let s = &inputs[0];
            let w = single_witness(rule, witness)?;
            if is_function_of(w, s.right(), fds) {
                CIStatement::new(s.left().clone(), w.clone(), s.given().clone())
            } else if s.regime_right() && is_function_of(w, s.left(), fds) {
                CIStatement::new(w.clone(), s.right().clone(), s.given().clone())
            } else {
                Err(CiError::PatternMismatch(format!(
                    "P3: witness {w} is not a function of either term of '{s}'"
                )))
            }
        }
        Rule::P4 => {
            expect_inputs(rule, inputs, 1)?;
            let s = &inputs[0];
            let w = single_witness(rule, witness)?;
            let given = s.given().union(w);
            // mirror reading: a regime-right statement may take the witness from its left term
            if is_function_of(w, s.right(), fds)
                || (s.regime_right() && is_function_of(w, s.left(), fds))
            {
                CIStatement::new(s.left().clone(), s.right().clone(), given)
            } else {
                Err(CiError::PatternMismatch(format!(
                    "P4: witness {w} is not a function of either term of '{s}'"
                )))
            }
        }
        Rule::P5 => {
            expect_inputs(rule, inputs, 2)?;
            let (a, b) = (&inputs[0], &inputs[1]);
            if b.left() == a.left() && b.given() == &a.right().union(a.given()) {
                return CIStatement::new(
                    a.left().clone(),
                    a.right().union(b.right()),
                    a.given().clone(),
                );
            }
            if a.regime_right()
                && b.regime_right()
                && b.right() == a.right()
                && b.given() == &a.left().union(a.given())
            {
                return CIStatement::new(
                    a.left().union(b.left()),
                    a.right().clone(),
                    a.given().clone(),
                );
            }
            Err(CiError::PatternMismatch(format!(
                "P5: '{a}' and '{b}' do not fit X _||_ Y | Z, X _||_ W | Y, Z"
            )))
        }
    }
}

/// One line of a derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub rule: Rule,
    pub inputs: Vec<usize>,
    pub output: CIStatement,
    /// `W` for P3/P4, `X` for P2.
    pub function_witness: Option<VarSet>,
}

impl ProofStep {
    /// Witness slice in the shape [`apply_rule`] expects.
    pub fn witness_args(&self) -> Vec<VarSet> {
        match (self.rule, &self.function_witness) {
            (Rule::P2, Some(x)) => vec![x.clone(), self.output.right().clone()],
            (_, Some(w)) => vec![w.clone()],
            (_, None) => Vec::new(),
        }
    }
}

impl fmt::Display for ProofStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inputs = if self.inputs.is_empty() {
            "-".to_string()
        } else {
            self.inputs
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{:<7} {:<7} {}", self.rule, inputs, self.output)?;
        if let Some(w) = &self.function_witness {
            write!(f, "    [W = {w}]")?;
        }
        Ok(())
    }
}
