use serde::{Deserialize, Serialize};

use super::rules::FunctionalDep;
use super::statement::{parse_statement, Atom, CIStatement, VarSet};
use super::CiError;

/// Premises of a derivation problem: independence statements plus declared
/// functional dependencies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PremiseSet {
    pub statements: Vec<CIStatement>,
    pub functional_deps: Vec<FunctionalDep>,
}

impl PremiseSet {
    pub fn new(statements: Vec<CIStatement>) -> Self {
        Self {
            statements,
            functional_deps: Vec::new(),
        }
    }

    pub fn with_functional_deps(mut self, fds: Vec<FunctionalDep>) -> Self {
        self.functional_deps = fds;
        self
    }

    pub fn atoms(&self) -> VarSet {
        let mut out = VarSet::empty();
        for s in &self.statements {
            out = out.union(&s.atoms());
        }
        for fd in &self.functional_deps {
            out = out.union(&fd.dependent).union(&fd.determinant);
        }
        out
    }

    pub fn contains(&self, s: &CIStatement) -> bool {
        self.statements.contains(s)
    }
}

fn parse_names(text: &str, line: usize, offset: usize) -> Result<VarSet, CiError> {
    let mut set = VarSet::empty();
    let mut col = offset;
    for piece in text.split(|c: char| c == ',' || c.is_whitespace()) {
        if !piece.is_empty() {
            let ok = piece.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && piece.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(CiError::PremiseSyntax {
                    line,
                    column: col + 1,
                    message: format!("invalid identifier '{piece}'"),
                });
            }
            set.insert(Atom::new(piece));
        }
        col += piece.len() + 1;
    }
    if set.is_empty() {
        return Err(CiError::PremiseSyntax {
            line,
            column: offset + 1,
            message: "empty variable list in functional dependency".into(),
        });
    }
    Ok(set)
}

/// Parses a premise file: one statement per line, `#` comments, and
/// functional-dependency lines `Z <= X`.
pub fn parse_premises(text: &str) -> Result<PremiseSet, CiError> {
    let mut set = PremiseSet::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if let Some(pos) = content.find("<=") {
            let dependent = parse_names(&content[..pos], line_no, 0)?;
            let determinant = parse_names(&content[pos + 2..], line_no, pos + 2)?;
            let fd = FunctionalDep::new(dependent, determinant).map_err(|e| {
                CiError::PremiseSyntax {
                    line: line_no,
                    column: 1,
                    message: e.to_string(),
                }
            })?;
            set.functional_deps.push(fd);
            continue;
        }
        match parse_statement(content) {
            Ok(s) => {
                if !set.statements.contains(&s) {
                    set.statements.push(s);
                }
            }
            Err(CiError::Syntax { position, message }) => {
                return Err(CiError::PremiseSyntax {
                    line: line_no,
                    column: position + 1,
                    message,
                })
            }
            Err(CiError::Validity(message)) => {
                return Err(CiError::Validity(format!("line {line_no}: {message}")))
            }
            Err(other) => return Err(other),
        }
    }
    Ok(set)
}
