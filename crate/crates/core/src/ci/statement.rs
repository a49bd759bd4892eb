use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CiError;

/// Name reserved for the non-stochastic regime indicator.
pub const REGIME_NAME: &str = "Sigma";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Stochastic,
    Regime,
}

/// A variable symbol. `Sigma` is the regime atom, every other name is stochastic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    name: String,
    kind: AtomKind,
}

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let kind = if name == REGIME_NAME {
            AtomKind::Regime
        } else {
            AtomKind::Stochastic
        };
        Self { name, kind }
    }

    pub fn regime() -> Self {
        Self::new(REGIME_NAME)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn is_regime(&self) -> bool {
        self.kind == AtomKind::Regime
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A joint variable, e.g. `(C, X)`, kept sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarSet(BTreeSet<Atom>);

impl VarSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(names.into_iter().map(Atom::new).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn has_regime(&self) -> bool {
        self.0.iter().any(Atom::is_regime)
    }

    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        Self(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        Self(self.0.difference(&other.0).cloned().collect())
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        self.0.insert(atom)
    }
}

impl FromIterator<Atom> for VarSet {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a VarSet {
    type Item = &'a Atom;
    type IntoIter = std::collections::btree_set::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a.name())?;
        }
        Ok(())
    }
}

/// `left ⟂ right | given`.
///
/// Statements are normalized on construction: atoms of `given` are removed
/// from `left` and `right`. The regime atom may never sit in `left`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CIStatement {
    left: VarSet,
    right: VarSet,
    given: VarSet,
}

impl CIStatement {
    pub fn new(left: VarSet, right: VarSet, given: VarSet) -> Result<Self, CiError> {
        let left = left.difference(&given);
        let right = right.difference(&given);
        if left.has_regime() {
            return Err(CiError::Validity(format!(
                "regime atom in the left term of '{left} _||_ {right} | {given}'"
            )));
        }
        Ok(Self { left, right, given })
    }

    pub fn left(&self) -> &VarSet {
        &self.left
    }

    pub fn right(&self) -> &VarSet {
        &self.right
    }

    pub fn given(&self) -> &VarSet {
        &self.given
    }

    /// Trivially true: one side is empty (every normalized instance of `X ⟂ Y | X`).
    pub fn is_trivial(&self) -> bool {
        self.left.is_empty() || self.right.is_empty()
    }

    /// Regime atom in the right term; such statements also stand for their
    /// transient mirror `Σ... ⟂ left | given`.
    pub fn regime_right(&self) -> bool {
        self.right.has_regime()
    }

    pub fn atoms(&self) -> VarSet {
        self.left.union(&self.right).union(&self.given)
    }
}

impl fmt::Display for CIStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {}", self.left, self.right)?;
        if !self.given.is_empty() {
            write!(f, " | {}", self.given)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CIStatement {
    type Err = CiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_statement(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Indep,
    Bar,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, CiError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if text[i..].starts_with("_||_") {
            out.push((i, Token::Indep));
            i += 4;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b',' {
            out.push((i, Token::Comma));
            i += 1;
        } else if c == b'|' {
            out.push((i, Token::Bar));
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                && !text[i..].starts_with("_||_")
            {
                i += 1;
            }
            out.push((start, Token::Ident(text[start..i].to_string())));
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(CiError::Syntax {
                position: i,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
}

/// Parses a comma/space separated list of identifiers, `0` meaning the empty set.
fn parse_varlist(
    tokens: &[(usize, Token)],
    what: &str,
    end_position: usize,
) -> Result<VarSet, CiError> {
    let position = tokens.first().map_or(end_position, |t| t.0);
    if tokens.is_empty() {
        return Err(CiError::Syntax {
            position,
            message: format!("expected a variable list for the {what} term"),
        });
    }
    if let [(_, Token::Ident(s))] = tokens {
        if s == "0" {
            return Ok(VarSet::empty());
        }
    }
    let mut set = VarSet::empty();
    let mut expect_name = true;
    for (pos, tok) in tokens {
        match tok {
            Token::Ident(name) if is_identifier(name) => {
                set.insert(Atom::new(name.as_str()));
                expect_name = false;
            }
            Token::Ident(name) => {
                return Err(CiError::Syntax {
                    position: *pos,
                    message: format!("invalid identifier '{name}'"),
                })
            }
            Token::Comma if !expect_name => expect_name = true,
            _ => {
                return Err(CiError::Syntax {
                    position: *pos,
                    message: format!("unexpected token in the {what} term"),
                })
            }
        }
    }
    if expect_name {
        return Err(CiError::Syntax {
            position: tokens.last().map_or(end_position, |t| t.0),
            message: format!("trailing comma in the {what} term"),
        });
    }
    Ok(set)
}

/// Parses `left _||_ right [| given]`.
pub fn parse_statement(text: &str) -> Result<CIStatement, CiError> {
    let tokens = tokenize(text)?;
    let end = text.len();
    let indep: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.1 == Token::Indep)
        .map(|(i, _)| i)
        .collect();
    let split = match indep.as_slice() {
        [i] => *i,
        [] => {
            return Err(CiError::Syntax {
                position: end,
                message: "missing '_||_'".into(),
            })
        }
        [_, second, ..] => {
            return Err(CiError::Syntax {
                position: tokens[*second].0,
                message: "more than one '_||_'".into(),
            })
        }
    };
    let bars: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.1 == Token::Bar)
        .map(|(i, _)| i)
        .collect();
    let bar = match bars.as_slice() {
        [] => None,
        [b] if *b > split => Some(*b),
        [b] => {
            return Err(CiError::Syntax {
                position: tokens[*b].0,
                message: "'|' before '_||_'".into(),
            })
        }
        [_, second, ..] => {
            return Err(CiError::Syntax {
                position: tokens[*second].0,
                message: "more than one '|'".into(),
            })
        }
    };
    let split_pos = tokens[split].0;
    let left = parse_varlist(&tokens[..split], "left", split_pos)?;
    let (right, given) = match bar {
        None => (parse_varlist(&tokens[split + 1..], "right", end)?, VarSet::empty()),
        Some(b) => (
            parse_varlist(&tokens[split + 1..b], "right", tokens[b].0)?,
            parse_varlist(&tokens[b + 1..], "conditioning", end)?,
        ),
    };
    CIStatement::new(left, right, given)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sufficiency_property() {
        let s = parse_statement("Y _||_ Sigma | C, X, T").unwrap();
        assert_eq!(s.left(), &VarSet::of(["Y"]));
        assert_eq!(s.right(), &VarSet::of(["Sigma"]));
        assert_eq!(s.given(), &VarSet::of(["C", "X", "T"]));
        assert!(s.regime_right());
    }

    #[test]
    fn given_clause_optional() {
        let s = parse_statement("X _||_ Y").unwrap();
        assert_eq!(s.left(), &VarSet::of(["X"]));
        assert_eq!(s.right(), &VarSet::of(["Y"]));
        assert!(s.given().is_empty());
    }

    #[test]
    fn regime_on_left_is_invalid() {
        assert!(matches!(
            parse_statement("Sigma _||_ Y | X"),
            Err(CiError::Validity(_))
        ));
    }

    #[test]
    fn space_separated_and_zero() {
        let s = parse_statement("C X _||_ Sigma | 0").unwrap();
        assert_eq!(s.left(), &VarSet::of(["C", "X"]));
        assert!(s.given().is_empty());
        let t = parse_statement("X_||_Y|Z").unwrap();
        assert_eq!(t.to_string(), "X _||_ Y | Z");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_statement("X Y | Z") {
            Err(CiError::Syntax { .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_statement("X _||_ Y | Z | W") {
            Err(CiError::Syntax { position, .. }) => assert_eq!(position, 13),
            other => panic!("{other:?}"),
        }
        match parse_statement("X _||_ Y, | Z") {
            Err(CiError::Syntax { .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_statement("X _||_ $") {
            Err(CiError::Syntax { position, .. }) => assert_eq!(position, 7),
            other => panic!("{other:?}"),
        }
        assert!(parse_statement("_||_ Y").is_err());
    }

    #[test]
    fn normalization_strips_given() {
        let s = parse_statement("C, X _||_ Sigma | X").unwrap();
        assert_eq!(s.left(), &VarSet::of(["C"]));
        assert_eq!(s.to_string(), "C _||_ Sigma | X");
        let p2 = parse_statement("X _||_ Y | X").unwrap();
        assert!(p2.is_trivial());
        assert_eq!(p2.to_string(), "0 _||_ Y | X");
    }

    #[test]
    fn canonical_printer_round_trips() {
        for text in [
            "Y _||_ Sigma | C, X, T",
            "B, A _||_ C",
            "T _||_ C | X Sigma",
            "0 _||_ Y | X",
        ] {
            let s = parse_statement(text).unwrap();
            assert_eq!(parse_statement(&s.to_string()).unwrap(), s);
        }
        assert_eq!(
            parse_statement("T _||_ C | X Sigma").unwrap().to_string(),
            "T _||_ C | Sigma, X"
        );
    }
}
