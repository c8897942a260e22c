use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::Formula;
use crate::error::{Error, Result};

/// Widest attribute vector for which truth tables are enumerated.
pub const MAX_TRUTH_TABLE_ATTRS: usize = 20;

/// Default cap on intermediate and final DNF clause counts.
pub const DEFAULT_CLAUSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    fn holds(self, value: bool) -> bool {
        value == (self == Polarity::Positive)
    }
}

/// A conjunction of literals; attributes not mentioned are free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    literals: BTreeMap<usize, Polarity>,
}

impl Clause {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn literal(attr: usize, polarity: Polarity) -> Self {
        let mut c = Self::new();
        c.literals.insert(attr, polarity);
        c
    }

    /// The complete-literal clause matching exactly `vector`.
    pub fn minterm(vector: &[bool]) -> Self {
        Self {
            literals: vector
                .iter()
                .enumerate()
                .map(|(k, &b)| (k, if b { Polarity::Positive } else { Polarity::Negative }))
                .collect(),
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = (usize, Polarity)> + '_ {
        self.literals.iter().map(|(&k, &p)| (k, p))
    }

    pub fn polarity(&self, attr: usize) -> Option<Polarity> {
        self.literals.get(&attr).copied()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.literals.iter().all(|(&k, &p)| p.holds(assignment[k]))
    }

    /// Conjunction of two clauses, `None` if they contradict.
    fn conjoin(&self, other: &Clause) -> Option<Clause> {
        let mut merged = self.literals.clone();
        for (&k, &p) in &other.literals {
            match merged.insert(k, p) {
                Some(prev) if prev != p => return None,
                _ => {}
            }
        }
        Some(Clause { literals: merged })
    }

    fn subsumes(&self, other: &Clause) -> bool {
        self.literals.len() <= other.literals.len()
            && self.literals.iter().all(|(k, p)| other.literals.get(k) == Some(p))
    }
}

/// A disjunction of clauses over `num_attrs` attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnfForm {
    pub num_attrs: usize,
    pub clauses: Vec<Clause>,
}

impl DnfForm {
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().any(|c| c.eval(assignment))
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Every clause mentions every attribute.
    pub fn is_minterm_form(&self) -> bool {
        self.clauses.iter().all(|c| c.len() == self.num_attrs)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> DnfDisplay<'a> {
        DnfDisplay { dnf: self, names }
    }
}

pub struct DnfDisplay<'a> {
    dnf: &'a DnfForm,
    names: &'a [String],
}

impl fmt::Display for DnfDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dnf.clauses.is_empty() {
            return write!(f, "false");
        }
        for (i, clause) in self.dnf.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if clause.is_empty() {
                write!(f, "true")?;
                continue;
            }
            let lits: Vec<String> = clause
                .literals()
                .map(|(k, p)| {
                    let name = self.names.get(k).cloned().unwrap_or_else(|| format!("z{k}"));
                    match p {
                        Polarity::Positive => name,
                        Polarity::Negative => format!("!{name}"),
                    }
                })
                .collect();
            if self.dnf.clauses.len() > 1 && lits.len() > 1 {
                write!(f, "({})", lits.join(" & "))?;
            } else {
                write!(f, "{}", lits.join(" & "))?;
            }
        }
        Ok(())
    }
}

// Negation normal form: negations only on variables.
enum Nnf {
    Const(bool),
    Lit(usize, Polarity),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn nnf(f: &Formula, positive: bool) -> Nnf {
    match f {
        Formula::Const(b) => Nnf::Const(*b == positive),
        Formula::Var(k) => Nnf::Lit(
            *k,
            if positive {
                Polarity::Positive
            } else {
                Polarity::Negative
            },
        ),
        Formula::Not(a) => nnf(a, !positive),
        Formula::And(a, b) if positive => Nnf::And(vec![nnf(a, true), nnf(b, true)]),
        Formula::And(a, b) => Nnf::Or(vec![nnf(a, false), nnf(b, false)]),
        Formula::Or(a, b) if positive => Nnf::Or(vec![nnf(a, true), nnf(b, true)]),
        Formula::Or(a, b) => Nnf::And(vec![nnf(a, false), nnf(b, false)]),
        Formula::Implies(a, b) if positive => Nnf::Or(vec![nnf(a, false), nnf(b, true)]),
        Formula::Implies(a, b) => Nnf::And(vec![nnf(a, true), nnf(b, false)]),
        Formula::Iff(a, b) => Nnf::Or(vec![
            Nnf::And(vec![nnf(a, true), nnf(b, positive)]),
            Nnf::And(vec![nnf(a, false), nnf(b, !positive)]),
        ]),
        Formula::ExactlyOne(vars) => nnf(&Formula::exactly_one_expansion(vars), positive),
    }
}

fn cap_error(cap: usize) -> Error {
    Error::Resource(format!(
        "DNF exceeds {cap} clauses; enumerate the valid set and compile minterms instead"
    ))
}

/// Remove duplicates and clauses subsumed by a shorter one.
fn simplify(mut clauses: Vec<Clause>) -> Vec<Clause> {
    clauses.sort_by_key(Clause::len);
    let mut kept: Vec<Clause> = Vec::with_capacity(clauses.len());
    for c in clauses {
        if !kept.iter().any(|k| k.subsumes(&c)) {
            kept.push(c);
        }
    }
    kept
}

fn dnf_clauses(node: &Nnf, cap: usize) -> Result<Vec<Clause>> {
    match node {
        Nnf::Const(true) => Ok(vec![Clause::new()]),
        Nnf::Const(false) => Ok(Vec::new()),
        Nnf::Lit(k, p) => Ok(vec![Clause::literal(*k, *p)]),
        Nnf::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(dnf_clauses(p, cap)?);
                if out.len() > cap {
                    out = simplify(out);
                    if out.len() > cap {
                        return Err(cap_error(cap));
                    }
                }
            }
            Ok(simplify(out))
        }
        Nnf::And(parts) => {
            let mut acc = vec![Clause::new()];
            for p in parts {
                let rhs = dnf_clauses(p, cap)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &rhs {
                        if let Some(c) = a.conjoin(b) {
                            next.push(c);
                        }
                    }
                    if next.len() > cap {
                        next = simplify(next);
                        if next.len() > cap {
                            return Err(cap_error(cap));
                        }
                    }
                }
                acc = simplify(next);
                if acc.is_empty() {
                    break;
                }
            }
            Ok(acc)
        }
    }
}

fn check_width(f: &Formula, num_attrs: usize) -> Result<()> {
    match f.max_var() {
        Some(k) if k >= num_attrs => Err(Error::Config(format!(
            "formula mentions attribute {k} but only {num_attrs} are declared"
        ))),
        _ => Ok(()),
    }
}

/// Convert to an equivalent DNF, aborting past [`DEFAULT_CLAUSE_CAP`] clauses.
pub fn to_dnf(f: &Formula, num_attrs: usize) -> Result<DnfForm> {
    to_dnf_with_cap(f, num_attrs, DEFAULT_CLAUSE_CAP)
}

pub fn to_dnf_with_cap(f: &Formula, num_attrs: usize, cap: usize) -> Result<DnfForm> {
    check_width(f, num_attrs)?;
    let clauses = dnf_clauses(&nnf(f, true), cap)?;
    Ok(DnfForm { num_attrs, clauses })
}

/// Binary label vectors that satisfy a rule set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidSet {
    num_attrs: usize,
    vectors: BTreeSet<Vec<bool>>,
}

impl ValidSet {
    pub fn from_vectors(num_attrs: usize, vectors: impl IntoIterator<Item = Vec<bool>>) -> Result<Self> {
        let vectors: BTreeSet<Vec<bool>> = vectors.into_iter().collect();
        if let Some(v) = vectors.iter().find(|v| v.len() != num_attrs) {
            return Err(Error::Config(format!(
                "vector of length {} in a valid set over {num_attrs} attributes",
                v.len()
            )));
        }
        Ok(Self { num_attrs, vectors })
    }

    pub fn num_attrs(&self) -> usize {
        self.num_attrs
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, v: &[bool]) -> bool {
        self.vectors.contains(v)
    }

    /// Vectors in lexicographic order (`0 < 1`, attribute 0 most significant).
    pub fn iter(&self) -> impl Iterator<Item = &Vec<bool>> + '_ {
        self.vectors.iter()
    }

    pub fn to_minterms(&self) -> DnfForm {
        DnfForm {
            num_attrs: self.num_attrs,
            clauses: self.vectors.iter().map(|v| Clause::minterm(v)).collect(),
        }
    }
}

/// Render a binary vector as `"1001"`.
pub fn bit_string(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Assignment for row `row` of a truth table over `num_attrs` attributes,
/// attribute 0 being the most significant bit.
pub fn truth_table_row(row: u64, num_attrs: usize) -> Vec<bool> {
    (0..num_attrs).map(|k| row >> (num_attrs - 1 - k) & 1 == 1).collect()
}

/// Enumerate every `y ∈ {0,1}^K` satisfying `f`.
pub fn enumerate_valid(f: &Formula, num_attrs: usize) -> Result<ValidSet> {
    if num_attrs > MAX_TRUTH_TABLE_ATTRS {
        return Err(Error::Resource(format!(
            "truth-table enumeration is limited to {MAX_TRUTH_TABLE_ATTRS} attributes, got {num_attrs}"
        )));
    }
    check_width(f, num_attrs)?;
    let vectors = (0..1u64 << num_attrs)
        .map(|row| truth_table_row(row, num_attrs))
        .filter(|a| f.eval(a))
        .collect();
    Ok(ValidSet { num_attrs, vectors })
}
