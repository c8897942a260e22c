use std::fmt;

/// Propositional formula over attributes identified by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// Exactly one of the listed attributes holds.
    ExactlyOne(Vec<usize>),
}

impl Formula {
    pub fn var(index: usize) -> Self {
        Formula::Var(index)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `Const(true)` for an empty list.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::Const(true))
    }

    /// Left-nested disjunction; `Const(false)` for an empty list.
    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::Const(false))
    }

    /// `∨_k (z_k ∧_{j≠k} ¬z_j)` over the given attributes.
    pub fn exactly_one_expansion(vars: &[usize]) -> Self {
        Formula::disjunction(vars.iter().map(|&k| {
            Formula::conjunction(
                std::iter::once(Formula::Var(k))
                    .chain(vars.iter().filter(|&&j| j != k).map(|&j| Formula::not(Formula::Var(j)))),
            )
        }))
    }

    /// Replace every `ExactlyOne` node by its expansion.
    pub fn expand_macros(&self) -> Formula {
        match self {
            Formula::Const(_) | Formula::Var(_) => self.clone(),
            Formula::Not(a) => Formula::not(a.expand_macros()),
            Formula::And(a, b) => Formula::and(a.expand_macros(), b.expand_macros()),
            Formula::Or(a, b) => Formula::or(a.expand_macros(), b.expand_macros()),
            Formula::Implies(a, b) => Formula::implies(a.expand_macros(), b.expand_macros()),
            Formula::Iff(a, b) => Formula::iff(a.expand_macros(), b.expand_macros()),
            Formula::ExactlyOne(vars) => Formula::exactly_one_expansion(vars),
        }
    }

    /// Truth value under `assignment[k]` for attribute `k`.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(k) => assignment[*k],
            Formula::Not(a) => !a.eval(assignment),
            Formula::And(a, b) => a.eval(assignment) && b.eval(assignment),
            Formula::Or(a, b) => a.eval(assignment) || b.eval(assignment),
            Formula::Implies(a, b) => !a.eval(assignment) || b.eval(assignment),
            Formula::Iff(a, b) => a.eval(assignment) == b.eval(assignment),
            Formula::ExactlyOne(vars) => vars.iter().filter(|&&k| assignment[k]).count() == 1,
        }
    }

    /// Largest attribute index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Formula::Const(_) => None,
            Formula::Var(k) => Some(*k),
            Formula::Not(a) => a.max_var(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.max_var().max(b.max_var())
            }
            Formula::ExactlyOne(vars) => vars.iter().copied().max(),
        }
    }

    /// Render with attribute names; output reparses to the same tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(_) => 5,
            Formula::Const(_) | Formula::Var(_) | Formula::ExactlyOne(_) => 6,
        }
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    names: &'a [String],
}

impl FormulaDisplay<'_> {
    fn name(&self, k: usize) -> String {
        self.names.get(k).cloned().unwrap_or_else(|| format!("z{k}"))
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, node: &Formula) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, c: &Formula, parens: bool| -> fmt::Result {
            if parens {
                write!(f, "(")?;
                self.write(f, c)?;
                write!(f, ")")
            } else {
                self.write(f, c)
            }
        };
        let prec = node.precedence();
        match node {
            Formula::Const(true) => write!(f, "true"),
            Formula::Const(false) => write!(f, "false"),
            Formula::Var(k) => write!(f, "{}", self.name(*k)),
            Formula::ExactlyOne(vars) => {
                let names: Vec<String> = vars.iter().map(|&k| self.name(k)).collect();
                write!(f, "exactly_one({})", names.join(", "))
            }
            Formula::Not(a) => {
                write!(f, "!")?;
                child(f, a, a.precedence() < prec)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Iff(a, b) => {
                let op = match node {
                    Formula::And(..) => " & ",
                    Formula::Or(..) => " | ",
                    _ => " <-> ",
                };
                // left-associative
                child(f, a, a.precedence() < prec)?;
                write!(f, "{op}")?;
                child(f, b, b.precedence() <= prec)
            }
            Formula::Implies(a, b) => {
                // right-associative
                child(f, a, a.precedence() <= prec)?;
                write!(f, " -> ")?;
                child(f, b, b.precedence() < prec)
            }
        }
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.formula)
    }
}
