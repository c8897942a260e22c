//! Propositional rule sets over label attributes: parsing, DNF conversion,
//! valid-set enumeration, and compilation into a differentiable relaxation.

mod ast;
mod compile;
mod dnf;
mod parser;

pub use ast::{Formula, FormulaDisplay};
pub use compile::{compile_dnf_relaxation, compile_relaxation, CompilationMode, CompiledRelaxation, GFunction};
pub use dnf::{
    bit_string, enumerate_valid, to_dnf, to_dnf_with_cap, truth_table_row, Clause, DnfForm, Polarity, ValidSet,
    DEFAULT_CLAUSE_CAP, MAX_TRUTH_TABLE_ATTRS,
};
pub use parser::{parse_rule_file, parse_rules, Rule, RuleSet};
