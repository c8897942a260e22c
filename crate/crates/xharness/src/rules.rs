//! The `compile-rules` subcommand.

use std::fmt::Write as _;

use dssl_core::logicc::{bit_string, enumerate_valid, parse_rule_file, to_dnf};

use crate::error::Result;

/// DNF, `|V|` and the valid vectors of a rule file. Vectors are listed by
/// increasing integer value with the first attribute as the lowest bit.
pub fn describe(text: &str) -> Result<String> {
    let set = parse_rule_file(text)?;
    let k = set.num_attrs();
    let formula = set.formula();
    let valid = enumerate_valid(&formula, k)?;
    if valid.is_empty() {
        return Err(dssl_core::Error::Unsatisfiable.into());
    }
    let dnf = to_dnf(&formula, k)?;
    let mut vectors: Vec<&Vec<bool>> = valid.iter().collect();
    vectors.sort_by_key(|v| v.iter().enumerate().map(|(i, &b)| u64::from(b) << i).sum::<u64>());

    let mut out = String::new();
    let _ = writeln!(out, "attributes: {}", set.attributes.join(", "));
    let _ = writeln!(out, "dnf: {}", dnf.display(&set.attributes));
    let _ = writeln!(out, "|V| = {}", valid.len());
    let listed: Vec<String> = vectors.iter().map(|v| bit_string(v)).collect();
    let _ = writeln!(out, "V = {{{}}}", listed.join(", "));
    Ok(out)
}
