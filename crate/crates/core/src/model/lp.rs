//! CPLEX-style LP text export for external MILP solvers.

use std::fmt::Write;

use super::{IlpModel, Sense};

const TERMS_PER_LINE: usize = 8;

/// Writes `m` as a zero-objective LP file.
pub fn export_lp(m: &IlpModel) -> String {
    let mut out = String::new();
    let p = m.puzzle();
    let _ = writeln!(
        out,
        "\\ Evolomino feasibility model, {}x{} board, {} arrow(s)",
        p.rows(),
        p.cols(),
        p.arrows().len()
    );
    out.push_str("Minimize\n obj:");
    if let Some(first) = m.vars().first() {
        let _ = write!(out, " 0 {}", first.key);
    }
    out.push('\n');
    if m.constraints().is_empty() {
        out.push_str("End\n");
        return out;
    }

    out.push_str("Subject To\n");
    for (i, c) in m.constraints().iter().enumerate() {
        let _ = write!(out, " {}_{}:", c.tag, i);
        for (n, &(coef, var)) in c.terms.iter().enumerate() {
            if n > 0 && n % TERMS_PER_LINE == 0 {
                out.push_str("\n   ");
            }
            let sign = if coef < 0 { '-' } else { '+' };
            let name = m.var(var).key;
            match (n, coef.abs()) {
                (0, 1) if coef > 0 => {
                    let _ = write!(out, " {name}");
                }
                (0, mag) if coef > 0 => {
                    let _ = write!(out, " {mag} {name}");
                }
                (_, 1) => {
                    let _ = write!(out, " {sign} {name}");
                }
                (_, mag) => {
                    let _ = write!(out, " {sign} {mag} {name}");
                }
            }
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }

    out.push_str("Bounds\n");
    for v in m.vars().iter().filter(|v| !v.is_binary()) {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.key, v.upper);
    }
    write_names(
        &mut out,
        "Binaries",
        m.vars().iter().filter(|v| v.is_binary()),
    );
    write_names(
        &mut out,
        "Generals",
        m.vars().iter().filter(|v| !v.is_binary()),
    );
    out.push_str("End\n");
    out
}

fn write_names<'a>(out: &mut String, header: &str, vars: impl Iterator<Item = &'a super::VarRef>) {
    let names: Vec<String> = vars.map(|v| v.key.to_string()).collect();
    if names.is_empty() {
        return;
    }
    out.push_str(header);
    out.push('\n');
    for chunk in names.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
}
