use super::{LinearProgram, Relation, VarKind};
use std::fmt::Write;

fn term(out: &mut String, first: bool, coeff: f64, name: &str) {
    let sign = if coeff < 0.0 { '-' } else { '+' };
    if first {
        if coeff < 0.0 {
            out.push_str(" -");
        }
    } else {
        let _ = write!(out, " {sign}");
    }
    let _ = write!(out, " {} {name}", fmt_num(coeff.abs()));
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "+inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// Renders the problem in CPLEX LP text format for cross-checking with
/// external solvers.
pub fn write_lp_format(p: &LinearProgram) -> String {
    let mut out = String::from("\\ generated by relplan\nMinimize\n obj:");
    let mut first = true;
    for (j, &c) in p.cost().iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &p.var_name(j));
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in p.rows().iter().enumerate() {
        let _ = write!(out, " {}:", p.row_name(i));
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut out, first, a, &p.var_name(j));
            first = false;
        }
        if first {
            out.push_str(" 0 x0");
        }
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for j in 0..p.num_vars() {
        if p.kinds()[j] == VarKind::Binary {
            continue;
        }
        let (l, u) = (p.lower()[j], p.upper()[j]);
        let name = p.var_name(j);
        match (l.is_finite(), u.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            _ if l == 0.0 && u.is_infinite() => {}
            _ => {
                let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(l), fmt_num(u));
            }
        }
    }
    let bins: Vec<String> = p.binaries().map(|j| p.var_name(j)).collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
