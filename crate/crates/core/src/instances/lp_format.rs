use std::fmt::Write as _;
use std::path::Path;

use crate::model::{BlockStructuredMip, Row, Sense};

fn term(out: &mut String, first: bool, a: f64, name: &str) {
    match (first, a < 0.0) {
        (true, false) => write!(out, "{a} {name}"),
        (true, true) => write!(out, "- {} {name}", -a),
        (false, false) => write!(out, " + {a} {name}"),
        (false, true) => write!(out, " - {} {name}", -a),
    }
    .expect("writing to a String");
}

fn expr(out: &mut String, coeffs: &[(usize, f64)], names: &[String]) {
    let nz: Vec<&(usize, f64)> = coeffs.iter().filter(|c| c.1 != 0.0).collect();
    if nz.is_empty() {
        term(out, true, 0.0, &names[0]);
        return;
    }
    for (k, &&(i, a)) in nz.iter().enumerate() {
        term(out, k == 0, a, &names[i]);
    }
}

fn constraint(out: &mut String, label: &str, row: &Row, names: &[String]) {
    write!(out, " {label}: ").expect("writing to a String");
    expr(out, &row.coeffs, names);
    let op = match row.sense {
        Sense::Ge => ">=",
        Sense::Le => "<=",
        Sense::Eq => "=",
    };
    writeln!(out, " {op} {}", row.rhs).expect("writing to a String");
}

/// LP-format text: objective, linking rows `L*`, block rows `B<j>_*`, then
/// `extra` rows `C*` in the given order, bounds, and integer sections.
pub fn write_lp(model: &BlockStructuredMip, extra: &[Row]) -> String {
    let n = model.n();
    let names: Vec<String> = (0..n).map(|i| model.var_name(i)).collect();
    let mut out = String::from("\\ block-structured MIP\nMinimize\n obj: ");
    if n > 0 {
        let obj: Vec<(usize, f64)> = model.c.iter().copied().enumerate().collect();
        expr(&mut out, &obj, &names);
    }
    out.push_str("\nSubject To\n");
    for (k, r) in model.linking.iter().enumerate() {
        constraint(&mut out, &format!("L{}", k + 1), r, &names);
    }
    for (j, b) in model.blocks.iter().enumerate() {
        for (k, r) in b.rows.iter().enumerate() {
            constraint(&mut out, &format!("B{}_{}", j + 1, k + 1), r, &names);
        }
    }
    for (k, r) in extra.iter().enumerate() {
        constraint(&mut out, &format!("C{}", k + 1), r, &names);
    }
    let binary = |i: usize| model.integer[i] && model.lower[i] == 0.0 && model.upper[i] == 1.0;
    out.push_str("Bounds\n");
    for i in 0..n {
        let (l, u) = (model.lower[i], model.upper[i]);
        if binary(i) || (l == 0.0 && u == f64::INFINITY) {
            continue;
        }
        let name = &names[i];
        let line = match (l.is_finite(), u.is_finite()) {
            (false, false) => format!(" {name} free"),
            (true, false) => format!(" {name} >= {l}"),
            (false, true) => format!(" -inf <= {name} <= {u}"),
            (true, true) if l == u => format!(" {name} = {l}"),
            (true, true) => format!(" {l} <= {name} <= {u}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    let general: Vec<&str> = (0..n).filter(|&i| model.integer[i] && !binary(i)).map(|i| names[i].as_str()).collect();
    let bins: Vec<&str> = (0..n).filter(|&i| binary(i)).map(|i| names[i].as_str()).collect();
    for (title, list) in [("General", general), ("Binary", bins)] {
        if !list.is_empty() {
            writeln!(out, "{title}").expect("writing to a String");
            for name in list {
                writeln!(out, " {name}").expect("writing to a String");
            }
        }
    }
    out.push_str("End\n");
    out
}

pub fn export_lp_file(model: &BlockStructuredMip, extra: &[Row], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, write_lp(model, extra))
}
