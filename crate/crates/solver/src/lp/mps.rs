use std::io::{self, Write};

use super::model::{LinearProgram, Relation};

fn num(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 12 {
        s
    } else {
        format!("{v:.5e}")
    }
}

fn col_name(j: usize) -> String {
    format!("C{j:07}")
}

fn row_name(i: usize) -> String {
    format!("R{i:07}")
}

/// Writes `lp` in fixed-column MPS, the format most external solvers accept
/// for cross-checking. Columns listed in `integers` are wrapped in integer
/// markers.
pub fn write_fixed_mps<W: Write>(
    lp: &LinearProgram,
    name: &str,
    integers: &[usize],
    out: &mut W,
) -> io::Result<()> {
    let name: String = name.chars().take(8).collect();
    writeln!(out, "NAME          {name}")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  COST")?;
    for (i, row) in lp.constraints().iter().enumerate() {
        let kind = match row.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        writeln!(out, " {kind}  {}", row_name(i))?;
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.constraints().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            by_col[j].push((i, a));
        }
    }

    writeln!(out, "COLUMNS")?;
    let mut marker = 0;
    for (j, entries) in by_col.iter().enumerate() {
        let is_int = integers.contains(&j);
        if is_int {
            writeln!(out, "    MARKER{marker:<4}  'MARKER'                 'INTORG'")?;
        }
        let c = lp.objective()[j];
        let cname = col_name(j);
        if c != 0.0 || entries.is_empty() {
            writeln!(out, "    {cname:<8}  {:<8}  {:>12}", "COST", num(c))?;
        }
        for &(i, a) in entries {
            writeln!(out, "    {cname:<8}  {:<8}  {:>12}", row_name(i), num(a))?;
        }
        if is_int {
            writeln!(out, "    MARKER{marker:<4}  'MARKER'                 'INTEND'")?;
            marker += 1;
        }
    }

    writeln!(out, "RHS")?;
    for (i, row) in lp.constraints().iter().enumerate() {
        if row.rhs != 0.0 {
            writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(i), num(row.rhs))?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..lp.num_vars() {
        let (l, u) = (lp.lower()[j], lp.upper()[j]);
        let cname = col_name(j);
        let mut bound = |kind: &str, v: Option<f64>| match v {
            Some(v) => writeln!(out, " {kind} {:<8}  {cname:<8}  {:>12}", "BND", num(v)),
            None => writeln!(out, " {kind} {:<8}  {cname:<8}", "BND"),
        };
        if l == u {
            bound("FX", Some(l))?;
            continue;
        }
        match (l.is_finite(), u.is_finite()) {
            (false, false) => bound("FR", None)?,
            (false, true) => {
                bound("MI", None)?;
                bound("UP", Some(u))?;
            }
            (true, fin_u) => {
                if l != 0.0 {
                    bound("LO", Some(l))?;
                }
                if fin_u {
                    bound("UP", Some(u))?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_columns_line_up() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, 10.0);
        let y = lp.add_var(-2.0, f64::NEG_INFINITY, f64::INFINITY);
        lp.add_constraint([(x, 1.0), (y, 1.0)], Relation::Ge, 3.0);
        lp.add_constraint([(y, 1.0)], Relation::Eq, 0.5);
        let mut buf = Vec::new();
        write_fixed_mps(&lp, "toy", &[x], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = "\
NAME          toy
ROWS
 N  COST
 G  R0000000
 E  R0000001
COLUMNS
    MARKER0     'MARKER'                 'INTORG'
    C0000000  COST                 1
    C0000000  R0000000             1
    MARKER0     'MARKER'                 'INTEND'
    C0000001  COST                -2
    C0000001  R0000000             1
    C0000001  R0000001             1
RHS
    RHS       R0000000             3
    RHS       R0000001           0.5
BOUNDS
 UP BND       C0000000            10
 FR BND       C0000001
ENDATA
";
        assert_eq!(text, expected);
        // Field 3 of data lines starts at column 15, field 4 ends at column 36.
        for line in text.lines().filter(|l| l.starts_with("    C")) {
            assert_eq!(line.len(), 36);
        }
    }
}
