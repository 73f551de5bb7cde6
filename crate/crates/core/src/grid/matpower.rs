//! Reader for the bus, gen, branch and gencost tables of MATPOWER case files.
//!
//! Switchability and the slack bus come from a sidecar text file with one
//! directive per line:
//!
//! ```text
//! switchable <branch-index>   # 1-based row of the branch table
//! slack <bus-id>
//! ```

use std::collections::HashMap;

use super::{Bus, BusId, GridError, Generator, Line, Network};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Sidecar {
    /// 1-based branch rows.
    pub switchable: Vec<usize>,
    pub slack: Option<BusId>,
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar, GridError> {
    let mut out = Sidecar::default();
    for (no, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| GridError::Syntax {
            line: no + 1,
            column: raw.find(fields[0]).unwrap_or(0) + 1,
            message,
        };
        match fields.as_slice() {
            ["switchable", idx] => out
                .switchable
                .push(idx.parse().map_err(|_| err(format!("invalid branch index '{idx}'")))?),
            ["slack", id] => {
                if out.slack.is_some() {
                    return Err(err("slack declared twice".into()));
                }
                out.slack = Some(id.parse().map_err(|_| err(format!("invalid bus id '{id}'")))?);
            }
            _ => return Err(err(format!("unknown directive '{content}'"))),
        }
    }
    Ok(out)
}

struct Table {
    rows: Vec<(usize, Vec<f64>)>,
}

fn parse_value(tok: &str) -> Option<f64> {
    match tok {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn read_tables(text: &str) -> Result<(Option<f64>, HashMap<String, Table>), GridError> {
    let mut base = None;
    let mut tables = HashMap::new();
    let mut current: Option<(String, Table)> = None;

    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let mut content = raw.split('%').next().unwrap_or("");
        if current.is_none() {
            let trimmed = content.trim_start();
            let Some(rest) = trimmed.strip_prefix("mpc.") else { continue };
            let Some((name, value)) = rest.split_once('=') else { continue };
            let name = name.trim().to_string();
            let value = value.trim();
            if let Some(body) = value.strip_prefix('[') {
                current = Some((name, Table { rows: Vec::new() }));
                content = body;
            } else {
                if name == "baseMVA" {
                    let v = value.trim_end_matches(';').trim();
                    base = Some(parse_value(v).ok_or_else(|| GridError::Syntax {
                        line: no,
                        column: raw.find(v).unwrap_or(0) + 1,
                        message: format!("invalid baseMVA '{v}'"),
                    })?);
                }
                continue;
            }
        }
        let (body, closed) = match content.split_once(']') {
            Some((b, _)) => (b, true),
            None => (content, false),
        };
        let Some((_, table)) = current.as_mut() else { continue };
        for row in body.split(';') {
            let mut values = Vec::new();
            for tok in row.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                let v = parse_value(tok).ok_or_else(|| GridError::Syntax {
                    line: no,
                    column: raw.find(tok).unwrap_or(0) + 1,
                    message: format!("unparseable table entry '{tok}'"),
                })?;
                values.push(v);
            }
            if !values.is_empty() {
                table.rows.push((no, values));
            }
        }
        if closed {
            let (name, table) = current.take().expect("open table");
            tables.insert(name, table);
        }
    }
    if let Some((name, _)) = current {
        return Err(GridError::Syntax {
            line: text.lines().count(),
            column: 1,
            message: format!("table mpc.{name} is not closed"),
        });
    }
    Ok((base, tables))
}

fn column(row: &(usize, Vec<f64>), col: usize, table: &str) -> Result<f64, GridError> {
    row.1.get(col).copied().ok_or_else(|| GridError::Syntax {
        line: row.0,
        column: 1,
        message: format!("{table} row has {} columns, need at least {}", row.1.len(), col + 1),
    })
}

fn as_bus_id(v: f64, line: usize) -> Result<BusId, GridError> {
    if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
        Ok(v as BusId)
    } else {
        Err(GridError::Syntax {
            line,
            column: 1,
            message: format!("invalid bus number {v}"),
        })
    }
}

/// Marginal cost of a gencost row: the linear coefficient of a polynomial
/// cost, or the first segment slope of a piecewise-linear one.
fn marginal_cost(row: &(usize, Vec<f64>)) -> Result<f64, GridError> {
    let model = column(row, 0, "gencost")?;
    let n = column(row, 3, "gencost")? as usize;
    if model == 2.0 {
        if n < 2 {
            return Ok(0.0);
        }
        column(row, 4 + n - 2, "gencost")
    } else if model == 1.0 && n >= 2 {
        let (x0, y0) = (column(row, 4, "gencost")?, column(row, 5, "gencost")?);
        let (x1, y1) = (column(row, 6, "gencost")?, column(row, 7, "gencost")?);
        Ok((y1 - y0) / (x1 - x0))
    } else {
        Err(GridError::Syntax {
            line: row.0,
            column: 1,
            message: format!("unsupported cost model {model}"),
        })
    }
}

/// Builds a network from case-file text and its sidecar annotation.
///
/// Susceptance is `1 / x`, capacity the long-term rating. Out-of-service
/// generators and branches are skipped; line ids are the 1-based branch rows.
pub fn parse_matpower_case(text: &str, sidecar: &Sidecar) -> Result<Network, GridError> {
    let (base, tables) = read_tables(text)?;
    let base = base.ok_or(GridError::MissingBase)?;
    let table = |name: &str| {
        tables.get(name).ok_or_else(|| GridError::Syntax {
            line: text.lines().count(),
            column: 1,
            message: format!("missing table mpc.{name}"),
        })
    };
    if sidecar.switchable.is_empty() {
        return Err(GridError::MissingAnnotation("no switchable lines designated".into()));
    }

    let mut buses = Vec::new();
    for row in &table("bus")?.rows {
        let id = as_bus_id(column(row, 0, "bus")?, row.0)?;
        let kind = column(row, 1, "bus")?;
        let slack = match sidecar.slack {
            Some(s) => s == id,
            None => kind == 3.0,
        };
        buses.push(Bus {
            id,
            demand: column(row, 2, "bus")?,
            slack,
        });
    }

    let gen_rows = &table("gen")?.rows;
    let cost_rows = &table("gencost")?.rows;
    let mut generators = Vec::new();
    for (i, row) in gen_rows.iter().enumerate() {
        if column(row, 7, "gen")? <= 0.0 {
            continue;
        }
        let cost_row = cost_rows.get(i).ok_or_else(|| GridError::Syntax {
            line: row.0,
            column: 1,
            message: format!("generator {} has no gencost row", i + 1),
        })?;
        generators.push(Generator {
            bus: as_bus_id(column(row, 0, "gen")?, row.0)?,
            cost: marginal_cost(cost_row)?,
            pmin: column(row, 9, "gen")?,
            pmax: column(row, 8, "gen")?,
        });
    }

    let branch_rows = &table("branch")?.rows;
    for &k in &sidecar.switchable {
        if k == 0 || k > branch_rows.len() {
            return Err(GridError::MissingAnnotation(format!(
                "switchable branch {k} out of range 1..={}",
                branch_rows.len()
            )));
        }
    }
    let mut lines = Vec::new();
    for (i, row) in branch_rows.iter().enumerate() {
        let branch = i + 1;
        if row.1.len() > 10 && column(row, 10, "branch")? <= 0.0 {
            continue;
        }
        let x = column(row, 3, "branch")?;
        if x == 0.0 {
            return Err(GridError::ZeroReactance { branch });
        }
        let rating = column(row, 5, "branch")?;
        if rating == 0.0 {
            return Err(GridError::ZeroCapacity { branch });
        }
        lines.push(Line {
            id: branch as u32,
            from_bus: as_bus_id(column(row, 0, "branch")?, row.0)?,
            to_bus: as_bus_id(column(row, 1, "branch")?, row.0)?,
            susceptance: 1.0 / x,
            capacity: rating,
            switchable: sidecar.switchable.contains(&branch),
        });
    }
    Network::validated(base, buses, generators, lines)
}
