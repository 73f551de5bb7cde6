//! Line-oriented network format.
//!
//! ```text
//! # comment to end of line
//! base <mva>
//! bus  <id> <demand-mw> [slack]
//! gen  <bus-id> <cost> <pmin-mw> <pmax-mw>
//! line <id> <from-bus> <to-bus> <susceptance-pu> <capacity-mw> [switchable]
//! ```
//!
//! `base` appears exactly once. Records may come in any order; buses are
//! indexed in declaration order and lines keep theirs.

use std::collections::HashSet;
use std::fmt::Write;
use std::str::FromStr;

use super::{Bus, GridError, Generator, Line, Network};

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    items.push((s + 1, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            items.push((s + 1, &text[s..]));
        }
        Tokens { line, items, pos: 0 }
    }

    fn error(&self, column: usize, message: impl Into<String>) -> GridError {
        GridError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.items.last().map_or(1, |(c, t)| c + t.len())
    }

    fn next<T: FromStr>(&mut self, what: &str) -> Result<T, GridError> {
        let Some(&(col, tok)) = self.items.get(self.pos) else {
            return Err(self.error(self.end_column(), format!("expected {what}")));
        };
        self.pos += 1;
        tok.parse()
            .map_err(|_| self.error(col, format!("invalid {what} '{tok}'")))
    }

    fn flag(&mut self, name: &str) -> Result<bool, GridError> {
        match self.items.get(self.pos) {
            None => Ok(false),
            Some(&(_, tok)) if tok == name => {
                self.pos += 1;
                Ok(true)
            }
            Some(&(col, tok)) => Err(self.error(col, format!("expected '{name}' or end of line, found '{tok}'"))),
        }
    }

    fn finish(&self) -> Result<(), GridError> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some(&(col, tok)) => Err(self.error(col, format!("unexpected trailing field '{tok}'"))),
        }
    }
}

/// Parses and validates a network document.
pub fn parse_native(text: &str) -> Result<Network, GridError> {
    let mut base = None;
    let mut buses = Vec::new();
    let mut gens: Vec<(usize, Generator)> = Vec::new();
    let mut lines: Vec<(usize, Line)> = Vec::new();
    let mut line_ids = HashSet::new();

    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tok = Tokens::new(no, content);
        let Some(&(col, keyword)) = tok.items.first() else {
            continue;
        };
        tok.pos = 1;
        match keyword {
            "base" => {
                if base.is_some() {
                    return Err(tok.error(col, "base declared twice"));
                }
                base = Some(tok.next::<f64>("base power")?);
            }
            "bus" => {
                let id = tok.next("bus id")?;
                let demand = tok.next("demand")?;
                let slack = tok.flag("slack")?;
                buses.push(Bus { id, demand, slack });
            }
            "gen" => {
                let g = Generator {
                    bus: tok.next("bus id")?,
                    cost: tok.next("cost")?,
                    pmin: tok.next("pmin")?,
                    pmax: tok.next("pmax")?,
                };
                gens.push((no, g));
            }
            "line" => {
                let l = Line {
                    id: tok.next("line id")?,
                    from_bus: tok.next("from bus")?,
                    to_bus: tok.next("to bus")?,
                    susceptance: tok.next("susceptance")?,
                    capacity: tok.next("capacity")?,
                    switchable: tok.flag("switchable")?,
                };
                if !line_ids.insert(l.id) {
                    return Err(GridError::DuplicateLineId { line: no, id: l.id });
                }
                lines.push((no, l));
            }
            other => return Err(tok.error(col, format!("unknown record '{other}'"))),
        }
        tok.finish()?;
    }

    let base = base.ok_or(GridError::MissingBase)?;
    let known: HashSet<_> = buses.iter().map(|b| b.id).collect();
    for (no, g) in &gens {
        if !known.contains(&g.bus) {
            return Err(GridError::UnknownBus { line: *no, bus: g.bus });
        }
    }
    for (no, l) in &lines {
        for bus in [l.from_bus, l.to_bus] {
            if !known.contains(&bus) {
                return Err(GridError::UnknownBus { line: *no, bus });
            }
        }
    }
    Network::validated(
        base,
        buses,
        gens.into_iter().map(|(_, g)| g).collect(),
        lines.into_iter().map(|(_, l)| l).collect(),
    )
}

/// Serializes a network so that [`parse_native`] reproduces it exactly.
pub fn write_native(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "base {}", net.base_mva());
    for b in net.buses() {
        let _ = writeln!(out, "bus {} {}{}", b.id, b.demand, if b.slack { " slack" } else { "" });
    }
    for g in net.generators() {
        let _ = writeln!(out, "gen {} {} {} {}", g.bus, g.cost, g.pmin, g.pmax);
    }
    for l in net.lines() {
        let _ = writeln!(
            out,
            "line {} {} {} {} {}{}",
            l.id,
            l.from_bus,
            l.to_bus,
            l.susceptance,
            l.capacity,
            if l.switchable { " switchable" } else { "" }
        );
    }
    out
}
