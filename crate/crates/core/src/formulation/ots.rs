use std::collections::BTreeMap;

use log::debug;
use ots_solver::{LinearProgram, MixedIntegerProgram, Relation};

use super::{
    add_balance_rows, add_columns, check_dims, flow_angle_terms, BigMBounds, BoundsKind, DispatchSolution,
    FormulationError, VarLayout,
};
use crate::grid::Network;

/// A built switching MIP together with the column map needed to decode it.
#[derive(Clone, Debug)]
pub struct OtsModel {
    pub mip: MixedIntegerProgram,
    pub layout: VarLayout,
    /// Switchable positions fixed open whose big-M rows were left out.
    pub dropped: Vec<usize>,
}

impl OtsModel {
    /// Reads a dispatch out of a MIP point with integral statuses.
    pub fn decode(&self, net: &Network, x: &[f64], cost: f64) -> DispatchSolution {
        let statuses = (0..self.layout.switchable)
            .map(|k| x[self.layout.status(k)] > 0.5)
            .collect();
        DispatchSolution::from_point(net, &self.layout, x, statuses, cost)
    }
}

/// Builds the big-M switching MIP.
///
/// Each free switchable line gets the pair
/// `b dθ - M_up (1 - x) <= f <= b dθ - M_lo (1 - x)` and the capacity rows
/// `|f| <= capacity * x`. Lines in `fixed` have their status bounds
/// collapsed. A line fixed in service needs no bound. A line fixed open
/// under shortest-path bounds has its big-M rows omitted, since the closed
/// path that produced the bound already implies them.
pub fn build_ots_mip(
    net: &Network,
    demand: &[f64],
    bounds: &BigMBounds,
    fixed: &BTreeMap<usize, bool>,
) -> Result<OtsModel, FormulationError> {
    check_dims(net, demand, None)?;
    if let Some((&k, _)) = fixed.iter().find(|(&k, _)| k >= net.num_switchable()) {
        return Err(FormulationError::UnknownSwitchable(k));
    }
    let layout = VarLayout::of(net);
    let mut lp = LinearProgram::new();
    add_columns(&mut lp, net);
    for _ in 0..layout.switchable {
        lp.add_var(0.0, 0.0, 1.0);
    }
    add_balance_rows(&mut lp, net, &layout, demand);

    let mut status_of_line = vec![None; net.lines().len()];
    for (k, &l) in net.switchable().iter().enumerate() {
        status_of_line[l] = Some(k);
    }
    let mut dropped = Vec::new();
    for (l, line) in net.lines().iter().enumerate() {
        let terms = flow_angle_terms(net, &layout, l);
        let Some(k) = status_of_line[l] else {
            lp.add_constraint(terms, Relation::Eq, 0.0);
            continue;
        };
        let f = layout.flow(l);
        let x = layout.status(k);
        lp.add_constraint([(f, 1.0), (x, -line.capacity)], Relation::Le, 0.0);
        lp.add_constraint([(f, -1.0), (x, -line.capacity)], Relation::Le, 0.0);

        let m = match (bounds.get(k), fixed.get(&k)) {
            (_, Some(false)) if bounds.kind() == BoundsKind::ShortestPath => {
                lp.set_bounds(f, 0.0, 0.0);
                dropped.push(k);
                continue;
            }
            (Some(m), _) => m,
            (None, Some(true)) => super::MBound { lower: 0.0, upper: 0.0 },
            (None, _) => return Err(FormulationError::MissingBound(line.id)),
        };
        // b dθ - M_up (1 - x) <= f   <=>   f - b dθ - M_up x >= -M_up
        let mut row: Vec<(usize, f64)> = terms.to_vec();
        row.push((x, -m.upper));
        lp.add_constraint(row, Relation::Ge, -m.upper);
        // f <= b dθ - M_lo (1 - x)   <=>   f - b dθ - M_lo x <= -M_lo
        let mut row: Vec<(usize, f64)> = terms.to_vec();
        row.push((x, -m.lower));
        lp.add_constraint(row, Relation::Le, -m.lower);
    }
    if !dropped.is_empty() {
        debug!("dropped implied big-M rows of {} lines fixed open", dropped.len());
    }

    let binaries = (0..layout.switchable).map(|k| layout.status(k)).collect();
    let mip = MixedIntegerProgram::new(lp, binaries)?;
    let assignments = fixed
        .iter()
        .map(|(&k, &on)| (layout.status(k), u8::from(on)))
        .collect();
    let mip = mip.fix_binaries(&assignments)?;
    Ok(OtsModel { mip, layout, dropped })
}
