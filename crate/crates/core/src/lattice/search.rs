//! Best-path and n-best extraction by dynamic programming in topological
//! order. Ties break to the lexicographically smallest arc-id sequence, so
//! results are deterministic regardless of arc insertion or thread order.

use super::{Lattice, LatticeError, LatticePath, ScoreConfig};

type Scored = (f64, Vec<usize>);

/// `a` strictly better than `b`: higher score, or equal score with a
/// lexicographically smaller arc-id sequence.
fn better(a: &Scored, b: &Scored) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// The complete path maximizing `am_scale * acoustic + lm_scale * lm`.
pub fn best_path(lat: &Lattice, cfg: &ScoreConfig) -> Result<LatticePath, LatticeError> {
    cfg.check()?;
    let check = lat.validate()?;
    let adj = lat.arcs_from();
    let mut best: Vec<Option<Scored>> = vec![None; lat.num_nodes()];
    best[lat.start().index()] = Some((0.0, Vec::new()));
    for node in &check.topo_order {
        let Some(current) = best[node.index()].clone() else {
            continue;
        };
        for &a in &adj[node.index()] {
            let arc = &lat.arcs()[a];
            let mut seq = current.1.clone();
            seq.push(a);
            let cand = (current.0 + cfg.arc_score(arc), seq);
            let slot = &mut best[arc.to.index()];
            if slot.as_ref().is_none_or(|old| better(&cand, old)) {
                *slot = Some(cand);
            }
        }
    }
    let winner = lat
        .finals()
        .filter_map(|f| best[f.index()].clone())
        .reduce(|acc, cand| if better(&cand, &acc) { cand } else { acc })
        .expect("validated lattice has a complete path");
    Ok(lat.path_from_arcs(winner.1, cfg))
}

/// Top-n distinct complete paths, best first, same tie-break as
/// `best_path`. Returns fewer when the lattice has fewer paths.
pub fn nbest(lat: &Lattice, n: usize, cfg: &ScoreConfig) -> Result<Vec<LatticePath>, LatticeError> {
    cfg.check()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let check = lat.validate()?;
    let adj = lat.arcs_from();
    let mut lists: Vec<Vec<Scored>> = vec![Vec::new(); lat.num_nodes()];
    lists[lat.start().index()].push((0.0, Vec::new()));
    for node in &check.topo_order {
        let current = lists[node.index()].clone();
        if current.is_empty() {
            continue;
        }
        for &a in &adj[node.index()] {
            let arc = &lat.arcs()[a];
            let score = cfg.arc_score(arc);
            let target = arc.to.index();
            for (s, seq) in &current {
                let mut ext = seq.clone();
                ext.push(a);
                insert_capped(&mut lists[target], (s + score, ext), n);
            }
        }
    }
    let mut merged: Vec<Scored> = Vec::new();
    for f in lat.finals() {
        for cand in lists[f.index()].drain(..) {
            insert_capped(&mut merged, cand, n);
        }
    }
    Ok(merged
        .into_iter()
        .map(|(_, seq)| lat.path_from_arcs(seq, cfg))
        .collect())
}

/// Insert into a best-first list, keeping at most `cap` entries.
fn insert_capped(list: &mut Vec<Scored>, cand: Scored, cap: usize) {
    let pos = list.partition_point(|existing| !better(&cand, existing));
    if pos < cap {
        list.insert(pos, cand);
        list.truncate(cap);
    }
}
