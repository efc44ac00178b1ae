//! Exact n-gram rescoring. Lattices are first expanded so every node
//! carries a unique word history of up to order-1 words; each arc then has
//! one well-defined conditional probability, and the sentence-end
//! transition is folded into arcs entering final nodes so that every
//! complete path's LM total equals the sentence log-probability of its
//! words.

use std::collections::{HashMap, VecDeque};

use super::{Lattice, LatticeError, NodeId};
use crate::ngram::LanguageModel;
use crate::vocab::{SENTENCE_BEGIN, SENTENCE_END};

/// Word history of a node in the expanded lattice (most recent last,
/// shorter than order-1 only near the start).
type Context = Vec<String>;

/// Equivalent lattice in which each node corresponds to a unique
/// (order-1)-word history. Path set, per-path word sequences, and per-path
/// score totals are all preserved.
pub fn expand_order(lat: &Lattice, order: usize) -> Result<Lattice, LatticeError> {
    Ok(expand_with_contexts(lat, order)?.0)
}

fn expand_with_contexts(
    lat: &Lattice,
    order: usize,
) -> Result<(Lattice, Vec<Context>), LatticeError> {
    if order < 1 {
        return Err(LatticeError::InvalidOrder(order));
    }
    let check = lat.validate()?;
    let adj = lat.arcs_from();
    let ctx_len = order - 1;

    struct States {
        ids: HashMap<(NodeId, Context), NodeId>,
        contexts: Vec<Context>,
        queue: VecDeque<(NodeId, Context, NodeId)>,
    }
    impl States {
        fn intern(&mut self, node: NodeId, ctx: Context) -> NodeId {
            if let Some(&id) = self.ids.get(&(node, ctx.clone())) {
                return id;
            }
            let id = NodeId(self.contexts.len() as u32);
            self.ids.insert((node, ctx.clone()), id);
            self.contexts.push(ctx.clone());
            self.queue.push_back((node, ctx, id));
            id
        }
    }

    let mut states = States {
        ids: HashMap::new(),
        contexts: Vec::new(),
        queue: VecDeque::new(),
    };
    let start_state = states.intern(lat.start(), Vec::new());
    let mut finals = Vec::new();
    if lat.is_final(lat.start()) {
        finals.push(start_state);
    }
    let mut new_arcs = Vec::new();
    while let Some((node, ctx, from_id)) = states.queue.pop_front() {
        for &a in &adj[node.index()] {
            let arc = &lat.arcs()[a];
            // Only live targets take part; dead branches add no paths.
            if !check.alive[arc.to.index()] {
                continue;
            }
            let mut next_ctx = ctx.clone();
            if ctx_len == 0 {
                next_ctx.clear();
            } else {
                next_ctx.push(arc.word.clone());
                if next_ctx.len() > ctx_len {
                    next_ctx.remove(0);
                }
            }
            let to_id = states.intern(arc.to, next_ctx);
            if lat.is_final(arc.to) && !finals.contains(&to_id) {
                finals.push(to_id);
            }
            new_arcs.push((from_id, to_id, a));
        }
    }

    let mut out = Lattice::new(lat.utt_id(), states.contexts.len(), start_state);
    for (from, to, a) in new_arcs {
        let arc = &lat.arcs()[a];
        out.add_arc(from, to, arc.word.clone(), arc.am_score, arc.lm_score);
    }
    for f in finals {
        out.set_final(f);
    }
    Ok((out, states.contexts))
}

/// Replace every arc's LM score with the model's conditional probability of
/// its word given the unique incoming history (sentence-begin padded), and
/// fold the sentence-end transition into arcs entering final nodes.
/// Acoustic scores are unchanged. Final nodes that still have outgoing arcs
/// are split so that the fold applies only to paths that actually end there.
pub fn rescore(lat: &Lattice, lm: &LanguageModel) -> Result<Lattice, LatticeError> {
    let (exp, contexts) = expand_with_contexts(lat, lm.order())?;
    if exp.is_final(exp.start()) {
        return Err(LatticeError::StartIsFinal {
            utt: lat.utt_id().to_string(),
        });
    }

    let mut has_outgoing = vec![false; exp.num_nodes()];
    for arc in exp.arcs() {
        has_outgoing[arc.from.index()] = true;
    }

    // Final nodes with outgoing arcs get a final-sink twin; arcs entering
    // the original are duplicated onto the twin with the end fold applied.
    let mut split_of: HashMap<usize, NodeId> = HashMap::new();
    let mut next_node = exp.num_nodes();
    for (n, &outgoing) in has_outgoing.iter().enumerate() {
        if outgoing && exp.is_final(NodeId(n as u32)) {
            split_of.insert(n, NodeId(next_node as u32));
            next_node += 1;
        }
    }

    let history = |node: usize| -> Vec<&str> {
        let mut h = vec![SENTENCE_BEGIN];
        h.extend(contexts[node].iter().map(String::as_str));
        h
    };

    let mut out = Lattice::new(exp.utt_id(), next_node, exp.start());
    for arc in exp.arcs() {
        let base = lm.cond_logprob(&arc.word, &history(arc.from.index()));
        let to = arc.to.index();
        let is_final = exp.is_final(arc.to);
        let end_term = if is_final {
            lm.cond_logprob(SENTENCE_END, &history(to))
        } else {
            0.0
        };
        match (is_final, split_of.get(&to)) {
            // Final sink: fold directly.
            (true, None) => {
                out.add_arc(
                    arc.from,
                    arc.to,
                    arc.word.clone(),
                    arc.am_score,
                    base + end_term,
                );
            }
            // Final with continuation: plain arc plus a folded twin arc.
            (true, Some(&twin)) => {
                out.add_arc(arc.from, arc.to, arc.word.clone(), arc.am_score, base);
                out.add_arc(
                    arc.from,
                    twin,
                    arc.word.clone(),
                    arc.am_score,
                    base + end_term,
                );
            }
            (false, _) => {
                out.add_arc(arc.from, arc.to, arc.word.clone(), arc.am_score, base);
            }
        }
    }
    for f in exp.finals() {
        match split_of.get(&f.index()) {
            Some(&twin) => out.set_final(twin),
            None => out.set_final(f),
        }
    }
    Ok(out)
}
