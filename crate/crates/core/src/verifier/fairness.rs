//! Fair-cycle detection inside one strongly connected component.
//!
//! States are robot-anonymous, so a cycle of abstract states may permute the
//! robots. The search runs over triples (state, robot-to-slot map, served
//! robots) starting at a base state; a fair cycle exists iff the base state
//! is reached again with every robot served.

use std::collections::{HashMap, VecDeque};

use indexmap::IndexSet;

use super::state::{AEdge, AState, Explorer};
use crate::error::Result;

/// One step of a fair cycle: the state id and the edge taken from it.
pub(crate) type CycleStep = (u32, AEdge);

type Node = (u32, u32, u8);

fn pack(map: &[u8]) -> u32 {
    map.iter().enumerate().fold(0u32, |acc, (n, &s)| acc | (s as u32) << (4 * n))
}

fn unpack(code: u32, k: usize) -> Vec<u8> {
    (0..k).map(|n| (code >> (4 * n) & 0xf) as u8).collect()
}

/// Searches the component `scc` (state ids) for a fair cycle through its
/// first state. Returns the cycle's edges in order.
pub(crate) fn fair_cycle(
    ex: &Explorer,
    states: &IndexSet<AState>,
    scc: &[u32],
) -> Result<Option<Vec<CycleStep>>> {
    let base = scc[0];
    let k = states[base as usize].robots.len();
    let full: u8 = if k == 8 { u8::MAX } else { (1u8 << k) - 1 };
    let member: std::collections::HashSet<u32> = scc.iter().copied().collect();

    let mut local: HashMap<u32, Vec<(u32, AEdge)>> = HashMap::new();
    for &id in scc {
        let exp = ex.expand(&states[id as usize])?;
        let inside = exp
            .edges
            .into_iter()
            .filter_map(|e| {
                let to = states.get_index_of(&e.next)? as u32;
                member.contains(&to).then_some((to, e))
            })
            .collect();
        local.insert(id, inside);
    }
    if local.values().all(|es| es.iter().all(|(_, e)| e.served == 0)) {
        return Ok(None);
    }

    let identity: Vec<u8> = (0..k as u8).collect();
    let start: Node = (base, pack(&identity), 0);
    let mut parent: HashMap<Node, (Node, usize)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = std::collections::HashSet::from([start]);
    while let Some(node @ (at, code, cov)) = queue.pop_front() {
        let map = unpack(code, k);
        for (n, (to, e)) in local[&at].iter().enumerate() {
            let mut next_map = map.clone();
            let mut next_cov = cov;
            for robot in 0..k {
                let slot = map[robot];
                if e.served >> slot & 1 == 1 {
                    next_cov |= 1 << robot;
                }
                next_map[robot] = e.pi[slot as usize];
            }
            let next: Node = (*to, pack(&next_map), next_cov);
            if !seen.insert(next) {
                continue;
            }
            parent.insert(next, (node, n));
            if *to == base && next_cov == full {
                let mut steps = Vec::new();
                let mut cur = next;
                while cur != start {
                    let (prev, edge) = parent[&cur];
                    steps.push((prev.0, local[&prev.0][edge].1.clone()));
                    cur = prev;
                }
                steps.reverse();
                return Ok(Some(steps));
            }
            queue.push_back(next);
        }
    }
    Ok(None)
}
