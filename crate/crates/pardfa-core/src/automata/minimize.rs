//! DFA minimization by partition refinement.

use std::collections::BTreeMap;

use super::Dfa;

/// Returns the minimal DFA for the same language.
///
/// Unreachable states are dropped, equivalent states are merged, and
/// the result is renumbered in breadth-first discovery order from the
/// start state (symbols in alphabet order), which makes the output a
/// canonical representative: minimizing twice yields the same value.
pub fn minimize(dfa: &Dfa) -> Dfa {
    let width = dfa.alphabet().len();

    // Restrict to the reachable part; completeness is preserved since
    // successor sets of reachable states are reachable.
    let reachable = bfs_order(dfa, dfa.start);
    let mut dense = vec![u32::MAX; dfa.state_count()];
    for (i, &s) in reachable.iter().enumerate() {
        dense[s as usize] = i as u32;
    }
    let n = reachable.len();

    // Refine the finality partition until every class is closed under
    // successor signatures.
    let mut class: Vec<u32> = reachable
        .iter()
        .map(|&s| u32::from(dfa.is_final(s)))
        .collect();
    loop {
        let mut next_id: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        let mut next: Vec<u32> = Vec::with_capacity(n);
        for (i, &s) in reachable.iter().enumerate() {
            let mut sig = Vec::with_capacity(width + 1);
            sig.push(class[i]);
            for c in 0..width {
                let t = dense[dfa.delta(s, c as u8) as usize];
                sig.push(class[t as usize]);
            }
            let fresh = next_id.len() as u32;
            next.push(*next_id.entry(sig).or_insert(fresh));
        }
        let stable = next_id.len() == class.iter().collect::<std::collections::BTreeSet<_>>().len();
        class = next;
        if stable {
            break;
        }
    }

    // Quotient automaton over the classes.
    let class_count = class.iter().max().map_or(0, |&m| m as usize + 1);
    let mut rep = vec![usize::MAX; class_count];
    for (i, &c) in class.iter().enumerate() {
        if rep[c as usize] == usize::MAX {
            rep[c as usize] = i;
        }
    }
    let mut transitions = vec![0u32; class_count * width];
    let mut finals = vec![false; class_count];
    for c in 0..class_count {
        let s = reachable[rep[c]];
        finals[c] = dfa.is_final(s);
        for k in 0..width {
            let t = dense[dfa.delta(s, k as u8) as usize];
            transitions[c * width + k] = class[t as usize];
        }
    }
    let start = class[dense[dfa.start as usize] as usize];

    let quotient = Dfa::new(dfa.alphabet.clone(), transitions, start, finals)
        .expect("quotient of a valid DFA is valid");

    // Canonical renumbering.
    let order = bfs_order(&quotient, quotient.start);
    let mut renum = vec![0u32; quotient.state_count()];
    for (i, &s) in order.iter().enumerate() {
        renum[s as usize] = i as u32;
    }
    let mut transitions = vec![0u32; quotient.state_count() * width];
    let mut finals = vec![false; quotient.state_count()];
    for &s in &order {
        let ns = renum[s as usize] as usize;
        finals[ns] = quotient.is_final(s);
        for k in 0..width {
            transitions[ns * width + k] = renum[quotient.delta(s, k as u8) as usize];
        }
    }
    Dfa::new(quotient.alphabet.clone(), transitions, 0, finals)
        .expect("renumbering preserves validity")
}

/// States reachable from `from`, in breadth-first discovery order.
fn bfs_order(dfa: &Dfa, from: u32) -> Vec<u32> {
    let mut seen = vec![false; dfa.state_count()];
    let mut order = vec![from];
    seen[from as usize] = true;
    let mut head = 0;
    while head < order.len() {
        let s = order[head];
        head += 1;
        for c in 0..dfa.alphabet().len() {
            let t = dfa.delta(s, c as u8);
            if !seen[t as usize] {
                seen[t as usize] = true;
                order.push(t);
            }
        }
    }
    order
}
