//! Strongly connected components and elementary circuits over plain
//! adjacency lists. Both are iterative: benchmark graphs are deep chains
//! tens of thousands of nodes long.

/// Tarjan's algorithm restricted to vertices with `allowed[v]`.
pub(crate) fn strongly_connected(adj: &[Vec<usize>], allowed: &[bool]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut counter = 0;
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut calls: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !allowed[root] || index[root] != usize::MAX {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        calls.push((root, 0));

        while let Some(&mut (v, ref mut next)) = calls.last_mut() {
            if let Some(&w) = adj[v].get(*next) {
                *next += 1;
                if !allowed[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                components.push(component);
            }
        }
    }
    components
}

fn is_cyclic(adj: &[Vec<usize>], component: &[usize]) -> bool {
    component.len() > 1 || adj[component[0]].contains(&component[0])
}

/// Johnson's enumeration of elementary circuits, stopping after `limit`
/// circuits when given.
pub(crate) fn elementary_circuits(adj: &[Vec<usize>], limit: Option<usize>) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut circuits = Vec::new();
    let full = vec![true; n];
    let mut work: Vec<Vec<usize>> = strongly_connected(adj, &full)
        .into_iter()
        .filter(|c| is_cyclic(adj, c))
        .collect();

    let mut in_scope = vec![false; n];
    let mut blocked = vec![false; n];
    let mut blocked_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closed = vec![false; n];

    while let Some(mut component) = work.pop() {
        if limit.is_some_and(|l| circuits.len() >= l) {
            break;
        }
        component.sort_unstable();
        let start = component[0];
        for &v in &component {
            in_scope[v] = true;
            blocked[v] = false;
            blocked_by[v].clear();
            closed[v] = false;
        }

        let mut path = vec![start];
        blocked[start] = true;
        let mut calls: Vec<(usize, usize)> = vec![(start, 0)];
        'search: while let Some(&mut (v, ref mut next)) = calls.last_mut() {
            while let Some(&w) = adj[v].get(*next) {
                *next += 1;
                if !in_scope[w] {
                    continue;
                }
                if w == start {
                    circuits.push(path.clone());
                    for &p in &path {
                        closed[p] = true;
                    }
                    if limit.is_some_and(|l| circuits.len() >= l) {
                        break 'search;
                    }
                } else if !blocked[w] {
                    path.push(w);
                    closed[w] = false;
                    blocked[w] = true;
                    calls.push((w, 0));
                    continue 'search;
                }
            }
            if closed[v] {
                let mut pending = vec![v];
                while let Some(u) = pending.pop() {
                    if blocked[u] {
                        blocked[u] = false;
                        pending.append(&mut blocked_by[u]);
                    }
                }
            } else {
                for &w in &adj[v] {
                    if in_scope[w] && !blocked_by[w].contains(&v) {
                        blocked_by[w].push(v);
                    }
                }
            }
            calls.pop();
            path.pop();
        }

        for &v in &component {
            in_scope[v] = false;
        }
        let rest: Vec<usize> = component[1..].to_vec();
        if rest.is_empty() {
            continue;
        }
        let mut mask = vec![false; n];
        for &v in &rest {
            mask[v] = true;
        }
        work.extend(strongly_connected(adj, &mask).into_iter().filter(|c| is_cyclic(adj, c)));
    }
    circuits
}
