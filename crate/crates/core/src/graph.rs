//! Small directed-graph helpers on adjacency lists.

use std::collections::VecDeque;

/// Strongly connected components (iterative Tarjan); `comp[v]` is the component id.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut ncomp = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (ncomp, comp)
}

pub fn is_strongly_connected(adj: &[Vec<usize>]) -> bool {
    !adj.is_empty() && strongly_connected_components(adj).0 == 1
}

/// Period of a strongly connected graph: gcd over edges of `level(u) + 1 - level(v)`.
pub fn period(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    if n == 0 {
        return 0;
    }
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..n {
        if level[u] == usize::MAX {
            continue;
        }
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                continue;
            }
            let d = (level[u] + 1).abs_diff(level[v]);
            g = gcd(g, d);
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `reach[x][y]`: `y` is reachable from `x` by a walk of length >= 0.
pub fn reflexive_transitive_closure(adj: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Weakly connected components, numbered by lowest member.
pub fn weak_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut undirected = vec![Vec::new(); n];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            undirected[u].push(v);
            undirected[v].push(u);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &undirected[u] {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_and_period() {
        let cycle3 = vec![vec![1], vec![2], vec![0]];
        assert!(is_strongly_connected(&cycle3));
        assert_eq!(period(&cycle3), 3);
        let with_loop = vec![vec![0, 1], vec![2], vec![0]];
        assert_eq!(period(&with_loop), 1);
        let chain = vec![vec![1], vec![], vec![0]];
        let (k, comp) = strongly_connected_components(&chain);
        assert_eq!(k, 3);
        assert_ne!(comp[0], comp[1]);
        assert!(!is_strongly_connected(&chain));
    }

    #[test]
    fn closure_and_weak_components() {
        let adj = vec![vec![1], vec![], vec![2], vec![2]];
        let r = reflexive_transitive_closure(&adj);
        assert!(r[0][1] && r[0][0] && !r[1][0]);
        assert_eq!(weak_components(&adj), vec![0, 0, 1, 1]);
    }
}
