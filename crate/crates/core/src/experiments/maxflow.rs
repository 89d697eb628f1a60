//! Max-flow from a set of sources to one client over Data-direction capacities.

use std::collections::VecDeque;

use super::topology::Topology;

/// Edmonds-Karp with a super-source joined to every source by an
/// unbounded arc. Returns 0 for an unreachable client.
pub fn max_flow(topo: &Topology, sources: &[usize], client: usize) -> u64 {
    let n = topo.nodes.len() + 1;
    let sup = n - 1;
    let mut cap = vec![vec![0u64; n]; n];
    for e in &topo.edges {
        cap[e.a][e.b] = cap[e.a][e.b].saturating_add(e.capacity_bps);
    }
    for &s in sources {
        cap[sup][s] = u64::MAX / 4;
    }
    if sources.contains(&client) {
        return u64::MAX / 4;
    }
    let mut flow = 0u64;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[sup] = sup;
        let mut q = VecDeque::from([sup]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[client] == usize::MAX {
            return flow;
        }
        let mut push = u64::MAX;
        let mut v = client;
        while v != sup {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = client;
        while v != sup {
            let u = prev[v];
            cap[u][v] -= push;
            cap[v][u] = cap[v][u].saturating_add(push);
            v = u;
        }
        flow += push;
    }
}
