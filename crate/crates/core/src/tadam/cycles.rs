//! Elementary circuits by Johnson's algorithm, with a count limit.

use super::graph::MatchGraph;
use crate::instance::StudentId;

/// Every elementary cycle, each starting at its smallest vertex, in
/// lexicographic order. Stops with `Err(partial)` once more than `limit`
/// cycles have been found.
pub(crate) fn elementary_cycles(graph: &MatchGraph, limit: usize) -> Result<Vec<Vec<StudentId>>, Vec<Vec<StudentId>>> {
    let n = graph.order();
    let mut search = Search {
        graph,
        allowed: vec![false; n],
        blocked: vec![false; n],
        blocked_by: vec![Vec::new(); n],
        path: Vec::new(),
        found: Vec::new(),
        limit,
    };
    for start in 0..n {
        if !graph.contains(StudentId(start)) {
            continue;
        }
        // Restrict to the component of `start` among vertices >= start.
        let within: Vec<bool> = (0..n).map(|v| v >= start && graph.contains(StudentId(v))).collect();
        let Some(comp) = graph
            .components_within(&within)
            .into_iter()
            .find(|c| c.contains(&StudentId(start)))
        else {
            continue;
        };
        if comp.len() < 2 {
            continue;
        }
        search.allowed = vec![false; n];
        for v in &comp {
            search.allowed[v.0] = true;
            search.blocked[v.0] = false;
            search.blocked_by[v.0].clear();
        }
        if !search.circuit(start, start) {
            search.found.sort();
            return Err(search.found);
        }
    }
    search.found.sort();
    Ok(search.found)
}

struct Search<'a> {
    graph: &'a MatchGraph,
    allowed: Vec<bool>,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    path: Vec<usize>,
    found: Vec<Vec<StudentId>>,
    limit: usize,
}

impl Search<'_> {
    fn unblock(&mut self, v: usize) {
        let mut work = vec![v];
        while let Some(u) = work.pop() {
            if !self.blocked[u] {
                continue;
            }
            self.blocked[u] = false;
            work.extend(std::mem::take(&mut self.blocked_by[u]));
        }
    }

    /// Returns false when the limit is exceeded. The closed flag of the
    /// classic formulation is tracked in `closed`.
    fn circuit(&mut self, v: usize, start: usize) -> bool {
        let mut closed = false;
        self.path.push(v);
        self.blocked[v] = true;
        let succ: Vec<usize> = self
            .graph
            .successors(StudentId(v))
            .map(|(w, _)| w.0)
            .filter(|&w| self.allowed[w])
            .collect();
        for &w in &succ {
            if w == start {
                self.found.push(self.path.iter().map(|&u| StudentId(u)).collect());
                if self.found.len() > self.limit {
                    return false;
                }
                closed = true;
            } else if !self.blocked[w] {
                let before = self.found.len();
                if !self.circuit(w, start) {
                    return false;
                }
                if self.found.len() > before {
                    closed = true;
                }
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in &succ {
                if !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.path.pop();
        true
    }
}
