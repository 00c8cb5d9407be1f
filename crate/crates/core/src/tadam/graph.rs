use std::fmt::Write as _;

use crate::instance::{Instance, Matching, StudentId};

/// Directed graph on students: `i -> j` when `i` weakly prefers the seat of
/// `j` to their own. Weight 1 marks a strict preference, 0 indifference.
///
/// Unassigned students hold no seat, so no edge points at them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchGraph {
    present: Vec<bool>,
    /// Out-edges sorted by target.
    out: Vec<Vec<(StudentId, u8)>>,
}

pub fn build_graph(instance: &Instance, m: &Matching) -> MatchGraph {
    let n = instance.num_students();
    let mut out = vec![Vec::new(); n];
    for i in instance.students() {
        let p = instance.pref(i);
        let own = p.rank_of(m.get(i));
        for j in instance.students() {
            if i == j || m.get(j).is_none() {
                continue;
            }
            let theirs = p.rank_of(m.get(j));
            if theirs <= own {
                out[i.0].push((j, u8::from(theirs < own)));
            }
        }
    }
    MatchGraph {
        present: vec![true; n],
        out,
    }
}

impl MatchGraph {
    /// Vertex count including removed vertices; ids stay stable.
    pub fn order(&self) -> usize {
        self.present.len()
    }

    pub fn contains(&self, i: StudentId) -> bool {
        self.present.get(i.0).copied().unwrap_or(false)
    }

    pub fn vertices(&self) -> impl Iterator<Item = StudentId> + '_ {
        (0..self.present.len()).filter(|&i| self.present[i]).map(StudentId)
    }

    /// Out-neighbours of a present vertex, with weights.
    pub fn successors(&self, i: StudentId) -> impl Iterator<Item = (StudentId, u8)> + '_ {
        let live = self.contains(i);
        self.out[i.0]
            .iter()
            .copied()
            .filter(move |&(j, _)| live && self.contains(j))
    }

    pub fn edges(&self) -> impl Iterator<Item = (StudentId, StudentId, u8)> + '_ {
        self.vertices()
            .flat_map(move |i| self.successors(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn weight(&self, i: StudentId, j: StudentId) -> Option<u8> {
        self.successors(i).find(|&(k, _)| k == j).map(|(_, w)| w)
    }

    /// The same vertices with only the weight-1 edges.
    pub fn strict_part(&self) -> MatchGraph {
        MatchGraph {
            present: self.present.clone(),
            out: self
                .out
                .iter()
                .map(|e| e.iter().copied().filter(|&(_, w)| w == 1).collect())
                .collect(),
        }
    }

    /// Removes vertices with no incoming or no outgoing edge until none
    /// remain. What is left lies on a cycle or on a path between cycles.
    pub fn prune(&self) -> MatchGraph {
        let mut g = self.clone();
        loop {
            let n = g.order();
            let mut indeg = vec![0usize; n];
            let mut outdeg = vec![0usize; n];
            for (i, j, _) in g.edges() {
                outdeg[i.0] += 1;
                indeg[j.0] += 1;
            }
            let drop: Vec<usize> = (0..n)
                .filter(|&i| g.present[i] && (indeg[i] == 0 || outdeg[i] == 0))
                .collect();
            if drop.is_empty() {
                return g;
            }
            for i in drop {
                g.present[i] = false;
            }
        }
    }

    /// Strongly connected components of the present vertices, each sorted,
    /// listed by smallest member.
    pub fn components(&self) -> Vec<Vec<StudentId>> {
        self.components_within(&self.present)
    }

    pub(crate) fn components_within(&self, allowed: &[bool]) -> Vec<Vec<StudentId>> {
        Tarjan::run(self, allowed)
    }

    /// Digraph text with a `w` attribute per edge.
    pub fn to_dot(&self, instance: &Instance) -> String {
        let mut out = String::from("digraph matching {\n");
        for i in self.vertices() {
            let _ = writeln!(out, "  \"{}\";", instance.student_name(i));
        }
        for (i, j, w) in self.edges() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [w={w}];",
                instance.student_name(i),
                instance.student_name(j)
            );
        }
        out.push_str("}\n");
        out
    }
}

/// True when some cycle of the graph uses a strict edge, that is when some
/// weight-1 edge lies inside one strongly connected component.
pub fn has_trading_clique(graph: &MatchGraph) -> bool {
    let mut comp = vec![usize::MAX; graph.order()];
    for (c, members) in graph.components().iter().enumerate() {
        for i in members {
            comp[i.0] = c;
        }
    }
    graph
        .edges()
        .any(|(i, j, w)| w == 1 && comp[i.0] == comp[j.0])
}

struct Tarjan<'a> {
    graph: &'a MatchGraph,
    allowed: &'a [bool],
    index: Vec<usize>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    next: usize,
    out: Vec<Vec<StudentId>>,
}

impl<'a> Tarjan<'a> {
    fn run(graph: &'a MatchGraph, allowed: &'a [bool]) -> Vec<Vec<StudentId>> {
        let n = graph.order();
        let mut t = Tarjan {
            graph,
            allowed,
            index: vec![usize::MAX; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            next: 0,
            out: Vec::new(),
        };
        for v in 0..n {
            if t.allowed[v] && graph.present[v] && t.index[v] == usize::MAX {
                t.visit(v);
            }
        }
        let mut out = t.out;
        for c in &mut out {
            c.sort();
        }
        out.sort();
        out
    }

    // Recursion depth is bounded by the number of students.
    fn visit(&mut self, v: usize) {
        self.index[v] = self.next;
        self.low[v] = self.next;
        self.next += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        let succ: Vec<usize> = self
            .graph
            .successors(StudentId(v))
            .map(|(j, _)| j.0)
            .filter(|&j| self.allowed[j])
            .collect();
        for w in succ {
            if self.index[w] == usize::MAX {
                self.visit(w);
                self.low[v] = self.low[v].min(self.low[w]);
            } else if self.on_stack[w] {
                self.low[v] = self.low[v].min(self.index[w]);
            }
        }
        if self.low[v] == self.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("on stack");
                self.on_stack[w] = false;
                comp.push(StudentId(w));
                if w == v {
                    break;
                }
            }
            self.out.push(comp);
        }
    }
}
