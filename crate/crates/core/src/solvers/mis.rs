//! Exact maximum independent set by branch and bound.
//!
//! The search runs a bit-parallel maximum clique algorithm on the complement
//! of the conflict graph: vertices are renumbered by non-increasing degree,
//! each node greedily colours its candidate set and prunes whenever
//! `|clique| + colour <= incumbent`. In parallel mode the top levels of the
//! tree are split across a rayon pool; the only shared mutable state is the
//! incumbent, which only ever grows.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::graph::{words_for, ConflictGraph};
use crate::error::{invalid, Error, Result};
use crate::sets::GroupSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn nodes(n: u64) -> Self {
        Budget { max_nodes: Some(n), max_time: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub budget: Budget,
    /// Worker count; 1 runs the sequential search on the calling thread.
    pub threads: usize,
    /// Replace the witness by the lexicographically smallest optimum.
    pub canonical: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { budget: Budget::unlimited(), threads: 1, canonical: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub witness: GroupSet,
    pub size: usize,
    pub optimal: bool,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

/// Index-level outcome of a search on a conflict graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisOutcome {
    /// Sorted vertex indices of the best independent set found.
    pub indices: Vec<usize>,
    pub optimal: bool,
    pub nodes: u64,
}

/// Computes `M_X(A)` with a witness.
pub fn max_sumfree_subset(a: &GroupSet, x: &GroupSet, opts: &SolveOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let graph = ConflictGraph::new(a, x)?;
    let out = max_independent_set(&graph, opts)?;
    let witness = graph.subset(&out.indices);
    debug_assert!(witness.is_sumfree_wrt(x)?);
    Ok(SolveResult {
        size: witness.len(),
        witness,
        optimal: out.optimal,
        nodes_explored: out.nodes,
        wall_time: start.elapsed(),
    })
}

pub fn max_independent_set(graph: &ConflictGraph, opts: &SolveOptions) -> Result<MisOutcome> {
    let problem = CliqueProblem::complement_of(graph);
    let start = Instant::now();
    let shared = Shared::new(&opts.budget, None, 0);
    problem.seed_incumbent(&shared);
    problem.run(&problem.all(), &shared, opts.threads)?;
    let optimal = !shared.exhausted.load(Ordering::Relaxed);
    let mut best = shared.best.into_inner().expect("incumbent lock poisoned");
    let mut nodes = shared.nodes.load(Ordering::Relaxed);
    if opts.canonical && optimal {
        let deadline = opts.budget.max_time.map(|t| start + t);
        let (canon, extra) = problem.lex_min(best.len(), opts.budget.max_nodes, deadline, nodes);
        nodes += extra;
        if let Some(c) = canon {
            best = c;
        }
    }
    let mut indices: Vec<usize> = best.iter().map(|&v| problem.original[v]).collect();
    indices.sort_unstable();
    debug_assert!(graph.is_independent(&indices));
    Ok(MisOutcome { indices, optimal, nodes })
}

/// True iff every k-subset of `A` has a pairwise sum in `X`, i.e. `M_X(A) < k`.
pub fn is_summing(a: &GroupSet, x: &GroupSet, k: usize) -> Result<bool> {
    if k < 2 {
        return Err(invalid(format!("k = {k} must be at least 2")));
    }
    if a.len() < k {
        return Ok(true);
    }
    let graph = ConflictGraph::new(a, x)?;
    let problem = CliqueProblem::complement_of(&graph);
    Ok(problem.find_at_least(&problem.all(), k, &Budget::unlimited(), 0).0.is_none())
}

/// Like [`is_summing`] but returns a k-subset avoiding `X` when one exists.
pub fn summing_witness(a: &GroupSet, x: &GroupSet, k: usize) -> Result<Option<GroupSet>> {
    if k < 2 {
        return Err(invalid(format!("k = {k} must be at least 2")));
    }
    if a.len() < k {
        return Ok(None);
    }
    let graph = ConflictGraph::new(a, x)?;
    let problem = CliqueProblem::complement_of(&graph);
    let found = problem.find_at_least(&problem.all(), k, &Budget::unlimited(), 0).0;
    Ok(found.map(|c| {
        let idx: Vec<usize> = c.iter().take(k).map(|&v| problem.original[v]).collect();
        graph.subset(&idx)
    }))
}

struct Shared {
    best_size: AtomicUsize,
    best: Mutex<Vec<usize>>,
    nodes: AtomicU64,
    exhausted: AtomicBool,
    stop: AtomicBool,
    target: Option<usize>,
    deadline: Option<Instant>,
    max_nodes: Option<u64>,
    flush_every: u64,
}

impl Shared {
    fn new(budget: &Budget, target: Option<usize>, nodes_used: u64) -> Self {
        Shared {
            best_size: AtomicUsize::new(0),
            best: Mutex::new(Vec::new()),
            nodes: AtomicU64::new(0),
            exhausted: AtomicBool::new(false),
            stop: AtomicBool::new(false),
            target,
            deadline: budget.max_time.map(|t| Instant::now() + t),
            max_nodes: budget.max_nodes.map(|m| m.saturating_sub(nodes_used)),
            // Small node budgets are checked at every node.
            flush_every: match budget.max_nodes {
                Some(m) if m < 64 * CHARGE_EVERY => 1,
                _ => CHARGE_EVERY,
            },
        }
    }

    fn offer(&self, clique: &[usize]) {
        if clique.len() <= self.best_size.load(Ordering::Relaxed) {
            return;
        }
        let mut best = self.best.lock().expect("incumbent lock poisoned");
        if clique.len() > best.len() {
            *best = clique.to_vec();
            self.best_size.fetch_max(clique.len(), Ordering::Relaxed);
            if self.target.is_some_and(|t| clique.len() >= t) {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
    }

    fn charge(&self, local: u64) {
        let total = self.nodes.fetch_add(local, Ordering::Relaxed) + local;
        let over_nodes = self.max_nodes.is_some_and(|m| total >= m);
        let over_time = self.deadline.is_some_and(|d| Instant::now() >= d);
        if over_nodes || over_time {
            self.exhausted.store(true, Ordering::Relaxed);
            self.stop.store(true, Ordering::Relaxed);
        }
    }

    /// Books nodes after a search finished; never flags exhaustion.
    fn account(&self, local: u64) {
        self.nodes.fetch_add(local, Ordering::Relaxed);
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }
}

const CHARGE_EVERY: u64 = 512;

/// Clique search on the compatibility graph, in degree order.
struct CliqueProblem {
    n: usize,
    words: usize,
    adj: Vec<u64>,
    /// Renumbered vertex -> original vertex.
    original: Vec<usize>,
}

fn first_bit(set: &[u64]) -> Option<usize> {
    set.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

#[inline]
fn clear(set: &mut [u64], v: usize) {
    set[v / 64] &= !(1 << (v % 64));
}

#[inline]
fn test(set: &[u64], v: usize) -> bool {
    set[v / 64] >> (v % 64) & 1 == 1
}

impl CliqueProblem {
    fn complement_of(graph: &ConflictGraph) -> Self {
        let n = graph.len();
        let words = words_for(n);
        let degree: Vec<usize> = (0..n).map(|i| n - 1 - graph.degree(i)).collect();
        let mut original: Vec<usize> = (0..n).collect();
        original.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));
        let mut adj = vec![0u64; n * words];
        for (nu, &ou) in original.iter().enumerate() {
            for (nv, &ov) in original.iter().enumerate() {
                if nu != nv && !graph.has_edge(ou, ov) {
                    adj[nu * words + nv / 64] |= 1 << (nv % 64);
                }
            }
        }
        CliqueProblem { n, words, adj, original }
    }

    fn all(&self) -> Vec<u64> {
        let mut set = vec![u64::MAX; self.words];
        if !self.n.is_multiple_of(64) {
            if let Some(last) = set.last_mut() {
                *last = (1u64 << (self.n % 64)) - 1;
            }
        }
        set
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    /// Greedy clique in renumbered order as a starting incumbent.
    fn seed_incumbent(&self, shared: &Shared) {
        let mut cand = self.all();
        let mut clique = Vec::new();
        while let Some(v) = first_bit(&cand) {
            clique.push(v);
            for (c, r) in cand.iter_mut().zip(self.row(v)) {
                *c &= r;
            }
        }
        shared.offer(&clique);
    }

    /// Colour classes over `cand`; returns vertices with colour >= `kmin` in
    /// non-decreasing colour order.
    fn colour_sort(&self, cand: &[u64], kmin: usize) -> (Vec<usize>, Vec<usize>) {
        let mut uncoloured = cand.to_vec();
        let mut q = vec![0u64; self.words];
        let (mut order, mut colours) = (Vec::new(), Vec::new());
        let mut k = 0;
        while uncoloured.iter().any(|&w| w != 0) {
            k += 1;
            q.copy_from_slice(&uncoloured);
            while let Some(v) = first_bit(&q) {
                clear(&mut uncoloured, v);
                clear(&mut q, v);
                for (qw, r) in q.iter_mut().zip(self.row(v)) {
                    *qw &= !r;
                }
                if k >= kmin {
                    order.push(v);
                    colours.push(k);
                }
            }
        }
        (order, colours)
    }

    fn run(&self, cand: &[u64], shared: &Shared, threads: usize) -> Result<()> {
        if threads <= 1 {
            let mut local = 0;
            self.expand(cand.to_vec(), &mut Vec::new(), shared, &mut local, 0);
            shared.account(local);
            return Ok(());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
        pool.install(|| {
            let mut local = 0;
            self.expand(cand.to_vec(), &mut Vec::new(), shared, &mut local, PARALLEL_DEPTH);
            shared.account(local);
        });
        Ok(())
    }

    /// Sequential below `split` = 0; otherwise the branches at this level run
    /// as parallel tasks with `split - 1` further parallel levels.
    fn expand(&self, mut cand: Vec<u64>, clique: &mut Vec<usize>, shared: &Shared, local: &mut u64, split: usize) {
        *local += 1;
        if *local >= shared.flush_every {
            shared.charge(*local);
            *local = 0;
        }
        if shared.stopped() {
            return;
        }
        let best = shared.best_size.load(Ordering::Relaxed);
        let kmin = (best + 1).saturating_sub(clique.len());
        let (order, colours) = self.colour_sort(&cand, kmin);
        if split > 0 && order.len() > 1 {
            self.expand_parallel(cand, clique, &order, &colours, shared, split);
            return;
        }
        for idx in (0..order.len()).rev() {
            if shared.stopped() || clique.len() + colours[idx] <= shared.best_size.load(Ordering::Relaxed) {
                return;
            }
            let v = order[idx];
            clique.push(v);
            let next: Vec<u64> = cand.iter().zip(self.row(v)).map(|(c, r)| c & r).collect();
            if next.iter().all(|&w| w == 0) {
                shared.offer(clique);
            } else {
                self.expand(next, clique, shared, local, 0);
            }
            clique.pop();
            clear(&mut cand, v);
        }
    }

    fn expand_parallel(
        &self,
        cand: Vec<u64>,
        clique: &[usize],
        order: &[usize],
        colours: &[usize],
        shared: &Shared,
        split: usize,
    ) {
        // Branch idx sees the candidates left after all higher branches ran.
        let mut remaining = Vec::with_capacity(order.len());
        let mut c = cand;
        for &v in order.iter().rev() {
            remaining.push(c.clone());
            clear(&mut c, v);
        }
        remaining.reverse();
        (0..order.len()).into_par_iter().rev().for_each(|idx| {
            if shared.stopped() || clique.len() + colours[idx] <= shared.best_size.load(Ordering::Relaxed) {
                return;
            }
            let v = order[idx];
            let mut branch = clique.to_vec();
            branch.push(v);
            let next: Vec<u64> = remaining[idx].iter().zip(self.row(v)).map(|(c, r)| c & r).collect();
            let mut local = 0;
            if next.iter().all(|&w| w == 0) {
                shared.offer(&branch);
            } else {
                self.expand(next, &mut branch, shared, &mut local, split - 1);
            }
            shared.account(local);
        });
    }

    /// Searches `cand` for a clique of size `need`; returns it with the
    /// number of nodes used, or `None` if none exists or the budget ran out.
    fn find_at_least(&self, cand: &[u64], need: usize, budget: &Budget, used: u64) -> (Option<Vec<usize>>, u64, bool) {
        if need == 0 {
            return (Some(Vec::new()), 0, false);
        }
        let shared = Shared::new(budget, Some(need), used);
        shared.best_size.store(need - 1, Ordering::Relaxed);
        let mut local = 0;
        self.expand(cand.to_vec(), &mut Vec::new(), &shared, &mut local, 0);
        shared.account(local);
        let nodes = shared.nodes.load(Ordering::Relaxed);
        let exhausted = shared.exhausted.load(Ordering::Relaxed);
        let best = shared.best.into_inner().expect("incumbent lock poisoned");
        ((best.len() >= need).then_some(best), nodes, exhausted)
    }

    /// Lexicographically smallest clique of the given size, in original
    /// vertex order. `None` if the budget ran out part way.
    fn lex_min(
        &self,
        size: usize,
        max_nodes: Option<u64>,
        deadline: Option<Instant>,
        used: u64,
    ) -> (Option<Vec<usize>>, u64) {
        let mut position = vec![0; self.n];
        for (nv, &ov) in self.original.iter().enumerate() {
            position[ov] = nv;
        }
        let mut chosen = Vec::with_capacity(size);
        let mut allowed = self.all();
        let mut nodes = 0;
        for ov in 0..self.n {
            if chosen.len() == size {
                break;
            }
            let v = position[ov];
            if !test(&allowed, v) {
                continue;
            }
            // Candidates after v in original order that are compatible with it.
            let mut later = allowed.clone();
            for u in 0..self.n {
                if self.original[u] <= ov {
                    clear(&mut later, u);
                }
            }
            for (l, r) in later.iter_mut().zip(self.row(v)) {
                *l &= r;
            }
            let need = size - chosen.len() - 1;
            let budget = Budget { max_nodes, max_time: deadline.map(|d| d.saturating_duration_since(Instant::now())) };
            let (found, used_here, exhausted) = self.find_at_least(&later, need, &budget, used + nodes);
            nodes += used_here;
            if exhausted && found.is_none() {
                return (None, nodes);
            }
            if found.is_some() {
                chosen.push(v);
                for (a, r) in allowed.iter_mut().zip(self.row(v)) {
                    *a &= r;
                }
            }
            clear(&mut allowed, v);
        }
        ((chosen.len() == size).then_some(chosen), nodes)
    }
}

/// Depth of the tree split across workers in parallel mode.
const PARALLEL_DEPTH: usize = 2;
