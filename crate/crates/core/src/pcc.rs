//! Particle competition and cooperation.
//!
//! Every labeled node spawns a particle that belongs to the team of its class
//! and starts at that node (its home). Each unlabeled node carries a vector of
//! domination levels, one per team, summing to 1. Particles walk the graph:
//! visiting a node raises their team's level there at the expense of rivals,
//! in proportion to the particle's strength, and the particle's strength
//! becomes its team's level at the node it just visited. A particle whose team
//! does not strictly dominate the node it tried to visit is pushed back to
//! where it came from. When the walk settles, each node takes the class of
//! the team with the highest level.
//!
//! Moves follow one of two rules, chosen per move:
//!
//! - **random**: uniform over neighbors;
//! - **greedy**: neighbor `j` weighted by `domination[j][team] * (1 + dist(j))^-e`,
//!   where `dist` is the particle's running estimate of hop distance to home.
//!
//! A run is strictly sequential; particles move in ascending home-node order
//! and all randomness comes from one seeded stream.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Total particle moves budgeted by the automatic sweep cap.
const AUTO_MOVE_BUDGET: usize = 500_000;
const AUTO_MIN_SWEEPS: usize = 10_000;

/// Dynamics constants and stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PccConfig {
    /// Probability of taking the greedy rule on a move.
    pub p_grd: f64,
    /// Domination change rate.
    pub delta_v: f64,
    /// Exponent on the inverse distance-to-home factor of the greedy rule.
    pub dist_exponent: f64,
    /// Hard sweep cap. `None` means `ceil(500_000 / particles)`, at least 10_000.
    pub max_sweeps: Option<usize>,
    /// Convergence threshold on the change of mean max domination between checks.
    pub conv_epsilon: f64,
    /// Sweeps between convergence checks.
    pub conv_check_interval: usize,
    pub seed: u64,
}

impl Default for PccConfig {
    fn default() -> Self {
        Self {
            p_grd: 0.6,
            delta_v: 0.1,
            dist_exponent: 2.0,
            max_sweeps: None,
            conv_epsilon: 1e-3,
            conv_check_interval: 1_000,
            seed: 0,
        }
    }
}

impl PccConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(0.0..=1.0).contains(&self.p_grd) {
            return bad(format!("p_grd = {} outside [0, 1]", self.p_grd));
        }
        if !(self.delta_v > 0.0 && self.delta_v <= 1.0) {
            return bad(format!("delta_v = {} outside (0, 1]", self.delta_v));
        }
        if !(self.dist_exponent >= 0.0 && self.dist_exponent.is_finite()) {
            return bad(format!(
                "dist_exponent = {} must be >= 0",
                self.dist_exponent
            ));
        }
        if self.max_sweeps == Some(0) {
            return bad("max_sweeps must be at least 1".into());
        }
        if self.conv_epsilon.is_nan() || self.conv_epsilon < 0.0 {
            return bad(format!("conv_epsilon = {} must be >= 0", self.conv_epsilon));
        }
        if self.conv_check_interval == 0 {
            return bad("conv_check_interval must be at least 1".into());
        }
        Ok(())
    }

    /// Sweep cap for a run with `particles` particles.
    pub fn effective_max_sweeps(&self, particles: usize) -> usize {
        self.max_sweeps.unwrap_or_else(|| {
            AUTO_MOVE_BUDGET
                .div_ceil(particles.max(1))
                .max(AUTO_MIN_SWEEPS)
        })
    }
}

/// Snapshot of a particle, in the graph's node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub home: usize,
    pub team: usize,
    pub position: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Walker {
    team: usize,
    /// Slot in the internal numbering.
    position: u32,
    strength: f64,
    dist: DistanceTable,
}

/// Hop estimates to home for the slots a particle has reached; every other
/// slot reads as `far`. A particle only ever reaches a small neighborhood, so
/// an open-addressing table keeps the working set independent of graph size.
#[derive(Debug, Clone, PartialEq)]
struct DistanceTable {
    far: u32,
    /// `slot << 32 | estimate`, or `EMPTY`.
    entries: Vec<u64>,
    len: usize,
    shift: u32,
}

const EMPTY: u64 = u64::MAX;

impl DistanceTable {
    const INITIAL_BITS: u32 = 5;

    fn new(home: u32, far: u32) -> Self {
        let mut table = Self {
            far,
            entries: vec![EMPTY; 1 << Self::INITIAL_BITS],
            len: 0,
            shift: 32 - Self::INITIAL_BITS,
        };
        table.relax(home, 0);
        table
    }

    fn index(&self, slot: u32) -> usize {
        (slot.wrapping_mul(0x9E37_79B9) >> self.shift) as usize
    }

    /// Index holding `slot`, or the empty index where it would go.
    fn find(&self, slot: u32) -> usize {
        let mask = self.entries.len() - 1;
        let mut i = self.index(slot);
        loop {
            let e = self.entries[i];
            if e == EMPTY || (e >> 32) as u32 == slot {
                return i;
            }
            i = (i + 1) & mask;
        }
    }

    fn get(&self, slot: u32) -> u32 {
        match self.entries[self.find(slot)] {
            EMPTY => self.far,
            e => e as u32,
        }
    }

    /// Lowers the estimate at `slot` to `candidate` if that is an improvement.
    fn relax(&mut self, slot: u32, candidate: u32) {
        let i = self.find(slot);
        match self.entries[i] {
            EMPTY => {
                if candidate < self.far {
                    self.entries[i] = (u64::from(slot) << 32) | u64::from(candidate);
                    self.len += 1;
                    if 2 * self.len > self.entries.len() {
                        self.grow();
                    }
                }
            }
            e if candidate < e as u32 => {
                self.entries[i] = (u64::from(slot) << 32) | u64::from(candidate);
            }
            _ => {}
        }
    }

    fn grow(&mut self) {
        let size = 2 * self.entries.len();
        let old = std::mem::replace(&mut self.entries, vec![EMPTY; size]);
        self.shift -= 1;
        for e in old.into_iter().filter(|&e| e != EMPTY) {
            let i = self.find((e >> 32) as u32);
            self.entries[i] = e;
        }
    }
}

/// Compact copy of the graph with nodes renumbered in breadth-first order,
/// so that walks touch nearby memory. Each slot keeps its neighbors in the
/// order of their original ids, so runs are identical to walking the
/// original numbering.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    /// Original id of each slot.
    node: Vec<u32>,
    /// Slot of each original id.
    slot: Vec<u32>,
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Layout {
    fn new(graph: &Graph) -> Self {
        let n = graph.n();
        assert!(n < u32::MAX as usize, "graph too large");
        let mut slot = vec![u32::MAX; n];
        let mut node = Vec::with_capacity(n);
        for start in 0..n {
            if slot[start] != u32::MAX {
                continue;
            }
            slot[start] = node.len() as u32;
            node.push(start as u32);
            let mut head = node.len() - 1;
            while head < node.len() {
                let v = node[head] as usize;
                head += 1;
                for &w in graph.neighbors(v) {
                    if slot[w] == u32::MAX {
                        slot[w] = node.len() as u32;
                        node.push(w as u32);
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * graph.edge_count());
        offsets.push(0);
        for &v in &node {
            targets.extend(graph.neighbors(v as usize).iter().map(|&w| slot[w]));
            offsets.push(targets.len() as u32);
        }
        Self {
            node,
            slot,
            offsets,
            targets,
        }
    }

    fn neighbors(&self, s: u32) -> &[u32] {
        &self.targets[self.offsets[s as usize] as usize..self.offsets[s as usize + 1] as usize]
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PccState<'g> {
    graph: &'g Graph,
    layout: Layout,
    config: PccConfig,
    num_classes: usize,
    labels: Vec<Option<usize>>,
    /// Per slot.
    fixed: Vec<bool>,
    /// Row-major `n × num_classes`, per slot.
    domination: Vec<f64>,
    /// In ascending home order.
    walkers: Vec<Walker>,
    homes: Vec<usize>,
    /// `(1 + h)^-dist_exponent` for every possible hop estimate `h`.
    dist_factor: Vec<f64>,
    sweep_count: usize,
}

/// Validates inputs and builds the initial state: one particle per labeled
/// node at full strength, one-hot rows on labeled nodes, uniform rows elsewhere.
pub fn pcc_init<'g>(
    graph: &'g Graph,
    labels: &[Option<usize>],
    num_classes: usize,
    config: &PccConfig,
) -> Result<PccState<'g>> {
    config.validate()?;
    let n = graph.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
            context: "labels vs. graph nodes",
        });
    }
    if let Some(c) = labels.iter().flatten().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidLabels(format!(
            "class {c} out of range for {num_classes} classes"
        )));
    }
    let mut present = vec![false; num_classes];
    for &c in labels.iter().flatten() {
        present[c] = true;
    }
    match present.iter().filter(|&&p| p).count() {
        0 => return Err(Error::InvalidLabels("no labeled nodes".into())),
        1 => {
            return Err(Error::InvalidLabels(
                "labeled nodes cover a single class; at least two are needed".into(),
            ))
        }
        _ => {}
    }

    let layout = Layout::new(graph);
    let far = (n - 1) as u32;
    let uniform = 1.0 / num_classes as f64;
    let mut domination = vec![uniform; n * num_classes];
    let mut fixed = vec![false; n];
    let mut walkers = Vec::new();
    let mut homes = Vec::new();
    for (node, label) in labels.iter().enumerate() {
        if let Some(team) = *label {
            let s = layout.slot[node] as usize;
            fixed[s] = true;
            let row = &mut domination[s * num_classes..(s + 1) * num_classes];
            row.fill(0.0);
            row[team] = 1.0;
            walkers.push(Walker {
                team,
                position: s as u32,
                strength: 1.0,
                dist: DistanceTable::new(s as u32, far),
            });
            homes.push(node);
        }
    }
    let dist_factor = (0..n)
        .map(|h| (1.0 + h as f64).powf(-config.dist_exponent))
        .collect();

    Ok(PccState {
        graph,
        layout,
        config: config.clone(),
        num_classes,
        labels: labels.to_vec(),
        fixed,
        domination,
        walkers,
        homes,
        dist_factor,
        sweep_count: 0,
    })
}

impl<'g> PccState<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn config(&self) -> &PccConfig {
        &self.config
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn particle_count(&self) -> usize {
        self.walkers.len()
    }

    /// Particles are numbered in ascending home order.
    pub fn particle(&self, i: usize) -> Particle {
        let w = &self.walkers[i];
        Particle {
            home: self.homes[i],
            team: w.team,
            position: self.layout.node[w.position as usize] as usize,
            strength: w.strength,
        }
    }

    pub fn particles(&self) -> impl ExactSizeIterator<Item = Particle> + '_ {
        (0..self.walkers.len()).map(|i| self.particle(i))
    }

    /// Particle `i`'s current estimate of the hop distance from `node` to home.
    pub fn particle_dist(&self, i: usize, node: usize) -> usize {
        self.walkers[i].dist.get(self.layout.slot[node]) as usize
    }

    pub fn sweep_count(&self) -> usize {
        self.sweep_count
    }

    pub fn domination(&self, node: usize) -> &[f64] {
        let s = self.layout.slot[node] as usize;
        &self.domination[s * self.num_classes..(s + 1) * self.num_classes]
    }

    /// Mean over nodes of the largest domination level.
    pub fn mean_max_domination(&self) -> f64 {
        let n = self.graph.n();
        let total: f64 = self
            .domination
            .chunks_exact(self.num_classes)
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .sum();
        total / n as f64
    }

    /// Picks the next node for `particle` using the random or greedy rule.
    ///
    /// Panics if the particle sits on an isolated node.
    pub fn choose_move<R: Rng + ?Sized>(&self, particle: usize, rng: &mut R) -> usize {
        let s = self.choose_slot(particle, rng);
        self.layout.node[s as usize] as usize
    }

    fn choose_slot<R: Rng + ?Sized>(&self, particle: usize, rng: &mut R) -> u32 {
        let p = &self.walkers[particle];
        let neighbors = self.layout.neighbors(p.position);
        assert!(
            !neighbors.is_empty(),
            "particle on isolated node {}",
            self.layout.node[p.position as usize]
        );
        if neighbors.len() == 1 {
            return neighbors[0];
        }
        if rng.random::<f64>() < self.config.p_grd {
            let c = self.num_classes;
            let weight = |j: u32| {
                self.domination[j as usize * c + p.team] * self.dist_factor[p.dist.get(j) as usize]
            };
            let total: f64 = neighbors.iter().map(|&j| weight(j)).sum();
            if total > 0.0 {
                let mut r = rng.random::<f64>() * total;
                for &j in neighbors {
                    let w = weight(j);
                    if r < w {
                        return j;
                    }
                    r -= w;
                }
                // rounding left r just above the last positive weight
                return *neighbors
                    .iter()
                    .rev()
                    .find(|&&j| weight(j) > 0.0)
                    .expect("total > 0");
            }
        }
        neighbors[rng.random_range(0..neighbors.len())]
    }

    /// Moves `particle` to `target` (a neighbor of its position), updating the
    /// target's domination row, the particle's strength and distance table,
    /// and expelling it back if its team does not strictly dominate `target`.
    pub fn apply_visit(&mut self, particle: usize, target: usize) {
        let s = self.layout.slot[target];
        self.visit_slot(particle, s);
    }

    fn visit_slot(&mut self, particle: usize, target: u32) {
        let c = self.num_classes;
        let t = target as usize;
        let p = &mut self.walkers[particle];
        let row = &mut self.domination[t * c..(t + 1) * c];
        if !self.fixed[t] {
            let share = self.config.delta_v * p.strength / (c - 1) as f64;
            let mut gained = 0.0;
            for (class, level) in row.iter_mut().enumerate() {
                if class != p.team {
                    let loss = share.min(*level);
                    *level -= loss;
                    gained += loss;
                }
            }
            row[p.team] = (row[p.team] + gained).min(1.0);
        }
        p.strength = row[p.team].clamp(0.0, 1.0);

        let via_previous = p.dist.get(p.position) + 1;
        p.dist.relax(target, via_previous);

        let own = row[p.team];
        let dominates = row
            .iter()
            .enumerate()
            .all(|(class, &level)| class == p.team || own > level);
        if dominates {
            p.position = target;
        }
    }

    /// One move for every particle, in order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.walkers.len() {
            if self.layout.neighbors(self.walkers[i].position).is_empty() {
                continue;
            }
            let target = self.choose_slot(i, rng);
            self.visit_slot(i, target);
        }
        self.sweep_count += 1;
    }

    /// Sweeps until the mean max domination changes by less than
    /// `conv_epsilon` between two consecutive checks, or the cap is reached.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        mut trace: Option<&mut dyn Write>,
    ) -> Result<Prediction> {
        if self.labels.iter().all(Option::is_some) {
            return Ok(self.predict(true));
        }
        let cap = self.config.effective_max_sweeps(self.walkers.len());
        let interval = self.config.conv_check_interval;
        let mut last_check: Option<f64> = None;
        let mut converged = false;
        while self.sweep_count < cap {
            self.sweep(rng);
            if let Some(out) = trace.as_deref_mut() {
                self.write_trace(out).map_err(Error::Trace)?;
            }
            if self.sweep_count.is_multiple_of(interval) {
                let current = self.mean_max_domination();
                if last_check.is_some_and(|prev| (current - prev).abs() < self.config.conv_epsilon)
                {
                    converged = true;
                    break;
                }
                last_check = Some(current);
            }
        }
        if let Some(out) = trace {
            out.flush().map_err(Error::Trace)?;
        }
        Ok(self.predict(converged))
    }

    fn write_trace(&self, out: &mut dyn Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            sweep: usize,
            mean_max_domination: f64,
            particles: &'a [(usize, f64)],
        }
        let particles: Vec<(usize, f64)> =
            self.particles().map(|p| (p.position, p.strength)).collect();
        let record = Record {
            sweep: self.sweep_count,
            mean_max_domination: self.mean_max_domination(),
            particles: &particles,
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")
    }

    /// Labels every node with its dominating team (lowest class on ties).
    pub fn predict(&self, converged: bool) -> Prediction {
        let n = self.graph.n();
        let mut labels = Vec::with_capacity(n);
        let mut domination = Vec::with_capacity(self.domination.len());
        for node in 0..n {
            let row = self.domination(node);
            labels.push(argmax(row));
            domination.extend_from_slice(row);
        }
        Prediction::new(
            labels,
            domination,
            self.num_classes,
            self.sweep_count,
            converged,
        )
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Runs the dynamics from scratch with an RNG seeded from `config.seed`.
pub fn pcc_run(
    graph: &Graph,
    labels: &[Option<usize>],
    num_classes: usize,
    config: &PccConfig,
) -> Result<Prediction> {
    let mut state = pcc_init(graph, labels, num_classes, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    state.run(&mut rng, None)
}

/// Final labeling of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    domination: Vec<f64>,
    num_classes: usize,
    pub sweeps: usize,
    pub converged: bool,
}

impl Prediction {
    /// `domination` is row-major `labels.len() × num_classes`.
    pub fn new(
        labels: Vec<usize>,
        domination: Vec<f64>,
        num_classes: usize,
        sweeps: usize,
        converged: bool,
    ) -> Self {
        assert_eq!(domination.len(), labels.len() * num_classes);
        Self {
            labels,
            domination,
            num_classes,
            sweeps,
            converged,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn domination(&self, node: usize) -> &[f64] {
        &self.domination[node * self.num_classes..(node + 1) * self.num_classes]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn distance_table_matches_a_map() {
        let mut table = DistanceTable::new(7, 999);
        let mut reference = std::collections::BTreeMap::from([(7u32, 0u32)]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5_000 {
            let slot = rng.random_range(0..1_000);
            let candidate = rng.random_range(0..1_200);
            table.relax(slot, candidate);
            if candidate < 999 {
                let e = reference.entry(slot).or_insert(candidate);
                *e = (*e).min(candidate);
            }
        }
        assert!(table.entries.len() > 1 << DistanceTable::INITIAL_BITS);
        assert_eq!(table.len, reference.len());
        for slot in 0..1_000 {
            assert_eq!(
                table.get(slot),
                reference.get(&slot).copied().unwrap_or(999)
            );
        }
    }

    #[test]
    fn init_layout() {
        let g = path(4);
        let state = pcc_init(
            &g,
            &[Some(0), None, None, Some(1)],
            2,
            &PccConfig::default(),
        )
        .unwrap();
        assert_eq!(state.particle_count(), 2);
        assert_eq!(state.domination(0), &[1.0, 0.0]);
        assert_eq!(state.domination(1), &[0.5, 0.5]);
        assert_eq!(state.domination(2), &[0.5, 0.5]);
        assert_eq!(state.domination(3), &[0.0, 1.0]);
        let p = state.particle(1);
        assert_eq!((p.home, p.team, p.position, p.strength), (3, 1, 3, 1.0));
        assert_eq!(
            (state.particle_dist(1, 3), state.particle_dist(1, 0)),
            (0, 3)
        );
    }

    #[test]
    fn init_errors() {
        let g = path(3);
        let cfg = PccConfig::default();
        assert!(pcc_init(&g, &[None, None, None], 2, &cfg).is_err());
        assert!(pcc_init(&g, &[Some(1), None, Some(1)], 2, &cfg).is_err());
        assert!(pcc_init(&g, &[Some(0), Some(1)], 2, &cfg).is_err());
        assert!(pcc_init(&g, &[Some(0), None, Some(2)], 2, &cfg).is_err());
        let bad = PccConfig {
            p_grd: 1.5,
            ..PccConfig::default()
        };
        assert!(pcc_init(&g, &[Some(0), None, Some(1)], 2, &bad).is_err());
    }

    #[test]
    fn visit_unlabeled_neutral_node() {
        let g = path(3);
        let mut state = pcc_init(&g, &[Some(0), None, Some(1)], 2, &PccConfig::default()).unwrap();
        state.apply_visit(0, 1);
        assert_close(state.domination(1), &[0.6, 0.4]);
        let p = state.particle(0);
        assert!((p.strength - 0.6).abs() < 1e-12);
        assert_eq!(p.position, 1);
        assert_eq!(state.particle_dist(0, 1), 1);
    }

    #[test]
    fn visit_own_territory() {
        let g = path(3);
        let mut state =
            pcc_init(&g, &[Some(0), Some(0), Some(1)], 2, &PccConfig::default()).unwrap();
        state.apply_visit(0, 1);
        assert_eq!(state.domination(1), &[1.0, 0.0]);
        assert_eq!(state.particle(0).strength, 1.0);
        assert_eq!(state.particle(0).position, 1);
    }

    #[test]
    fn visit_rival_labeled_node_expels() {
        let g = path(2);
        let mut state = pcc_init(&g, &[Some(0), Some(1)], 2, &PccConfig::default()).unwrap();
        state.apply_visit(0, 1);
        assert_eq!(state.domination(1), &[0.0, 1.0]);
        let p = state.particle(0);
        assert_eq!(p.strength, 0.0);
        assert_eq!(p.position, 0);
        // the distance estimate is still relaxed
        assert_eq!(state.particle_dist(0, 1), 1);
    }

    #[test]
    fn tie_means_expulsion() {
        let g = path(3);
        let mut state = pcc_init(&g, &[Some(0), None, Some(1)], 2, &PccConfig::default()).unwrap();
        // a zero-strength particle leaves (0.5, 0.5) untouched and cannot stay
        state.walkers[0].strength = 0.0;
        state.apply_visit(0, 1);
        assert_eq!(state.domination(1), &[0.5, 0.5]);
        assert_eq!(state.particle(0).position, 0);
        assert_eq!(state.particle(0).strength, 0.5);
    }

    #[test]
    fn rival_losses_split_across_classes() {
        let g = path(3);
        let mut state = pcc_init(&g, &[Some(0), None, Some(1)], 3, &PccConfig::default()).unwrap();
        state.apply_visit(1, 1);
        let third = 1.0 / 3.0;
        assert_close(
            state.domination(1),
            &[third - 0.05, third + 0.1, third - 0.05],
        );
        assert_eq!(state.particle(1).position, 1);
    }

    #[test]
    fn single_neighbor_is_forced() {
        let g = path(2);
        let state = pcc_init(&g, &[Some(0), Some(1)], 2, &PccConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(state.choose_move(0, &mut rng), 1);
        }
    }

    #[test]
    fn first_sweep_moves_delta_v() {
        // two 2-node paths, one seed each
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let mut state = pcc_init(
            &g,
            &[Some(0), None, None, Some(1)],
            2,
            &PccConfig::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        state.sweep(&mut rng);
        assert_eq!(state.sweep_count(), 1);
        assert_close(state.domination(1), &[0.6, 0.4]);
        assert_close(state.domination(2), &[0.4, 0.6]);
    }

    #[test]
    fn sweeps_are_reproducible() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)])
            .unwrap();
        let state = pcc_init(
            &g,
            &[Some(0), None, None, Some(1), None, None],
            2,
            &PccConfig::default(),
        )
        .unwrap();
        let (mut a, mut b) = (state.clone(), state);
        let (mut ra, mut rb) = (ChaCha8Rng::seed_from_u64(5), ChaCha8Rng::seed_from_u64(5));
        for _ in 0..50 {
            a.sweep(&mut ra);
            b.sweep(&mut rb);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn fully_labeled_is_identity() {
        let g = path(4);
        let labels = [Some(1), Some(0), Some(0), Some(1)];
        let pred = pcc_run(&g, &labels, 2, &PccConfig::default()).unwrap();
        assert_eq!(pred.labels, vec![1, 0, 0, 1]);
        assert_eq!(pred.sweeps, 0);
        assert!(pred.converged);
    }

    #[test]
    fn auto_sweep_cap() {
        let cfg = PccConfig::default();
        assert_eq!(cfg.effective_max_sweeps(34), 14_706);
        assert_eq!(cfg.effective_max_sweeps(100), 10_000);
        assert_eq!(cfg.effective_max_sweeps(7), 71_429);
        let fixed = PccConfig {
            max_sweeps: Some(5),
            ..cfg
        };
        assert_eq!(fixed.effective_max_sweeps(34), 5);
    }

    #[test]
    fn trace_records_every_sweep() {
        let g = path(5);
        let cfg = PccConfig {
            max_sweeps: Some(7),
            ..PccConfig::default()
        };
        let mut state = pcc_init(&g, &[Some(0), None, None, None, Some(1)], 2, &cfg).unwrap();
        let mut buf = Vec::new();
        let pred = state
            .run(&mut ChaCha8Rng::seed_from_u64(1), Some(&mut buf))
            .unwrap();
        assert_eq!(pred.sweeps, 7);
        assert!(!pred.converged);
        let lines: Vec<serde_json::Value> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[6]["sweep"], 7);
        assert_eq!(lines[0]["particles"].as_array().unwrap().len(), 2);
    }
}
