//! Scheduler-luck games: the scheduler picks nodes adversarially, the luck
//! player answers with partners, and a luck win means reaching all-zeros.
//!
//! The strategies here are the winning partner policies for stars (and by
//! star decomposition, trees), perfectly matched graphs, odd lines, and
//! their composition over a vertex partition. [`solve_luck_game`] is the
//! independent oracle: exact search over the joint (configuration,
//! scheduler-state) space on small instances.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Configuration;
use crate::graph::{
    find_l7_partition, perfect_matching, spanning_tree, star_decomposition, Graph, Matching,
};
use crate::schedulers::{Decision, K3Adaptive, Scheduler, SchedulerError, SchedulerKind};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("the luck player has no move against an edge scheduler")]
    EdgeScheduler,
    #[error("scheduled node {0} is outside the strategy's domain")]
    OutsideDomain(usize),
    #[error("node {0} is not covered by the matching")]
    Uncovered(usize),
    #[error("strategy chose partner {partner} for {node}, not a neighbor")]
    NotNeighbor { node: usize, partner: usize },
    #[error("strategy crossed part boundaries: {node} -> {partner}")]
    CrossedParts { node: usize, partner: usize },
    #[error("invalid strategy domain: {0}")]
    BadDomain(String),
    #[error("instance too large for exhaustive solving: {0}")]
    Budget(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

/// Rounds of a b-fair trace: any window of `b(n-1) + 1` consecutive steps
/// schedules every node at least once.
#[derive(Clone, Copy, Debug)]
pub struct RoundClock {
    b: u32,
    n: usize,
    steps: usize,
}

impl RoundClock {
    pub fn new(b: u32, n: usize) -> Self {
        RoundClock { b, n, steps: 0 }
    }

    pub fn round_len(&self) -> usize {
        self.b as usize * (self.n - 1) + 1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Index of the round the next step belongs to.
    pub fn current_round(&self) -> usize {
        self.steps / self.round_len()
    }

    /// Rounds counted with a partial round rounded up.
    pub fn rounds_used(&self) -> usize {
        self.steps.div_ceil(self.round_len())
    }

    pub fn advance(&mut self) {
        self.steps += 1;
    }
}

/// A partner-selection policy for the luck player.
#[derive(Clone, Debug)]
pub enum LuckStrategy {
    Star(StarStrategy),
    Matching(MatchingStrategy),
    Line(LineStrategy),
    Composed(ComposedStrategy),
}

impl LuckStrategy {
    /// Star policy with an explicit center and leaf set.
    pub fn star(center: usize, leaves: Vec<usize>) -> Result<Self, StrategyError> {
        if leaves.is_empty() || leaves.contains(&center) {
            return Err(StrategyError::BadDomain("bad star".into()));
        }
        let mut sorted = leaves;
        sorted.sort_unstable();
        Ok(LuckStrategy::Star(StarStrategy {
            center,
            leaves: sorted,
            order: Vec::new(),
            anchored: false,
        }))
    }

    /// Star policy for a whole star graph (center = the hub).
    pub fn star_for_graph(g: &Graph) -> Result<Self, StrategyError> {
        let n = g.n();
        if n < 2 {
            return Err(StrategyError::BadDomain("star needs >= 2 vertices".into()));
        }
        let center = (0..n)
            .find(|&v| g.degree(v) == n - 1)
            .ok_or_else(|| StrategyError::BadDomain("no hub vertex".into()))?;
        if (0..n).any(|v| v != center && g.degree(v) != 1) {
            return Err(StrategyError::BadDomain("not a star".into()));
        }
        LuckStrategy::star(center, (0..n).filter(|&v| v != center).collect())
    }

    /// Constant policy: always the matching partner.
    pub fn matching(m: &Matching) -> Result<Self, StrategyError> {
        if m.size() == 0 {
            return Err(StrategyError::BadDomain("empty matching".into()));
        }
        let mut partner = HashMap::new();
        for &(u, v) in m.edges() {
            partner.insert(u, v);
            partner.insert(v, u);
        }
        Ok(LuckStrategy::Matching(MatchingStrategy { partner }))
    }

    pub fn matching_from_pairs(pairs: &[(usize, usize)]) -> Result<Self, StrategyError> {
        let mut partner = HashMap::new();
        for &(u, v) in pairs {
            if u == v || partner.insert(u, v).is_some() || partner.insert(v, u).is_some() {
                return Err(StrategyError::BadDomain("pairs overlap".into()));
            }
        }
        if partner.is_empty() {
            return Err(StrategyError::BadDomain("empty matching".into()));
        }
        Ok(LuckStrategy::Matching(MatchingStrategy { partner }))
    }

    /// Two-phase policy for an odd path of length >= 7, given in path
    /// order. Round one zeroes the leftmost four vertices with the
    /// matching {(0,1), (2,3)} while everyone to the right plays inside
    /// the tail; later rounds keep the leftmost three playing among
    /// themselves and run the matching {(3,4), (5,6), ...} on the rest.
    pub fn line(path: &[usize]) -> Result<Self, StrategyError> {
        let n = path.len();
        if n < 7 || n.is_multiple_of(2) {
            return Err(StrategyError::BadDomain(
                "line policy needs an odd path of >= 7 vertices (even: use a matching)".into(),
            ));
        }
        if BTreeSet::from_iter(path.iter()).len() != n {
            return Err(StrategyError::BadDomain("path repeats a vertex".into()));
        }
        let mut phase1 = HashMap::new();
        phase1.insert(path[0], path[1]);
        phase1.insert(path[1], path[0]);
        phase1.insert(path[2], path[3]);
        phase1.insert(path[3], path[2]);
        // The tail must not touch vertex 3 while the head is being
        // zeroed: vertex 4 plays right, the rest play left.
        phase1.insert(path[4], path[5]);
        for i in 5..n {
            phase1.insert(path[i], path[i - 1]);
        }
        let mut phase2 = HashMap::new();
        phase2.insert(path[0], path[1]);
        phase2.insert(path[1], path[0]);
        phase2.insert(path[2], path[1]);
        let mut i = 3;
        while i + 1 < n {
            phase2.insert(path[i], path[i + 1]);
            phase2.insert(path[i + 1], path[i]);
            i += 2;
        }
        Ok(LuckStrategy::Line(LineStrategy {
            path: path.to_vec(),
            phase1,
            phase2,
        }))
    }

    /// Dispatches to per-part strategies over a partition of the domain;
    /// partners never cross part boundaries, so edges between parts are
    /// simply never played.
    pub fn compose(parts: Vec<(Vec<usize>, LuckStrategy)>) -> Result<Self, StrategyError> {
        let mut owner = HashMap::new();
        for (idx, (set, strat)) in parts.iter().enumerate() {
            let set_sorted: BTreeSet<usize> = set.iter().copied().collect();
            if set_sorted.len() != set.len() {
                return Err(StrategyError::BadDomain("part repeats a vertex".into()));
            }
            if set_sorted != strat.domain() {
                return Err(StrategyError::BadDomain(format!(
                    "part {idx} does not match its strategy's domain"
                )));
            }
            for &v in set {
                if owner.insert(v, idx).is_some() {
                    return Err(StrategyError::BadDomain(format!(
                        "vertex {v} is in two parts"
                    )));
                }
            }
        }
        if owner.is_empty() {
            return Err(StrategyError::BadDomain("no parts".into()));
        }
        Ok(LuckStrategy::Composed(ComposedStrategy {
            parts: parts.into_iter().map(|(_, s)| s).collect(),
            owner,
        }))
    }

    /// The tree strategy: star strategies composed over the star peel of
    /// the tree.
    pub fn for_tree(g: &Graph) -> Result<Self, StrategyError> {
        if !g.is_connected() || g.m() != g.n() - 1 {
            return Err(StrategyError::BadDomain("not a tree".into()));
        }
        let t = spanning_tree(g, 0).map_err(SchedulerError::from)?;
        let decomp = star_decomposition(&t).map_err(SchedulerError::from)?;
        let parts = decomp
            .stars
            .into_iter()
            .map(|s| {
                let mut set = s.leaves.clone();
                set.push(s.center);
                let strat = LuckStrategy::star(s.center, s.leaves)?;
                Ok((set, strat))
            })
            .collect::<Result<Vec<_>, StrategyError>>()?;
        LuckStrategy::compose(parts)
    }

    /// The winning strategy for a graph when a certificate is found: a
    /// perfect matching for even orders, a 7-path plus matched remainder
    /// for odd ones. `None` means no certificate within the search budget.
    pub fn for_random_graph(g: &Graph) -> Option<Self> {
        if g.n().is_multiple_of(2) {
            let m = perfect_matching(g)?;
            return LuckStrategy::matching(&m).ok();
        }
        let part = find_l7_partition(g, 1_000_000)?;
        let line = LuckStrategy::line(&part.path).ok()?;
        if part.rest.is_empty() {
            return Some(line);
        }
        let rest_matching = LuckStrategy::matching_from_pairs(&part.rest_matching).ok()?;
        LuckStrategy::compose(vec![
            (part.path.to_vec(), line),
            (part.rest.clone(), rest_matching),
        ])
        .ok()
    }

    pub fn domain(&self) -> BTreeSet<usize> {
        match self {
            LuckStrategy::Star(s) => {
                let mut d: BTreeSet<usize> = s.leaves.iter().copied().collect();
                d.insert(s.center);
                d
            }
            LuckStrategy::Matching(m) => m.partner.keys().copied().collect(),
            LuckStrategy::Line(l) => l.path.iter().copied().collect(),
            LuckStrategy::Composed(c) => c.owner.keys().copied().collect(),
        }
    }

    /// Anchors round orders to a periodic node schedule (the star policy
    /// ranks its leaves by their scheduling position after the center).
    pub fn bind_node_order(&mut self, perm: &[usize]) {
        match self {
            LuckStrategy::Star(s) => s.bind(perm),
            LuckStrategy::Composed(c) => {
                for p in &mut c.parts {
                    p.bind_node_order(perm);
                }
            }
            _ => {}
        }
    }

    /// The partner for `node` under the current configuration and round
    /// clock.
    pub fn choose_partner(
        &mut self,
        g: &Graph,
        x: &Configuration,
        node: usize,
        clock: &RoundClock,
    ) -> Result<usize, StrategyError> {
        let partner = match self {
            LuckStrategy::Star(s) => s.choose(x, node)?,
            LuckStrategy::Matching(m) => {
                *m.partner.get(&node).ok_or(StrategyError::Uncovered(node))?
            }
            LuckStrategy::Line(l) => {
                let table = if clock.current_round() == 0 {
                    &l.phase1
                } else {
                    &l.phase2
                };
                *table.get(&node).ok_or(StrategyError::OutsideDomain(node))?
            }
            LuckStrategy::Composed(c) => {
                let part = *c
                    .owner
                    .get(&node)
                    .ok_or(StrategyError::OutsideDomain(node))?;
                let partner = c.parts[part].choose_partner(g, x, node, clock)?;
                if c.owner.get(&partner) != Some(&part) {
                    return Err(StrategyError::CrossedParts { node, partner });
                }
                partner
            }
        };
        if !g.has_edge(node, partner) {
            return Err(StrategyError::NotNeighbor { node, partner });
        }
        Ok(partner)
    }
}

/// Center play: with label 1, zero the first still-defecting leaf in round
/// order; with label 0, play a cooperating leaf to stay put. Leaves always
/// play the center. Round order comes from a bound schedule or is learned
/// online from the center's first scheduling on.
#[derive(Clone, Debug)]
pub struct StarStrategy {
    center: usize,
    leaves: Vec<usize>,
    order: Vec<usize>,
    anchored: bool,
}

impl StarStrategy {
    fn bind(&mut self, perm: &[usize]) {
        let len = perm.len();
        let Some(cpos) = perm.iter().position(|&v| v == self.center) else {
            return;
        };
        let mut keyed: Vec<(usize, usize)> = perm
            .iter()
            .enumerate()
            .filter(|(_, v)| self.leaves.contains(v))
            .map(|(p, &v)| ((p + len - cpos) % len, v))
            .collect();
        keyed.sort_unstable();
        self.order = keyed.into_iter().map(|(_, v)| v).collect();
        self.anchored = true;
    }

    fn ranked(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().copied().chain(
            self.leaves
                .iter()
                .copied()
                .filter(|v| !self.order.contains(v)),
        )
    }

    fn choose(&mut self, x: &Configuration, node: usize) -> Result<usize, StrategyError> {
        if node == self.center {
            self.anchored = true;
            let want = x.get(self.center);
            // A matching leaf keeps the argument moving; failing that the
            // first-ranked leaf stands in for the proof's "node 1".
            let partner = self
                .ranked()
                .find(|&l| x.get(l) == want)
                .or_else(|| self.ranked().next())
                .expect("a star has at least one leaf");
            return Ok(partner);
        }
        if !self.leaves.contains(&node) {
            return Err(StrategyError::OutsideDomain(node));
        }
        if self.anchored && !self.order.contains(&node) {
            self.order.push(node);
        }
        Ok(self.center)
    }
}

#[derive(Clone, Debug)]
pub struct MatchingStrategy {
    partner: HashMap<usize, usize>,
}

#[derive(Clone, Debug)]
pub struct LineStrategy {
    path: Vec<usize>,
    phase1: HashMap<usize, usize>,
    phase2: HashMap<usize, usize>,
}

#[derive(Clone, Debug)]
pub struct ComposedStrategy {
    parts: Vec<LuckStrategy>,
    owner: HashMap<usize, usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameOutcome {
    pub won: bool,
    pub rounds_used: usize,
    pub steps: usize,
    pub played: Option<Vec<(usize, usize)>>,
}

/// Plays the scheduler against the strategy from `x0` for at most
/// `max_rounds` rounds. The scheduler must be node-kind; its partner
/// randomness is replaced by the strategy, so the playout is deterministic
/// for deterministic schedulers.
pub fn play_game(
    g: &Graph,
    scheduler: &mut Scheduler,
    strategy: &LuckStrategy,
    x0: &Configuration,
    max_rounds: usize,
    record: bool,
) -> Result<GameOutcome, StrategyError> {
    if scheduler.kind() != SchedulerKind::Node {
        return Err(StrategyError::EdgeScheduler);
    }
    let mut strat = strategy.clone();
    if let Some(period) = scheduler.node_period() {
        let period = period.to_vec();
        strat.bind_node_order(&period);
    }
    let b = scheduler.fairness_bound().unwrap_or(1);
    let mut clock = RoundClock::new(b, g.n());
    let mut x = x0.clone();
    let mut played = record.then(Vec::new);
    let budget = max_rounds.saturating_mul(clock.round_len());
    while !x.is_zero() && clock.steps() < budget {
        let d = scheduler.next_decision(g, &x)?;
        let node = match d {
            Decision::Node(u) => u,
            Decision::Edge(_, _) => return Err(StrategyError::EdgeScheduler),
        };
        let partner = strat.choose_partner(g, &x, node, &clock)?;
        x.play_unchecked(node, partner);
        clock.advance();
        if let Some(t) = played.as_mut() {
            t.push((node, partner));
        }
    }
    Ok(GameOutcome {
        won: x.is_zero(),
        rounds_used: clock.rounds_used(),
        steps: clock.steps(),
        played,
    })
}

/// Witness tree node for an exported winning strategy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessNode {
    pub config: String,
    pub scheduled: usize,
    pub partner: usize,
    pub children: Vec<WitnessNode>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub luck_wins: bool,
    pub states_explored: usize,
    pub witness: Option<WitnessNode>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum SchedState {
    Pos(usize),
    K3(u8, u8, u8),
}

/// Decides the scheduler-luck game exactly: explores the joint space of
/// configurations and scheduler states, with the luck player choosing
/// partners. Supports the deterministic node schedulers (periodic,
/// constant, and the adaptive triangle daemon); instances are capped at 8
/// vertices. `horizon_steps` bounds the forced win length when given.
pub fn solve_luck_game(
    g: &Graph,
    scheduler: &Scheduler,
    x0: &Configuration,
    horizon_steps: Option<usize>,
) -> Result<SolveOutcome, StrategyError> {
    if g.n() > 8 {
        return Err(StrategyError::Budget(format!(
            "{} vertices (limit 8)",
            g.n()
        )));
    }
    enum Drv<'a> {
        Periodic(&'a [usize]),
        Constant(usize),
        K3,
    }
    let (driver, init_state) = match scheduler {
        Scheduler::PeriodicNode { nodes, pos, .. } => (Drv::Periodic(nodes), SchedState::Pos(*pos)),
        Scheduler::ConstantNode { node, .. } => (Drv::Constant(*node), SchedState::Pos(0)),
        Scheduler::K3Adaptive(k) => {
            let (p, s, t) = k.encode();
            (Drv::K3, SchedState::K3(p, s, t))
        }
        _ => {
            return Err(StrategyError::Budget(
                "solver supports periodic-node, constant-node and k3-adaptive schedulers".into(),
            ))
        }
    };

    let decide = |mask: u64, st: SchedState| -> Result<(usize, SchedState), StrategyError> {
        match (&driver, st) {
            (Drv::Periodic(nodes), SchedState::Pos(p)) => {
                Ok((nodes[p], SchedState::Pos((p + 1) % nodes.len())))
            }
            (Drv::Constant(v), st) => Ok((*v, st)),
            (Drv::K3, SchedState::K3(p, s, t)) => {
                let k = K3Adaptive::decode(p, s, t);
                let x = Configuration::from_mask(mask, 3);
                let (node, next) = k.decide(&x)?;
                let (np, ns, nt) = next.encode();
                Ok((node, SchedState::K3(np, ns, nt)))
            }
            _ => unreachable!(),
        }
    };

    // Forward reachability over (configuration, scheduler state).
    type State = (u64, SchedState);
    let start: State = (x0.as_mask(), init_state);
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut moves: Vec<(usize, Vec<(usize, usize)>)> = Vec::new(); // (scheduled, [(partner, next)])
    let mut queue = VecDeque::new();
    index.insert(start, 0);
    states.push(start);
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        debug_assert_eq!(moves.len(), i);
        let (mask, st) = states[i];
        if mask == 0 {
            // Terminal: the luck player has won.
            moves.push((usize::MAX, Vec::new()));
            continue;
        }
        let (node, next_st) = decide(mask, st)?;
        let mut outs = Vec::new();
        for &w in g.neighbors(node) {
            let mut x = Configuration::from_mask(mask, g.n());
            x.play_unchecked(node, w);
            let next: State = (x.as_mask(), next_st);
            let j = *index.entry(next).or_insert_with(|| {
                states.push(next);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            outs.push((w, j));
        }
        moves.push((node, outs));
        debug_assert_eq!(moves.len() - 1, i);
    }

    // Backward BFS: rank = least number of steps the luck player needs.
    let mut rank: Vec<Option<usize>> = states
        .iter()
        .map(|&(m, _)| if m == 0 { Some(0) } else { None })
        .collect();
    let mut back: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (i, (_, outs)) in moves.iter().enumerate() {
        for &(_, j) in outs {
            back[j].push(i);
        }
    }
    let mut bfs: VecDeque<usize> = (0..states.len()).filter(|&i| rank[i] == Some(0)).collect();
    while let Some(j) = bfs.pop_front() {
        let next_rank = rank[j].unwrap() + 1;
        for &i in &back[j] {
            if rank[i].is_none() {
                rank[i] = Some(next_rank);
                bfs.push_back(i);
            }
        }
    }

    let winnable = match (rank[0], horizon_steps) {
        (Some(r), Some(h)) => r <= h,
        (Some(_), None) => true,
        (None, _) => false,
    };

    let witness = winnable.then(|| {
        let node_for = |i: usize| -> Option<WitnessNode> {
            let mut out: Option<WitnessNode> = None;
            let mut chain: Vec<(usize, usize, u64)> = Vec::new();
            let mut cur = i;
            while states[cur].0 != 0 {
                let (scheduled, outs) = &moves[cur];
                let (partner, next) = outs
                    .iter()
                    .copied()
                    .min_by_key(|&(_, j)| rank[j].unwrap_or(usize::MAX))
                    .expect("winning state has moves");
                chain.push((*scheduled, partner, states[cur].0));
                cur = next;
            }
            for &(scheduled, partner, mask) in chain.iter().rev() {
                let node = WitnessNode {
                    config: Configuration::from_mask(mask, g.n()).to_string(),
                    scheduled,
                    partner,
                    children: out.take().into_iter().collect(),
                };
                out = Some(node);
            }
            out
        };
        node_for(0)
    });

    Ok(SolveOutcome {
        luck_wins: winnable,
        states_explored: states.len(),
        witness: witness.flatten(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;
    use crate::rng::{stream, Purpose};
    use crate::schedulers::periodic_scheduler;
    use itertools::Itertools;

    fn node_perm_scheduler(g: &Graph, perm: &[usize], seed: u64) -> Scheduler {
        periodic_scheduler(
            g,
            SchedulerKind::Node,
            perm,
            stream(seed, Purpose::Scheduler, 0),
        )
        .unwrap()
    }

    #[test]
    fn star_strategy_wins_every_small_instance() {
        for leaves in [2usize, 3] {
            let g = Family::Star.generate(leaves).unwrap();
            let n = g.n();
            let strategy = LuckStrategy::star_for_graph(&g).unwrap();
            for perm in (0..n).permutations(n) {
                for mask in 0..1u64 << n {
                    let x0 = Configuration::from_mask(mask, n);
                    let mut sched = node_perm_scheduler(&g, &perm, 1);
                    let out = play_game(&g, &mut sched, &strategy, &x0, 1 << n, false).unwrap();
                    assert!(out.won, "leaves={leaves} perm={perm:?} x0={x0}");
                }
            }
        }
    }

    #[test]
    fn star_strategy_zero_start_stays_zero() {
        let g = Family::Star.generate(3).unwrap();
        let strategy = LuckStrategy::star_for_graph(&g).unwrap();
        let mut sched = node_perm_scheduler(&g, &[0, 1, 2, 3], 2);
        let out = play_game(
            &g,
            &mut sched,
            &strategy,
            &Configuration::zeros(4),
            4,
            false,
        )
        .unwrap();
        assert!(out.won);
        assert_eq!(out.rounds_used, 0);
    }

    #[test]
    fn star_zero_prefix_is_monotone_at_round_boundaries() {
        // The zero prefix of leaves (in round order) never shrinks across
        // a round, with one unavoidable exception: a round starting with
        // the center defecting while every leaf cooperates, where any
        // center play must poison a leaf.
        let g = Family::Star.generate(4).unwrap();
        let n = g.n();
        let perm = vec![0, 4, 2, 3, 1];
        let strategy = LuckStrategy::star_for_graph(&g).unwrap();
        // Leaf round order after the center: 4, 2, 3, 1.
        let order = [4usize, 2, 3, 1];
        for mask in 0..1u64 << n {
            let x0 = Configuration::from_mask(mask, n);
            let mut sched = node_perm_scheduler(&g, &perm, 3);
            let mut strat = strategy.clone();
            strat.bind_node_order(&perm);
            let mut clock = RoundClock::new(1, n);
            let mut x = x0.clone();
            let mut last_prefix = 0usize;
            for step in 0..(1 << n) * n {
                if x.is_zero() {
                    break;
                }
                if step % n == 0 {
                    let prefix = order.iter().take_while(|&&l| !x.get(l)).count();
                    let exempt = x.get(0) && prefix == order.len();
                    assert!(
                        exempt || prefix >= last_prefix,
                        "prefix shrank from {last_prefix} to {prefix} (x0={x0})"
                    );
                    last_prefix = if exempt { 0 } else { prefix };
                }
                let d = sched.next_decision(&g, &x).unwrap();
                let Decision::Node(u) = d else { unreachable!() };
                let p = strat.choose_partner(&g, &x, u, &clock).unwrap();
                x.play_unchecked(u, p);
                clock.advance();
            }
        }
    }

    #[test]
    fn matching_strategy_zeroes_l4_in_one_round() {
        let g = Family::Line.generate(4).unwrap();
        let m = perfect_matching(&g).unwrap();
        let strategy = LuckStrategy::matching(&m).unwrap();
        for perm in (0..4usize).permutations(4) {
            for mask in 0..16u64 {
                let x0 = Configuration::from_mask(mask, 4);
                let mut sched = node_perm_scheduler(&g, &perm, 4);
                let out = play_game(&g, &mut sched, &strategy, &x0, 1, false).unwrap();
                assert!(out.won, "perm={perm:?} mask={mask}");
                assert!(out.rounds_used <= 1);
            }
        }
    }

    #[test]
    fn matching_strategy_errors_on_uncovered_nodes() {
        let g = Family::Line.generate(3).unwrap();
        let strategy = LuckStrategy::matching_from_pairs(&[(0, 1)]).unwrap();
        let mut sched = node_perm_scheduler(&g, &[2, 0, 1], 5);
        let err =
            play_game(&g, &mut sched, &strategy, &Configuration::ones(3), 1, false).unwrap_err();
        assert!(matches!(err, StrategyError::Uncovered(2)));
    }

    #[test]
    fn line_strategy_zeroes_l7_within_two_rounds() {
        let g = Family::Line.generate(7).unwrap();
        let strategy = LuckStrategy::line(&[0, 1, 2, 3, 4, 5, 6]).unwrap();
        let perm: Vec<usize> = (0..7).collect();
        for mask in 0..1u64 << 7 {
            let x0 = Configuration::from_mask(mask, 7);
            let mut sched = node_perm_scheduler(&g, &perm, 6);
            let out = play_game(&g, &mut sched, &strategy, &x0, 2, false).unwrap();
            assert!(out.won, "mask={mask}");
        }
    }

    #[test]
    fn star_center_clears_the_first_defecting_leaf() {
        // Center at 1 with leaves (1, 0, 0): the center plays leaf 1 and
        // both drop to 0; leaf 1's own scheduling then changes nothing.
        let g = Family::Star.generate(3).unwrap();
        let mut strat = LuckStrategy::star_for_graph(&g).unwrap();
        strat.bind_node_order(&[0, 1, 2, 3]);
        let clock = RoundClock::new(1, 4);
        let mut x = Configuration::parse("1100").unwrap();
        let partner = strat.choose_partner(&g, &x, 0, &clock).unwrap();
        assert_eq!(partner, 1);
        x.play_unchecked(0, partner);
        assert_eq!(x.to_string(), "0000");
        let p1 = strat.choose_partner(&g, &x, 1, &clock).unwrap();
        assert_eq!(p1, 0);
        x.play_unchecked(1, p1);
        assert_eq!(x.to_string(), "0000");
    }

    #[test]
    fn line_strategy_wins_under_random_2fair_traces() {
        use crate::schedulers::SchedulerSpec;
        use crate::verify::InitialCondition;
        let g = Family::Line.generate(9).unwrap();
        let strategy = LuckStrategy::line(&[0, 1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        for seed in 0..10u64 {
            for trial in 0..50u64 {
                let mut sched = SchedulerSpec::ShuffledNode.build(&g, seed, trial).unwrap();
                let x0 = InitialCondition::RandomNonzero.sample(9, seed, 1000 + trial);
                let out = play_game(&g, &mut sched, &strategy, &x0, 2, false).unwrap();
                assert!(out.won, "seed {seed} trial {trial} x0 {x0}");
                assert!(out.rounds_used <= 2);
            }
        }
    }

    #[test]
    fn line_strategy_rejects_even_paths() {
        assert!(LuckStrategy::line(&[0, 1, 2, 3, 4, 5, 6, 7]).is_err());
        assert!(LuckStrategy::line(&[0, 1, 2, 3, 4]).is_err());
    }

    #[test]
    fn composed_single_part_behaves_like_the_inner_strategy() {
        let g = Family::Line.generate(4).unwrap();
        let m = perfect_matching(&g).unwrap();
        let inner = LuckStrategy::matching(&m).unwrap();
        let composed = LuckStrategy::compose(vec![(vec![0, 1, 2, 3], inner.clone())]).unwrap();
        let x0 = Configuration::parse("1011").unwrap();
        let run = |strategy: &LuckStrategy| {
            let mut sched = node_perm_scheduler(&g, &[2, 0, 3, 1], 7);
            play_game(&g, &mut sched, strategy, &x0, 4, true)
                .unwrap()
                .played
                .unwrap()
        };
        assert_eq!(run(&inner), run(&composed));
    }

    #[test]
    fn extra_edges_never_change_the_trajectory() {
        // Adding a chord leaves the matching strategy's play identical.
        let l4 = Family::Line.generate(4).unwrap();
        let with_chord = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let m = perfect_matching(&l4).unwrap();
        let strategy = LuckStrategy::matching(&m).unwrap();
        let x0 = Configuration::parse("0111").unwrap();
        let run = |g: &Graph| {
            let mut sched = node_perm_scheduler(g, &[3, 1, 0, 2], 8);
            play_game(g, &mut sched, &strategy, &x0, 4, true)
                .unwrap()
                .played
                .unwrap()
        };
        assert_eq!(run(&l4), run(&with_chord));
    }

    #[test]
    fn tree_strategy_wins_on_small_trees() {
        use crate::graph::trees_up_to_iso;
        for tree in trees_up_to_iso(5) {
            let n = tree.n();
            let strategy = LuckStrategy::for_tree(&tree).unwrap();
            for perm in (0..n).permutations(n).take(24) {
                for mask in 0..1u64 << n {
                    let x0 = Configuration::from_mask(mask, n);
                    let mut sched = node_perm_scheduler(&tree, &perm, 9);
                    let out = play_game(&tree, &mut sched, &strategy, &x0, 2 << n, false).unwrap();
                    assert!(out.won, "tree={tree:?} perm={perm:?} x0={x0}");
                }
            }
        }
    }

    #[test]
    fn random_graph_strategy_routes() {
        let even = Family::Line.generate(8).unwrap();
        assert!(matches!(
            LuckStrategy::for_random_graph(&even),
            Some(LuckStrategy::Matching(_))
        ));
        let l7 = Family::Line.generate(7).unwrap();
        assert!(matches!(
            LuckStrategy::for_random_graph(&l7),
            Some(LuckStrategy::Line(_))
        ));
        let l9 = Family::Line.generate(9).unwrap();
        assert!(matches!(
            LuckStrategy::for_random_graph(&l9),
            Some(LuckStrategy::Composed(_))
        ));
        // No perfect matching on two disjoint odd components.
        let odd = Graph::new(2, &[]).unwrap();
        assert!(LuckStrategy::for_random_graph(&odd).is_none());
    }

    #[test]
    fn play_game_rejects_edge_schedulers() {
        let g = Family::Line.generate(4).unwrap();
        let mut sched = periodic_scheduler(
            &g,
            SchedulerKind::Edge,
            &[0, 1, 2],
            stream(1, Purpose::Scheduler, 0),
        )
        .unwrap();
        let strategy = LuckStrategy::matching(&perfect_matching(&g).unwrap()).unwrap();
        assert!(matches!(
            play_game(&g, &mut sched, &strategy, &Configuration::ones(4), 1, false),
            Err(StrategyError::EdgeScheduler)
        ));
    }

    #[test]
    fn solver_confirms_luck_wins_on_stars() {
        let g = Family::Star.generate(3).unwrap();
        for perm in (0..4usize).permutations(4) {
            let sched = node_perm_scheduler(&g, &perm, 10);
            let out = solve_luck_game(&g, &sched, &Configuration::ones(4), None).unwrap();
            assert!(out.luck_wins, "perm={perm:?}");
            assert!(out.witness.is_some());
        }
    }

    #[test]
    fn solver_on_single_edge() {
        let g = Family::Line.generate(2).unwrap();
        let sched = node_perm_scheduler(&g, &[0, 1], 11);
        let out = solve_luck_game(&g, &sched, &Configuration::parse("10").unwrap(), None).unwrap();
        assert!(out.luck_wins);
    }

    #[test]
    fn solver_k3_adaptive_daemon_beats_every_strategy() {
        let g = Family::Complete.generate(3).unwrap();
        let sched = Scheduler::K3Adaptive(K3Adaptive::new(0));
        let out = solve_luck_game(&g, &sched, &Configuration::ones(3), None).unwrap();
        assert!(!out.luck_wins);
        assert!(out.witness.is_none());
    }

    #[test]
    fn solver_agrees_with_played_strategies() {
        use crate::graph::trees_up_to_iso;
        let mut instances = 0;
        for tree in trees_up_to_iso(5) {
            let n = tree.n();
            let strategy = LuckStrategy::for_tree(&tree).unwrap();
            for perm in (0..n).permutations(n).take(4) {
                for mask in (0..1u64 << n).step_by(3) {
                    let x0 = Configuration::from_mask(mask, n);
                    let mut sched = node_perm_scheduler(&tree, &perm, 12);
                    let played =
                        play_game(&tree, &mut sched, &strategy, &x0, 2 << n, false).unwrap();
                    let solver_sched = node_perm_scheduler(&tree, &perm, 12);
                    let solved = solve_luck_game(&tree, &solver_sched, &x0, None).unwrap();
                    assert!(solved.luck_wins);
                    assert!(played.won);
                    instances += 1;
                }
            }
        }
        assert!(instances >= 100);
    }

    #[test]
    fn solver_rejects_large_instances() {
        let g = Family::Cycle.generate(9).unwrap();
        let sched = node_perm_scheduler(&g, &(0..9).collect::<Vec<_>>(), 13);
        assert!(matches!(
            solve_luck_game(&g, &sched, &Configuration::ones(9), None),
            Err(StrategyError::Budget(_))
        ));
    }

    #[test]
    fn matching_windows_zero_under_bfair_traces() {
        // After any window of a b-fair trace that schedules every covered
        // node at least once, all covered labels are 0; measured with
        // round-clock windows on shuffled-permutation traces.
        use crate::schedulers::SchedulerSpec;
        for (n, b) in [(4usize, 2u32), (6, 2), (8, 2), (8, 3)] {
            let g = Family::Line.generate(n).unwrap();
            let m = perfect_matching(&g).unwrap();
            let strategy = LuckStrategy::matching(&m).unwrap();
            for seed in 0..10u64 {
                let mut sched = SchedulerSpec::ShuffledNode.build(&g, seed, 0).unwrap();
                let mut strat = strategy.clone();
                let clock_template = RoundClock::new(b, n);
                let window = clock_template.round_len();
                let mut x = Configuration::ones(n);
                let mut scheduled: Vec<usize> = Vec::new();
                let mut clock = clock_template;
                for step in 1..=4 * window {
                    let Decision::Node(u) = sched.next_decision(&g, &x).unwrap() else {
                        unreachable!()
                    };
                    let p = strat.choose_partner(&g, &x, u, &clock).unwrap();
                    x.play_unchecked(u, p);
                    clock.advance();
                    scheduled.push(u);
                    if step >= window {
                        let covered_all = (0..n).all(|v| scheduled[step - window..].contains(&v));
                        if covered_all {
                            assert!(
                                x.is_zero(),
                                "n={n} b={b} seed={seed}: nonzero after a full window"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn iterated_differences_match_the_binomial_forms() {
        // The star recurrence with the center pinned at 0 is Y_{t+1} =
        // B·Y_t over GF(2). The leaf sums S_t and their iterated
        // differences then follow binomial closed forms, and the
        // (n-1-j0)-th difference is constantly 1 when j0 is the first
        // defecting leaf.
        use crate::gf2::{binomial, lower_triangular_power};
        use num_integer::Integer;
        let parity = |b: &num_bigint::BigInt| b.is_odd();
        for n in 1..=10usize {
            for start in 1..1u64 << n.min(10) {
                let y0: Vec<bool> = (0..n).map(|j| start >> j & 1 == 1).collect();
                // S_t by direct GF(2) iteration of the recurrence.
                let mut y = y0.clone();
                let mut sums = vec![y.iter().filter(|&&b| b).count() % 2 == 1];
                for _ in 0..20 {
                    let next: Vec<bool> = (0..n)
                        .map(|i| y.iter().take(i + 1).fold(false, |acc, &b| acc ^ b))
                        .collect();
                    y = next;
                    sums.push(y.iter().filter(|&&b| b).count() % 2 == 1);
                }
                // Cross-check the iteration against integer powers of B.
                for t in [1usize, 5, 20] {
                    let bt = lower_triangular_power(n, t);
                    let mut s = false;
                    for i in 0..n {
                        for (j, &bit) in y0.iter().enumerate() {
                            if bit && parity(bt.get(i, j)) {
                                s = !s;
                            }
                        }
                    }
                    assert_eq!(s, sums[t], "n={n} start={start} t={t}");
                }
                // Iterated differences vs the closed form
                // Δ^k S_t = Σ_j C(n-1-j+t, t+k) y_j (mod 2).
                let mut diff = sums.clone();
                for k in 0..=n.min(4) {
                    for (t, &d) in diff.iter().enumerate().take(16) {
                        let mut expect = false;
                        for (j, &bit) in y0.iter().enumerate() {
                            if bit && parity(&binomial(n - 1 - j + t, t + k)) {
                                expect = !expect;
                            }
                        }
                        assert_eq!(d, expect, "n={n} start={start} k={k} t={t}");
                    }
                    diff = diff.windows(2).map(|w| w[0] ^ w[1]).collect();
                }
                // The punchline: the (n-1-j0)-th difference is constant 1.
                let j0 = (0..n).find(|&j| y0[j]).unwrap();
                let mut d = sums;
                for _ in 0..n - 1 - j0 {
                    d = d.windows(2).map(|w| w[0] ^ w[1]).collect();
                }
                assert!(d.iter().all(|&b| b), "n={n} start={start}");
            }
        }
    }
}
