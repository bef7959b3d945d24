//! The XOR edge update, trajectories, and reachability predicates.
//!
//! Playing an edge replaces both endpoint labels with their XOR. A label 1
//! reads as defection, 0 as cooperation; the all-zeros configuration is the
//! unique fixed point of every connected system and is absorbing.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("edge ({0}, {1}) is not in the graph")]
    NotAnEdge(usize, usize),
    #[error("configuration length {0} does not match vertex count {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration string: {0}")]
    BadConfigString(String),
    #[error("exhaustive mode limited to n <= {0}")]
    TooLarge(usize),
}

/// Largest vertex count accepted by the exhaustive (2^n) code paths.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// One bit per vertex, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn zeros(n: usize) -> Self {
        Configuration {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn ones(n: usize) -> Self {
        let mut c = Self::zeros(n);
        for v in 0..n {
            c.set(v, true);
        }
        c
    }

    /// Builds a configuration from the low `n` bits of `mask`
    /// (vertex `v` = bit `v`).
    pub fn from_mask(mask: u64, n: usize) -> Self {
        assert!(n <= 64);
        let mut c = Self::zeros(n);
        if n > 0 {
            c.words[0] = if n == 64 { mask } else { mask & ((1 << n) - 1) };
        }
        c
    }

    /// Parses the text form: a string of `0`/`1`, vertex 0 leftmost.
    pub fn parse(s: &str) -> Result<Self, DynamicsError> {
        let mut c = Self::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => c.set(i, true),
                _ => return Err(DynamicsError::BadConfigString(s.into())),
            }
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize) -> bool {
        debug_assert!(v < self.n);
        self.words[v / 64] >> (v % 64) & 1 == 1
    }

    pub fn set(&mut self, v: usize, value: bool) {
        debug_assert!(v < self.n);
        let w = &mut self.words[v / 64];
        if value {
            *w |= 1 << (v % 64);
        } else {
            *w &= !(1 << (v % 64));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &Configuration) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// The low word, for graphs with at most 64 vertices.
    pub fn as_mask(&self) -> u64 {
        debug_assert!(self.n <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    /// Plays `(u, v)` in place without validating edge membership.
    pub fn play_unchecked(&mut self, u: usize, v: usize) {
        let b = self.get(u) ^ self.get(v);
        self.set(u, b);
        self.set(v, b);
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in 0..self.n {
            write!(f, "{}", if self.get(v) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

/// One trajectory entry: the step index, the edge played, and the resulting
/// configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: usize,
    pub edge: (usize, usize),
    pub after: Configuration,
}

/// Applies one step: both endpoints of `e` receive the XOR of their labels.
pub fn step(
    g: &Graph,
    x: &Configuration,
    e: (usize, usize),
) -> Result<Configuration, DynamicsError> {
    if x.n() != g.n() {
        return Err(DynamicsError::LengthMismatch(x.n(), g.n()));
    }
    if !g.has_edge(e.0, e.1) {
        return Err(DynamicsError::NotAnEdge(e.0, e.1));
    }
    let mut y = x.clone();
    y.play_unchecked(e.0, e.1);
    Ok(y)
}

/// Outcome of [`run`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOutcome {
    pub final_config: Configuration,
    pub steps_taken: usize,
    pub reached_zero: bool,
    pub trajectory: Option<Vec<StepRecord>>,
}

/// Feeds a stream of edges to the dynamics, stopping as soon as the
/// all-zeros configuration is reached (it is absorbing) or after
/// `max_steps`. A schedule that runs dry simply ends the run early.
/// Trajectory logging is opt-in; exhaustive callers leave it off.
pub fn run(
    g: &Graph,
    x0: &Configuration,
    schedule: impl IntoIterator<Item = (usize, usize)>,
    max_steps: usize,
    record: bool,
) -> Result<RunOutcome, DynamicsError> {
    if x0.n() != g.n() {
        return Err(DynamicsError::LengthMismatch(x0.n(), g.n()));
    }
    let mut x = x0.clone();
    let mut trajectory = record.then(Vec::new);
    let mut steps_taken = 0;
    if !x.is_zero() {
        for e in schedule {
            if steps_taken >= max_steps {
                break;
            }
            if !g.has_edge(e.0, e.1) {
                return Err(DynamicsError::NotAnEdge(e.0, e.1));
            }
            x.play_unchecked(e.0, e.1);
            steps_taken += 1;
            if let Some(t) = trajectory.as_mut() {
                t.push(StepRecord {
                    time: steps_taken,
                    edge: e,
                    after: x.clone(),
                });
            }
            if x.is_zero() {
                break;
            }
        }
    }
    Ok(RunOutcome {
        reached_zero: x.is_zero(),
        final_config: x,
        steps_taken,
        trajectory,
    })
}

/// True iff playing any edge changes nothing: every edge sees label 0 on
/// both endpoints. For a graph without isolated vertices this happens only
/// at all-zeros (two defectors on an edge would flip to cooperation).
pub fn is_fixed_point(g: &Graph, x: &Configuration) -> bool {
    g.edges().iter().all(|&(u, v)| !x.get(u) && !x.get(v))
}

/// All pairs `(y, e)` with `y != x` and `step(g, y, e) = x`. An empty
/// result means `x` is a Garden of Eden configuration.
pub fn predecessors(g: &Graph, x: &Configuration) -> Vec<(Configuration, (usize, usize))> {
    let mut out = Vec::new();
    for &(u, v) in g.edges() {
        // A play equalizes the endpoints, so a predecessor via (u, v)
        // exists only when x agrees there; the other labels are forced.
        if x.get(u) != x.get(v) {
            continue;
        }
        let b = x.get(u);
        for (yu, yv) in [(false, b), (true, !b)] {
            let mut y = x.clone();
            y.set(u, yu);
            y.set(v, yv);
            if y != *x {
                out.push((y, (u, v)));
            }
        }
    }
    out
}

/// Result of driving a periodic schedule to absorption or recurrence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeriodicOutcome {
    /// Reached all-zeros after this many steps.
    Stabilized { steps: usize },
    /// Entered a recurrent cycle of this many whole periods.
    Cycled { cycle_periods: usize },
}

impl PeriodicOutcome {
    pub fn stabilizes(&self) -> bool {
        matches!(self, PeriodicOutcome::Stabilized { .. })
    }
}

/// Runs the periodic schedule `period` from `x0` until either all-zeros is
/// reached or the configuration at a period boundary repeats. The state
/// space is finite and the per-period map is fixed, so one of the two
/// happens within 2^n periods.
pub fn periodic_outcome(
    g: &Graph,
    x0: &Configuration,
    period: &[(usize, usize)],
) -> Result<PeriodicOutcome, DynamicsError> {
    assert!(!period.is_empty(), "period must be nonempty");
    if g.n() > EXHAUSTIVE_LIMIT {
        return Err(DynamicsError::TooLarge(EXHAUSTIVE_LIMIT));
    }
    for &(u, v) in period {
        if !g.has_edge(u, v) {
            return Err(DynamicsError::NotAnEdge(u, v));
        }
    }
    if x0.n() != g.n() {
        return Err(DynamicsError::LengthMismatch(x0.n(), g.n()));
    }

    let edges: Vec<(u32, u32)> = period.iter().map(|&(u, v)| (u as u32, v as u32)).collect();
    let mut mask = x0.as_mask();
    let mut steps = 0usize;
    let mut seen: HashSet<u64> = HashSet::new();
    let mut history: Vec<u64> = Vec::new();
    loop {
        if mask == 0 {
            return Ok(PeriodicOutcome::Stabilized { steps });
        }
        if !seen.insert(mask) {
            let prior = history.iter().position(|&h| h == mask).unwrap();
            return Ok(PeriodicOutcome::Cycled {
                cycle_periods: history.len() - prior,
            });
        }
        history.push(mask);
        for &(u, v) in &edges {
            let b = (mask >> u ^ mask >> v) & 1;
            let bits = (1u64 << u) | (1u64 << v);
            if b == 1 {
                mask |= bits;
            } else {
                mask &= !bits;
            }
            steps += 1;
            if mask == 0 {
                return Ok(PeriodicOutcome::Stabilized { steps });
            }
        }
    }
}
