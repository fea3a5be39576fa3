//! Deterministic simulation of the MPC execution model.
//!
//! Vertices are hashed onto machines; computation advances in supersteps and
//! every [`Cluster::exchange`] is one barrier-separated round. The ledger
//! records how many words each machine received per round.

use serde::Serialize;
use thiserror::Error;

use crate::graph::VertexId;
use crate::rng::mix64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MpcError {
    #[error("cluster needs at least one machine")]
    NoMachines,
    #[error("machine capacity must be at least one word")]
    ZeroCapacity,
    #[error("round {round}: machine {machine} received {words} words, capacity {capacity}")]
    CapacityExceeded { round: usize, machine: usize, words: u64, capacity: u64 },
}

/// Cluster shape. `machine_capacity` is in 64-bit words received per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClusterConfig {
    pub num_machines: usize,
    pub machine_capacity: u64,
    pub enforce_capacity: bool,
}

impl ClusterConfig {
    pub fn new(num_machines: usize, machine_capacity: u64) -> Result<Self, MpcError> {
        if num_machines == 0 {
            return Err(MpcError::NoMachines);
        }
        if machine_capacity == 0 {
            return Err(MpcError::ZeroCapacity);
        }
        Ok(Self { num_machines, machine_capacity, enforce_capacity: false })
    }

    /// Turns capacity overflows into errors instead of ledger entries.
    pub fn strict(mut self) -> Self {
        self.enforce_capacity = true;
        self
    }

    /// Stable machine for `v`: SplitMix64 of the id, reduced modulo the machine count.
    pub fn assign_machine(&self, v: VertexId) -> usize {
        (mix64(v as u64) % self.num_machines as u64) as usize
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { num_machines: 30, machine_capacity: u64::MAX, enforce_capacity: false }
    }
}

/// What a round was spent on; stitching rounds come in request/reply pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    StitchRequest,
    StitchReply,
    BudgetUpdate,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub kind: RoundKind,
    pub messages_sent: u64,
    pub total_words: u64,
    pub max_words_per_machine: u64,
    /// Words received by each machine this round.
    pub machine_words: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub round: usize,
    pub machine: usize,
    pub words: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundLedger {
    rounds: Vec<RoundStats>,
    violations: Vec<Violation>,
}

impl RoundLedger {
    pub fn superstep_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[RoundStats] {
        &self.rounds
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Stitching request/reply pairs count once; every other round counts once.
    pub fn model_rounds(&self) -> usize {
        let stitch =
            self.rounds.iter().filter(|r| matches!(r.kind, RoundKind::StitchRequest | RoundKind::StitchReply)).count();
        stitch.div_ceil(2) + (self.rounds.len() - stitch)
    }

    pub fn max_machine_words(&self) -> u64 {
        self.rounds.iter().map(|r| r.max_words_per_machine).max().unwrap_or(0)
    }

    pub fn count_kind(&self, kind: RoundKind) -> usize {
        self.rounds.iter().filter(|r| r.kind == kind).count()
    }

    pub fn report(&self) -> LedgerReport {
        LedgerReport {
            supersteps: self.superstep_count(),
            model_rounds: self.model_rounds(),
            max_machine_words: self.max_machine_words(),
            violations: self.violations.clone(),
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundSummary {
                    kind: r.kind,
                    messages: r.messages_sent,
                    words: r.total_words,
                    max_machine_words: r.max_words_per_machine,
                })
                .collect(),
        }
    }

    /// Appends another ledger's rounds after this one's (sequential composition).
    pub fn extend(&mut self, other: &RoundLedger) {
        let offset = self.rounds.len();
        self.rounds.extend(other.rounds.iter().cloned());
        self.violations.extend(other.violations.iter().map(|v| Violation { round: v.round + offset, ..*v }));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub kind: RoundKind,
    pub messages: u64,
    pub words: u64,
    pub max_machine_words: u64,
}

/// JSON fragment embedded in run reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerReport {
    pub supersteps: usize,
    pub model_rounds: usize,
    pub max_machine_words: u64,
    pub violations: Vec<Violation>,
    pub rounds: Vec<RoundSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope<T> {
    pub from: VertexId,
    pub to: VertexId,
    /// Position among the sender's messages this round.
    pub seq: u32,
    pub words: u32,
    pub payload: T,
}

/// Messages produced during one superstep.
#[derive(Debug)]
pub struct Outbox<T> {
    n: usize,
    next_seq: Vec<u32>,
    messages: Vec<Envelope<T>>,
    words: u64,
}

impl<T> Outbox<T> {
    /// Outbox for a graph with `n` vertices.
    pub fn new(n: usize) -> Self {
        Self { n, next_seq: vec![0; n], messages: Vec::new(), words: 0 }
    }

    pub fn send(&mut self, from: VertexId, to: VertexId, words: u32, payload: T) {
        debug_assert!((to as usize) < self.n);
        let seq = &mut self.next_seq[from as usize];
        self.messages.push(Envelope { from, to, seq: *seq, words, payload });
        *seq += 1;
        self.words += words as u64;
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn total_words(&self) -> u64 {
        self.words
    }
}

/// Delivered messages grouped by destination, each group sorted by `(from, seq)`.
#[derive(Debug)]
pub struct Inbox<T> {
    offsets: Vec<usize>,
    messages: Vec<Envelope<T>>,
}

impl<T> Inbox<T> {
    pub fn for_vertex(&self, v: VertexId) -> &[Envelope<T>] {
        let v = v as usize;
        &self.messages[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn total_words(&self) -> u64 {
        self.messages.iter().map(|m| m.words as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Envelope<T>> {
        self.messages.iter()
    }
}

/// Simulated cluster: configuration plus the running ledger.
#[derive(Debug, Clone)]
pub struct Cluster {
    config: ClusterConfig,
    ledger: RoundLedger,
}

impl Cluster {
    pub fn new(config: ClusterConfig) -> Self {
        Self { config, ledger: RoundLedger::default() }
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> RoundLedger {
        self.ledger
    }

    /// One superstep: delivers every message, appends a ledger round, checks capacity.
    pub fn exchange<T>(&mut self, kind: RoundKind, outbox: Outbox<T>) -> Result<Inbox<T>, MpcError> {
        let n = outbox.n;
        let mut counts = vec![0usize; n + 1];
        for m in &outbox.messages {
            counts[m.to as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut machine_words = vec![0u64; self.config.num_machines];
        let total_words = outbox.words;
        let messages_sent = outbox.messages.len() as u64;

        // Stable counting sort by destination.
        let mut slots: Vec<Option<Envelope<T>>> = Vec::with_capacity(outbox.messages.len());
        slots.resize_with(outbox.messages.len(), || None);
        let mut cursor = counts;
        for m in outbox.messages {
            machine_words[self.config.assign_machine(m.to)] += m.words as u64;
            let slot = &mut cursor[m.to as usize];
            slots[*slot] = Some(m);
            *slot += 1;
        }
        let mut messages: Vec<Envelope<T>> = slots.into_iter().map(|m| m.expect("every slot filled")).collect();
        for v in 0..n {
            let group = &mut messages[offsets[v]..offsets[v + 1]];
            if group.windows(2).any(|w| (w[0].from, w[0].seq) > (w[1].from, w[1].seq)) {
                group.sort_by_key(|m| (m.from, m.seq));
            }
        }

        let round = self.ledger.rounds.len();
        let max_words_per_machine = machine_words.iter().copied().max().unwrap_or(0);
        let mut first_violation = None;
        for (machine, &words) in machine_words.iter().enumerate() {
            if words > self.config.machine_capacity {
                self.ledger.violations.push(Violation { round, machine, words });
                first_violation.get_or_insert(MpcError::CapacityExceeded {
                    round,
                    machine,
                    words,
                    capacity: self.config.machine_capacity,
                });
            }
        }
        self.ledger.rounds.push(RoundStats { kind, messages_sent, total_words, max_words_per_machine, machine_words });
        if let (true, Some(err)) = (self.config.enforce_capacity, first_violation) {
            return Err(err);
        }
        Ok(Inbox { offsets, messages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cluster(machines: usize, capacity: u64) -> Cluster {
        Cluster::new(ClusterConfig::new(machines, capacity).unwrap())
    }

    #[test]
    fn config_validation() {
        assert_eq!(ClusterConfig::new(0, 1), Err(MpcError::NoMachines));
        assert_eq!(ClusterConfig::new(1, 0), Err(MpcError::ZeroCapacity));
    }

    #[test]
    fn single_machine_takes_everything() {
        let cfg = ClusterConfig::new(1, 10).unwrap();
        assert!((0..1000).all(|v| cfg.assign_machine(v) == 0));
    }

    #[test]
    fn assignment_is_stable_and_balanced() {
        let cfg = ClusterConfig::new(10, 1).unwrap();
        assert_eq!(cfg.assign_machine(12345), cfg.assign_machine(12345));
        let mut load = [0usize; 10];
        for v in 0..1000 {
            load[cfg.assign_machine(v)] += 1;
        }
        assert!(load.iter().all(|&c| (50..=150).contains(&c)), "{load:?}");
    }

    #[test]
    fn assignment_is_pinned() {
        // Cross-platform stability: these values must never change.
        let cfg = ClusterConfig::new(7, 1).unwrap();
        let got: Vec<usize> = (0..8).map(|v| cfg.assign_machine(v)).collect();
        assert_eq!(got, vec![2, 2, 4, 2, 6, 3, 3, 2]);
        assert_eq!(mix64(1), 0x910A_2DEC_8902_5CC1);
    }

    #[test]
    fn empty_outbox_still_costs_a_round() {
        let mut c = cluster(3, 100);
        let inbox = c.exchange::<()>(RoundKind::Other, Outbox::new(4)).unwrap();
        assert!(inbox.is_empty());
        assert_eq!(c.ledger().superstep_count(), 1);
    }

    #[test]
    fn inbox_is_canonically_ordered() {
        let mut c = cluster(2, 100);
        let mut out = Outbox::new(5);
        out.send(4, 0, 1, "d");
        out.send(2, 0, 1, "b");
        out.send(4, 0, 1, "e");
        out.send(1, 3, 1, "x");
        out.send(2, 0, 1, "c");
        let inbox = c.exchange(RoundKind::Other, out).unwrap();
        let got: Vec<_> = inbox.for_vertex(0).iter().map(|m| (m.from, m.seq, m.payload)).collect();
        assert_eq!(got, vec![(2, 0, "b"), (2, 1, "c"), (4, 0, "d"), (4, 1, "e")]);
        assert_eq!(inbox.for_vertex(3).len(), 1);
        assert!(inbox.for_vertex(1).is_empty());
    }

    #[test]
    fn strict_overflow_names_machine() {
        let cfg = ClusterConfig::new(2, 10).unwrap().strict();
        let mut c = Cluster::new(cfg);
        let mut out = Outbox::new(3);
        out.send(0, 1, 11, ());
        let err = c.exchange(RoundKind::Other, out).unwrap_err();
        assert_eq!(
            err,
            MpcError::CapacityExceeded { round: 0, machine: cfg.assign_machine(1), words: 11, capacity: 10 }
        );
        assert_eq!(c.ledger().violations().len(), 1);
    }

    #[test]
    fn lenient_overflow_is_only_recorded() {
        let mut c = cluster(1, 10);
        let mut out = Outbox::new(2);
        out.send(0, 1, 6, ());
        out.send(1, 1, 6, ());
        assert!(c.exchange(RoundKind::Other, out).is_ok());
        assert_eq!(c.ledger().violations(), &[Violation { round: 0, machine: 0, words: 12 }]);
        assert!(!c.ledger().report().violations.is_empty());
    }

    #[test]
    fn report_counts() {
        let c = cluster(2, 5);
        let r = c.ledger().report();
        assert_eq!((r.supersteps, r.rounds.len()), (0, 0));
        let mut c = c;
        for kind in [RoundKind::StitchRequest, RoundKind::StitchReply, RoundKind::BudgetUpdate] {
            c.exchange::<()>(kind, Outbox::new(1)).unwrap();
        }
        let r = c.ledger().report();
        assert_eq!(r.supersteps, 3);
        assert_eq!(r.model_rounds, 2);
    }

    proptest! {
        #[test]
        fn messages_and_words_are_conserved(
            msgs in proptest::collection::vec((0u32..20, 0u32..20, 1u32..9), 0..200),
            machines in 1usize..6,
        ) {
            let mut c = cluster(machines, u64::MAX);
            let mut out = Outbox::new(20);
            for (i, &(from, to, w)) in msgs.iter().enumerate() {
                out.send(from, to, w, i);
            }
            let words = out.total_words();
            let inbox = c.exchange(RoundKind::Other, out).unwrap();
            prop_assert_eq!(inbox.len(), msgs.len());
            prop_assert_eq!(inbox.total_words(), words);
            let round = &c.ledger().rounds()[0];
            prop_assert_eq!(round.machine_words.iter().sum::<u64>(), words);
            prop_assert_eq!(round.total_words, words);
            let mut seen: Vec<usize> = inbox.iter().map(|m| m.payload).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..msgs.len()).collect::<Vec<_>>());
            for v in 0..20 {
                let group = inbox.for_vertex(v);
                prop_assert!(group.iter().all(|m| m.to == v));
                prop_assert!(group.windows(2).all(|w| (w[0].from, w[0].seq) < (w[1].from, w[1].seq)));
            }
        }

        #[test]
        fn supersteps_increase_by_one_per_exchange(k in 0usize..20) {
            let mut c = cluster(3, 1);
            for i in 0..k {
                prop_assert_eq!(c.ledger().superstep_count(), i);
                c.exchange::<()>(RoundKind::Other, Outbox::new(1)).unwrap();
            }
            prop_assert_eq!(c.ledger().superstep_count(), k);
        }
    }
}
