//! Lock-and-mint bridge over a reorg-prone source chain (targets t1, t2).
//!
//! Variables: `locked`, `minted`, the relay `queue` of deposit ids and a
//! per-deposit `status`. Deposits are locked in id order.
//!
//! - t1: a reorg reverts a pending deposit but leaves its message queued;
//!   the relay mints for any head message that is no longer pending.
//! - t2: a reorg drops the message from the queue, but the relay mints
//!   without waiting for finality.

use super::{tlc_string, tlc_tuple, Step, TransitionSystem};
use crate::trace::Bindings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    None,
    Pending,
    Final,
    Reverted,
}

impl Status {
    fn tlc(self) -> String {
        tlc_string(match self {
            Status::None => "none",
            Status::Pending => "pending",
            Status::Final => "final",
            Status::Reverted => "reverted",
        })
    }
}

/// What the relay requires of the head message's deposit before minting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MintGuard {
    /// No check at all.
    Unguarded,
    /// The deposit is not pending (a reverted one passes).
    NotPending,
    /// The deposit is final.
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub locked: i64,
    pub minted: i64,
    pub queue: Vec<u32>,
    /// Indexed by deposit id - 1.
    pub status: Vec<Status>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockMint {
    name: &'static str,
    pub max_tokens: u32,
    /// Whether a reorg leaves the reverted deposit's message queued.
    pub reorg_keeps_message: bool,
    pub mint_guard: MintGuard,
    pub reorg_enabled: bool,
}

impl LockMint {
    pub fn t1(max_tokens: u32) -> Self {
        Self {
            name: "t1",
            max_tokens,
            reorg_keeps_message: true,
            mint_guard: MintGuard::NotPending,
            reorg_enabled: true,
        }
    }

    pub fn t2(max_tokens: u32) -> Self {
        Self {
            name: "t2",
            max_tokens,
            reorg_keeps_message: false,
            mint_guard: MintGuard::Unguarded,
            reorg_enabled: true,
        }
    }

    /// Applies a named variant: `no-reorg` removes the reorg action,
    /// `finality-check` makes the relay wait for finality. Both are safe.
    pub fn variant(mut self, name: Option<&str>) -> Result<Self, String> {
        match name {
            None | Some("none") => {}
            Some("no-reorg") => self.reorg_enabled = false,
            Some("finality-check") => self.mint_guard = MintGuard::Final,
            Some(other) => {
                return Err(format!(
                    "unknown variant `{other}` (known: none, no-reorg, finality-check)"
                ))
            }
        }
        Ok(self)
    }

    fn deposits(&self) -> impl Iterator<Item = u32> {
        1..=self.max_tokens
    }
}

impl TransitionSystem for LockMint {
    type State = State;

    fn name(&self) -> &str {
        self.name
    }

    fn initial_states(&self) -> Vec<State> {
        vec![State {
            locked: 0,
            minted: 0,
            queue: Vec::new(),
            status: vec![Status::None; self.max_tokens as usize],
        }]
    }

    fn successors(&self, s: &State) -> Vec<(Step, State)> {
        let mut out = Vec::new();
        for d in self.deposits() {
            let i = d as usize - 1;
            if s.status[i] == Status::None && s.status[..i].iter().all(|st| *st != Status::None) {
                let mut n = s.clone();
                n.locked += 1;
                n.queue.push(d);
                n.status[i] = Status::Pending;
                out.push((Step::with("Lock", d), n));
            }
            if s.status[i] == Status::Pending {
                let mut n = s.clone();
                n.status[i] = Status::Final;
                out.push((Step::with("Finalize", d), n));

                if self.reorg_enabled {
                    let mut n = s.clone();
                    n.locked -= 1;
                    n.status[i] = Status::Reverted;
                    if !self.reorg_keeps_message {
                        n.queue.retain(|x| *x != d);
                    }
                    out.push((Step::with("Reorg", d), n));
                }
            }
        }
        if let Some(&head) = s.queue.first() {
            let head_status = s.status[head as usize - 1];
            let allowed = match self.mint_guard {
                MintGuard::Unguarded => true,
                MintGuard::NotPending => head_status != Status::Pending,
                MintGuard::Final => head_status == Status::Final,
            };
            if allowed && s.minted < i64::from(self.max_tokens) {
                let mut n = s.clone();
                n.minted += 1;
                n.queue.remove(0);
                out.push((Step::new("RelayMint"), n));
            }
        }
        out
    }

    fn type_ok(&self, s: &State) -> bool {
        let max = i64::from(self.max_tokens);
        (0..=max).contains(&s.locked)
            && (0..=max).contains(&s.minted)
            && s.queue.len() <= self.max_tokens as usize
            && s.queue.iter().all(|d| (1..=self.max_tokens).contains(d))
            && s.status.len() == self.max_tokens as usize
    }

    fn safety(&self, s: &State) -> bool {
        s.minted <= s.locked
    }

    fn bindings(&self, s: &State) -> Bindings {
        [
            ("locked", s.locked.to_string()),
            ("minted", s.minted.to_string()),
            ("queue", tlc_tuple(s.queue.iter().map(u32::to_string))),
            ("status", tlc_tuple(s.status.iter().map(|st| st.tlc()))),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
