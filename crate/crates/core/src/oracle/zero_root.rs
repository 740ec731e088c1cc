//! Message bridge with optimistic root confirmation (target t3).
//!
//! Messages are locked in order, proven (adding their root) and processed
//! against a confirmed root. The zero root can be activated, after which a
//! message with an empty proof is processed without ever being locked.

use super::{tlc_set, tlc_string, tlc_tuple, Step, TransitionSystem};
use crate::trace::Bindings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgStatus {
    None,
    Sent,
    Proven,
    Processed,
}

impl MsgStatus {
    fn tlc(self) -> String {
        tlc_string(match self {
            MsgStatus::None => "none",
            MsgStatus::Sent => "sent",
            MsgStatus::Proven => "proven",
            MsgStatus::Processed => "processed",
        })
    }
}

const ZERO_ROOT: u32 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub locked: i64,
    pub minted: i64,
    /// Sorted, deduplicated.
    pub roots: Vec<u32>,
    /// Indexed by message id - 1.
    pub msgs: Vec<MsgStatus>,
    pub processed: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroRoot {
    pub max_messages: u32,
    pub zero_root_enabled: bool,
}

impl ZeroRoot {
    pub fn new(max_messages: u32) -> Self {
        Self {
            max_messages,
            zero_root_enabled: true,
        }
    }

    /// `no-zero-root` removes the zero-root activation, which is safe.
    pub fn variant(mut self, name: Option<&str>) -> Result<Self, String> {
        match name {
            None | Some("none") => {}
            Some("no-zero-root") => self.zero_root_enabled = false,
            Some(other) => {
                return Err(format!("unknown variant `{other}` (known: none, no-zero-root)"))
            }
        }
        Ok(self)
    }
}

fn add_root(roots: &mut Vec<u32>, root: u32) {
    if let Err(pos) = roots.binary_search(&root) {
        roots.insert(pos, root);
    }
}

impl TransitionSystem for ZeroRoot {
    type State = State;

    fn name(&self) -> &str {
        "t3"
    }

    fn initial_states(&self) -> Vec<State> {
        vec![State {
            locked: 0,
            minted: 0,
            roots: Vec::new(),
            msgs: vec![MsgStatus::None; self.max_messages as usize],
            processed: 0,
        }]
    }

    fn successors(&self, s: &State) -> Vec<(Step, State)> {
        let mut out = Vec::new();
        let room = s.processed < i64::from(self.max_messages);
        for m in 1..=self.max_messages {
            let i = m as usize - 1;
            match s.msgs[i] {
                MsgStatus::None if s.msgs[..i].iter().all(|st| *st != MsgStatus::None) => {
                    let mut n = s.clone();
                    n.locked += 1;
                    n.msgs[i] = MsgStatus::Sent;
                    out.push((Step::with("Lock", m), n));
                }
                MsgStatus::Sent => {
                    let mut n = s.clone();
                    add_root(&mut n.roots, m);
                    n.msgs[i] = MsgStatus::Proven;
                    out.push((Step::with("Prove", m), n));
                }
                MsgStatus::Proven if room && s.roots.binary_search(&m).is_ok() => {
                    let mut n = s.clone();
                    n.msgs[i] = MsgStatus::Processed;
                    n.minted += 1;
                    n.processed += 1;
                    out.push((Step::with("Process", m), n));
                }
                _ => {}
            }
        }
        let zero_active = s.roots.binary_search(&ZERO_ROOT).is_ok();
        if self.zero_root_enabled && !zero_active {
            let mut n = s.clone();
            add_root(&mut n.roots, ZERO_ROOT);
            out.push((Step::new("ActivateZeroRoot"), n));
        }
        if zero_active && room {
            let mut n = s.clone();
            n.minted += 1;
            n.processed += 1;
            out.push((Step::new("ExploitProcessWithoutProof"), n));
        }
        out
    }

    fn type_ok(&self, s: &State) -> bool {
        let max = i64::from(self.max_messages);
        (0..=max).contains(&s.locked)
            && (0..=max).contains(&s.minted)
            && (0..=max).contains(&s.processed)
            && s.roots.iter().all(|r| *r <= self.max_messages)
            && s.msgs.len() == self.max_messages as usize
    }

    fn safety(&self, s: &State) -> bool {
        s.minted <= s.locked
    }

    fn bindings(&self, s: &State) -> Bindings {
        [
            ("locked", s.locked.to_string()),
            ("minted", s.minted.to_string()),
            ("roots", tlc_set(s.roots.iter().copied())),
            ("msgs", tlc_tuple(s.msgs.iter().map(|st| st.tlc()))),
            ("processed", s.processed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
