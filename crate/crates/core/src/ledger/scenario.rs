//! JSON scenario scripts for the simulator.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "backend": "toy",
//!   "tik_period": 10,
//!   "events": [
//!     {"op": "register_user", "id": "alice"},
//!     {"op": "register_provider", "id": "shop"},
//!     {"op": "designate", "user": "alice", "provider": "shop"},
//!     {"op": "submit_bundle", "user": "alice", "due_tick": 10,
//!      "items": [{"id": "a1", "payee": "shop", "amount": 100}]},
//!     {"op": "mine"},
//!     {"op": "redact", "provider": "shop", "id": "a1", "amount": 40, "expect": "label-mismatch"},
//!     {"op": "advance", "ticks": 10},
//!     {"op": "redact", "provider": "shop", "id": "a1", "amount": 40}
//!   ]
//! }
//! ```
//!
//! A `redact` event's `expect` is `ok` (default) or a failure code such as
//! `label-mismatch`, `trapdoor-mismatch`, `aux-check`, `subset-check` or
//! `rejected`. A mismatch between expectation and outcome is recorded as a
//! scenario failure; any other error aborts the run.

use serde::{Deserialize, Serialize};

use super::chain::{ChainDump, LedgerTx, Target, DEFAULT_DIFFICULTY};
use super::sim::{SimError, Simulator};
use crate::group::{BackendKind, Bls12Backend, PairingBackend, ToyBackend};
use crate::protocol::TxPayload;

fn default_bound() -> usize {
    8
}
fn default_period() -> u64 {
    10
}
fn default_difficulty() -> u64 {
    DEFAULT_DIFFICULTY
}
fn default_max_txs() -> usize {
    usize::MAX
}
fn default_expect() -> String {
    "ok".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default = "default_bound")]
    pub bound: usize,
    #[serde(default = "default_period")]
    pub tik_period: u64,
    #[serde(default = "default_difficulty")]
    pub difficulty: u64,
    pub events: Vec<Event>,
}

fn default_backend() -> BackendKind {
    BackendKind::Toy
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleItem {
    pub id: String,
    pub payee: String,
    pub amount: u64,
    #[serde(default)]
    pub memo: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    RegisterUser {
        id: String,
    },
    RegisterProvider {
        id: String,
    },
    Designate {
        user: String,
        provider: String,
    },
    SubmitBundle {
        user: String,
        due_tick: u64,
        items: Vec<BundleItem>,
    },
    SubmitOrdinary {
        sender: String,
        id: String,
        payee: String,
        amount: u64,
    },
    Mine {
        #[serde(default = "default_max_txs")]
        max_txs: usize,
    },
    Advance {
        ticks: u64,
    },
    Redact {
        provider: String,
        id: String,
        #[serde(default)]
        amount: Option<u64>,
        #[serde(default)]
        payee: Option<String>,
        #[serde(default)]
        memo: Option<String>,
        #[serde(default = "default_expect")]
        expect: String,
    },
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trace: Vec<String>,
    /// Redactions whose outcome differed from the script's expectation.
    pub failures: Vec<String>,
    pub chain_valid: bool,
    pub dump: ChainDump,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.chain_valid
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn run(&self) -> Result<ScenarioOutcome, SimError> {
        match self.backend {
            BackendKind::Toy => self.run_with(ToyBackend::large()),
            BackendKind::Production => self.run_with(Bls12Backend),
        }
    }

    pub fn run_with<B: PairingBackend>(&self, backend: B) -> Result<ScenarioOutcome, SimError> {
        let mut sim = Simulator::new(
            backend,
            self.bound,
            self.tik_period,
            Target::from_difficulty(self.difficulty),
            self.seed,
        )?;
        let mut failures = Vec::new();
        for (step, event) in self.events.iter().enumerate() {
            match event {
                Event::RegisterUser { id } => sim.register_user(id)?,
                Event::RegisterProvider { id } => sim.register_provider(id)?,
                Event::Designate { user, provider } => sim.designate(user, provider)?,
                Event::SubmitBundle {
                    user,
                    due_tick,
                    items,
                } => {
                    let items: Vec<(String, TxPayload)> = items
                        .iter()
                        .map(|it| {
                            (
                                it.id.clone(),
                                TxPayload::new(it.payee.clone(), it.amount, *due_tick)
                                    .with_memo(it.memo.as_bytes().to_vec()),
                            )
                        })
                        .collect();
                    sim.submit_bundle(user, *due_tick, &items)?;
                }
                Event::SubmitOrdinary {
                    sender,
                    id,
                    payee,
                    amount,
                } => {
                    let payload = TxPayload::new(payee.clone(), *amount, sim.clock.tick());
                    sim.submit_ordinary(sender, id, &payload)?;
                }
                Event::Mine { max_txs } => {
                    sim.mine(*max_txs)?;
                }
                Event::Advance { ticks } => {
                    sim.advance(*ticks);
                }
                Event::Redact {
                    provider,
                    id,
                    amount,
                    payee,
                    memo,
                    expect,
                } => {
                    let current = match sim.node.find(id) {
                        Some(LedgerTx::Redactable(t)) => t.payload.clone(),
                        _ => {
                            failures.push(format!(
                                "step {step}: {id} is not an on-chain deferred transaction"
                            ));
                            continue;
                        }
                    };
                    let mut next = current;
                    if let Some(a) = amount {
                        next.amount = *a;
                    }
                    if let Some(p) = payee {
                        next.payee = p.clone();
                    }
                    if let Some(m) = memo {
                        next.memo = m.as_bytes().to_vec();
                    }
                    let got = match sim.redact(provider, id, next) {
                        Ok(()) => "ok",
                        Err(e) => e.code(),
                    };
                    if got != expect {
                        failures.push(format!(
                            "step {step}: redact {id} expected {expect}, got {got}"
                        ));
                    }
                }
            }
        }
        Ok(ScenarioOutcome {
            trace: sim.trace().to_vec(),
            failures,
            chain_valid: sim.node.validate_chain().is_ok(),
            dump: sim.dump(),
        })
    }
}
