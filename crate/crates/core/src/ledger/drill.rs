//! Randomized end-to-end drills on the simulator.
//!
//! A drill registers a few users, has each submit one bundle, mines it, and
//! then walks the clock forward one period at a time. At every step it tries
//! redactions that must fail (too early, or by a provider nobody designated)
//! and ones that must succeed, and checks that digests, headers and roots
//! never move.

use rand::{Rng, RngCore};

use super::chain::{LedgerTx, Target};
use super::sim::{RedactFailure, Simulator};
use crate::group::PairingBackend;
use crate::protocol::{self, RedactableTransaction, SignerRole, TxPayload};

/// Due ticks drawn by [`DrillPlan::random`]; with a period of 10 they release
/// at 10, 10, 20, 20 and 30.
pub const DRILL_DUE_TICKS: [u64; 5] = [3, 10, 17, 20, 30];

const PERIOD: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrillPlan {
    pub seed: u64,
    /// Per user: bundle size and due tick.
    pub bundles: Vec<(usize, u64)>,
}

impl DrillPlan {
    /// Up to `max_users` users with bundles of at most `max_k`.
    pub fn random(rng: &mut dyn RngCore, max_users: usize, max_k: usize) -> Self {
        let users = rng.gen_range(1..=max_users.max(1));
        Self {
            seed: rng.next_u64(),
            bundles: (0..users)
                .map(|_| {
                    let k = rng.gen_range(1..=max_k.max(1));
                    (k, DRILL_DUE_TICKS[rng.gen_range(0..DRILL_DUE_TICKS.len())])
                })
                .collect(),
        }
    }

    fn max_k(&self) -> usize {
        self.bundles.iter().map(|&(k, _)| k).max().unwrap_or(1)
    }
}

/// Counts of what a passing drill exercised.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DrillStats {
    pub transactions: usize,
    pub redactions: usize,
    pub early_refusals: usize,
    pub undesignated_refusals: usize,
}

fn tx_id(user: usize, j: usize) -> String {
    format!("u{user}-{j}")
}

fn code(r: Result<(), RedactFailure>) -> &'static str {
    match r {
        Ok(()) => "ok",
        Err(e) => e.code(),
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn onchain<B: PairingBackend>(
    sim: &Simulator<B>,
    id: &str,
) -> Result<RedactableTransaction<B>, String> {
    match sim.node.find(id) {
        Some(LedgerTx::Redactable(tx)) => Ok(tx.clone()),
        _ => Err(format!("{id} is not a redactable transaction on chain")),
    }
}

/// Runs `plan` and returns the first violated expectation as an error.
pub fn run_drill<B: PairingBackend>(backend: B, plan: &DrillPlan) -> Result<DrillStats, String> {
    let mut stats = DrillStats::default();
    let mut sim = Simulator::new(backend, plan.max_k(), PERIOD, Target::default(), plan.seed)
        .map_err(|e| e.to_string())?;
    let b = sim.backend().clone();
    let err = |e: super::sim::SimError| e.to_string();
    sim.register_provider("shop").map_err(err)?;
    sim.register_provider("rogue").map_err(err)?;
    for (i, &(k, due)) in plan.bundles.iter().enumerate() {
        let user = format!("u{i}");
        sim.register_user(&user).map_err(err)?;
        sim.designate(&user, "shop").map_err(err)?;
        let items: Vec<_> = (0..k)
            .map(|j| (tx_id(i, j), TxPayload::new("shop", 10 + j as u64, due)))
            .collect();
        sim.submit_bundle(&user, due, &items).map_err(err)?;
        stats.transactions += k;
    }
    for bundle in sim.bundles() {
        let pk = sim.node.user(&bundle.owner).ok_or("owner not registered")?;
        for tx in &bundle.transactions {
            ensure!(
                protocol::verify_transaction(&b, pk, None, tx, Some(&bundle.aggregate)),
                "fresh transaction {} does not verify",
                tx.id
            );
        }
    }
    sim.mine(usize::MAX).map_err(err)?;
    sim.node.validate_chain().map_err(|e| e.to_string())?;
    let mined = sim.dump();
    let anchors = plan
        .bundles
        .iter()
        .enumerate()
        .map(|(i, &(k, _))| {
            (0..k)
                .map(|j| onchain(&sim, &tx_id(i, j)).map(|t| t.h))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>, _>>()?;

    for i in 0..plan.bundles.len() {
        let c = code(sim.redact("shop", &tx_id(i, 0), TxPayload::new("shop", 1, 0)));
        ensure!(
            c == "label-mismatch",
            "redaction before any time key gave {c}"
        );
        stats.early_refusals += 1;
    }
    ensure!(sim.dump() == mined, "a refused redaction changed the chain");

    let shop = sim.provider("shop").ok_or("shop missing")?.public();
    let last = plan
        .bundles
        .iter()
        .map(|&(_, due)| sim.clock.release_tick(due))
        .max()
        .unwrap_or(PERIOD);
    let mut checkpoint = 0;
    while checkpoint < last {
        sim.advance(PERIOD);
        checkpoint += PERIOD;
        for (i, &(k, due)) in plan.bundles.iter().enumerate() {
            let release = sim.clock.release_tick(due);
            if release > checkpoint {
                let c = code(sim.redact("shop", &tx_id(i, k - 1), TxPayload::new("shop", 2, 0)));
                ensure!(
                    c == "label-mismatch",
                    "u{i} redacted at {checkpoint} before {release}: {c}"
                );
                stats.early_refusals += 1;
                continue;
            }
            if release < checkpoint {
                continue;
            }
            let c = code(sim.redact("rogue", &tx_id(i, 0), TxPayload::new("rogue", 999, 0)));
            ensure!(
                c == "trapdoor-mismatch",
                "undesignated provider got {c} on u{i}"
            );
            stats.undesignated_refusals += 1;
            let pk = sim
                .node
                .user(&format!("u{i}"))
                .ok_or("user missing")?
                .clone();
            for (j, anchor) in anchors[i].iter().enumerate() {
                let id = tx_id(i, j);
                let new =
                    TxPayload::new("shop", 5 + j as u64, checkpoint).with_memo(b"final".to_vec());
                let c = code(sim.redact("shop", &id, new.clone()));
                ensure!(c == "ok", "designated redaction of {id} gave {c}");
                let tx = onchain(&sim, &id)?;
                ensure!(tx.h == *anchor, "digest of {id} moved");
                ensure!(
                    tx.payload == new && tx.signer == SignerRole::Provider,
                    "{id} not rewritten"
                );
                ensure!(
                    protocol::verify_transaction(&b, &pk, Some(&shop), &tx, None),
                    "redacted {id} does not verify"
                );
                stats.redactions += 1;
            }
        }
    }

    sim.node.validate_chain().map_err(|e| e.to_string())?;
    ensure!(
        sim.dump().skeleton() == mined.skeleton(),
        "headers or roots changed"
    );
    Ok(stats)
}
