//! The whole system in one process: CA, time server, users, providers and a
//! miner, driven by explicit calls on a simulated clock.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::chain::{dump_chain, ChainDump, LedgerTx, Target};
use super::node::{LedgerError, NodeState, RedactionRequest, Rejection};
use crate::exec::Exec;
use crate::group::PairingBackend;
use crate::lvs;
use crate::protocol::{
    self, DeferredBundle, DesignationRegistry, ProtocolError, ProviderKeys, ReleaseError,
    SystemParams, TxPayload, UserKeys,
};
use crate::tre::{self, time_label, DesignationKey, ServerKeyPair, Tik};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    tick: u64,
    tik_period: u64,
}

impl SimClock {
    pub fn new(tik_period: u64) -> Self {
        Self {
            tick: 0,
            tik_period: tik_period.max(1),
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn tik_period(&self) -> u64 {
        self.tik_period
    }

    /// First period boundary at or after `due` (and after tick 0): the
    /// instant whose time key unlocks a transaction due at `due`.
    pub fn release_tick(&self, due: u64) -> u64 {
        due.div_ceil(self.tik_period).max(1) * self.tik_period
    }

    /// Moves forward and returns the period boundaries crossed, in order.
    pub fn advance(&mut self, ticks: u64) -> Vec<u64> {
        let from = self.tick;
        self.tick = from.saturating_add(ticks);
        let first = (from / self.tik_period + 1) * self.tik_period;
        (0..)
            .map(|i| first + i * self.tik_period)
            .take_while(|&t| t <= self.tick)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown provider {0}")]
    UnknownProvider(String),
    #[error("{0} is already registered")]
    Duplicate(String),
    #[error("transaction {0} is not part of any bundle")]
    NotInBundle(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Rejected(#[from] Rejection),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Outcome of a provider's redaction attempt.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RedactFailure {
    /// Timed-release decryption returned nothing.
    #[error("{0}")]
    Release(ReleaseError),
    #[error("miner rejected the rewrite: {0}")]
    Ledger(LedgerError),
    #[error("{0}")]
    Setup(String),
}

impl RedactFailure {
    /// Short code used in scenario expectations.
    pub fn code(&self) -> &'static str {
        match self {
            RedactFailure::Release(e) => e.code(),
            RedactFailure::Ledger(_) => "rejected",
            RedactFailure::Setup(_) => "setup",
        }
    }
}

struct BundleSlot {
    bundle_index: usize,
    member: usize,
}

pub struct Simulator<B: PairingBackend> {
    pub params: SystemParams<B>,
    pub server: ServerKeyPair<B>,
    pub clock: SimClock,
    pub node: NodeState<B>,
    pub registry: DesignationRegistry,
    pub exec: Exec,
    users: BTreeMap<String, UserKeys<B>>,
    providers: BTreeMap<String, ProviderKeys<B>>,
    /// provider -> user -> designation secret delivered off-chain.
    designations: BTreeMap<String, BTreeMap<String, DesignationKey<B>>>,
    bundles: Vec<DeferredBundle<B>>,
    bundle_of: BTreeMap<String, BundleSlot>,
    published: Vec<Tik<B>>,
    rng: ChaCha20Rng,
    trace: Vec<String>,
}

impl<B: PairingBackend> Simulator<B> {
    pub fn new(
        backend: B,
        bound: usize,
        tik_period: u64,
        target: Target,
        seed: u64,
    ) -> Result<Self, SimError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = protocol::setup(backend.clone(), bound, &mut rng)?;
        let server = protocol::server_keygen(&params, &mut rng);
        Ok(Self {
            params,
            server,
            clock: SimClock::new(tik_period),
            node: NodeState::new(backend, target),
            registry: DesignationRegistry::default(),
            exec: Exec::default(),
            users: BTreeMap::new(),
            providers: BTreeMap::new(),
            designations: BTreeMap::new(),
            bundles: Vec::new(),
            bundle_of: BTreeMap::new(),
            published: Vec::new(),
            rng,
            trace: Vec::new(),
        })
    }

    pub fn backend(&self) -> &B {
        &self.params.backend
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    fn note(&mut self, line: String) {
        log::debug!("{line}");
        self.trace.push(line);
    }

    pub fn user(&self, id: &str) -> Option<&UserKeys<B>> {
        self.users.get(id)
    }

    pub fn provider(&self, id: &str) -> Option<&ProviderKeys<B>> {
        self.providers.get(id)
    }

    pub fn bundles(&self) -> &[DeferredBundle<B>] {
        &self.bundles
    }

    pub fn published_tiks(&self) -> &[Tik<B>] {
        &self.published
    }

    pub fn register_user(&mut self, id: &str) -> Result<(), SimError> {
        if self.users.contains_key(id) || self.providers.contains_key(id) {
            return Err(SimError::Duplicate(id.to_string()));
        }
        let keys = protocol::user_keygen(&self.params, self.server.public(), id, &mut self.rng)?;
        self.node.register_user(keys.public());
        self.users.insert(id.to_string(), keys);
        self.note(format!("keygen user {id}"));
        Ok(())
    }

    pub fn register_provider(&mut self, id: &str) -> Result<(), SimError> {
        if self.users.contains_key(id) || self.providers.contains_key(id) {
            return Err(SimError::Duplicate(id.to_string()));
        }
        let keys = protocol::provider_keygen(&self.params, id, &mut self.rng)?;
        self.node.register_provider(keys.public());
        self.providers.insert(id.to_string(), keys);
        self.note(format!("keygen provider {id}"));
        Ok(())
    }

    pub fn designate(&mut self, user: &str, provider: &str) -> Result<(), SimError> {
        let keys = self
            .users
            .get(user)
            .ok_or_else(|| SimError::UnknownUser(user.into()))?;
        if !self.providers.contains_key(provider) {
            return Err(SimError::UnknownProvider(provider.into()));
        }
        let key = protocol::designate_provider(keys, provider, &mut self.registry);
        self.designations
            .entry(provider.to_string())
            .or_default()
            .insert(user.to_string(), key);
        self.note(format!("designate {user} -> {provider}"));
        Ok(())
    }

    /// Creates, aggregates and submits a bundle of deferred transactions, all
    /// locked to the release instant of `due_tick`. Returns the bundle index.
    pub fn submit_bundle(
        &mut self,
        user: &str,
        due_tick: u64,
        items: &[(String, TxPayload)],
    ) -> Result<usize, SimError> {
        let keys = self
            .users
            .get(user)
            .ok_or_else(|| SimError::UnknownUser(user.into()))?;
        let label = time_label(self.clock.release_tick(due_tick));
        let bundle = protocol::make_bundle(
            &self.params,
            keys,
            self.server.public(),
            items,
            &label,
            &mut self.rng,
            self.exec,
        )?;
        self.node.submit_bundle(&bundle)?;
        let index = self.bundles.len();
        for (member, tx) in bundle.transactions.iter().enumerate() {
            self.bundle_of.insert(
                tx.id.clone(),
                BundleSlot {
                    bundle_index: index,
                    member,
                },
            );
        }
        self.note(format!(
            "bundle {index} from {user}: {} deferred txs locked to {:?}",
            items.len(),
            String::from_utf8_lossy(&label)
        ));
        self.bundles.push(bundle);
        Ok(index)
    }

    pub fn submit_ordinary(
        &mut self,
        sender: &str,
        id: &str,
        payload: &TxPayload,
    ) -> Result<(), SimError> {
        let signer = match (self.users.get(sender), self.providers.get(sender)) {
            (Some(u), _) => &u.signer,
            (None, Some(p)) => &p.signer,
            (None, None) => return Err(SimError::UnknownUser(sender.into())),
        };
        let tx = protocol::make_ordinary(self.backend(), sender, signer, id, payload)?;
        self.node.submit_tx(LedgerTx::Ordinary(tx))?;
        self.note(format!("ordinary tx {id} from {sender}"));
        Ok(())
    }

    pub fn mine(&mut self, max_txs: usize) -> Result<u64, SimError> {
        let tick = self.clock.tick();
        let block = self.node.mine_block(max_txs, tick)?;
        let (height, n, nonce) = (block.header.height, block.txs.len(), block.header.nonce);
        self.note(format!("mined block {height} with {n} txs (nonce {nonce})"));
        Ok(height)
    }

    /// Advances the clock; the server publishes a time key at every period
    /// boundary crossed and the miner checks each one.
    pub fn advance(&mut self, ticks: u64) -> Vec<Tik<B>> {
        let boundaries = self.clock.advance(ticks);
        let mut out = Vec::with_capacity(boundaries.len());
        for t in boundaries {
            let tik = tre::extract_tik(self.backend(), self.server.secret(), &time_label(t));
            let accepted = self.node.accept_tik(self.server.public(), tik.clone());
            debug_assert!(accepted);
            self.published.push(tik.clone());
            out.push(tik);
        }
        let now = self.clock.tick();
        self.note(format!("clock -> {now}, {} time keys published", out.len()));
        out
    }

    /// Full provider-side redaction of one deferred transaction: local
    /// verification with auxiliary data, trapdoor recovery, adaptation, and
    /// submission to the miner.
    ///
    /// The provider uses the time key matching the ciphertext if the server
    /// has published it, and otherwise the most recent one it has.
    pub fn redact(
        &mut self,
        provider: &str,
        tx_id: &str,
        new_payload: TxPayload,
    ) -> Result<(), RedactFailure> {
        let result = self.try_redact(provider, tx_id, new_payload);
        match &result {
            Ok(()) => self.note(format!("redact {tx_id} by {provider}: ok")),
            Err(e) => self.note(format!(
                "redact {tx_id} by {provider}: \u{22a5}({}) {e}",
                e.code()
            )),
        }
        result
    }

    fn try_redact(
        &mut self,
        provider: &str,
        tx_id: &str,
        new_payload: TxPayload,
    ) -> Result<(), RedactFailure> {
        let setup = |m: String| RedactFailure::Setup(m);
        let slot = self
            .bundle_of
            .get(tx_id)
            .ok_or_else(|| setup(format!("{tx_id} is not a deferred transaction")))?;
        let (bundle_index, member) = (slot.bundle_index, slot.member);
        let pkeys = self
            .providers
            .get(provider)
            .ok_or_else(|| setup(format!("unknown provider {provider}")))?;
        let on_chain = self
            .node
            .find(tx_id)
            .and_then(LedgerTx::as_redactable)
            .ok_or_else(|| setup(format!("{tx_id} is not on chain yet")))?
            .clone();
        let bundle = &self.bundles[bundle_index];
        let user_pub = self
            .node
            .user(&bundle.owner)
            .ok_or_else(|| setup(format!("unknown user {}", bundle.owner)))?
            .clone();
        let b = &self.params.backend;

        let label = String::from_utf8_lossy(&on_chain.ciphertext.label).into_owned();
        let (tik, aux) = match self.node.known_tiks.get(&label) {
            Some(_) => protocol::ext(
                &self.params,
                &self.server,
                &user_pub,
                bundle,
                &[member],
                &on_chain.ciphertext.label,
            )
            .map_err(|e| setup(e.to_string()))?,
            None => {
                let latest = self.published.last().cloned().ok_or_else(|| {
                    RedactFailure::Release(ReleaseError::LabelMismatch(format!(
                        "no time key published yet, ciphertext locked to {label:?}"
                    )))
                })?;
                let aux = lvs::derive_aux(
                    b,
                    &user_pub.pk_beta,
                    &bundle.aggregate.member_hashes,
                    &[member],
                )
                .map_err(|e| setup(e.to_string()))?;
                (latest, aux)
            }
        };
        // Without a delivered designation secret the provider can only guess.
        let s = match self
            .designations
            .get(provider)
            .and_then(|m| m.get(&bundle.owner))
        {
            Some(d) => d.s,
            None => b.random_nonzero(&mut self.rng),
        };
        let sk_h = protocol::released_dec(
            &self.params,
            &user_pub,
            bundle,
            &aux,
            &on_chain.ciphertext,
            &tik,
            &s,
        )
        .map_err(RedactFailure::Release)?;
        let (r_new, sigma_new) = protocol::adapt(
            &self.params,
            pkeys,
            &sk_h,
            &on_chain.id,
            &on_chain.payload,
            &on_chain.h,
            &on_chain.r,
            &new_payload,
        )
        .map_err(|e| setup(e.to_string()))?;
        let req = RedactionRequest {
            tx_id: tx_id.to_string(),
            new_payload,
            r_new,
            sigma_new,
            provider: provider.to_string(),
        };
        let tick = self.clock.tick();
        self.node
            .apply_redaction(&req, tick)
            .map_err(RedactFailure::Ledger)?;
        if let Some(LedgerTx::Redactable(updated)) = self.node.find(tx_id).cloned() {
            self.bundles[bundle_index].transactions[member] = updated;
        }
        Ok(())
    }

    pub fn dump(&self) -> ChainDump {
        dump_chain(self.backend(), &self.node.chain)
    }
}
