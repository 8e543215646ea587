//! A single validating miner: directory of public keys, mempool, chain, and
//! the time keys it has seen.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::RngCore;

use super::chain::{
    solve, tx_root, validate_block, Block, BlockError, BlockHeader, LedgerTx, Target,
};
use crate::exec::Exec;
use crate::group::PairingBackend;
use crate::lvs::{self, PowerKey, Signature};
use crate::protocol::{
    self, encode_message, verify_redactions_batch, DeferredBundle, ProviderPublic, RedactionCheck,
    SignerRole, TxPayload, UserPublic,
};
use crate::tre::{self, Tik};

/// Nonces tried before mining gives up.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("mempool is empty")]
    EmptyMempool,
    #[error("no nonce below the target after {0} attempts")]
    AttemptCap(u64),
    #[error("unknown transaction {0}")]
    UnknownTx(String),
    #[error("transaction {0} is immutable")]
    NotRedactable(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown provider {0}")]
    UnknownProvider(String),
    #[error("redaction of {0} failed verification")]
    VerificationFailed(String),
    #[error(transparent)]
    Block(#[from] BlockError),
}

/// Why a submission was turned away.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Rejection {
    #[error("duplicate transaction id {0}")]
    Duplicate(String),
    #[error("unknown sender {0}")]
    UnknownSender(String),
    #[error("transaction {0} failed verification")]
    Invalid(String),
    #[error("bundle aggregate does not verify")]
    BadAggregate,
}

/// A provider's rewrite of one on-chain transaction.
#[derive(Debug, Clone)]
pub struct RedactionRequest<B: PairingBackend> {
    pub tx_id: String,
    pub new_payload: TxPayload,
    pub r_new: B::Scalar,
    pub sigma_new: Signature<B>,
    pub provider: String,
}

#[derive(Debug, Clone)]
pub struct NodeState<B: PairingBackend> {
    pub backend: B,
    pub target: Target,
    pub max_attempts: u64,
    pub chain: Vec<Block<B>>,
    pub mempool: VecDeque<LedgerTx<B>>,
    pub known_tiks: BTreeMap<String, Tik<B>>,
    users: BTreeMap<String, UserPublic<B>>,
    providers: BTreeMap<String, ProviderPublic<B>>,
    /// Keys allowed to sign ordinary transactions.
    senders: BTreeMap<String, PowerKey<B>>,
    seen: HashSet<String>,
    location: HashMap<String, (usize, usize)>,
}

impl<B: PairingBackend> NodeState<B> {
    pub fn new(backend: B, target: Target) -> Self {
        Self {
            backend,
            target,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            chain: Vec::new(),
            mempool: VecDeque::new(),
            known_tiks: BTreeMap::new(),
            users: BTreeMap::new(),
            providers: BTreeMap::new(),
            senders: BTreeMap::new(),
            seen: HashSet::new(),
            location: HashMap::new(),
        }
    }

    pub fn register_user(&mut self, pk: UserPublic<B>) {
        self.senders.insert(pk.id.clone(), pk.pk_beta.clone());
        self.users.insert(pk.id.clone(), pk);
    }

    pub fn register_provider(&mut self, pk: ProviderPublic<B>) {
        self.senders.insert(pk.id.clone(), pk.pk.clone());
        self.providers.insert(pk.id.clone(), pk);
    }

    pub fn register_sender(&mut self, id: &str, pk: PowerKey<B>) {
        self.senders.insert(id.to_string(), pk);
    }

    pub fn user(&self, id: &str) -> Option<&UserPublic<B>> {
        self.users.get(id)
    }

    pub fn provider(&self, id: &str) -> Option<&ProviderPublic<B>> {
        self.providers.get(id)
    }

    pub fn height(&self) -> usize {
        self.chain.len()
    }

    /// Finds an on-chain transaction by id.
    pub fn find(&self, id: &str) -> Option<&LedgerTx<B>> {
        let &(blk, pos) = self.location.get(id)?;
        self.chain.get(blk)?.txs.get(pos)
    }

    /// Checks one transaction and queues it.
    pub fn submit_tx(&mut self, tx: LedgerTx<B>) -> Result<(), Rejection> {
        self.check_tx(&tx)?;
        self.seen.insert(tx.id().to_string());
        self.mempool.push_back(tx);
        Ok(())
    }

    fn check_tx(&self, tx: &LedgerTx<B>) -> Result<(), Rejection> {
        let id = tx.id();
        if self.seen.contains(id) {
            return Err(Rejection::Duplicate(id.to_string()));
        }
        self.verify_body(tx)
    }

    fn verify_body(&self, tx: &LedgerTx<B>) -> Result<(), Rejection> {
        let id = tx.id();
        let b = &self.backend;
        let ok = match tx {
            LedgerTx::Ordinary(t) => {
                let pk = self
                    .senders
                    .get(&t.sender)
                    .ok_or_else(|| Rejection::UnknownSender(t.sender.clone()))?;
                protocol::verify_ordinary(b, t, pk)
            }
            LedgerTx::Redactable(t) => {
                let user = self
                    .users
                    .get(&t.owner)
                    .ok_or_else(|| Rejection::UnknownSender(t.owner.clone()))?;
                let provider = t.redacted_by.as_deref().and_then(|p| self.providers.get(p));
                protocol::verify_transaction(b, user, provider, t, None)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Rejection::Invalid(id.to_string()))
        }
    }

    /// Checks the bundle's aggregate once, then every member.
    pub fn submit_bundle(&mut self, bundle: &DeferredBundle<B>) -> Result<(), Rejection> {
        let b = &self.backend;
        let user = self
            .users
            .get(&bundle.owner)
            .ok_or_else(|| Rejection::UnknownSender(bundle.owner.clone()))?;
        if !lvs::verify_aggregate_full(b, &user.pk_beta, &bundle.aggregate) {
            return Err(Rejection::BadAggregate);
        }
        let mut ids = HashSet::new();
        for tx in &bundle.transactions {
            if !ids.insert(tx.id.as_str()) || self.seen.contains(&tx.id) {
                return Err(Rejection::Duplicate(tx.id.clone()));
            }
            if !bundle.aggregate.member_hashes.contains(&tx.signature.h)
                || !protocol::verify_transaction(b, user, None, tx, None)
            {
                return Err(Rejection::Invalid(tx.id.clone()));
            }
        }
        for tx in &bundle.transactions {
            self.seen.insert(tx.id.clone());
            self.mempool.push_back(LedgerTx::Redactable(tx.clone()));
        }
        Ok(())
    }

    /// Mines up to `max_txs` mempool entries into a new block.
    pub fn mine_block(&mut self, max_txs: usize, tick: u64) -> Result<&Block<B>, LedgerError> {
        if self.mempool.is_empty() {
            return Err(LedgerError::EmptyMempool);
        }
        let take = max_txs.max(1).min(self.mempool.len());
        let txs: Vec<LedgerTx<B>> = self.mempool.iter().take(take).cloned().collect();
        let header = BlockHeader {
            height: self.chain.len() as u64,
            prev_digest: self.chain.last().map_or([0u8; 32], Block::digest),
            tx_root: tx_root(&self.backend, &txs),
            nonce: 0,
            target: self.target.clone(),
            timestamp_tick: tick,
        };
        let header =
            solve(header, self.max_attempts).ok_or(LedgerError::AttemptCap(self.max_attempts))?;
        self.mempool.drain(..take);
        let height = self.chain.len();
        for (pos, tx) in txs.iter().enumerate() {
            self.location.insert(tx.id().to_string(), (height, pos));
        }
        self.chain.push(Block { header, txs });
        Ok(self.chain.last().expect("just pushed"))
    }

    pub fn validate_chain(&self) -> Result<(), BlockError> {
        let mut parent = None;
        for block in &self.chain {
            validate_block(&self.backend, block, parent)?;
            parent = Some(block);
        }
        Ok(())
    }

    /// Re-checks every stored body against its anchor and signature.
    /// [`validate_chain`](Self::validate_chain) only covers headers and
    /// roots, which by design do not see redactable bodies.
    pub fn audit_bodies(&self) -> Result<(), Rejection> {
        self.chain
            .iter()
            .flat_map(|block| &block.txs)
            .try_for_each(|tx| self.verify_body(tx))
    }

    /// Publishes a time key after checking it against the server key.
    pub fn accept_tik(&mut self, server_pk: &B::G, tik: Tik<B>) -> bool {
        if !tre::verify_tik(&self.backend, server_pk, &tik) {
            return false;
        }
        self.known_tiks.insert(tik.label_str(), tik);
        true
    }

    fn locate_redactable(&self, id: &str) -> Result<(usize, usize), LedgerError> {
        let &(blk, pos) = self
            .location
            .get(id)
            .ok_or_else(|| LedgerError::UnknownTx(id.to_string()))?;
        match &self.chain[blk].txs[pos] {
            LedgerTx::Redactable(_) => Ok((blk, pos)),
            LedgerTx::Ordinary(_) => Err(LedgerError::NotRedactable(id.to_string())),
        }
    }

    fn redactable_mut(
        &mut self,
        (blk, pos): (usize, usize),
    ) -> &mut protocol::RedactableTransaction<B> {
        match &mut self.chain[blk].txs[pos] {
            LedgerTx::Redactable(t) => t,
            LedgerTx::Ordinary(_) => unreachable!("located as redactable"),
        }
    }

    /// Verifies and installs one rewrite in place. No block is mined and on
    /// failure nothing changes.
    pub fn apply_redaction(
        &mut self,
        req: &RedactionRequest<B>,
        tick: u64,
    ) -> Result<(), LedgerError> {
        let at = self.locate_redactable(&req.tx_id)?;
        let tx = self.chain[at.0].txs[at.1]
            .as_redactable()
            .expect("located as redactable");
        let user = self
            .users
            .get(&tx.owner)
            .ok_or_else(|| LedgerError::UnknownUser(tx.owner.clone()))?;
        let provider = self
            .providers
            .get(&req.provider)
            .ok_or_else(|| LedgerError::UnknownProvider(req.provider.clone()))?;
        let ok = protocol::verify(
            &self.backend,
            user,
            Some(provider),
            &tx.id,
            &req.new_payload,
            &tx.h,
            &req.r_new,
            &req.sigma_new,
            SignerRole::Provider,
            None,
        );
        if !ok {
            return Err(LedgerError::VerificationFailed(req.tx_id.clone()));
        }
        self.redactable_mut(at).install_redaction(
            req.new_payload.clone(),
            req.r_new,
            req.sigma_new.clone(),
            &req.provider,
            tick,
        );
        Ok(())
    }

    /// Many rewrites with one combined check. Returns one result per
    /// request; only the passing ones are installed.
    pub fn apply_redactions(
        &mut self,
        reqs: &[RedactionRequest<B>],
        tick: u64,
        rng: &mut dyn RngCore,
        exec: Exec,
    ) -> Vec<Result<(), LedgerError>> {
        let mut results: Vec<Result<(), LedgerError>> = Vec::with_capacity(reqs.len());
        let mut staged: Vec<(usize, (usize, usize))> = Vec::new();
        for (i, req) in reqs.iter().enumerate() {
            let lookup = self.locate_redactable(&req.tx_id).and_then(|at| {
                let tx = self.chain[at.0].txs[at.1]
                    .as_redactable()
                    .expect("located as redactable");
                if !self.users.contains_key(&tx.owner) {
                    return Err(LedgerError::UnknownUser(tx.owner.clone()));
                }
                if !self.providers.contains_key(&req.provider) {
                    return Err(LedgerError::UnknownProvider(req.provider.clone()));
                }
                Ok(at)
            });
            match lookup {
                Ok(at) => {
                    staged.push((i, at));
                    results.push(Ok(()));
                }
                Err(e) => results.push(Err(e)),
            }
        }
        let failed = {
            let checks: Vec<RedactionCheck<'_, B>> = staged
                .iter()
                .map(|&(i, at)| {
                    let req = &reqs[i];
                    let tx = self.chain[at.0].txs[at.1]
                        .as_redactable()
                        .expect("located as redactable");
                    RedactionCheck {
                        pk_h: &self.users[&tx.owner].pk_h,
                        provider_pk: &self.providers[&req.provider].pk,
                        message: encode_message(&tx.id, &req.new_payload),
                        h: &tx.h,
                        r: &req.r_new,
                        signature: &req.sigma_new,
                    }
                })
                .collect();
            verify_redactions_batch(&self.backend, &checks, rng, exec)
        };
        for &k in &failed {
            let i = staged[k].0;
            results[i] = Err(LedgerError::VerificationFailed(reqs[i].tx_id.clone()));
        }
        for (k, &(i, at)) in staged.iter().enumerate() {
            if failed.binary_search(&k).is_ok() {
                continue;
            }
            let req = &reqs[i];
            self.redactable_mut(at).install_redaction(
                req.new_payload.clone(),
                req.r_new,
                req.sigma_new.clone(),
                &req.provider,
                tick,
            );
        }
        results
    }
}
