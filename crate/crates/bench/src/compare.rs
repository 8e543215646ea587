//! Side-by-side studies: subset verification against one-by-one
//! verification, and in-place redaction against re-mining replacement
//! transactions.

use anyhow::{ensure, Context};
use epass_core::group::PairingBackend;
use epass_core::ledger::{
    solve, tx_root, validate_block, Block, BlockHeader, LedgerTx, NodeState, RedactionRequest,
    Target,
};
use epass_core::lvs;
use epass_core::protocol::{self, DeferredBundle, TxPayload, UserKeys};
use epass_core::tre::time_label;
use epass_core::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::measure::{linear_fit, median, time_ms, LinearFit, Sampler};
use crate::report::{MeasurementRow, Phase};

/// One point of a two-curve comparison; `ratio` is baseline over candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub x: usize,
    pub candidate_ms: f64,
    pub baseline_ms: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub candidate: Phase,
    pub baseline: Phase,
    pub points: Vec<RatioPoint>,
    pub candidate_fit: Option<LinearFit>,
    pub baseline_fit: Option<LinearFit>,
}

impl Comparison {
    fn from_points(candidate: Phase, baseline: Phase, points: Vec<RatioPoint>) -> Self {
        let xs: Vec<f64> = points.iter().map(|p| p.x as f64).collect();
        let cand: Vec<f64> = points.iter().map(|p| p.candidate_ms).collect();
        let base: Vec<f64> = points.iter().map(|p| p.baseline_ms).collect();
        Self {
            candidate,
            baseline,
            candidate_fit: linear_fit(&xs, &cand),
            baseline_fit: linear_fit(&xs, &base),
            points,
        }
    }

    pub fn at(&self, x: usize) -> Option<&RatioPoint> {
        self.points.iter().find(|p| p.x == x)
    }

    pub fn rows(&self, backend: &str) -> Vec<MeasurementRow> {
        self.points
            .iter()
            .flat_map(|p| {
                [
                    (self.candidate, p.candidate_ms),
                    (self.baseline, p.baseline_ms),
                ]
                .map(|(phase, ms)| MeasurementRow {
                    phase,
                    u: 1,
                    k: p.x,
                    ms,
                    bytes: None,
                    backend: backend.to_string(),
                })
            })
            .collect()
    }

    /// Whether the baseline medians never decrease as `x` grows.
    pub fn baseline_monotone(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].baseline_ms >= w[0].baseline_ms)
    }
}

fn point(x: usize, candidate: &[f64], baseline: &[f64]) -> RatioPoint {
    let (c, b) = (median(candidate), median(baseline));
    RatioPoint {
        x,
        candidate_ms: c,
        baseline_ms: b,
        ratio: if c > 0.0 { b / c } else { f64::INFINITY },
    }
}

/// For each `k`: `k` signatures under one key, aggregated; then one subset
/// verification of all `k` members with auxiliary information (`local_verify`)
/// against `k` separate signature checks (`individual_verify`).
pub fn compare_local<B: PairingBackend>(
    b: &B,
    ks: &[usize],
    sampler: Sampler,
    seed: u64,
) -> anyhow::Result<Comparison> {
    ensure!(
        !ks.is_empty() && ks.iter().all(|&k| k >= 1),
        "k values must be at least 1"
    );
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let bound = ks.iter().copied().max().unwrap_or(1);
    let keys = lvs::keygen(b, bound, &mut rng)?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let hashes: Vec<B::Scalar> = (0..k)
            .map(|i| b.hash_to_scalar(format!("local-{seed}-{i}").as_bytes()))
            .collect();
        let sigs = hashes
            .iter()
            .map(|h| lvs::sign(b, keys.secret(), h))
            .collect::<Result<Vec<_>, _>>()?;
        let agg = lvs::aggregate(b, keys.public(), &sigs, Exec::Sequential)?;
        let subset: Vec<usize> = (0..k).collect();
        let aux = lvs::derive_aux(b, keys.public(), &agg.member_hashes, &subset)?;

        let ((local, local_ok), (individual, individual_ok)) = sampler.run_pair(
            || lvs::verify_subset(b, keys.public(), &agg.sigma_hat, &aux, &hashes),
            || {
                sigs.iter()
                    .all(|s| lvs::verify_single(b, keys.public(), &s.sigma, &s.h))
            },
        );
        ensure!(local_ok, "subset verification failed at k={k}");
        ensure!(individual_ok, "individual verification failed at k={k}");
        let p = point(k, &local, &individual);
        log::info!(
            "k={k}: local {:.2} ms, individual {:.2} ms, ratio {:.2}",
            p.candidate_ms,
            p.baseline_ms,
            p.ratio
        );
        points.push(p);
    }
    Ok(Comparison::from_points(
        Phase::LocalVerify,
        Phase::IndividualVerify,
        points,
    ))
}

/// A node whose last block holds `n` redactable transactions, plus what a
/// provider needs to rewrite them.
struct RedactionFixture<B: PairingBackend> {
    params: protocol::SystemParams<B>,
    node: NodeState<B>,
    users: Vec<UserKeys<B>>,
    /// Owner index of every transaction in block order.
    owners: Vec<usize>,
    provider: protocol::ProviderKeys<B>,
}

fn build_redaction_fixture<B: PairingBackend>(
    b: &B,
    n: usize,
    target: &Target,
    per_user: usize,
    seed: u64,
) -> anyhow::Result<RedactionFixture<B>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = protocol::setup(b.clone(), per_user, &mut rng)?;
    let server = protocol::server_keygen(&params, &mut rng);
    let provider = protocol::provider_keygen(&params, "provider", &mut rng)?;
    let mut node = NodeState::new(b.clone(), target.clone());
    node.register_provider(provider.public());
    let label = time_label(10);
    let mut users = Vec::new();
    let mut owners = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 0 {
        let take = remaining.min(per_user);
        let idx = users.len();
        let user = protocol::user_keygen(&params, server.public(), format!("u{idx}"), &mut rng)?;
        node.register_user(user.public());
        let items: Vec<(String, TxPayload)> = (0..take)
            .map(|j| {
                (
                    format!("u{idx}-t{j}"),
                    TxPayload::new("provider", 100 + j as u64, 10),
                )
            })
            .collect();
        let bundle: DeferredBundle<B> = protocol::make_bundle(
            &params,
            &user,
            server.public(),
            &items,
            &label,
            &mut rng,
            Exec::default(),
        )?;
        node.submit_bundle(&bundle)
            .map_err(|e| anyhow::anyhow!("fixture bundle rejected: {e}"))?;
        owners.extend(std::iter::repeat_n(idx, take));
        users.push(user);
        remaining -= take;
    }
    node.mine_block(n, 1)?;
    Ok(RedactionFixture {
        params,
        node,
        users,
        owners,
        provider,
    })
}

fn new_payload(j: usize) -> TxPayload {
    TxPayload::new("provider", 40 + j as u64, 10).with_memo(b"rescheduled".to_vec())
}

/// One redaction pass: the provider adapts every transaction of the last
/// block and the node verifies the batch and installs it in place.
fn redact_all<B: PairingBackend>(
    fx: &RedactionFixture<B>,
    node: &mut NodeState<B>,
    rng: &mut ChaCha20Rng,
) -> anyhow::Result<()> {
    let block = node.chain.last().context("fixture has a block")?;
    let reqs = block
        .txs
        .iter()
        .zip(&fx.owners)
        .enumerate()
        .map(|(j, (tx, &owner))| {
            let tx = tx.as_redactable().context("fixture tx is redactable")?;
            let (r_new, sigma_new) = protocol::adapt(
                &fx.params,
                &fx.provider,
                fx.users[owner].trapdoor.secret(),
                &tx.id,
                &tx.payload,
                &tx.h,
                &tx.r,
                &new_payload(j),
            )?;
            Ok(RedactionRequest {
                tx_id: tx.id.clone(),
                new_payload: new_payload(j),
                r_new,
                sigma_new,
                provider: fx.provider.id.clone(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let (apply_ms, results) = time_ms(|| node.apply_redactions(&reqs, 2, rng, Exec::Sequential));
    log::trace!("{} redactions applied in {apply_ms:.1} ms", reqs.len());
    ensure!(
        results.iter().all(Result::is_ok),
        "a redaction was rejected"
    );
    Ok(())
}

/// The immutable-ledger alternative: every changed transaction is issued as a
/// fresh signed transaction, each is checked, and a replacement block is
/// mined and validated.
fn remine_all<B: PairingBackend>(
    fx: &RedactionFixture<B>,
    node: &NodeState<B>,
) -> anyhow::Result<()> {
    let b = &node.backend;
    let old = node.chain.last().context("fixture has a block")?;
    let replacements = old
        .txs
        .iter()
        .zip(&fx.owners)
        .enumerate()
        .map(|(j, (tx, &owner))| {
            let user = &fx.users[owner];
            let tx = protocol::make_ordinary(
                b,
                &user.id,
                &user.signer,
                &format!("{}-r", tx.id()),
                &new_payload(j),
            )?;
            ensure!(
                protocol::verify_ordinary(b, &tx, user.signer.public()),
                "replacement failed verification"
            );
            Ok(LedgerTx::Ordinary(tx))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let parent = node.chain.len().checked_sub(2).map(|i| &node.chain[i]);
    let header = BlockHeader {
        height: old.header.height,
        prev_digest: old.header.prev_digest,
        tx_root: tx_root(b, &replacements),
        nonce: 0,
        target: node.target.clone(),
        timestamp_tick: 2,
    };
    let header =
        solve(header, node.max_attempts).context("difficulty too high for the attempt cap")?;
    let block = Block {
        header,
        txs: replacements,
    };
    validate_block(b, &block, parent)?;
    Ok(())
}

/// Users are sized so bundles stay small relative to the block.
pub const REDACTION_BUNDLE: usize = 50;

pub fn compare_redaction<B: PairingBackend>(
    b: &B,
    sizes: &[usize],
    difficulty: u64,
    sampler: Sampler,
    seed: u64,
) -> anyhow::Result<Comparison> {
    ensure!(
        !sizes.is_empty() && sizes.iter().all(|&n| n >= 1),
        "block sizes must be at least 1"
    );
    let target = Target::from_difficulty(difficulty);
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (fixture_ms, fx) =
            time_ms(|| build_redaction_fixture(b, n, &target, REDACTION_BUNDLE, seed ^ n as u64));
        let fx = fx?;
        log::debug!("fixture for n={n} built in {fixture_ms:.0} ms");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);

        // Each redaction pass needs an untouched chain; the copies are made
        // up front so cloning stays outside the timed region.
        let mut fresh: Vec<NodeState<B>> = (0..sampler.warmup + sampler.reps)
            .map(|_| fx.node.clone())
            .collect();
        let ((redact, res_redact), (remine, res_remine)) = sampler.run_pair(
            || {
                let mut node = fresh.pop().expect("one copy per pass");
                redact_all(&fx, &mut node, &mut rng)
            },
            || remine_all(&fx, &fx.node),
        );
        res_redact?;
        res_remine?;
        let p = point(n, &redact, &remine);
        log::info!(
            "n={n}: redact {:.1} ms, remine {:.1} ms, ratio {:.2}",
            p.candidate_ms,
            p.baseline_ms,
            p.ratio
        );
        points.push(p);
    }
    Ok(Comparison::from_points(
        Phase::RedactPath,
        Phase::ReminePath,
        points,
    ))
}
