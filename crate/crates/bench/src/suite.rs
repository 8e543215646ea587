//! The per-algorithm cost grid: every protocol phase timed for `u` users each
//! holding `k` deferred transactions.
//!
//! Key generation phases run once per cell, so their cost should not depend
//! on `u`. They are timed in a separate sweep ahead of the cells. The transaction phases run for all `u * k` transactions of the
//! cell. Measured regions are single threaded.

use std::collections::BTreeMap;

use anyhow::{bail, ensure, Context};
use epass_core::group::PairingBackend;
use epass_core::lvs::{self, AggregateSignature, AuxiliaryInfo, Signature};
use epass_core::protocol::{
    self, DeferredBundle, ProviderKeys, RedactableTransaction, SignerRole, SystemParams, TrCreated,
    TxPayload, UserKeys, UserPublic,
};
use epass_core::tre::{time_label, ServerKeyPair, Tik};
use epass_core::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::measure::{median, time_ms, Sampler};
use crate::report::{MeasurementRow, Phase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridConfig {
    pub users: Vec<usize>,
    pub deferred: Vec<usize>,
    pub sampler: Sampler,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            users: vec![8, 16, 24, 32],
            deferred: vec![8, 16, 24],
            sampler: Sampler::new(5, 1),
            seed: 1,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(!self.users.is_empty(), "no user counts given");
        ensure!(!self.deferred.is_empty(), "no deferred counts given");
        ensure!(
            self.users.iter().chain(&self.deferred).all(|&n| n >= 1),
            "all counts must be at least 1"
        );
        Ok(())
    }

    /// Signing-key bound: the largest bundle in the grid.
    pub fn bound(&self) -> usize {
        self.deferred.iter().copied().max().unwrap_or(1)
    }
}

struct Fixture<B: PairingBackend> {
    params: SystemParams<B>,
    server: ServerKeyPair<B>,
    provider: ProviderKeys<B>,
    users: Vec<UserKeys<B>>,
    publics: Vec<UserPublic<B>>,
    label: Vec<u8>,
}

fn payload(j: usize) -> TxPayload {
    TxPayload::new("provider", 100 + j as u64, 10)
}

fn redacted_payload(j: usize) -> TxPayload {
    TxPayload::new("provider", 60 + j as u64, 10).with_memo(b"installment".to_vec())
}

fn tx_id(i: usize, j: usize) -> String {
    format!("u{i}-t{j}")
}

/// Runs the grid and returns rows ordered by cell (users outer, deferred
/// inner) and then by phase in table order.
pub fn run_grid<B: PairingBackend>(
    backend: &B,
    cfg: &GridConfig,
) -> anyhow::Result<Vec<MeasurementRow>> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let max_users = cfg.users.iter().copied().max().unwrap_or(1);
    let params = protocol::setup(backend.clone(), cfg.bound(), &mut rng)?;
    let server = protocol::server_keygen(&params, &mut rng);
    let provider = protocol::provider_keygen(&params, "provider", &mut rng)?;
    let users = (0..max_users)
        .map(|i| protocol::user_keygen(&params, server.public(), format!("u{i}"), &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let publics = users.iter().map(UserKeys::public).collect();
    let fx = Fixture {
        params,
        server,
        provider,
        users,
        publics,
        label: time_label(10),
    };

    let keygens = keygen_sweep(&fx, cfg, &mut rng);
    let mut rows = Vec::new();
    let mut first = true;
    for &u in &cfg.users {
        for &k in &cfg.deferred {
            // The warm-up runs only ahead of the first cell; later cells reuse
            // the warmed caches.
            let sampler = if first {
                cfg.sampler
            } else {
                Sampler::new(cfg.sampler.reps, 0)
            };
            first = false;
            let started = std::time::Instant::now();
            let readings = &keygens[&(u, k)];
            rows.extend(
                run_cell(&fx, u, k, readings, sampler, &mut rng)
                    .with_context(|| format!("cell u={u} k={k}"))?,
            );
            log::info!(
                "cell u={u} k={k} done in {:.1}s",
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(rows)
}

/// Rounds of the key generation sweep per timed repetition of the grid.
const KEYGEN_ROUNDS_PER_REP: usize = 3;

type KeygenReadings = [Vec<f64>; 4];

/// A provider's new opening and signature for one transaction.
type Adapted<B> = (<B as PairingBackend>::Scalar, Signature<B>);

/// Times the four key generation phases for every cell, visiting the cells
/// round-robin. Each phase takes tens of milliseconds, so a burst of machine
/// slowdown would otherwise land on whichever cell happened to be running.
fn keygen_sweep<B: PairingBackend>(
    fx: &Fixture<B>,
    cfg: &GridConfig,
    rng: &mut ChaCha20Rng,
) -> BTreeMap<(usize, usize), KeygenReadings> {
    let b = &fx.params.backend;
    let params = &fx.params;
    let cells: Vec<(usize, usize)> = cfg
        .users
        .iter()
        .flat_map(|&u| cfg.deferred.iter().map(move |&k| (u, k)))
        .collect();
    let mut out: BTreeMap<(usize, usize), KeygenReadings> = BTreeMap::new();
    let rounds = cfg.sampler.warmup + cfg.sampler.reps * KEYGEN_ROUNDS_PER_REP;
    for round in 0..rounds {
        for &(u, k) in &cells {
            let t = [
                time_ms(|| protocol::setup(b.clone(), k, &mut *rng)).0,
                time_ms(|| protocol::user_keygen(params, fx.server.public(), "probe", &mut *rng)).0,
                time_ms(|| protocol::provider_keygen(params, "probe", &mut *rng)).0,
                time_ms(|| protocol::server_keygen(params, &mut *rng)).0,
            ];
            if round >= cfg.sampler.warmup {
                let entry = out.entry((u, k)).or_default();
                for (slot, ms) in entry.iter_mut().zip(t) {
                    slot.push(ms);
                }
            }
        }
    }
    out
}

fn run_cell<B: PairingBackend>(
    fx: &Fixture<B>,
    u: usize,
    k: usize,
    keygens: &KeygenReadings,
    sampler: Sampler,
    rng: &mut ChaCha20Rng,
) -> anyhow::Result<Vec<MeasurementRow>> {
    let b = &fx.params.backend;
    let backend_name = b.kind().to_string();
    let mut rows = Vec::new();
    let mut push = |phase: Phase, readings: &[f64], bytes: Option<u64>| {
        rows.push(MeasurementRow {
            phase,
            u,
            k,
            ms: median(readings),
            bytes,
            backend: backend_name.clone(),
        })
    };
    let params = &fx.params;
    let users = &fx.users[..u];
    let publics = &fx.publics[..u];

    push(Phase::Setup, &keygens[0], None);
    push(Phase::UserKeygen, &keygens[1], None);
    push(Phase::ProviderKeygen, &keygens[2], None);
    push(Phase::ServerKeygen, &keygens[3], None);

    let (t, created) = sampler.run(
        || -> Result<Vec<Vec<TrCreated<B>>>, protocol::ProtocolError> {
            users
                .iter()
                .enumerate()
                .map(|(i, user)| {
                    (0..k)
                        .map(|j| {
                            protocol::tr_creat(
                                params,
                                user,
                                fx.server.public(),
                                &tx_id(i, j),
                                &payload(j),
                                &fx.label,
                                &mut *rng,
                            )
                        })
                        .collect()
                })
                .collect()
        },
    );
    push(Phase::TrCreat, &t, None);
    let created = created?;

    let signatures: Vec<Vec<Signature<B>>> = created
        .iter()
        .map(|row| row.iter().map(|c| c.signature.clone()).collect())
        .collect();
    let (t, aggregates) = sampler.run(|| -> Result<Vec<AggregateSignature<B>>, lvs::LvsError> {
        users
            .iter()
            .zip(&signatures)
            .map(|(user, sigs)| lvs::aggregate(b, user.signer.public(), sigs, Exec::Sequential))
            .collect()
    });
    let aggregates = aggregates?;
    let bundles: Vec<DeferredBundle<B>> = created
        .into_iter()
        .zip(aggregates)
        .enumerate()
        .map(|(i, (row, aggregate))| DeferredBundle {
            owner: users[i].id.clone(),
            transactions: row
                .into_iter()
                .enumerate()
                .map(|(j, c)| RedactableTransaction {
                    id: tx_id(i, j),
                    owner: users[i].id.clone(),
                    payload: payload(j),
                    h: c.h,
                    r: c.r,
                    signature: c.signature,
                    signer: SignerRole::User,
                    redacted_by: None,
                    ciphertext: c.ciphertext,
                    redaction_log: Vec::new(),
                })
                .collect(),
            aggregate,
        })
        .collect();
    let bytes: usize = bundles
        .iter()
        .map(|bundle| bundle.communication_bytes(b))
        .sum();
    push(Phase::Aggregate, &t, Some(bytes as u64));

    type Released<B> = Vec<(Tik<B>, Vec<AuxiliaryInfo<B>>)>;
    let (t, released) = sampler.run(|| -> Result<Released<B>, protocol::ProtocolError> {
        publics
            .iter()
            .zip(&bundles)
            .map(|(public, bundle)| {
                protocol::ext_members(params, &fx.server, public, bundle, &fx.label)
            })
            .collect()
    });
    push(Phase::Ext, &t, None);
    let released = released?;

    let (t, trapdoors) = sampler.run(|| -> Result<Vec<Vec<B::Scalar>>, protocol::ReleaseError> {
        (0..u)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let (tik, aux) = (&released[i].0, &released[i].1[j]);
                        protocol::released_dec(
                            params,
                            &publics[i],
                            &bundles[i],
                            aux,
                            &bundles[i].transactions[j].ciphertext,
                            tik,
                            &users[i].designation.s,
                        )
                    })
                    .collect()
            })
            .collect()
    });
    push(Phase::ReleasedDec, &t, None);
    let trapdoors = trapdoors?;

    let (t, adapted) = sampler.run(
        || -> Result<Vec<Vec<Adapted<B>>>, protocol::ProtocolError> {
            (0..u)
                .map(|i| {
                    bundles[i]
                        .transactions
                        .iter()
                        .enumerate()
                        .map(|(j, tx)| {
                            protocol::adapt(
                                params,
                                &fx.provider,
                                &trapdoors[i][j],
                                &tx.id,
                                &tx.payload,
                                &tx.h,
                                &tx.r,
                                &redacted_payload(j),
                            )
                        })
                        .collect()
                })
                .collect()
        },
    );
    push(Phase::Adapt, &t, None);
    let adapted = adapted?;

    let provider_pub = fx.provider.public();
    let (t, all_ok) = sampler.run(|| {
        (0..u).all(|i| {
            lvs::verify_aggregate_full(b, &publics[i].pk_beta, &bundles[i].aggregate)
                && bundles[i].transactions.iter().enumerate().all(|(j, tx)| {
                    let (r_new, sigma) = &adapted[i][j];
                    protocol::verify(
                        b,
                        &publics[i],
                        Some(&provider_pub),
                        &tx.id,
                        &redacted_payload(j),
                        &tx.h,
                        r_new,
                        sigma,
                        SignerRole::Provider,
                        None,
                    )
                })
        })
    });
    push(Phase::Verify, &t, None);
    if !all_ok {
        bail!("a redacted transaction failed verification");
    }
    Ok(rows)
}
