//! Locally verifiable aggregate signatures.
//!
//! A signature on the scalar `h` under secret `sk` is `g^{1/(sk+h)}`. One
//! signer's signatures on distinct scalars aggregate into a single element
//! `g^{1/prod(sk+h_i)}` using partial-fraction weights. Given the public
//! powers `g^{sk^i}`, anyone can derive auxiliary elements that let a verifier
//! check one member, or any subset, against the aggregate without touching
//! the rest.

use rand::RngCore;

use crate::exec::Exec;
use crate::group::{GroupError, PairingBackend, ScalarField, Slot};
use crate::poly::{divide_by_linear, expand_poly, partial_fraction_weights};
use crate::wire::{put_bytes16, put_u32, Reader};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LvsError {
    #[error("aggregation bound must be at least 1")]
    ZeroBound,
    #[error("sk + h = 0: the hash is the negated secret key")]
    DegenerateHash,
    /// The `⊥` outcome of aggregation: some member does not verify.
    #[error("member {index} carries an invalid signature")]
    InvalidMember { index: usize },
    #[error("member hashes must be distinct (duplicate at {index})")]
    DuplicateHash { index: usize },
    #[error("{needed} powers needed but the key only has {available}")]
    BoundExceeded { needed: usize, available: usize },
    #[error("nothing to aggregate")]
    Empty,
    #[error("index {index} outside 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("subset must be nonempty and free of repeats")]
    BadSubset,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Public key `(g^{sk}, g^{sk^2}, ..., g^{sk^B})`. Index `i` holds
/// `g^{sk^{i+1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerKey<B: PairingBackend> {
    powers: Vec<B::G>,
}

impl<B: PairingBackend> PowerKey<B> {
    pub fn from_powers(powers: Vec<B::G>) -> Result<Self, LvsError> {
        if powers.is_empty() {
            return Err(LvsError::ZeroBound);
        }
        Ok(Self { powers })
    }

    pub fn bound(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[B::G] {
        &self.powers
    }

    /// `g^{sk}`.
    pub fn base(&self) -> &B::G {
        &self.powers[0]
    }

    /// `g^{sk^k}` for `k = 0..=bound`, with `g^{sk^0} = g`.
    pub fn power(&self, b: &B, k: usize) -> Option<B::G> {
        match k {
            0 => Some(b.generator()),
            k => self.powers.get(k - 1).cloned(),
        }
    }

    /// `[g, g^{sk}, ..., g^{sk^n}]`.
    fn prefix(&self, b: &B, n: usize) -> Result<Vec<B::G>, LvsError> {
        if n > self.bound() {
            return Err(LvsError::BoundExceeded {
                needed: n,
                available: self.bound(),
            });
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(b.generator());
        out.extend_from_slice(&self.powers[..n]);
        Ok(out)
    }

    /// Checks `e(pk_i, g) = e(pk_{i-1}, pk_1)` along the whole chain.
    pub fn is_consistent(&self, b: &B) -> bool {
        let g = b.generator();
        self.powers
            .windows(2)
            .all(|w| b.pairing_eq(&[(&w[1], &g)], &[(&w[0], &self.powers[0])]))
    }

    pub fn encode(&self, b: &B) -> Vec<u8> {
        let mut out = Vec::new();
        put_u32(&mut out, self.powers.len() as u32);
        for p in &self.powers {
            put_bytes16(&mut out, &b.encode_g(p));
        }
        out
    }

    pub fn decode(b: &B, bytes: &[u8]) -> Result<Self, LvsError> {
        let mut r = Reader::new(bytes);
        let n = r.u32()? as usize;
        let powers = (0..n)
            .map(|_| b.decode_g(r.bytes16()?))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Self::from_powers(powers)
    }
}

#[derive(Debug, Clone)]
pub struct SignerKeyPair<B: PairingBackend> {
    sk: B::Scalar,
    pk: PowerKey<B>,
}

impl<B: PairingBackend> SignerKeyPair<B> {
    pub fn secret(&self) -> &B::Scalar {
        &self.sk
    }

    pub fn public(&self) -> &PowerKey<B> {
        &self.pk
    }
}

pub fn keygen<B: PairingBackend>(
    b: &B,
    bound: usize,
    rng: &mut dyn RngCore,
) -> Result<SignerKeyPair<B>, LvsError> {
    let sk = b.random_nonzero(rng);
    keygen_with_secret(b, sk, bound)
}

/// Derives the power chain for a caller-chosen secret.
pub fn keygen_with_secret<B: PairingBackend>(
    b: &B,
    sk: B::Scalar,
    bound: usize,
) -> Result<SignerKeyPair<B>, LvsError> {
    if bound == 0 {
        return Err(LvsError::ZeroBound);
    }
    let g = b.generator();
    let mut exponent = sk;
    let mut powers = Vec::with_capacity(bound);
    for _ in 0..bound {
        powers.push(b.pow(&g, &exponent));
        exponent = exponent * sk;
    }
    Ok(SignerKeyPair {
        sk,
        pk: PowerKey { powers },
    })
}

/// A signature together with the scalar it signs.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature<B: PairingBackend> {
    pub sigma: B::G,
    pub h: B::Scalar,
}

/// `g^{1/(sk+h)}`, kept on the left pairing slot.
pub fn sign<B: PairingBackend>(
    b: &B,
    sk: &B::Scalar,
    h: &B::Scalar,
) -> Result<Signature<B>, LvsError> {
    let exponent = (*sk + *h).inverse().map_err(|_| LvsError::DegenerateHash)?;
    Ok(Signature {
        sigma: b.pow(&b.generator_in(Slot::Left), &exponent),
        h: *h,
    })
}

/// `e(sigma, g^{sk} g^h) = e(g, g)`.
pub fn verify_single<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    sigma: &B::G,
    h: &B::Scalar,
) -> bool {
    let rhs = b.mul(
        &b.restrict(pk.base(), Slot::Right),
        &b.pow(&b.generator_in(Slot::Right), h),
    );
    b.pairing_eq_base(&[(sigma, &rhs)])
}

/// `sigma_hat = g^{1/prod(sk+h_i)}` over distinct member hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSignature<B: PairingBackend> {
    pub sigma_hat: B::G,
    pub member_hashes: Vec<B::Scalar>,
}

impl<B: PairingBackend> AggregateSignature<B> {
    pub fn len(&self) -> usize {
        self.member_hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_hashes.is_empty()
    }

    pub fn encode(&self, b: &B) -> Vec<u8> {
        let mut out = Vec::new();
        put_bytes16(&mut out, &b.encode_g(&self.sigma_hat));
        put_u32(&mut out, self.member_hashes.len() as u32);
        for h in &self.member_hashes {
            put_bytes16(&mut out, &b.encode_scalar(h));
        }
        out
    }

    pub fn decode(b: &B, bytes: &[u8]) -> Result<Self, LvsError> {
        let mut r = Reader::new(bytes);
        let sigma_hat = b.decode_g(r.bytes16()?)?;
        let n = r.u32()? as usize;
        let member_hashes = (0..n)
            .map(|_| b.decode_scalar(r.bytes16()?))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(Self {
            sigma_hat,
            member_hashes,
        })
    }
}

fn first_duplicate<S: PartialEq>(items: &[S]) -> Option<usize> {
    (1..items.len()).find(|&i| items[..i].contains(&items[i]))
}

/// Aggregates one signer's signatures: every member is checked first, then
/// `sigma_hat = prod sigma_i^{w_i}` with `w_i = 1/prod_{j != i}(h_j - h_i)`.
pub fn aggregate<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    items: &[Signature<B>],
    exec: Exec,
) -> Result<AggregateSignature<B>, LvsError> {
    if items.is_empty() {
        return Err(LvsError::Empty);
    }
    if items.len() > pk.bound() {
        return Err(LvsError::BoundExceeded {
            needed: items.len(),
            available: pk.bound(),
        });
    }
    let hashes: Vec<B::Scalar> = items.iter().map(|s| s.h).collect();
    if let Some(index) = first_duplicate(&hashes) {
        return Err(LvsError::DuplicateHash { index });
    }
    if !members_verify_batched(b, pk, items) {
        if let Some(index) = exec.first_failure(items, |s| verify_single(b, pk, &s.sigma, &s.h)) {
            return Err(LvsError::InvalidMember { index });
        }
    }
    let weights = partial_fraction_weights(&hashes, b.one())?;
    let sigmas: Vec<B::G> = items.iter().map(|s| s.sigma.clone()).collect();
    Ok(AggregateSignature {
        sigma_hat: b.msm(&sigmas, &weights),
        member_hashes: hashes,
    })
}

/// All member equations `e(sigma_i, g^{sk} g^{h_i}) = e(g, g)` at once, as
/// `e(prod sigma_i^{c_i}, g^{sk}) e(prod sigma_i^{c_i h_i}, g) = e(g^{sum c_i}, g)`
/// with hashed 128-bit weights `c_i`. Returns false on small groups, where
/// the weights would be too short to be sound, so callers fall back to one
/// check per member.
fn members_verify_batched<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    items: &[Signature<B>],
) -> bool {
    if items.len() < 2 || b.params().order_bits < 128 {
        return false;
    }
    let mut transcript = b.encode_g(pk.base());
    for s in items {
        transcript.extend(b.encode_g(&s.sigma));
        transcript.extend(b.encode_scalar(&s.h));
    }
    let weights = transcript_weights(b, b"EPASS-AGG-MEMBERS", &transcript, items.len());
    let sigmas: Vec<B::G> = items
        .iter()
        .map(|s| b.restrict(&s.sigma, Slot::Left))
        .collect();
    let weighted_h: Vec<B::Scalar> = weights.iter().zip(items).map(|(c, s)| *c * s.h).collect();
    let a = b.msm(&sigmas, &weights);
    let c = b.msm(&sigmas, &weighted_h);
    let total = weights.iter().fold(b.zero(), |acc, c| acc + *c);
    let g_right = b.generator_in(Slot::Right);
    b.pairing_eq(
        &[(&a, &b.restrict(pk.base(), Slot::Right)), (&c, &g_right)],
        &[(&b.pow(&b.generator_in(Slot::Left), &total), &g_right)],
    )
}

/// `e(sigma_hat, prod_k (g^{sk^k})^{delta_k}) = e(g, g)` where `delta` are the
/// coefficients of `prod_i (y + h_i)`.
pub fn verify_aggregate_full<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    agg: &AggregateSignature<B>,
) -> bool {
    if agg.member_hashes.is_empty() {
        return agg.sigma_hat == b.generator();
    }
    let Ok(bases) = pk.prefix(b, agg.member_hashes.len()) else {
        return false;
    };
    let bases: Vec<B::G> = bases.iter().map(|x| b.restrict(x, Slot::Right)).collect();
    let delta = expand_poly(&agg.member_hashes, b.one());
    let combined = b.msm(&bases, &delta);
    b.pairing_eq_base(&[(&agg.sigma_hat, &combined)])
}

/// Server-computable hints for checking the members in `subset` against an
/// aggregate. `powers[k] = g^{sk^k prod_{i not in subset}(sk + h_i)}` for
/// `k = 0..=|subset|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryInfo<B: PairingBackend> {
    pub subset: Vec<usize>,
    pub powers: Vec<B::G>,
}

impl<B: PairingBackend> AuxiliaryInfo<B> {
    pub fn encode(&self, b: &B) -> Vec<u8> {
        let mut out = Vec::new();
        put_u32(&mut out, self.subset.len() as u32);
        for &i in &self.subset {
            put_u32(&mut out, i as u32);
        }
        put_u32(&mut out, self.powers.len() as u32);
        for p in &self.powers {
            put_bytes16(&mut out, &b.encode_g(p));
        }
        out
    }

    pub fn decode(b: &B, bytes: &[u8]) -> Result<Self, LvsError> {
        let mut r = Reader::new(bytes);
        let n = r.u32()? as usize;
        let subset = (0..n)
            .map(|_| r.u32().map(|i| i as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let m = r.u32()? as usize;
        let powers = (0..m)
            .map(|_| b.decode_g(r.bytes16()?))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(Self { subset, powers })
    }
}

/// Derives the auxiliary information for `subset` (0-based member indices)
/// from public data only.
pub fn derive_aux<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    member_hashes: &[B::Scalar],
    subset: &[usize],
) -> Result<AuxiliaryInfo<B>, LvsError> {
    let len = member_hashes.len();
    if subset.is_empty() || first_duplicate(subset).is_some() {
        return Err(LvsError::BadSubset);
    }
    if let Some(&index) = subset.iter().find(|&&i| i >= len) {
        return Err(LvsError::IndexOutOfRange { index, len });
    }
    let complement: Vec<B::Scalar> = (0..len)
        .filter(|i| !subset.contains(i))
        .map(|i| member_hashes[i])
        .collect();
    // Highest power touched: deg(complement poly) + |subset| = len.
    let bases = pk.prefix(b, complement.len() + subset.len())?;
    let bases: Vec<B::G> = bases.iter().map(|x| b.restrict(x, Slot::Right)).collect();
    let coeffs = expand_poly(&complement, b.one());
    let powers = (0..=subset.len())
        .map(|k| b.msm(&bases[k..k + coeffs.len()], &coeffs))
        .collect();
    Ok(AuxiliaryInfo {
        subset: subset.to_vec(),
        powers,
    })
}

/// Singleton auxiliary information for every member at once; entry `j`
/// equals `derive_aux(.., &[j])`.
///
/// With `P(y) = prod_i (y + h_i)` and `Q_j = P / (y + h_j)`, the second
/// element `g^{sk Q_j(sk)}` is `g^{P(sk)} * (g^{Q_j(sk)})^{-h_j}`, so one
/// shared multi-exponentiation replaces one per member.
pub fn derive_member_aux<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    member_hashes: &[B::Scalar],
) -> Result<Vec<AuxiliaryInfo<B>>, LvsError> {
    let len = member_hashes.len();
    if len == 0 {
        return Err(LvsError::BadSubset);
    }
    if let Some(index) = first_duplicate(member_hashes) {
        return Err(LvsError::DuplicateHash { index });
    }
    let bases: Vec<B::G> = pk
        .prefix(b, len)?
        .iter()
        .map(|x| b.restrict(x, Slot::Right))
        .collect();
    let full = expand_poly(member_hashes, b.one());
    let g_p = b.msm(&bases, &full);
    member_hashes
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let quotient =
                divide_by_linear(&full, *h).expect("h_j is a root of the member polynomial");
            let first = b.msm(&bases[..len], &quotient);
            let second = b.mul(&g_p, &b.pow(&first, &-*h));
            Ok(AuxiliaryInfo {
                subset: vec![j],
                powers: vec![first, second],
            })
        })
        .collect()
}

/// `e(g^{sk}, aux_k) = e(g, aux_{k+1})` for every adjacent pair, that is
/// `aux_k = aux_0^{sk^k}` for every `k`.
///
/// On groups of cryptographic size the links are checked all at once:
/// `e(g, prod_k aux_k^{c_k}) = e(prod_k pk_k^{c_k}, aux_0)` with 128-bit
/// weights `c_k` hashed from the key and the whole auxiliary encoding. This
/// costs one multi-exponentiation on each side and two pairings however long
/// the chain is. A chain with any bad element passes only if the weights
/// happen to cancel the error, which the hash makes negligible. It relies on
/// the key's own powers being consistent, which [`PowerKey::is_consistent`]
/// establishes once per key. Small groups fall back to checking each pair.
pub fn check_aux_chain<B: PairingBackend>(b: &B, pk: &PowerKey<B>, aux: &AuxiliaryInfo<B>) -> bool {
    if aux.powers.len() != aux.subset.len() + 1 {
        return false;
    }
    match folded_chain(b, pk, aux, &chain_transcript(b, pk, aux)) {
        Some(fold) => b.pairing_eq(
            &[(&b.generator_in(Slot::Left), &fold.weighted_aux)],
            &[(&fold.weighted_key, &aux.powers[0])],
        ),
        None => pairwise_chain(b, pk, aux),
    }
}

fn pairwise_chain<B: PairingBackend>(b: &B, pk: &PowerKey<B>, aux: &AuxiliaryInfo<B>) -> bool {
    let base = b.restrict(pk.base(), Slot::Left);
    let g = b.generator_in(Slot::Left);
    aux.powers
        .windows(2)
        .all(|w| b.pairing_eq(&[(&base, &w[0])], &[(&g, &w[1])]))
}

/// `prod_{k>=1} aux_k^{c_k}` and `prod_{k>=1} pk_k^{c_k}` (the latter in the
/// left slot).
struct ChainFold<B: PairingBackend> {
    weighted_aux: B::G,
    weighted_key: B::G,
}

fn chain_transcript<B: PairingBackend>(b: &B, pk: &PowerKey<B>, aux: &AuxiliaryInfo<B>) -> Vec<u8> {
    let mut transcript = b.encode_g(pk.base());
    transcript.extend(aux.encode(b));
    transcript
}

/// `None` when the group is too small for hashed weights or the chain is
/// longer than the key.
fn folded_chain<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    aux: &AuxiliaryInfo<B>,
    transcript: &[u8],
) -> Option<ChainFold<B>> {
    let n = aux.powers.len().checked_sub(1)?;
    if n == 0 || n > pk.bound() || b.params().order_bits < 128 {
        return None;
    }
    let weights = transcript_weights(b, b"EPASS-AUX-CHAIN", transcript, n);
    let key: Vec<B::G> = pk.powers[..n]
        .iter()
        .map(|p| b.restrict(p, Slot::Left))
        .collect();
    Some(ChainFold {
        weighted_aux: b.msm(&aux.powers[1..], &weights),
        weighted_key: b.msm(&key, &weights),
    })
}

/// `n` weights below `2^128` derived from a domain tag and a transcript.
/// Only called on groups of at least 128 bits.
fn transcript_weights<B: PairingBackend>(
    b: &B,
    domain: &[u8],
    transcript: &[u8],
    n: usize,
) -> Vec<B::Scalar> {
    use sha2::{Digest, Sha256};
    let seed: [u8; 32] = Sha256::new()
        .chain_update(domain)
        .chain_update(transcript)
        .finalize()
        .into();
    let mut buf = vec![0u8; b.scalar_len()];
    let tail = buf.len() - 16;
    (0..n)
        .map(|k| {
            let d = Sha256::new()
                .chain_update(seed)
                .chain_update((k as u64).to_be_bytes())
                .finalize();
            buf[tail..].copy_from_slice(&d[..16]);
            b.scalar_from_be_bytes(&buf)
                .expect("128-bit value is canonical in a group of at least 128 bits")
        })
        .collect()
}

/// `e(sigma_hat, prod_k aux_k^{delta_k}) = e(g, g)` with `delta` the
/// coefficients of `prod_{h in subset_hashes}(y + h)`.
pub fn check_subset_equation<B: PairingBackend>(
    b: &B,
    sigma_hat: &B::G,
    aux: &AuxiliaryInfo<B>,
    subset_hashes: &[B::Scalar],
) -> bool {
    if subset_hashes.len() != aux.subset.len() || aux.powers.len() != subset_hashes.len() + 1 {
        return false;
    }
    let delta = expand_poly(subset_hashes, b.one());
    let combined = b.msm(&aux.powers, &delta);
    b.pairing_eq_base(&[(sigma_hat, &combined)])
}

/// Local verification of the members named by `aux` against `sigma_hat`:
/// [`check_aux_chain`] and [`check_subset_equation`] together.
///
/// On groups of cryptographic size both are merged into one product of three
/// pairings, the chain part raised to a hashed 128-bit exponent `mu`:
/// `e(g^mu, prod aux_k^{c_k}) e(prod pk_k^{-mu c_k}, aux_0)
///  e(sigma_hat, prod aux_k^{delta_k}) = e(g, g)`.
pub fn verify_subset<B: PairingBackend>(
    b: &B,
    pk: &PowerKey<B>,
    sigma_hat: &B::G,
    aux: &AuxiliaryInfo<B>,
    subset_hashes: &[B::Scalar],
) -> bool {
    if subset_hashes.len() != aux.subset.len() || aux.powers.len() != subset_hashes.len() + 1 {
        return false;
    }
    let mut transcript = chain_transcript(b, pk, aux);
    let Some(fold) = folded_chain(b, pk, aux, &transcript) else {
        return check_aux_chain(b, pk, aux)
            && check_subset_equation(b, sigma_hat, aux, subset_hashes);
    };
    b.write_g(sigma_hat, &mut transcript);
    for h in subset_hashes {
        transcript.extend(b.encode_scalar(h));
    }
    let mu = transcript_weights(b, b"EPASS-SUBSET", &transcript, 1)[0];
    let delta = expand_poly(subset_hashes, b.one());
    let combined = b.msm(&aux.powers, &delta);
    let g_mu = b.pow(&b.generator_in(Slot::Left), &mu);
    let key_mu = b.pow(&fold.weighted_key, &-mu);
    b.pairing_eq_base(&[
        (&g_mu, &fold.weighted_aux),
        (&key_mu, &aux.powers[0]),
        (sigma_hat, &combined),
    ])
}

#[cfg(test)]
mod tests;
