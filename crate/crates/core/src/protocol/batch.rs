//! Batched miner-side checks for many redactions at once.
//!
//! Each redaction must satisfy two equations: the chameleon opening
//! `g^{H(m')} pk_h^{r'} = h` and the provider signature
//! `e(sigma', pk_p g^{h'}) = e(g, g)`. Raising each equation to an
//! independent random 64-bit exponent and multiplying them together gives
//! one multi-scalar multiplication for all openings and a single
//! multi-pairing for all signatures. A forged member slips through with
//! probability about `2^-64`. Groups whose order is too small for that bound
//! (the toy backend) are checked member by member instead. When the combined
//! check fails, every member is rechecked individually so the caller learns
//! which ones are bad.

use std::collections::BTreeMap;

use rand::RngCore;

use super::scalarize;
use crate::chameleon;
use crate::exec::Exec;
use crate::group::{PairingBackend, Slot};
use crate::lvs::{self, PowerKey, Signature};

/// One redaction as the miner sees it.
#[derive(Debug, Clone)]
pub struct RedactionCheck<'a, B: PairingBackend> {
    pub pk_h: &'a B::G,
    pub provider_pk: &'a PowerKey<B>,
    /// Canonical encoding of `(ID, tx')`.
    pub message: Vec<u8>,
    pub h: &'a B::G,
    pub r: &'a B::Scalar,
    pub signature: &'a Signature<B>,
}

impl<B: PairingBackend> RedactionCheck<'_, B> {
    pub fn verify_individually(&self, b: &B) -> bool {
        self.signature.h == scalarize(b, self.h)
            && chameleon::ch_verify(b, self.pk_h, &self.message, self.h, self.r)
            && lvs::verify_single(
                b,
                self.provider_pk,
                &self.signature.sigma,
                &self.signature.h,
            )
    }
}

/// Indices of the checks that fail; empty when all pass.
pub fn verify_redactions_batch<B: PairingBackend>(
    b: &B,
    checks: &[RedactionCheck<'_, B>],
    rng: &mut dyn RngCore,
    exec: Exec,
) -> Vec<usize> {
    if checks.is_empty() {
        return Vec::new();
    }
    if b.params().order_bits < 128 || !combined_check(b, checks, rng, exec) {
        return exec
            .map_indexed(checks.len(), |i| (i, checks[i].verify_individually(b)))
            .into_iter()
            .filter_map(|(i, ok)| (!ok).then_some(i))
            .collect();
    }
    Vec::new()
}

fn combined_check<B: PairingBackend>(
    b: &B,
    checks: &[RedactionCheck<'_, B>],
    rng: &mut dyn RngCore,
    exec: Exec,
) -> bool {
    // Per-member hashing: the message digest, and the binding of the signed
    // scalar to the chameleon digest.
    let digests = exec.map(checks, |c| {
        (c.signature.h == scalarize(b, c.h)).then(|| b.hash_to_scalar(&c.message))
    });
    let Some(digests) = digests.into_iter().collect::<Option<Vec<_>>>() else {
        return false;
    };
    let weights: Vec<B::Scalar> = checks
        .iter()
        .map(|_| b.scalar_from_u64(rng.next_u64() | 1))
        .collect();

    // Openings: g^{sum c_i d_i} * prod_keys pk^{sum c_i r_i} * prod h_i^{-c_i} = 1.
    let mut key_index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut keys: Vec<B::G> = Vec::new();
    let mut key_coeff: Vec<B::Scalar> = Vec::new();
    let mut g_coeff = b.zero();
    for ((c, d), w) in checks.iter().zip(&digests).zip(&weights) {
        g_coeff = g_coeff + *w * *d;
        let slot = *key_index.entry(b.encode_g(c.pk_h)).or_insert_with(|| {
            keys.push(b.restrict(c.pk_h, Slot::Left));
            key_coeff.push(b.zero());
            keys.len() - 1
        });
        key_coeff[slot] = key_coeff[slot] + *w * *c.r;
    }
    let mut bases = Vec::with_capacity(1 + keys.len() + checks.len());
    let mut scalars = Vec::with_capacity(bases.capacity());
    bases.push(b.generator_in(Slot::Left));
    scalars.push(g_coeff);
    bases.extend(keys);
    scalars.extend(key_coeff);
    for (c, w) in checks.iter().zip(&weights) {
        bases.push(b.restrict(c.h, Slot::Left));
        scalars.push(-*w);
    }
    if !b.is_identity(&b.msm(&bases, &scalars)) {
        return false;
    }

    // Signatures: prod_p e(A_p, pk_p) * e(B, g) = e(g^{sum c_i}, g) with
    // A_p = prod sigma_i^{c_i} over provider p and B = prod sigma_i^{c_i h_i}.
    let mut provider_index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    // Per provider: its key base, then the signatures and weights it signed.
    type ProviderTerms<B> = (
        <B as PairingBackend>::G,
        Vec<<B as PairingBackend>::G>,
        Vec<<B as PairingBackend>::Scalar>,
    );
    let mut providers: Vec<ProviderTerms<B>> = Vec::new();
    let mut sigmas = Vec::with_capacity(checks.len());
    let mut sigma_h = Vec::with_capacity(checks.len());
    let mut total = b.zero();
    for (c, w) in checks.iter().zip(&weights) {
        let sigma = b.restrict(&c.signature.sigma, Slot::Left);
        let slot = *provider_index
            .entry(b.encode_g(c.provider_pk.base()))
            .or_insert_with(|| {
                providers.push((
                    b.restrict(c.provider_pk.base(), Slot::Right),
                    Vec::new(),
                    Vec::new(),
                ));
                providers.len() - 1
            });
        providers[slot].1.push(sigma.clone());
        providers[slot].2.push(*w);
        sigmas.push(sigma);
        sigma_h.push(*w * c.signature.h);
        total = total + *w;
    }
    let a: Vec<(B::G, B::G)> = providers
        .iter()
        .map(|(pk, s, w)| (b.msm(s, w), pk.clone()))
        .collect();
    let combined_b = b.msm(&sigmas, &sigma_h);
    let g_right = b.generator_in(Slot::Right);
    let g_total = b.pow(&b.generator_in(Slot::Left), &total);
    let mut lhs: Vec<(&B::G, &B::G)> = a.iter().map(|(x, y)| (x, y)).collect();
    lhs.push((&combined_b, &g_right));
    b.pairing_eq(&lhs, &[(&g_total, &g_right)])
}
