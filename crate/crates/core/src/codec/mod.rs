//! Finite-length codes, disjoint per-user receivers and the broadcast Monte
//! Carlo harness.
//!
//! Code bits map `0 -> +1`, `1 -> -1`. LLRs are `ln p(.|0) / p(.|1)`.

mod decoder;
mod encoder;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{modulate, transmit, ChannelConfig, Demapper, LabelingRule, User};
use crate::ensemble::{sample_parity_check, DegreeDistribution, ParityCheckMatrix};
use crate::error::{Error, Result};

pub use decoder::{DecodeOutcome, SumProductDecoder};
use encoder::Encoder;

pub const DEFAULT_DECODER_ITERATIONS: usize = 200;

/// A parity-check matrix with its encoder and decoder layout.
#[derive(Debug, Clone)]
pub struct CodeInstance {
    h: ParityCheckMatrix,
    encoder: Encoder,
    decoder: SumProductDecoder,
}

impl CodeInstance {
    pub fn from_matrix(h: ParityCheckMatrix) -> Result<Self> {
        let encoder = Encoder::build(&h)?;
        let decoder = SumProductDecoder::new(&h);
        let deficiency = h.m - encoder.rank();
        if deficiency > 0 {
            warn!("parity-check matrix has {deficiency} redundant rows; k = {}", encoder.dimension());
        }
        Ok(Self { h, encoder, decoder })
    }

    /// Samples a matrix from `dd` at length `n` and builds the code.
    pub fn sample(dd: &DegreeDistribution, n: usize, seed: u64) -> Result<Self> {
        Self::from_matrix(sample_parity_check(dd, n, seed)?)
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.n
    }

    /// Number of information bits, `n - rank(H)`.
    pub fn k(&self) -> usize {
        self.encoder.dimension()
    }

    pub fn rank(&self) -> usize {
        self.encoder.rank()
    }

    /// `m - rank(H)`; each redundant row adds one information bit over the
    /// nominal `n - m`.
    pub fn rank_deficiency(&self) -> usize {
        self.h.m - self.encoder.rank()
    }

    /// Codeword positions carrying the message, in message order.
    pub fn information_positions(&self) -> &[u32] {
        self.encoder.info_positions()
    }

    /// Codeword in 0/1 form.
    pub fn encode_bits(&self, message: &[u8]) -> Result<Vec<u8>> {
        self.encoder.encode(&self.h, message)
    }

    /// Codeword in the `+1/-1` channel alphabet.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<i8>> {
        Ok(self.encode_bits(message)?.into_iter().map(|b| 1 - 2 * b as i8).collect())
    }

    pub fn decode(&self, llrs: &[f64], max_iter: usize) -> Result<DecodeOutcome> {
        self.decoder.decode(llrs, max_iter)
    }

    pub fn extract_message(&self, word: &[u8]) -> Vec<u8> {
        self.information_positions().iter().map(|&p| word[p as usize]).collect()
    }
}

/// Per-position coset bits: the transmitter sends `c xor s`, the receiver
/// flips the sign of LLRs where `s = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScramblingSequence {
    pub seed: u64,
    bits: Vec<u8>,
}

impl ScramblingSequence {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            seed,
            bits: (0..n).map(|_| rng.gen::<bool>() as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `+1/-1` signs, `-1` where the sequence flips.
    pub fn signs(&self) -> Vec<i8> {
        self.bits.iter().map(|&b| 1 - 2 * b as i8).collect()
    }

    pub fn scramble(&self, word: &mut [u8]) {
        word.iter_mut().zip(&self.bits).for_each(|(w, s)| *w ^= s);
    }

    pub fn descramble_llrs(&self, llrs: &mut [f64]) {
        llrs.iter_mut().zip(&self.bits).filter(|(_, &s)| s == 1).for_each(|(l, _)| *l = -*l);
    }
}

/// Everything one user needs to decode: its own code, its own scrambling
/// sequence and its own demapper. Nothing here refers to the other user's
/// code.
#[derive(Debug, Clone)]
pub struct UserReceiver {
    user: User,
    code: Arc<CodeInstance>,
    scrambler: Option<ScramblingSequence>,
    demapper: Demapper,
    max_iter: usize,
}

impl UserReceiver {
    pub fn new(
        user: User,
        code: Arc<CodeInstance>,
        scrambler: Option<ScramblingSequence>,
        cfg: &ChannelConfig,
        rule: LabelingRule,
        max_iter: usize,
    ) -> Result<Self> {
        if let Some(s) = &scrambler {
            if s.len() != code.n() {
                return Err(Error::LengthMismatch {
                    expected: code.n(),
                    actual: s.len(),
                });
            }
        }
        Ok(Self {
            user,
            code,
            scrambler,
            demapper: Demapper::for_user(cfg, rule, user),
            max_iter,
        })
    }

    pub fn user(&self) -> User {
        self.user
    }

    pub fn code(&self) -> &Arc<CodeInstance> {
        &self.code
    }

    /// Bitwise LLRs of this user's bits, descrambled.
    pub fn llrs(&self, received: &[f64]) -> Vec<f64> {
        let mut l: Vec<f64> = received.iter().map(|&y| self.demapper.llr(y)).collect();
        if let Some(s) = &self.scrambler {
            s.descramble_llrs(&mut l);
        }
        l
    }

    pub fn receive(&self, received: &[f64]) -> Result<DecodeOutcome> {
        self.code.decode(&self.llrs(received), self.max_iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub trials: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub scrambling: bool,
    /// Send the all-zero codeword instead of random messages.
    pub all_zero_messages: bool,
}

impl SimulationOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            max_iter: DEFAULT_DECODER_ITERATIONS,
            scrambling: true,
            all_zero_messages: false,
        }
    }
}

/// Per-user outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub user: User,
    pub bit_errors: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub k: usize,
    pub bits: u64,
    pub bit_errors: u64,
    pub blocks: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub bler: f64,
    pub ber_ci95: [f64; 2],
    pub bler_ci95: [f64; 2],
    pub avg_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ChannelConfig,
    pub rule: LabelingRule,
    pub n: usize,
    pub trials: usize,
    pub options: SimulationOptions,
    pub per_user: BTreeMap<User, UserStats>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn write_trial_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "trial,user,bit_errors,iterations,converged")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{},{}", r.trial, r.user, r.bit_errors, r.iterations, r.converged)?;
        }
        Ok(())
    }
}

/// Wilson score interval at 95 % for `successes` out of `total`.
pub fn wilson_ci95(successes: u64, total: u64) -> [f64; 2] {
    if total == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054;
    let n = total as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == total { 1.0 } else { (centre + half).min(1.0) };
    [lo, hi]
}

/// Stream ids reserved for the scrambling sequences; trials use `trial + 1`.
const SCRAMBLE_STREAM_Y: u64 = u64::MAX;
const SCRAMBLE_STREAM_Z: u64 = u64::MAX - 1;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeded scrambling sequence for `user`, as used by [`simulate_broadcast`].
pub fn scrambling_for(user: User, n: usize, seed: u64) -> ScramblingSequence {
    let stream = match user {
        User::Y => SCRAMBLE_STREAM_Y,
        User::Z => SCRAMBLE_STREAM_Z,
    };
    ScramblingSequence::new(n, stream_rng(seed, stream).gen())
}

fn random_bits(rng: &mut ChaCha8Rng, k: usize) -> Vec<u8> {
    (0..k).map(|_| rng.gen::<bool>() as u8).collect()
}

/// Superposition transmitter: encodes, scrambles and modulates both users.
#[derive(Debug, Clone)]
pub struct Transmitter {
    code_y: Arc<CodeInstance>,
    code_z: Arc<CodeInstance>,
    scrambler_y: Option<ScramblingSequence>,
    scrambler_z: Option<ScramblingSequence>,
    cfg: ChannelConfig,
    rule: LabelingRule,
}

impl Transmitter {
    pub fn new(
        cfg: ChannelConfig,
        rule: LabelingRule,
        code_y: Arc<CodeInstance>,
        code_z: Arc<CodeInstance>,
        scrambler_y: Option<ScramblingSequence>,
        scrambler_z: Option<ScramblingSequence>,
    ) -> Result<Self> {
        if code_y.n() != code_z.n() {
            return Err(Error::LengthMismatch {
                expected: code_y.n(),
                actual: code_z.n(),
            });
        }
        Ok(Self {
            code_y,
            code_z,
            scrambler_y,
            scrambler_z,
            cfg,
            rule,
        })
    }

    /// Returns the channel symbols and the two unscrambled codewords.
    pub fn send(&self, msg_y: &[u8], msg_z: &[u8]) -> Result<(Vec<f64>, Vec<u8>, Vec<u8>)> {
        let cw_y = self.code_y.encode_bits(msg_y)?;
        let cw_z = self.code_z.encode_bits(msg_z)?;
        let tx = |cw: &[u8], s: &Option<ScramblingSequence>| -> Vec<i8> {
            let mut w = cw.to_vec();
            if let Some(s) = s {
                s.scramble(&mut w);
            }
            w.into_iter().map(|b| 1 - 2 * b as i8).collect()
        };
        let x = modulate(&tx(&cw_y, &self.scrambler_y), &tx(&cw_z, &self.scrambler_z), &self.cfg, self.rule)?;
        Ok((x, cw_y, cw_z))
    }
}

/// Monte Carlo over `opts.trials` independent blocks. Each receiver decodes
/// only its own code from its own channel output.
pub fn simulate_broadcast(
    cfg: &ChannelConfig,
    rule: LabelingRule,
    code_y: Arc<CodeInstance>,
    code_z: Arc<CodeInstance>,
    opts: &SimulationOptions,
) -> Result<SimulationReport> {
    cfg.validate()?;
    let n = code_y.n();
    let scr = |user| opts.scrambling.then(|| scrambling_for(user, n, opts.seed));
    let transmitter = Transmitter::new(*cfg, rule, code_y.clone(), code_z.clone(), scr(User::Y), scr(User::Z))?;
    let rx_y = UserReceiver::new(User::Y, code_y.clone(), scr(User::Y), cfg, rule, opts.max_iter)?;
    let rx_z = UserReceiver::new(User::Z, code_z.clone(), scr(User::Z), cfg, rule, opts.max_iter)?;

    let run_trial = |trial: usize| -> Result<[TrialRecord; 2]> {
        let mut rng = stream_rng(opts.seed, trial as u64 + 1);
        let (msg_y, msg_z) = if opts.all_zero_messages {
            (vec![0; code_y.k()], vec![0; code_z.k()])
        } else {
            (random_bits(&mut rng, code_y.k()), random_bits(&mut rng, code_z.k()))
        };
        let (x, cw_y, cw_z) = transmitter.send(&msg_y, &msg_z)?;
        let mut records = [None, None];
        for (slot, (rx, cw)) in [(&rx_y, &cw_y), (&rx_z, &cw_z)].into_iter().enumerate() {
            let y = transmit(&x, cfg.gain(rx.user()), cfg.noise_variance, rng.gen())?;
            let out = rx.receive(&y)?;
            let code = rx.code();
            let sent = code.extract_message(cw);
            let got = code.extract_message(&out.bits);
            let bit_errors = sent.iter().zip(&got).filter(|(a, b)| a != b).count();
            records[slot] = Some(TrialRecord {
                trial,
                user: rx.user(),
                bit_errors,
                iterations: out.iterations,
                converged: out.converged,
            });
        }
        Ok(records.map(|r| r.expect("both users decoded")))
    };

    let records: Vec<TrialRecord> = (0..opts.trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut per_user = BTreeMap::new();
    for (user, k) in [(User::Y, code_y.k()), (User::Z, code_z.k())] {
        let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.user == user).collect();
        let blocks = mine.len() as u64;
        let bits = blocks * k as u64;
        let bit_errors: u64 = mine.iter().map(|r| r.bit_errors as u64).sum();
        let block_errors = mine.iter().filter(|r| r.bit_errors > 0).count() as u64;
        let iters: u64 = mine.iter().map(|r| r.iterations as u64).sum();
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        per_user.insert(
            user,
            UserStats {
                k,
                bits,
                bit_errors,
                blocks,
                block_errors,
                ber: ratio(bit_errors, bits),
                bler: ratio(block_errors, blocks),
                ber_ci95: wilson_ci95(bit_errors, bits),
                bler_ci95: wilson_ci95(block_errors, blocks),
                avg_iterations: ratio(iters, blocks),
            },
        );
    }
    Ok(SimulationReport {
        config: *cfg,
        rule,
        n,
        trials: opts.trials,
        options: *opts,
        per_user,
        records,
    })
}
