//! D2D channel simulation and the power-control objective.
//!
//! Scenario: K transmitter-receiver pairs in a square area. Channel gains
//! combine log-distance path loss with exponential (Rayleigh power) fading.
//! The objective is the sum of per-link Shannon rates under mutual
//! interference; WMMSE with a fixed iteration budget is the benchmark
//! optimizer, full power and uniform-random power the sanity baselines.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, WirelessGraph};
use crate::{contract, data_err, Result};

pub const LN_2: f64 = std::f64::consts::LN_2;

/// Scenario geometry and physics. All constants live here, not in code, so a
/// config file fully determines a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Number of D2D pairs (graph nodes).
    pub k_pairs: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Per-transmitter power budget, watts.
    pub p_max: f64,
    /// Receiver noise power, dBm.
    pub noise_dbm: f64,
    /// Transmitter-receiver separation range, meters.
    pub pair_dist_min: f64,
    pub pair_dist_max: f64,
    pub pathloss_tag: String,
    /// PL(d) dB = const + slope·log10(d / 1 km).
    pub pathloss_const_db: f64,
    pub pathloss_slope_db: f64,
    pub fading: String,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            k_pairs: 20,
            area_side: 500.0,
            p_max: 1.0,
            noise_dbm: -104.0,
            pair_dist_min: 2.0,
            pair_dist_max: 65.0,
            pathloss_tag: "log-distance".into(),
            pathloss_const_db: 148.1,
            pathloss_slope_db: 37.6,
            fading: "rayleigh".into(),
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_pairs == 0 {
            return Err(contract("k_pairs must be at least 1"));
        }
        if !(self.area_side > 0.0) || !(self.p_max > 0.0) {
            return Err(contract("area_side and p_max must be positive"));
        }
        if !(self.pair_dist_min < self.pair_dist_max) || !(self.pair_dist_min >= 0.0) {
            return Err(contract("pair distance range must satisfy 0 <= min < max"));
        }
        Ok(())
    }

    pub fn noise_watts(&self) -> f64 {
        noise_power(self.noise_dbm)
    }
}

/// dBm → watts.
pub fn noise_power(noise_dbm: f64) -> f64 {
    10f64.powf((noise_dbm - 30.0) / 10.0)
}

/// One K×K gain matrix; `h(j, k)` is transmitter j → receiver k, linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    k: usize,
    h: Vec<f64>, // row-major
}

impl ChannelRealization {
    pub fn new(k: usize, h: Vec<f64>) -> Result<Self> {
        if h.len() != k * k {
            return Err(data_err(format!("gain matrix length {} is not {k}×{k}", h.len())));
        }
        Ok(ChannelRealization { k, h })
    }

    pub fn k_pairs(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn h(&self, j: usize, k: usize) -> f64 {
        self.h[j * self.k + k]
    }

    pub fn gains(&self) -> &[f64] {
        &self.h
    }

    pub fn to_graph(&self) -> Result<WirelessGraph> {
        build_graph(&self.h, self.k)
    }
}

fn pathloss_gain(cfg: &ScenarioConfig, d_meters: f64) -> f64 {
    let d = d_meters.max(1.0); // floor avoids the near-field singularity
    let pl_db = cfg.pathloss_const_db + cfg.pathloss_slope_db * (d / 1000.0).log10();
    10f64.powf(-pl_db / 10.0)
}

/// Transmitter positions uniform in the square; each receiver uniform on the
/// annulus around its transmitter, redrawn until it lands inside the area
/// (after 1000 misses it is clamped in, a practically unreachable fallback).
fn draw_positions(cfg: &ScenarioConfig, rng: &mut impl Rng) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let a = cfg.area_side;
    let tx: Vec<(f64, f64)> =
        (0..cfg.k_pairs).map(|_| (rng.gen_range(0.0..a), rng.gen_range(0.0..a))).collect();
    let (r2min, r2max) = (cfg.pair_dist_min.powi(2), cfg.pair_dist_max.powi(2));
    let rx = tx
        .iter()
        .map(|&(x, y)| {
            let mut fallback = (x, y);
            for _ in 0..1000 {
                let r = (rng.gen_range(0.0..1.0f64) * (r2max - r2min) + r2min).sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                let cand = (x + r * phi.cos(), y + r * phi.sin());
                fallback = cand;
                if (0.0..=a).contains(&cand.0) && (0.0..=a).contains(&cand.1) {
                    return cand;
                }
            }
            (fallback.0.clamp(0.0, a), fallback.1.clamp(0.0, a))
        })
        .collect();
    (tx, rx)
}

pub fn generate_realization(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<ChannelRealization> {
    cfg.validate()?;
    let k = cfg.k_pairs;
    let (tx, rx) = draw_positions(cfg, rng);
    let mut h = vec![0.0; k * k];
    for j in 0..k {
        for i in 0..k {
            let d = ((tx[j].0 - rx[i].0).powi(2) + (tx[j].1 - rx[i].1).powi(2)).sqrt();
            let fading: f64 = Exp1.sample(rng);
            h[j * k + i] = pathloss_gain(cfg, d) * fading.max(1e-300);
        }
    }
    ChannelRealization::new(k, h)
}

/// Σ_k log2(1 + p_k·h_kk / (Σ_{j≠k} p_j·h_jk + σ²)), bits/s/Hz.
pub fn sum_rate(p: &[f64], ch: &ChannelRealization, sigma2: f64) -> Result<f64> {
    check_power_vec(p, ch, sigma2)?;
    let mut total = 0.0;
    for k in 0..ch.k {
        let (signal, interference) = link_terms(p, ch, k);
        total += (1.0 + signal / (interference + sigma2)).log2();
    }
    Ok(total)
}

/// Sum-rate and its gradient w.r.t. every power, in closed form:
/// ∂R/∂p_m = h_mm/(ln2·T_m) − Σ_{k≠m} h_mk·S_k/(ln2·T_k·D_k)
/// with S_k = p_k·h_kk, D_k = interference_k + σ², T_k = S_k + D_k.
pub fn sum_rate_grad(p: &[f64], ch: &ChannelRealization, sigma2: f64) -> Result<(f64, Vec<f64>)> {
    check_power_vec(p, ch, sigma2)?;
    let k_n = ch.k;
    let mut s = vec![0.0; k_n];
    let mut d = vec![0.0; k_n];
    let mut rate = 0.0;
    for k in 0..k_n {
        let (signal, interference) = link_terms(p, ch, k);
        s[k] = signal;
        d[k] = interference + sigma2;
        rate += (1.0 + signal / d[k]).log2();
    }
    let mut grad = vec![0.0; k_n];
    for m in 0..k_n {
        let mut g = ch.h(m, m) / (LN_2 * (s[m] + d[m]));
        for k in 0..k_n {
            if k != m {
                g -= ch.h(m, k) * s[k] / (LN_2 * (s[k] + d[k]) * d[k]);
            }
        }
        grad[m] = g;
    }
    Ok((rate, grad))
}

/// Training objective: negative sum-rate (and its gradient).
pub fn loss_grad(p: &[f64], ch: &ChannelRealization, sigma2: f64) -> Result<(f64, Vec<f64>)> {
    let (rate, mut grad) = sum_rate_grad(p, ch, sigma2)?;
    for g in &mut grad {
        *g = -*g;
    }
    Ok((-rate, grad))
}

fn link_terms(p: &[f64], ch: &ChannelRealization, k: usize) -> (f64, f64) {
    let mut interference = 0.0;
    for j in 0..ch.k {
        if j != k {
            interference += p[j] * ch.h(j, k);
        }
    }
    (p[k] * ch.h(k, k), interference)
}

fn check_power_vec(p: &[f64], ch: &ChannelRealization, sigma2: f64) -> Result<()> {
    if p.len() != ch.k {
        return Err(contract(format!("power vector length {} vs {} links", p.len(), ch.k)));
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(contract("powers must be non-negative and finite"));
    }
    if !(sigma2 > 0.0) {
        return Err(contract("noise power must be positive"));
    }
    Ok(())
}

/// Scalar-channel WMMSE. Returns the final powers p_k = v_k².
pub fn wmmse(ch: &ChannelRealization, p_max: f64, sigma2: f64, iters: usize) -> Result<Vec<f64>> {
    Ok(wmmse_history(ch, p_max, sigma2, iters)?.0)
}

/// WMMSE plus the sum-rate measured after every iteration (monotonicity is a
/// tested property of the block-coordinate updates).
///
/// The block-coordinate iteration only descends within the basin its start
/// belongs to, and under strong cross-interference the full-power start can
/// sit in the wrong one (the classic case: a near-symmetric pair whose
/// optimum silences one link). So the fixed iteration budget is spent once
/// from the standard full-power start and once from each single-link corner
/// (one link at full power, the rest silenced; these are fixed points of the
/// same update, since a silenced link has u = 0 and a zero v-numerator), and
/// the run with the best final sum-rate wins. Ties keep the full-power run,
/// so the selection is deterministic.
pub fn wmmse_history(
    ch: &ChannelRealization,
    p_max: f64,
    sigma2: f64,
    iters: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p_max > 0.0) || !(sigma2 > 0.0) {
        return Err(contract("p_max and noise power must be positive"));
    }
    let k_n = ch.k;
    let vmax = p_max.sqrt();
    let mut best = wmmse_run(ch, sigma2, iters, vec![vmax; k_n], vmax)?;
    for active in 0..k_n {
        let mut v0 = vec![0.0; k_n];
        v0[active] = vmax;
        let cand = wmmse_run(ch, sigma2, iters, v0, vmax)?;
        let (cand_final, best_final) = match (cand.1.last(), best.1.last()) {
            (Some(&c), Some(&b)) => (c, b),
            _ => break, // iters == 0: every start returns its init unchanged
        };
        if cand_final > best_final {
            best = cand;
        }
    }
    Ok(best)
}

/// One pass of the block-coordinate updates from the given start, recording
/// the sum-rate after every iteration.
fn wmmse_run(
    ch: &ChannelRealization,
    sigma2: f64,
    iters: usize,
    mut v: Vec<f64>,
    vmax: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k_n = ch.k;
    let mut u = vec![0.0; k_n];
    let mut w = vec![0.0; k_n];
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        for k in 0..k_n {
            let mut den = sigma2;
            for j in 0..k_n {
                den += ch.h(j, k) * v[j] * v[j];
            }
            u[k] = ch.h(k, k).sqrt() * v[k] / den;
        }
        for k in 0..k_n {
            // e_k = 1 − u_k·√h_kk·v_k ∈ (0, 1] because σ² > 0.
            w[k] = 1.0 / (1.0 - u[k] * ch.h(k, k).sqrt() * v[k]);
        }
        for k in 0..k_n {
            let mut den = 0.0;
            for j in 0..k_n {
                den += ch.h(k, j) * u[j] * u[j] * w[j];
            }
            v[k] = (w[k] * u[k] * ch.h(k, k).sqrt() / den).clamp(0.0, vmax);
        }
        let p: Vec<f64> = v.iter().map(|x| x * x).collect();
        history.push(sum_rate(&p, ch, sigma2)?);
    }
    Ok((v.iter().map(|x| x * x).collect(), history))
}

pub fn max_power(ch: &ChannelRealization, p_max: f64) -> Vec<f64> {
    vec![p_max; ch.k]
}

pub fn random_power(ch: &ChannelRealization, p_max: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..ch.k).map(|_| rng.gen_range(0.0..p_max)).collect()
}

/// A generated split: config snapshot plus its realizations.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: ScenarioConfig,
    pub split: String,
    pub realizations: Vec<ChannelRealization>,
}

/// Generates `count` realizations from one seeded stream.
pub fn generate_dataset(
    cfg: &ScenarioConfig,
    split: &str,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Dataset> {
    let realizations = (0..count)
        .map(|_| generate_realization(cfg, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { config: cfg.clone(), split: split.into(), realizations })
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    config: ScenarioConfig,
    split: String,
    count: usize,
    bin_file: String,
}

/// Writes `<path>` (JSON metadata) and a sibling binary of little-endian
/// f64 gains, row-major K×K per realization in sequence. Round-trips
/// bit-exactly.
pub fn save_dataset(ds: &Dataset, json_path: &Path) -> Result<()> {
    for r in &ds.realizations {
        if r.k_pairs() != ds.config.k_pairs {
            return Err(data_err("realization size differs from config k_pairs"));
        }
    }
    let bin_path = sibling_bin(json_path);
    let meta = DatasetMeta {
        config: ds.config.clone(),
        split: ds.split.clone(),
        count: ds.realizations.len(),
        bin_file: bin_path.file_name().unwrap().to_string_lossy().into_owned(),
    };
    let mut f = std::fs::File::create(json_path)?;
    f.write_all(serde_json::to_string_pretty(&meta)?.as_bytes())?;
    f.write_all(b"\n")?;

    let mut bin = std::io::BufWriter::new(std::fs::File::create(&bin_path)?);
    for r in &ds.realizations {
        for &g in r.gains() {
            bin.write_all(&g.to_le_bytes())?;
        }
    }
    bin.flush()?;
    Ok(())
}

pub fn load_dataset(json_path: &Path) -> Result<Dataset> {
    let raw = std::fs::read_to_string(json_path)
        .map_err(|e| data_err(format!("cannot read {}: {e}", json_path.display())))?;
    let meta: DatasetMeta = serde_json::from_str(&raw)
        .map_err(|e| data_err(format!("bad metadata in {}: {e}", json_path.display())))?;
    let bin_path = json_path.with_file_name(&meta.bin_file);
    let mut bytes = Vec::new();
    std::fs::File::open(&bin_path)
        .map_err(|e| data_err(format!("cannot open {}: {e}", bin_path.display())))?
        .read_to_end(&mut bytes)?;
    let k = meta.config.k_pairs;
    let expect = meta.count * k * k * 8;
    if bytes.len() != expect {
        return Err(data_err(format!(
            "{}: expected {expect} bytes ({} realizations of {k}×{k}), found {}",
            bin_path.display(),
            meta.count,
            bytes.len()
        )));
    }
    let mut realizations = Vec::with_capacity(meta.count);
    for c in bytes.chunks_exact(k * k * 8) {
        let h: Vec<f64> =
            c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        realizations.push(ChannelRealization::new(k, h)?);
    }
    Ok(Dataset { config: meta.config, split: meta.split, realizations })
}

fn sibling_bin(json_path: &Path) -> PathBuf {
    json_path.with_extension("bin")
}

/// Plain-text dump for inspection: one `realization,row,col,gain` line per
/// entry.
pub fn export_gains_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "realization,tx,rx,gain")?;
    for (i, r) in ds.realizations.iter().enumerate() {
        for j in 0..r.k_pairs() {
            for k in 0..r.k_pairs() {
                writeln!(f, "{i},{j},{k},{:e}", r.h(j, k))?;
            }
        }
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ch(k: usize, h: &[f64]) -> ChannelRealization {
        ChannelRealization::new(k, h.to_vec()).unwrap()
    }

    #[test]
    fn noise_conversions() {
        assert!((noise_power(-104.0) - 3.9811e-14).abs() / 3.9811e-14 < 1e-4);
        assert!((noise_power(0.0) - 1e-3).abs() < 1e-18);
        assert!((noise_power(30.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pathloss_closed_form_at_50m() {
        let cfg = ScenarioConfig::default();
        let g = pathloss_gain(&cfg, 50.0);
        assert!((g - 1.2073e-10).abs() / 1.2073e-10 < 1e-3);
        // Sub-meter distances are floored to 1 m.
        assert_eq!(pathloss_gain(&cfg, 0.2), pathloss_gain(&cfg, 1.0));
    }

    #[test]
    fn generation_is_deterministic_and_positive() {
        let cfg = ScenarioConfig { k_pairs: 6, ..Default::default() };
        let a = generate_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = generate_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        assert!(a.gains().iter().all(|&g| g > 0.0));
        let c = generate_realization(&cfg, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pair_distances_respect_the_annulus() {
        let cfg = ScenarioConfig { k_pairs: 40, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (tx, rx) = draw_positions(&cfg, &mut rng);
            for (t, r) in tx.iter().zip(&rx) {
                let d = ((t.0 - r.0).powi(2) + (t.1 - r.1).powi(2)).sqrt();
                assert!(d >= cfg.pair_dist_min - 1e-9 && d <= cfg.pair_dist_max + 1e-9);
                assert!((0.0..=cfg.area_side).contains(&r.0));
                assert!((0.0..=cfg.area_side).contains(&r.1));
            }
        }
    }

    #[test]
    fn sum_rate_reference_points() {
        let free = ch(2, &[1.0, 1e-30, 1e-30, 1.0]);
        assert!((sum_rate(&[1.0, 1.0], &free, 1.0).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(sum_rate(&[0.0, 0.0], &free, 1.0).unwrap(), 0.0);
        let coupled = ch(2, &[1.0, 1.0, 1.0, 1.0]);
        let expect = 2.0 * 1.5f64.log2();
        assert!((sum_rate(&[1.0, 1.0], &coupled, 1.0).unwrap() - expect).abs() < 1e-12);
        assert!(sum_rate(&[-0.1, 0.0], &coupled, 1.0).is_err());
        assert!(sum_rate(&[0.1], &coupled, 1.0).is_err());
        assert!(sum_rate(&[0.1, 0.1], &coupled, 0.0).is_err());
    }

    #[test]
    fn sum_rate_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ScenarioConfig { k_pairs: 5, ..Default::default() };
        let r = generate_realization(&cfg, &mut rng).unwrap();
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let sig = 1e-13;
        let base = sum_rate(&p, &r, sig).unwrap();
        let perm = [3usize, 0, 4, 1, 2];
        let mut hp = vec![0.0; 25];
        for j in 0..5 {
            for k in 0..5 {
                hp[perm[j] * 5 + perm[k]] = r.h(j, k);
            }
        }
        let mut pp = vec![0.0; 5];
        for k in 0..5 {
            pp[perm[k]] = p[k];
        }
        let permuted = sum_rate(&pp, &ch(5, &hp), sig).unwrap();
        assert!((base - permuted).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = ScenarioConfig { k_pairs: 5, ..Default::default() };
        let r = generate_realization(&cfg, &mut rng).unwrap();
        let sigma2 = cfg.noise_watts();
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..1.0)).collect();
        let (_, grad) = sum_rate_grad(&p, &r, sigma2).unwrap();
        let h = 1e-7;
        for m in 0..5 {
            let mut pp = p.clone();
            pp[m] += h;
            let mut pm = p.clone();
            pm[m] -= h;
            let fd =
                (sum_rate(&pp, &r, sigma2).unwrap() - sum_rate(&pm, &r, sigma2).unwrap()) / (2.0 * h);
            assert!(
                (grad[m] - fd).abs() <= 1e-7 * fd.abs().max(1.0),
                "link {m}: {} vs {}",
                grad[m],
                fd
            );
        }
    }

    #[test]
    fn turning_on_power_from_zero_helps_every_link() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cfg = ScenarioConfig { k_pairs: 4, ..Default::default() };
        let r = generate_realization(&cfg, &mut rng).unwrap();
        let (loss0, grad) = loss_grad(&[0.0; 4], &r, cfg.noise_watts()).unwrap();
        assert_eq!(loss0, 0.0);
        assert!(grad.iter().all(|&g| g < 0.0));
    }

    #[test]
    fn wmmse_single_link_takes_full_power() {
        let r = ch(1, &[2.5e-10]);
        let sigma2 = 3.9811e-14;
        let p = wmmse(&r, 1.0, sigma2, 100).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9);
        let rate = sum_rate(&p, &r, sigma2).unwrap();
        assert!((rate - (1.0 + 2.5e-10 / sigma2).log2()).abs() < 1e-9);
    }

    #[test]
    fn wmmse_near_grid_optimum_under_strong_interference() {
        // Symmetric strong interference: the optimum shuts one link off.
        // The full-power start alone can never get there (identical
        // per-link updates keep v_1 = v_2 forever); the corner restarts
        // reach it.
        let r = ch(2, &[1.0, 10.0, 10.0, 1.0]);
        let (p, _) = wmmse_history(&r, 1.0, 0.1, 100).unwrap();
        let w = sum_rate(&p, &r, 0.1).unwrap();
        let mut best = 0.0f64;
        for i in 0..=100 {
            for j in 0..=100 {
                let cand = [i as f64 / 100.0, j as f64 / 100.0];
                best = best.max(sum_rate(&cand, &r, 0.1).unwrap());
            }
        }
        assert!(w >= 0.99 * best, "wmmse {w} vs grid {best}");
        // One link is switched off at the solution.
        assert!(p.iter().any(|&x| x < 1e-6));
        assert!(p.iter().any(|&x| x > 0.9));
    }

    #[test]
    fn wmmse_escapes_the_full_power_basin() {
        // A lopsided pair where keeping both links on is a stationary point
        // well below the single-link optimum: the restart machinery must
        // pick the corner run.
        let r = ch(2, &[4.6e-11, 8.0e-11, 9.0e-11, 1.08e-10]);
        let sigma2 = 3.9811e-14;
        let (p, hist) = wmmse_history(&r, 1.0, sigma2, 100).unwrap();
        let w = sum_rate(&p, &r, sigma2).unwrap();
        let solo = sum_rate(&[0.0, 1.0], &r, sigma2).unwrap();
        assert!(w >= solo - 1e-9, "wmmse {w} vs second link alone {solo}");
        for pair in hist.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
    }

    #[test]
    fn wmmse_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..20 {
            let k = 2 + (trial % 5);
            let cfg = ScenarioConfig { k_pairs: k, ..Default::default() };
            let r = generate_realization(&cfg, &mut rng).unwrap();
            let (p, hist) = wmmse_history(&r, cfg.p_max, cfg.noise_watts(), 100).unwrap();
            assert!(p.iter().all(|&x| (0.0..=cfg.p_max + 1e-12).contains(&x)));
            for w in hist.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "sum-rate decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn wmmse_beats_naive_baselines_statistically() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut wins = 0;
        let total = 200;
        for trial in 0..total {
            let k = 4 + (trial % 7);
            let cfg = ScenarioConfig { k_pairs: k, ..Default::default() };
            let r = generate_realization(&cfg, &mut rng).unwrap();
            let sigma2 = cfg.noise_watts();
            let w = sum_rate(&wmmse(&r, 1.0, sigma2, 100).unwrap(), &r, sigma2).unwrap();
            let mx = sum_rate(&max_power(&r, 1.0), &r, sigma2).unwrap();
            let rnd = sum_rate(&random_power(&r, 1.0, &mut rng), &r, sigma2).unwrap();
            if w >= mx && w >= rnd {
                wins += 1;
            }
        }
        assert!(wins * 100 >= total * 95, "wmmse won only {wins}/{total}");
    }

    #[test]
    fn dataset_round_trip_bitwise() {
        let cfg = ScenarioConfig { k_pairs: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ds = generate_dataset(&cfg, "train", 7, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.json");
        save_dataset(&ds, &path).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.config, ds.config);
        assert_eq!(loaded.split, "train");
        assert_eq!(loaded.realizations, ds.realizations);

        // Re-saving produces byte-identical files.
        let path2 = dir.path().join("again.json");
        save_dataset(&loaded, &path2).unwrap();
        let b1 = std::fs::read(dir.path().join("train.bin")).unwrap();
        let b2 = std::fs::read(dir.path().join("again.bin")).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn dataset_corruption_detected() {
        let cfg = ScenarioConfig { k_pairs: 2, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = generate_dataset(&cfg, "test", 3, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.json");
        save_dataset(&ds, &path).unwrap();
        let bin = dir.path().join("ds.bin");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&bin, &bytes).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert_eq!(err.category(), "data");
        assert!(err.to_string().contains("ds.bin"));
    }

    #[test]
    fn random_power_in_range() {
        let r = ch(3, &[1.0; 9]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_power(&r, 0.5, &mut rng);
        assert!(p.iter().all(|&x| (0.0..0.5).contains(&x)));
        assert_eq!(max_power(&r, 2.0), vec![2.0; 3]);
    }

    #[test]
    fn interference_free_full_power_is_grid_optimal() {
        let r = ch(2, &[1e-9, 1e-30, 1e-30, 2e-9]);
        let sigma2 = 1e-13;
        let mx = sum_rate(&max_power(&r, 1.0), &r, sigma2).unwrap();
        let mut best = 0.0f64;
        for i in 0..=100 {
            for j in 0..=100 {
                best = best.max(sum_rate(&[i as f64 / 100.0, j as f64 / 100.0], &r, sigma2).unwrap());
            }
        }
        assert!((mx - best).abs() < 1e-9);
    }
}
