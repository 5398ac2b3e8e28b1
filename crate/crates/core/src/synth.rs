//! Seeded synthetic signals with known ground truth.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use serde::{Deserialize, Serialize};

use crate::detect::{AirgunShape, Template};
use crate::ingest::AudioClip;
use crate::scalar::Scalar;

/// Clip of white Gaussian noise with `n_pulses` copies of `tpl` added at
/// random non-overlapping offsets. `snr_db` compares pulse energy with the
/// noise energy over the template length. Returns the clip and the true
/// onset times in seconds.
pub fn pulse_train<T: Scalar>(
    tpl: &Template<T>,
    n_pulses: usize,
    snr_db: f64,
    duration_s: f64,
    noise_std: f64,
    seed: u64,
) -> (AudioClip<T>, Vec<f64>) {
    let rate = f64::from(tpl.rate);
    let n = (duration_s * rate).round() as usize;
    let m = tpl.samples.len();
    assert!(n_pulses * 2 * m <= n, "clip too short for {n_pulses} pulses");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).expect("finite std");
    let mut x: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();

    let t: Vec<f64> = tpl.samples.iter().map(|v| v.as_f64()).collect();
    let e_tpl: f64 = t.iter().map(|v| v * v).sum();
    let e_target = 10f64.powf(snr_db / 10.0) * noise_std * noise_std * m as f64;
    let gain = (e_target / e_tpl).sqrt();

    // one pulse per equal slot, placed uniformly inside the slot
    let slot = n / n_pulses;
    let mut onsets = Vec::with_capacity(n_pulses);
    for k in 0..n_pulses {
        let at = k * slot + rng.random_range(0..slot - m);
        for (j, v) in t.iter().enumerate() {
            x[at + j] += gain * v;
        }
        onsets.push(at as f64 / rate);
    }
    let clip = AudioClip::new(format!("pulses-{seed}"), x.into_iter().map(T::lit).collect(), tpl.rate);
    (clip, onsets)
}

/// Label inventory of the reference survey: (class, labeled snippets).
pub const SURVEY_INVENTORY: [(&str, usize); 6] = [
    ("bearded_seal", 1033),
    ("walrus", 9),
    ("airgun", 275),
    ("sea_ice", 1),
    ("whales", 12),
    ("mammal", 7),
];

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub clips: usize,
    pub clip_s: usize,
    pub rate: u32,
    pub seed: u64,
    /// Multiplier applied to [`SURVEY_INVENTORY`]; every class keeps at least one snippet.
    pub scale: f64,
    /// Seed of the airgun pulse shape.
    pub airgun_seed: u64,
    /// Range of pulse-to-noise ratios (dB over the pulse length).
    pub airgun_snr_db: (f64, f64),
    pub noise_std: f64,
    /// Mean rate of impulsive ice-cracking thumps per second of recording.
    pub thump_rate: f64,
    /// Thump energy over 0.25 s relative to the ambient noise (dB range).
    pub thump_snr_db: (f64, f64),
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            clips: 10,
            clip_s: 60,
            rate: 32_768,
            seed: 2017,
            scale: 0.42,
            airgun_seed: 11,
            airgun_snr_db: (6.0, 18.0),
            noise_std: 0.02,
            thump_rate: 0.3,
            thump_snr_db: (0.0, 12.0),
        }
    }
}

impl CorpusConfig {
    /// Snippet count per event class after scaling.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        SURVEY_INVENTORY
            .iter()
            .map(|&(c, n)| (c.to_string(), ((n as f64 * self.scale).round() as usize).max(1)))
            .collect()
    }
}

/// One generated sound event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthEvent {
    pub clip_id: String,
    pub class: String,
    pub onset_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone)]
pub struct SynthClip<T: Scalar = f64> {
    pub clip: AudioClip<T>,
    pub events: Vec<SynthEvent>,
    /// Classes present in each whole second; empty for background.
    pub truth: Vec<Vec<String>>,
}

struct Painter<'a> {
    x: &'a mut [f64],
    rate: f64,
}

impl Painter<'_> {
    fn add(&mut self, onset_s: f64, len_s: f64, mut f: impl FnMut(f64) -> f64) {
        let start = (onset_s * self.rate).round().max(0.0) as usize;
        let len = (len_s * self.rate).round() as usize;
        for i in 0..len {
            if let Some(v) = self.x.get_mut(start + i) {
                *v += f(i as f64 / self.rate);
            }
        }
    }
}

/// Raised-cosine fade of `fade` seconds at both ends of a `len` second event.
fn fade(t: f64, len: f64, fade: f64) -> f64 {
    let edge = t.min(len - t).max(0.0);
    if edge >= fade {
        1.0
    } else {
        0.5 - 0.5 * (std::f64::consts::PI * edge / fade).cos()
    }
}

enum Block {
    Seal(usize),
    Single(&'static str),
    Background,
}

fn class_name(class: &str) -> &'static str {
    SURVEY_INVENTORY.iter().find(|t| t.0 == class).expect("known class").0
}

/// Seeded corpus whose labeled-second counts follow [`SURVEY_INVENTORY`] scaled by
/// `cfg.scale`. Bearded-seal trills span runs of seconds, the rare classes
/// each sit inside one second, and airgun shots fire on a jittered schedule
/// spread over the whole timeline, so many of them land inside trills.
pub fn corpus<T: Scalar>(cfg: &CorpusConfig) -> Vec<SynthClip<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total = cfg.clips * cfg.clip_s;
    let counts = cfg.class_counts();
    let mut blocks = Vec::new();
    let mut used = 0;
    let mut shots = 0;
    for (class, n) in &counts {
        match class.as_str() {
            "airgun" => {
                shots = *n;
                continue;
            }
            "bearded_seal" => {
                let mut left = *n;
                while left > 0 {
                    let run = rng.random_range(2..=6).min(left);
                    blocks.push(Block::Seal(run));
                    left -= run;
                }
            }
            other => blocks.extend((0..*n).map(|_| Block::Single(class_name(other)))),
        }
        used += n;
    }
    assert!(used <= total && shots <= total / 2, "corpus of {total} s is too short for the inventory");
    blocks.extend((0..total - used).map(|_| Block::Background));
    blocks.shuffle(&mut rng);

    let mut layout: Vec<Vec<&'static str>> = Vec::with_capacity(total);
    let mut seal_runs = Vec::new();
    for b in &blocks {
        match b {
            Block::Seal(n) => {
                seal_runs.push((layout.len(), *n));
                layout.extend(std::iter::repeat_n(vec!["bearded_seal"], *n));
            }
            Block::Single(c) => layout.push(vec![c]),
            Block::Background => layout.push(Vec::new()),
        }
    }

    // one shot per equal span of the timeline, never in a rare-class second
    let mut shot_times = Vec::with_capacity(shots);
    let mut last = f64::NEG_INFINITY;
    for k in 0..shots {
        let lo = k * total / shots;
        let hi = (k + 1) * total / shots;
        let free: Vec<usize> = (lo..hi)
            .filter(|&s| (s as f64) + 0.95 > last + 0.6 && layout[s].iter().all(|c| *c == "bearded_seal"))
            .collect();
        let sec = *free.get(rng.random_range(0..free.len().max(1))).unwrap_or(&hi.saturating_sub(1));
        let onset = rng.random_range((last + 0.6).max(sec as f64)..sec as f64 + 0.95);
        layout[sec].push("airgun");
        shot_times.push(onset);
        last = onset;
    }

    let shape = AirgunShape::new(cfg.airgun_seed);
    let rate = f64::from(cfg.rate);
    let n = cfg.clip_s * cfg.rate as usize;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    // unit-peak pulse; SNR compares its energy with noise over the same span
    let pulse: Vec<f64> = shape.sample(cfg.rate);
    let unit_peak = sample_peak(&shape, cfg.rate);
    let pulse_energy: f64 = pulse.iter().map(|v| v * v).sum();

    let mut out = Vec::with_capacity(cfg.clips);
    for c in 0..cfg.clips {
        let clip_id = format!("synth{c:02}");
        let base = c * cfg.clip_s;
        let mut crng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((c as u64 + 1) << 32));
        // coloured ocean noise: a low-passed component plus a white floor
        let level = cfg.noise_std * crng.random_range(0.7..1.4);
        let mut x = vec![0.0; n];
        let mut lp = 0.0;
        for v in x.iter_mut() {
            lp = 0.97 * lp + 0.243 * normal.sample(&mut crng);
            *v = level * (0.8 * lp + 0.6 * normal.sample(&mut crng));
        }
        let noise_var: f64 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let mut p = Painter { x: &mut x, rate };
        let mut events = Vec::new();
        let mut event = |class: &str, onset_s: f64, duration_s: f64| {
            events.push(SynthEvent { clip_id: clip_id.clone(), class: class.into(), onset_s, duration_s });
        };

        for &(start, len) in &seal_runs {
            let lo = start.max(base);
            let hi = (start + len).min(base + cfg.clip_s);
            if lo >= hi {
                continue;
            }
            let onset = (lo - base) as f64 + crng.random_range(0.0..0.1);
            let dur = (hi - base) as f64 - crng.random_range(0.0..0.1) - onset;
            let f0 = crng.random_range(2_000.0..3_000.0);
            let f1 = crng.random_range(500.0..900.0);
            let amp = crng.random_range(2.0..5.0) * level;
            let trill = crng.random_range(8.0..16.0);
            let mut phase = 0.0;
            p.add(onset, dur, |t| {
                let f = f0 + (f1 - f0) * t / dur + 60.0 * (std::f64::consts::TAU * trill * t).sin();
                phase += std::f64::consts::TAU * f / rate;
                amp * fade(t, dur, 0.05) * (phase.sin() + 0.3 * (2.0 * phase).sin())
            });
            event("bearded_seal", onset, dur);
        }

        for &at in shot_times.iter().filter(|&&t| t >= base as f64 && t < (base + cfg.clip_s) as f64) {
            let onset = at - base as f64;
            let snr = crng.random_range(cfg.airgun_snr_db.0..cfg.airgun_snr_db.1);
            let gain = (10f64.powf(snr / 10.0) * noise_var * pulse.len() as f64 / pulse_energy).sqrt();
            // direct arrival followed by a decaying multipath coda
            let mut paths = vec![(0.0, 1.0)];
            let mut d = 0.0;
            for j in 1..=4 {
                d += crng.random_range(0.03..0.1);
                paths.push((d, 0.6f64.powi(j) * crng.random_range(0.4..1.0)));
            }
            let sh = &shape;
            p.add(onset, AirgunShape::LENGTH_S + d, |t| {
                gain * paths.iter().map(|&(dl, g)| g * sh.value(t - dl)).sum::<f64>() / unit_peak
            });
            event("airgun", onset, AirgunShape::LENGTH_S);
        }

        // ice thumps: band-limited noise bursts, unlabeled background
        let mut t = 0.0;
        while cfg.thump_rate > 0.0 && t < cfg.clip_s as f64 {
            t += -crng.random::<f64>().max(1e-12).ln() / cfg.thump_rate;
            if t >= cfg.clip_s as f64 - 0.3 {
                break;
            }
            let snr = crng.random_range(cfg.thump_snr_db.0..cfg.thump_snr_db.1);
            let tau = crng.random_range(0.02..0.08);
            let f_lo = crng.random_range(30.0..80.0);
            let f_hi = crng.random_range(200.0..600.0);
            let len = (0.25 * rate) as usize;
            let mut burst: Vec<f64> = Vec::with_capacity(len);
            let mut tones: Vec<(f64, f64)> = Vec::new();
            let mut f = f_lo;
            while f < f_hi {
                tones.push((f, crng.random_range(0.0..std::f64::consts::TAU)));
                f += crng.random_range(5.0..25.0);
            }
            for i in 0..len {
                let tt = i as f64 / rate;
                let v: f64 = tones.iter().map(|&(f, ph)| (std::f64::consts::TAU * f * tt + ph).cos()).sum();
                burst.push(v * (-tt / tau).exp() * (1.0 - (-tt / 0.003).exp()));
            }
            let e: f64 = burst.iter().map(|v| v * v).sum();
            let g = (10f64.powf(snr / 10.0) * noise_var * len as f64 / e).sqrt();
            let onset = t;
            p.add(onset, 0.25, |tt| g * burst[((tt * rate) as usize).min(len - 1)]);
            event("thump", onset, 0.25);
        }

        for (s, classes) in layout[base..base + cfg.clip_s].iter().enumerate() {
            let sec = s as f64;
            for &class in classes {
                let (onset, dur) = match class {
                    "bearded_seal" | "airgun" => continue,
                    "walrus" => {
                        let onset = sec + crng.random_range(0.05..0.2);
                        let amp = crng.random_range(3.0..6.0) * level;
                        let gap = crng.random_range(0.08..0.15);
                        let f = crng.random_range(1_000.0..3_000.0);
                        p.add(onset, 0.7, |t| {
                            let k = t % gap;
                            amp * (-k / 0.004).exp() * (std::f64::consts::TAU * f * k).sin()
                        });
                        (onset, 0.7)
                    }
                    "whales" => {
                        let onset = sec + crng.random_range(0.0..0.15);
                        let amp = crng.random_range(2.0..4.0) * level;
                        let f = crng.random_range(100.0..250.0);
                        p.add(onset, 0.8, |t| {
                            let inst = f * (1.0 + 0.2 * (std::f64::consts::PI * t / 0.8).sin());
                            amp * fade(t, 0.8, 0.1) * (std::f64::consts::TAU * inst * t).sin()
                        });
                        (onset, 0.8)
                    }
                    "mammal" => {
                        let onset = sec + crng.random_range(0.1..0.4);
                        let amp = crng.random_range(2.0..4.0) * level;
                        p.add(onset, 0.5, |t| {
                            let phase = std::f64::consts::TAU * (400.0 * t + 1_100.0 * t * t);
                            amp * fade(t, 0.5, 0.05) * phase.sin()
                        });
                        (onset, 0.5)
                    }
                    "sea_ice" => {
                        let onset = sec + crng.random_range(0.0..0.1);
                        let amp = crng.random_range(1.5..3.0) * level;
                        let mut irng = ChaCha8Rng::seed_from_u64(crng.random());
                        p.add(onset, 0.8, |_| {
                            if irng.random_bool(0.01) {
                                amp * normal.sample(&mut irng) * 2.0
                            } else {
                                amp * 0.3 * normal.sample(&mut irng)
                            }
                        });
                        (onset, 0.8)
                    }
                    other => unreachable!("class {other}"),
                };
                event(class, onset, dur);
            }
        }
        events.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
        let truth = layout[base..base + cfg.clip_s]
            .iter()
            .map(|cs| cs.iter().map(|c| c.to_string()).collect())
            .collect();
        // recorder gain set so the loudest moment stays below full scale
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.9 {
            x.iter_mut().for_each(|v| *v *= 0.9 / peak);
        }
        let mut clip = AudioClip::new(clip_id, x.into_iter().map(T::lit).collect(), cfg.rate);
        clip.start_timestamp = Some(format!("2017-09-{:02}T00:00:00Z", c + 1));
        out.push(SynthClip { clip, events, truth });
    }
    out
}

fn sample_peak(shape: &AirgunShape, rate: u32) -> f64 {
    let n = (AirgunShape::LENGTH_S * f64::from(rate)).round() as usize;
    (0..n).map(|i| shape.value(i as f64 / f64::from(rate)).abs()).fold(0.0, f64::max)
}
