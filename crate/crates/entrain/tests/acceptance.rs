//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fail.

mod common;
#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{synth_dyad, write_dyad, write_manifest, Trend};
use entrain::manifest::Manifest;
use entrain::pipeline::{extract_dyad, run_study, Outcome, RunOptions};
use entrain::stream::run_stream;
use entrain_core::audio::AudioBuffer;
use entrain_core::entrainment::{convergence, proximity, synchrony, LagSearch, Significance, SynchronyConfig};
use entrain_core::perception::EntrainmentMetric;
use entrain_core::preprocess::{knn_regress, ResampledTrack, TimeGrid};
use entrain_core::prosody::{pitch_autocorrelation, FrameConfig, FrameTrack};
use entrain_core::stats::{kruskal_wallis, pearson, power_pearson, shapiro_wilk};
use entrain_core::{Feature, Speaker};
use oracle::{brute_knn, direct_pearson, points, sine, track};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

type Outcome1 = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome1 + 'a>);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol
}

fn random_track(rng: &mut ChaCha8Rng, speaker: Speaker, grid: TimeGrid) -> ResampledTrack {
    let scale: f64 = rng.random_range(0.1..10.0);
    let v = (0..grid.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect();
    track(speaker, grid, v)
}

fn metric_identities() -> Outcome1 {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sig = Significance::default();
    let zero = SynchronyConfig {
        delta: 0.0,
        search: None,
    };
    for i in 0..100 {
        let n = rng.random_range(10..400);
        let grid = TimeGrid::new(0.0, (n - 1) as f64 * 0.1, 0.1).unwrap();
        let a = random_track(&mut rng, Speaker::A, grid);
        let b = random_track(&mut rng, Speaker::B, grid);

        let self_prox = proximity(&a, &a).map_err(|e| e.to_string())?;
        check(
            self_prox.values.iter().all(|&d| d == 0.0),
            format!("track {i}: proximity(a,a) != 0"),
        )?;
        let self_sync = synchrony(&a, &a, &zero, &sig).map_err(|e| e.to_string())?;
        check(
            close(self_sync.r, 1.0, 1e-12),
            format!("track {i}: synchrony(a,a) = {}", self_sync.r),
        )?;

        let (ab, ba) = (proximity(&a, &b).unwrap(), proximity(&b, &a).unwrap());
        check(ab.values == ba.values, format!("track {i}: proximity not symmetric"))?;
        let (cab, cba) = (convergence(&a, &b, &sig).unwrap(), convergence(&b, &a, &sig).unwrap());
        check(
            close(cab.r, cba.r, 1e-12),
            format!("track {i}: convergence not symmetric"),
        )?;
        let (sab, sba) = (
            synchrony(&a, &b, &zero, &sig).unwrap(),
            synchrony(&b, &a, &zero, &sig).unwrap(),
        );
        check(
            close(sab.r, sba.r, 1e-12),
            format!("track {i}: synchrony not symmetric"),
        )?;

        // one positive affine map on both speakers keeps convergence; separate maps keep synchrony
        let (c, d): (f64, f64) = (rng.random_range(0.1..10.0), rng.random_range(-50.0..50.0));
        let map = |t: &ResampledTrack, c: f64, d: f64| {
            ResampledTrack::new(
                t.speaker,
                t.feature,
                t.grid,
                t.values.iter().map(|v| c * v + d).collect(),
            )
            .unwrap()
        };
        let (a2, b2) = (map(&a, c, d), map(&b, c, d));
        let c2 = convergence(&a2, &b2, &sig).unwrap();
        check(
            close(c2.r, cab.r, 1e-12),
            format!("track {i}: convergence not affine invariant"),
        )?;
        let prox2 = proximity(&a2, &b2).unwrap();
        check(
            prox2
                .values
                .iter()
                .zip(&ab.values)
                .all(|(x, y)| close(*x, c * y, 1e-12 * (1.0 + c * y.abs()))),
            format!("track {i}: proximity does not scale with the map"),
        )?;
        let b3 = map(&b, rng.random_range(0.1..10.0), rng.random_range(-50.0..50.0));
        let s3 = synchrony(&a2, &b3, &zero, &sig).unwrap();
        check(
            close(s3.r, sab.r, 1e-12),
            format!("track {i}: synchrony not affine invariant"),
        )?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 5.0, format!("runtime {secs:.2} s"))?;
    Ok(format!("100 tracks, {secs:.2} s"))
}

fn convergence_oracle() -> Outcome1 {
    let grid = TimeGrid::new(0.0, 100.0, 1.0).unwrap();
    let t: Vec<f64> = grid.times().collect();
    let a = track(Speaker::A, grid, t.iter().map(|t| 2.0 - 0.02 * t).collect());
    let b = track(Speaker::B, grid, t.iter().map(|t| -2.0 + 0.02 * t).collect());
    let sig = Significance {
        alpha: 0.01,
        ..Significance::default()
    };
    let res = convergence(&a, &b, &sig).map_err(|e| e.to_string())?;
    let d: Vec<f64> = t.iter().map(|t| -(4.0 - 0.04 * t).abs()).collect();
    let direct = direct_pearson(&d, &t);
    check(res.n == 101, format!("n = {}", res.n))?;
    check(close(res.r, direct, 1e-9), format!("r {} vs direct {direct}", res.r))?;
    check(res.significant_positive, "not significant")?;
    Ok(format!(
        "r = {:.12}, |r - direct| = {:.1e}",
        res.r,
        (res.r - direct).abs()
    ))
}

fn smooth_series(rng: &mut ChaCha8Rng, grid: &TimeGrid, offset: f64) -> Vec<f64> {
    let comps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.05..0.6),
                rng.random_range(0.0..6.3),
                rng.random_range(0.5..1.5),
            )
        })
        .collect();
    grid.times()
        .map(|t| {
            comps
                .iter()
                .map(|(f, ph, amp)| amp * (2.0 * std::f64::consts::PI * f * (t + offset) + ph).sin())
                .sum()
        })
        .collect()
}

fn lag_recovery() -> Outcome1 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = TimeGrid::new(0.0, 60.0, 0.1).unwrap();
    let cfg = SynchronyConfig {
        delta: 0.0,
        search: Some(LagSearch {
            min: -1.0,
            max: 1.0,
            step: 0.1,
        }),
    };
    let mut hits = 0;
    for _ in 0..50 {
        let lag: f64 = rng.random_range(-1.0..=1.0);
        let mut same = rng.clone();
        let a = smooth_series(&mut same, &grid, 0.0);
        // b(t) = a(t + lag): pairs (a[i + shift], b[i]) line up at shift = lag
        let b = smooth_series(&mut rng, &grid, lag);
        let res = synchrony(
            &track(Speaker::A, grid, a),
            &track(Speaker::B, grid, b),
            &cfg,
            &Significance::default(),
        )
        .map_err(|e| e.to_string())?;
        if (res.lag.unwrap() - lag).abs() <= 0.1 + 1e-9 {
            hits += 1;
        }
    }
    check(hits >= 49, format!("{hits}/50"))?;
    Ok(format!("{hits}/50 within one grid step"))
}

fn knn_equivalence() -> Outcome1 {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut ties, mut short) = (0, 0);
    for i in 0..1000 {
        let n = rng.random_range(1..40);
        let quantized = i % 2 == 0;
        let tv: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let t = if quantized {
                    rng.random_range(0..20) as f64 * 0.5
                } else {
                    rng.random_range(0.0..10.0)
                };
                (t, rng.random_range(-100.0..100.0))
            })
            .collect();
        let k = rng.random_range(1..=n + 5);
        if k > n {
            short += 1;
        }
        if quantized {
            ties += 1;
        }
        // quarter steps put grid points midway between quantized times
        let step = [0.25, 0.1, 0.7][i % 3];
        let grid = TimeGrid::new(rng.random_range(-2.0..1.0), 11.0, step).unwrap();
        let fast = knn_regress(&points(&tv), &grid, k).map_err(|e| e.to_string())?;
        for (j, t) in grid.times().enumerate() {
            let slow = brute_knn(&tv, t, k);
            check(
                fast.values[j].to_bits() == slow.to_bits(),
                format!("instance {i}, t = {t}: {} vs {slow}", fast.values[j]),
            )?;
        }
    }
    Ok(format!(
        "1000 instances bitwise equal ({ties} with ties, {short} with fewer than k)"
    ))
}

fn permutations(v: &mut [f64], k: usize, f: &mut impl FnMut(&[f64])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Every way to split 12 indices into three labeled groups of four.
fn splits_of_twelve() -> Vec<[u8; 12]> {
    let mut out = Vec::new();
    let mut labels = [0u8; 12];
    fn rec(i: usize, counts: &mut [usize; 3], labels: &mut [u8; 12], out: &mut Vec<[u8; 12]>) {
        if i == 12 {
            out.push(*labels);
            return;
        }
        for g in 0..3 {
            if counts[g] < 4 {
                counts[g] += 1;
                labels[i] = g as u8;
                rec(i + 1, counts, labels, out);
                counts[g] -= 1;
            }
        }
    }
    rec(0, &mut [0; 3], &mut labels, &mut out);
    out
}

fn statistics_calibration() -> Outcome1 {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    // Pearson: exact enumeration up to n = 8, 1e5 random permutations above
    let mut worst_pearson: f64 = 0.0;
    for n in [5, 6, 7, 8, 10, 12] {
        for _ in 0..4 {
            let x = normal_vec(&mut rng, n);
            let mut y = normal_vec(&mut rng, n);
            let observed = pearson(&x, &y).map_err(|e| e.to_string())?;
            let r0 = direct_pearson(&x, &y).abs() - 1e-12;
            let (mut hits, mut total) = (0usize, 0usize);
            if n <= 8 {
                permutations(&mut y, 0, &mut |p| {
                    total += 1;
                    hits += (direct_pearson(&x, p).abs() >= r0) as usize;
                });
            } else {
                for _ in 0..100_000 {
                    y.shuffle(&mut rng);
                    total += 1;
                    hits += (direct_pearson(&x, &y).abs() >= r0) as usize;
                }
            }
            worst_pearson = worst_pearson.max((observed.p_value - hits as f64 / total as f64).abs());
        }
    }
    notes.push(format!("pearson max |dp| {worst_pearson:.4}"));
    if worst_pearson > 0.03 {
        failures.push(format!("pearson max |dp| {worst_pearson:.4}"));
    }

    // Kruskal-Wallis: three groups of four, exact over all 34650 splits
    let splits = splits_of_twelve();
    let mut worst_kw: f64 = 0.0;
    for _ in 0..20 {
        let v = normal_vec(&mut rng, 12);
        let h_of = |labels: &[u8; 12]| {
            let mut g: [Vec<f64>; 3] = Default::default();
            for (i, &l) in labels.iter().enumerate() {
                g[l as usize].push(v[i]);
            }
            kruskal_wallis(&[&g[0], &g[1], &g[2]]).unwrap()
        };
        let observed = h_of(&splits[0]);
        let hits = splits
            .iter()
            .filter(|s| h_of(s).statistic >= observed.statistic - 1e-9)
            .count();
        let exact = hits as f64 / splits.len() as f64;
        worst_kw = worst_kw.max((observed.p_value - exact).abs());
    }
    notes.push(format!("kruskal-wallis max |dp| {worst_kw:.4}"));
    if worst_kw > 0.03 {
        failures.push(format!("kruskal-wallis max |dp| {worst_kw:.4}"));
    }

    let rejected = (0..1000)
        .filter(|_| shapiro_wilk(&normal_vec(&mut rng, 100)).unwrap().p_value < 0.05)
        .count();
    let rate = rejected as f64 / 1000.0;
    notes.push(format!("shapiro rate {rate:.3}"));
    if !(0.03..=0.07).contains(&rate) {
        failures.push(format!("shapiro rate {rate:.3}"));
    }

    let mut worst_power: f64 = 0.0;
    for (r, n, alpha) in [(0.3, 50, 0.05), (0.5, 30, 0.01)] {
        let formula = power_pearson(r, n, alpha).map_err(|e| e.to_string())?;
        let c = (1.0 - r * r).sqrt();
        let trials = 100_000;
        let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
        let mut hits = 0;
        for _ in 0..trials {
            for i in 0..n {
                let (u, v): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                x[i] = u;
                y[i] = r * u + c * v;
            }
            hits += (pearson(&x, &y).unwrap().p_value < alpha) as usize;
        }
        worst_power = worst_power.max((formula - hits as f64 / trials as f64).abs());
    }
    notes.push(format!("power max |d| {worst_power:.4}"));
    if worst_power > 0.02 {
        failures.push(format!("power max |d| {worst_power:.4}"));
    }

    let secs = start.elapsed().as_secs_f64();
    notes.push(format!("{secs:.1} s"));
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1} s"));
    }
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(format!("{} ({})", failures.join("; "), notes.join(", ")))
    }
}

fn voiced_within(freq: f64, track: &FrameTrack, range: std::ops::Range<f64>) -> (usize, usize) {
    let (mut good, mut total) = (0, 0);
    for (i, t) in track.times().enumerate() {
        if let (true, Some(f)) = (range.contains(&t), track.value(i)) {
            total += 1;
            good += ((f - freq).abs() <= 0.01 * freq) as usize;
        }
    }
    (good, total)
}

fn pitch_accuracy() -> Outcome1 {
    let cfg = FrameConfig::default();
    let mut worst: f64 = 1.0;
    for sr in [16000, 44100] {
        for freq in [110.0, 220.0, 440.0] {
            let audio = AudioBuffer::new(sine(freq, 0.5, 1.0, sr), sr).unwrap();
            let tr = pitch_autocorrelation(&audio, &cfg).map_err(|e| e.to_string())?;
            let (good, total) = voiced_within(freq, &tr, 0.0..2.0);
            check(
                total * 10 >= tr.len() * 9,
                format!("{freq} Hz at {sr}: only {total} voiced"),
            )?;
            let frac = good as f64 / total as f64;
            check(frac >= 0.95, format!("{freq} Hz at {sr}: {good}/{total}"))?;
            worst = worst.min(frac);
        }
    }
    let sr = 16000;
    let mut s = sine(220.0, 0.5, 1.0, sr);
    s.extend(sine(330.0, 0.5, 1.0, sr));
    let tr = pitch_autocorrelation(&AudioBuffer::new(s, sr).unwrap(), &cfg).unwrap();
    let (g1, n1) = voiced_within(220.0, &tr, 0.0..0.95);
    let (g2, n2) = voiced_within(330.0, &tr, 1.05..2.0);
    check(n1 > 80 && n2 > 80, format!("plateau frames {n1}, {n2}"))?;
    check(
        g1 * 100 >= 95 * n1 && g2 * 100 >= 95 * n2,
        format!("plateaus {g1}/{n1}, {g2}/{n2}"),
    )?;
    Ok(format!(
        "worst sine {:.1}% within 1%, plateaus {g1}/{n1} and {g2}/{n2}",
        100.0 * worst
    ))
}

fn classification_echo(dir: &Path) -> Outcome1 {
    let mut all = Vec::new();
    let mut split = Vec::new();
    for i in 0..20u64 {
        let converging = i < 13;
        let trend = if converging {
            Trend::Converging
        } else {
            Trend::Diverging
        };
        let id = format!("d{i:02}");
        let mut entry = write_dyad(dir, &id, "all", &synth_dyad(100 + i, 120.0, trend));
        all.push(entry.clone());
        entry["condition"] = json!(if converging { "human" } else { "robot" });
        split.push(entry);
    }
    let run = |name: &str, dyads: Vec<serde_json::Value>| {
        let path = write_manifest(dir, &json!({"dyads": dyads}));
        let renamed = dir.join(name);
        std::fs::rename(&path, &renamed).unwrap();
        run_study(&Manifest::load(&renamed).unwrap(), &RunOptions::default()).unwrap()
    };

    let report = run("all.json", all);
    let fr = report
        .fractions
        .iter()
        .find(|f| f.feature == Feature::MeanPitch && f.metric == EntrainmentMetric::Convergence)
        .ok_or("no mean-pitch convergence fraction")?;
    let c = &fr.conditions[0];
    check(c.total == 20, format!("{} dyads counted", c.total))?;
    check(
        c.fraction == 0.65,
        format!("fraction {} ({}/{})", c.fraction, c.flagged, c.total),
    )?;

    let report = run("split.json", split);
    let cmp = report
        .comparisons
        .iter()
        .find(|c| c.feature == Feature::MeanPitch && c.metric == EntrainmentMetric::Convergence)
        .ok_or("no comparison")?;
    let Outcome::Ok(cmp) = &cmp.result else {
        return Err(format!("comparison absent: {:?}", cmp.result));
    };
    let median = |name: &str| cmp.groups.iter().find(|g| g.condition == name).map(|g| g.median);
    let (h, r) = (
        median("human").ok_or("no human group")?,
        median("robot").ok_or("no robot group")?,
    );
    let p = cmp.kruskal_wallis.p_value;
    check(p < 0.01, format!("kruskal-wallis p {p:.2e}"))?;
    check(h > r, format!("median convergence human {h:.3} <= robot {r:.3}"))?;
    Ok(format!(
        "fraction 13/20 = 0.65, kruskal-wallis p {p:.1e} with human median {h:.3} > robot {r:.3}"
    ))
}

fn streaming_equivalence(dir: &Path) -> Outcome1 {
    let entry = write_dyad(dir, "s", "human", &synth_dyad(7, 200.0, Trend::Converging));
    let path = write_manifest(dir, &json!({"dyads": [entry]}));
    let manifest = Manifest::load(&path).unwrap();
    let cfg = manifest.dyad_config(&manifest.dyads[0], &Default::default()).unwrap();
    let speakers = extract_dyad(&manifest.dyads[0], &cfg).map_err(|e| e.to_string())?;
    let sig = cfg.entrainment.significance;
    let sync_cfg = SynchronyConfig {
        delta: cfg.entrainment.synchrony.delta,
        search: None,
    };
    let (mut emissions, mut compared) = (0usize, 0usize);
    let mut worst: f64 = 0.0;
    let mut mismatch = None;
    run_stream(&speakers, &cfg, |est, m| {
        emissions += 1;
        let (bc, bs) = match est.window_tracks() {
            Some((a, b)) => (convergence(&a, &b, &sig).ok(), synchrony(&a, &b, &sync_cfg, &sig).ok()),
            None => (None, None),
        };
        for (s, b) in [(m.convergence, bc), (m.synchrony, bs)] {
            match (s, b) {
                (Some(s), Some(b)) => {
                    compared += 1;
                    worst = worst.max((s.r - b.r).abs()).max((s.p_value - b.p_value).abs());
                    if s.n != b.n && mismatch.is_none() {
                        mismatch = Some(format!("t = {}: n {} vs {}", m.t, s.n, b.n));
                    }
                }
                (None, None) => {}
                (s, b) if mismatch.is_none() => {
                    mismatch = Some(format!(
                        "t = {}: availability {:?} vs {:?}",
                        m.t,
                        s.map(|c| c.r),
                        b.map(|c| c.r)
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    if let Some(m) = mismatch {
        return Err(m);
    }
    check(
        compared > emissions,
        format!("only {compared} comparisons over {emissions} emissions"),
    )?;
    check(worst <= 1e-9, format!("max deviation {worst:.2e}"))?;
    Ok(format!(
        "{emissions} emissions, {compared} metric values, max deviation {worst:.1e}"
    ))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    common::inventory(dir)
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(dir.join(&f)).unwrap();
            (f, bytes)
        })
        .collect()
}

fn determinism(dir: &Path) -> Outcome1 {
    let entry = write_dyad(dir, "long", "human", &synth_dyad(9, 600.0, Trend::Converging));
    let manifest = write_manifest(dir, &json!({"dyads": [entry]}));
    let mut times = Vec::new();
    let mut outputs = Vec::new();
    for run in ["run1", "run2"] {
        let out = dir.join(run);
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_entrain"))
            .args(["analyze", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        times.push(start.elapsed().as_secs_f64());
        check(
            status.status.success(),
            format!("{run}: {}", String::from_utf8_lossy(&status.stderr)),
        )?;
        outputs.push(files(&out));
    }
    check(outputs[0].len() == 6, format!("{} files written", outputs[0].len()))?;
    check(outputs[0] == outputs[1], "runs differ")?;
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    check(slowest < 10.0, format!("10-minute dyad took {slowest:.2} s"))?;
    Ok(format!(
        "{} files byte-identical, 10-minute dyad in {slowest:.2} s",
        outputs[0].len()
    ))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for sub in ["c7", "c8", "c9"] {
        std::fs::create_dir_all(d.join(sub)).unwrap();
    }
    let criteria: Vec<Criterion> = vec![
        ("metric identities", Box::new(metric_identities)),
        ("convergence oracle", Box::new(convergence_oracle)),
        ("lag recovery", Box::new(lag_recovery)),
        ("knn equivalence", Box::new(knn_equivalence)),
        ("statistics calibration", Box::new(statistics_calibration)),
        ("pitch accuracy", Box::new(pitch_accuracy)),
        (
            "classification echo",
            Box::new(move || classification_echo(&d.join("c7"))),
        ),
        (
            "streaming equivalence",
            Box::new(move || streaming_equivalence(&d.join("c8"))),
        ),
        ("determinism and runtime", Box::new(move || determinism(&d.join("c9")))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
