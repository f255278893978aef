//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any fails.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbza::io::{self, Meta, ReplayEvent};
use sbza_core::eval::{default_thresholds, label_periods};
use sbza_core::pipeline::{assemble_observations, DetectorConfig};
use sbza_core::power::*;
use sbza_core::sim::{simulate, ScenarioConfig, SimOutput};
use sbza_core::*;
use std::cmp::Ordering;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn noise_floor() -> Rssi {
    Rssi::new(-100.0).unwrap()
}

fn records_of(cfg: &ScenarioConfig, out: &SimOutput) -> Vec<Record> {
    let obs = assemble_observations(&out.packets, &cfg.vehicle_id, cfg.beacon_period_ms, out.truth.len(), noise_floor());
    label_periods(&obs, out.truth.iter().map(|g| g.class))
        .into_iter()
        .map(|p| p.record)
        .collect()
}

fn battery() -> Outcome {
    let profile = SensorPowerProfile::CC2540_BEACON;
    let i = avg_current(&profile);
    let (reported_i, life) = reported_battery_life(&profile, &BatterySpec::COIN_CELL_8H, 3);
    let exact = battery_life(i, &BatterySpec::COIN_CELL_8H);
    let pass = (i - 0.032).abs() <= 0.0005
        && (life.years_continuous - 3.57).abs() <= 0.01
        && (life.years_at_duty - 10.71).abs() <= 0.02;
    outcome(
        pass,
        format!(
            "I_c = {i:.6} mA (0.032 +/- 0.0005); at I_c = {reported_i} mA: {:.2} y continuous (3.57 +/- 0.01), {:.2} y at 8/24 (10.71 +/- 0.02); unrounded: {:.3} y, {:.3} y",
            life.years_continuous, life.years_at_duty, exact.years_continuous, exact.years_at_duty
        ),
    )
}

fn oracle_cell(model: &TrainedModel, i: u32, j: u32, th: &Threshold) -> Cell {
    let c1 = u64::from(model.histogram(Class::Target).count(i, j));
    let c2 = u64::from(model.histogram(Class::NoTarget).count(i, j));
    if c1 == 0 && c2 == 0 {
        return Cell::NoTarget;
    }
    if c2 == 0 {
        return Cell::Target;
    }
    let big = |v: u64| BigInt::from(v);
    let p1 = BigRational::new(big(c1), big(model.n_target()));
    let p2 = BigRational::new(big(c2), big(model.n_notarget()));
    match (p1 / p2).cmp(&BigRational::new(big(th.numerator()), big(th.denominator()))) {
        Ordering::Greater => Cell::Target,
        Ordering::Less => Cell::NoTarget,
        Ordering::Equal => Cell::Boundary,
    }
}

fn oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut boundary, mut mismatches) = (0u64, 0u64, 0u64);
    for n in [2u32, 4, 9, 20, 40, 80] {
        let g = BinGrid::new(-100.0, -100.0 + f64::from(n), 1.0).unwrap();
        let mut counts = |fill: f64| -> Vec<u32> {
            (0..g.cells())
                .map(|_| if rng.random_bool(fill) { rng.random_range(1..50) } else { 0 })
                .collect()
        };
        let (mut t, mut nt) = (counts(0.3), counts(0.5));
        t[0] += 1;
        nt[g.cells() - 1] += 1;
        let model = TrainedModel::from_histograms(
            Histogram2D::from_counts(g, t).unwrap(),
            Histogram2D::from_counts(g, nt).unwrap(),
        )
        .unwrap();
        let mut thresholds: Vec<Threshold> = (0..40)
            .map(|_| Threshold::from_hundredths(rng.random_range(0..=1000)))
            .collect();
        // ten thresholds landing exactly on some bin's ratio
        while thresholds.len() < 50 {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let c1 = u64::from(model.histogram(Class::Target).count(i, j));
            let c2 = u64::from(model.histogram(Class::NoTarget).count(i, j));
            if c1 > 0 && c2 > 0 {
                thresholds.push(Threshold::from_ratio(c1 * model.n_notarget(), c2 * model.n_target()).unwrap());
            }
        }
        for th in &thresholds {
            let map = build_decision_map(&model, *th);
            for i in 0..n {
                for j in 0..n {
                    let want = oracle_cell(&model, i, j, th);
                    checked += 1;
                    boundary += u64::from(want == Cell::Boundary);
                    // lookup through a real observation at the bin's lower edge
                    let obs = SmoothedObservation {
                        front: Rssi::new(g.bin_lower_edge(i)).unwrap(),
                        rear: Rssi::new(g.bin_lower_edge(j)).unwrap(),
                        t_ms: 0,
                    };
                    let got = map.lookup(&obs);
                    let decided = map.classify_deterministic(&obs);
                    let want_class = if want == Cell::NoTarget { Class::NoTarget } else { Class::Target };
                    if got != want || decided != want_class {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(
        mismatches == 0 && boundary > 0,
        format!("{checked} bin decisions over grids 2..80, 50 thresholds each, {boundary} on the boundary, {mismatches} mismatches"),
    )
}

fn roc_monotone(curves: &[(&str, &[OperatingPoint])]) -> Outcome {
    let mut violations = 0;
    let mut counts = Vec::new();
    for (name, pts) in curves {
        violations += pts
            .windows(2)
            .filter(|w| w[1].p_d > w[0].p_d || w[1].p_fa > w[0].p_fa)
            .count();
        counts.push(format!("{name} {} points", pts.len()));
    }
    let pass = violations == 0 && curves.iter().all(|(_, p)| p.len() == 1001);
    outcome(pass, format!("{}; {violations} increases", counts.join(", ")))
}

fn trend(parking: &[OperatingPoint], driving: &[OperatingPoint]) -> Outcome {
    let best = |pts: &[OperatingPoint]| {
        pts.iter()
            .filter(|p| p.p_fa <= 0.15)
            .max_by(|a, b| a.p_d.total_cmp(&b.p_d))
            .copied()
    };
    let bp = best(parking);
    let bd = best(driving);
    let pc = RocCurve::new(parking);
    let dc = RocCurve::new(driving);
    let shortfall = pc.shortfall_against(&dc, 0.05, 0.20);
    let detect = bp.is_some_and(|p| p.p_d >= 0.95);
    let fmt = |p: Option<OperatingPoint>| match p {
        Some(p) => format!("p_d {:.4} at lambda {} (p_fa {:.4})", p.p_d, p.threshold, p.p_fa),
        None => "none".to_string(),
    };
    let mut detail = format!(
        "parking best with p_fa <= 0.15: {} (need p_d >= 0.95); driving: {}",
        fmt(bp),
        fmt(bd)
    );
    match shortfall {
        None => detail.push_str("; parking p_d >= driving p_d over p_fa [0.05, 0.20]"),
        Some((f, a, b)) => detail.push_str(&format!("; at p_fa {f:.4} parking {a:.4} < driving {b:.4}")),
    }
    outcome(detect && shortfall.is_none(), detail)
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut map_diffs = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=20u32);
        let g = BinGrid::new(-100.0, -100.0 + f64::from(n) * 2.0, 2.0).unwrap();
        let span = f64::from(n) * 2.0;
        let len = rng.random_range(2..200);
        let mut records: Vec<Record> = (0..len)
            .map(|k| Record {
                obs: SmoothedObservation {
                    front: Rssi::new(-100.0 + rng.random_range(0.0..span)).unwrap(),
                    rear: Rssi::new(-100.0 + rng.random_range(0.0..span)).unwrap(),
                    t_ms: k * 250,
                },
                truth: if rng.random_bool(0.4) { Class::Target } else { Class::NoTarget },
            })
            .collect();
        records[0].truth = Class::Target;
        records[1].truth = Class::NoTarget;
        let model = train(&records, g).unwrap();
        for class in [Class::Target, Class::NoTarget] {
            worst = worst.max((model.histogram(class).probability_mass() - 1.0).abs());
        }
        let k = rng.random_range(2..6);
        let scaled: Vec<Record> = records.iter().flat_map(|r| std::iter::repeat_n(*r, k)).collect();
        let scaled = train(&scaled, g).unwrap();
        let th = Threshold::from_hundredths(rng.random_range(0..=1000));
        if build_decision_map(&model, th).cells() != build_decision_map(&scaled, th).cells() {
            map_diffs += 1;
        }
    }
    outcome(
        worst < 1e-9 && map_diffs == 0,
        format!("1000 training sets: max |sum p - 1| = {worst:.2e}, {map_diffs} maps changed by count scaling"),
    )
}

fn replay_events(map: &DecisionMap, packets: &[BeaconPacket], end_ms: u64, seed: u64) -> Vec<ReplayEvent> {
    let cfg = DetectorConfig {
        seed,
        ..DetectorConfig::default()
    };
    Detector::new(cfg, map.clone())
        .replay(packets, end_ms, |t| (t / 5000) % 2 == 1)
        .into_iter()
        .map(|d| ReplayEvent {
            t_ms: d.t_ms,
            vehicle_id: d.vehicle_id,
            class: d.class,
            alert: d.alert,
        })
        .collect()
}

fn determinism(map: &DecisionMap) -> Outcome {
    let mut a = ScenarioConfig::parking(21);
    a.duration_s = 600.0;
    a.vehicle_id = "alpha".parse().unwrap();
    let mut b = ScenarioConfig::driving(22);
    b.duration_s = 600.0;
    b.vehicle_id = "bravo".parse().unwrap();
    let sa1 = io::write_packets(&Meta::new(), &simulate(&a).unwrap().packets);
    let sa2 = io::write_packets(&Meta::new(), &simulate(&a).unwrap().packets);
    let pa = simulate(&a).unwrap().packets;
    let pb = simulate(&b).unwrap().packets;
    let end = 600_000;
    let e1 = io::write_events(&Meta::new(), &replay_events(map, &pa, end, 4));
    let e2 = io::write_events(&Meta::new(), &replay_events(map, &pa, end, 4));
    let mut both = pa.clone();
    both.extend(pb.iter().cloned());
    both.sort_by_key(|p| p.t_ms);
    let mixed = replay_events(map, &both, end, 4);
    let alone_a = replay_events(map, &pa, end, 4);
    let alone_b = replay_events(map, &pb, end, 4);
    let pick = |id: &str| mixed.iter().filter(|e| e.vehicle_id.as_str() == id).cloned().collect::<Vec<_>>();
    let boundary = map.count(Cell::Boundary);
    let isolated = pick("alpha") == alone_a && pick("bravo") == alone_b;
    outcome(
        sa1 == sa2 && e1 == e2 && isolated,
        format!(
            "repeat simulation identical: {}, repeat replay identical: {}, interleaved == isolated: {isolated} ({} + {} decisions, {boundary} boundary cells)",
            sa1 == sa2,
            e1 == e2,
            alone_a.len(),
            alone_b.len()
        ),
    )
}

fn period() -> Outcome {
    let t = max_beacon_period(6.0, 5.0, 0.99).unwrap();
    outcome(
        (t - 0.396).abs() <= 1e-9 && t > 0.25,
        format!("max_beacon_period(6 m, 5 m/s, 0.99) = {t:.12} s (0.396 +/- 1e-9), default 0.25 s"),
    )
}

fn round_trips(parking: (&SimOutput, &SimOutput, &ScenarioConfig, &ScenarioConfig), roc: &[OperatingPoint]) -> Outcome {
    let mut report = Vec::new();
    let mut pass = true;
    let mut check = |name: String, a: &str, b: String| {
        let same = a == b;
        pass &= same;
        report.push(format!("{name} {}", if same { "ok" } else { "DIFFERS" }));
    };
    let mut driving_train = ScenarioConfig::driving(31);
    driving_train.duration_s = 2700.0;
    let mut driving_test = ScenarioConfig::driving(32);
    driving_test.duration_s = 1200.0;
    let dtr = simulate(&driving_train).unwrap();
    let dte = simulate(&driving_test).unwrap();
    let sets = [
        ("parking train", parking.0, parking.2),
        ("parking test", parking.1, parking.3),
        ("driving train", &dtr, &driving_train),
        ("driving test", &dte, &driving_test),
    ];
    let meta = Meta::new().with("seed", 1).with("note", "fixture");
    for (name, out, cfg) in sets {
        let records: Vec<Record> = records_of(cfg, out)
            .into_iter()
            .map(|mut r| {
                r.obs.front = r.obs.front.to_centi_db();
                r.obs.rear = r.obs.rear.to_centi_db();
                r
            })
            .collect();
        let p = io::write_packets(&meta, &out.packets);
        let (m, back) = io::read_packets(&p).unwrap();
        check(format!("{name} packets ({})", back.len()), &p, io::write_packets(&m, &back));
        let t = io::write_truth(&meta, &out.truth);
        let (m, back) = io::read_truth(&t).unwrap();
        check(format!("{name} truth ({})", back.len()), &t, io::write_truth(&m, &back));
        let r = io::write_records(&meta, &records);
        let (m, back) = io::read_records(&r).unwrap();
        let same_values = back == records;
        check(
            format!("{name} records ({})", back.len()),
            &r,
            if same_values { io::write_records(&m, &back) } else { String::new() },
        );
    }
    let text = io::write_roc(&meta, roc);
    let (m, back) = io::read_roc(&text).unwrap();
    let same = back.as_slice() == roc;
    check(format!("roc ({})", back.len()), &text, if same { io::write_roc(&m, &back) } else { String::new() });
    outcome(pass, report.join(", "))
}

type Result = (u32, &'static str, Outcome, Duration);

fn timed(results: &mut Vec<Result>, id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome) {
    let start = Instant::now();
    let o = f();
    results.push((id, name, o, start.elapsed()));
}

fn main() {
    let mut results: Vec<Result> = Vec::new();
    let r = &mut results;

    timed(r, 1, "battery life", &mut battery);
    timed(r, 2, "decision map equals exact ratio test", &mut oracle);

    // sixty minutes of training and thirty of testing per scenario
    let seed = 0;
    let mk = |train: fn(u64) -> ScenarioConfig| {
        let tr = train(seed);
        let mut te = train(seed + 1);
        te.duration_s = 1800.0;
        (tr, te)
    };
    let (ptr_cfg, pte_cfg) = mk(ScenarioConfig::parking);
    let (dtr_cfg, dte_cfg) = mk(ScenarioConfig::driving);
    let sim_start = Instant::now();
    let ptr = simulate(&ptr_cfg).unwrap();
    let pte = simulate(&pte_cfg).unwrap();
    let dtr = simulate(&dtr_cfg).unwrap();
    let dte = simulate(&dte_cfg).unwrap();
    let p_model = train(&records_of(&ptr_cfg, &ptr), BinGrid::default()).unwrap();
    let d_model = train(&records_of(&dtr_cfg, &dtr), BinGrid::default()).unwrap();
    let p_roc = roc_sweep(&p_model, &records_of(&pte_cfg, &pte), &default_thresholds()).unwrap();
    let d_roc = roc_sweep(&d_model, &records_of(&dte_cfg, &dte), &default_thresholds()).unwrap();
    let sim_time = sim_start.elapsed();

    timed(r, 3, "ROC monotone in lambda", &mut || {
        roc_monotone(&[("parking", &p_roc), ("driving", &d_roc)])
    });
    timed(r, 4, "parking detection and trend over driving", &mut || trend(&p_roc, &d_roc));
    r.last_mut().unwrap().3 += sim_time;
    timed(r, 5, "histogram normalization and count scaling", &mut normalization);
    // Target cells turned into boundary cells so every detection draws from
    // the vehicle's random stream
    let base = build_decision_map(&p_model, Threshold::from_integer(1));
    let cells = base
        .cells()
        .iter()
        .map(|&c| if c == Cell::Target { Cell::Boundary } else { c })
        .collect();
    let map = DecisionMap::from_cells(*base.grid(), base.threshold(), cells).unwrap();
    timed(r, 6, "determinism and vehicle isolation", &mut || determinism(&map));
    timed(r, 7, "beacon period bound", &mut period);
    timed(r, 8, "file format round trips", &mut || {
        round_trips((&ptr, &pte, &ptr_cfg, &pte_cfg), &p_roc)
    });

    let limits = [(1, 1.0), (2, 10.0), (3, 60.0), (4, 300.0), (5, 10.0), (6, 30.0), (7, 1.0), (8, 30.0)];
    let mut failed = 0;
    for (id, name, o, elapsed) in &results {
        let limit = limits.iter().find(|(i, _)| i == id).map(|(_, l)| *l).unwrap();
        let in_time = elapsed.as_secs_f64() <= limit;
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} [{id}] {name}: {} [{:.2} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
