//! The acceptance battery, one pass/fail line per criterion.
//! Runs without the test harness: `cargo test -p kisin-cli --test acceptance`.

use std::time::{Duration, Instant};

use kisin_cli::records::CriterionRecord;
use kisin_cli::suite;

const SEED: u64 = 0;

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let x = f();
    (x, t.elapsed())
}

fn line(r: &CriterionRecord, t: Option<Duration>, budget: Option<u64>) -> bool {
    let in_time = match (t, budget) {
        (Some(t), Some(b)) => t.as_secs_f64() < b as f64,
        _ => true,
    };
    let ok = r.pass && in_time;
    let time = t.map(|t| format!(" [{:.1}s{}]", t.as_secs_f64(), budget.map(|b| format!(" of {b}s")).unwrap_or_default()));
    println!(
        "criterion {:>2} {}: {} ({} checked) {}{}",
        r.criterion,
        if ok { "PASS" } else { "FAIL" },
        r.title,
        r.checked,
        r.detail,
        time.unwrap_or_default()
    );
    ok
}

fn main() {
    let mut trace = Vec::new();
    let mut records = Vec::new();
    let mut ok = true;

    let (c1, t) = timed(suite::rank_one_counts);
    ok &= line(&c1, Some(t), Some(10));
    records.push(c1);

    let ((c2, c3), t) = timed(|| suite::torsion_grid(SEED, &mut trace));
    ok &= line(&c2, Some(t), Some(120));
    ok &= line(&c3, None, None);
    records.extend([c2, c3]);

    for (f, budget) in [(suite::oracle_grid as fn(u64) -> CriterionRecord, None), (suite::window_soundness, None), (suite::small_ramification, None)] {
        let (c, t) = timed(|| f(SEED));
        ok &= line(&c, Some(t), budget);
        records.push(c);
    }

    let ((c7, c8), t) = timed(|| suite::towers(SEED, &mut trace));
    ok &= line(&c7, Some(t), Some(300));
    ok &= line(&c8, None, None);
    records.extend([c7, c8]);

    let (c9, t) = timed(|| suite::invariance(SEED));
    ok &= line(&c9, Some(t), None);
    records.push(c9);

    // a second, independent run of the whole battery
    let ((again, trace2), t) = timed(|| suite::battery(SEED));
    let a = suite::stream(&records, &trace);
    let b = suite::stream(&again, &trace2);
    let c10 = CriterionRecord {
        criterion: 10,
        title: "determinism".into(),
        pass: a == b,
        checked: 2,
        detail: format!("{} vs {} bytes", a.len(), b.len()),
    };
    ok &= line(&c10, Some(t), None);

    if !ok {
        eprintln!("some acceptance criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
