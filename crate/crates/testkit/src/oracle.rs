//! Brute-force oracles.

/// Seconds at every tick in `0..=max_tick`, accumulated one tick at a time.
///
/// `tempos` holds `(tick, us_per_quarter)` sorted by tick, first at 0.
pub fn stepwise_tick_seconds(tempos: &[(u64, u32)], division: u16, max_tick: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_tick as usize + 1);
    let mut seg = 0;
    let mut t = 0.0f64;
    out.push(0.0);
    for tick in 0..max_tick {
        while seg + 1 < tempos.len() && tempos[seg + 1].0 <= tick {
            seg += 1;
        }
        t += tempos[seg].1 as f64 / 1e6 / division as f64;
        out.push(t);
    }
    out
}

/// Intersection of closed intervals by checking every candidate endpoint.
/// Empty or zero-length intersections yield `None`.
pub fn interval_intersection(spans: &[(f64, f64)]) -> Option<(f64, f64)> {
    if spans.is_empty() {
        return None;
    }
    let inside_all = |x: f64| spans.iter().all(|&(a, b)| a <= x && x <= b);
    let start = spans.iter().map(|s| s.0).filter(|&x| inside_all(x)).fold(None, |acc: Option<f64>, x| {
        Some(acc.map_or(x, |a| a.min(x)))
    })?;
    let end = spans.iter().map(|s| s.1).filter(|&x| inside_all(x)).fold(None, |acc: Option<f64>, x| {
        Some(acc.map_or(x, |a| a.max(x)))
    })?;
    (end > start).then_some((start, end))
}

/// Indices of items overlapping `[t0, t1)` under half-open overlap rules.
pub fn overlapping(intervals: &[(f64, f64)], t0: f64, t1: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &(on, off)) in intervals.iter().enumerate() {
        if on < t1 && off > t0 {
            out.push(i);
        }
    }
    out
}
