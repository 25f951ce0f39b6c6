use num_integer::Integer;

use super::{Predicate, Violation};
use crate::avionics::ScheduleTriple;

/// Major time frame: LCM of the periods (1 for an empty vector).
pub fn maf(periods: impl IntoIterator<Item = u32>) -> u64 {
    periods.into_iter().fold(1u64, |acc, p| acc.lcm(&(p as u64)))
}

/// Whether two periodic windows ever overlap, and if so the earliest
/// instant at which both are active.
///
/// Instances repeat forever, so only the offsets modulo `g = gcd(πa, πb)`
/// matter: start differences range over `δ + g·ℤ` with `δ = (oa − ob) mod g`,
/// and windows `[s, s+τ)` overlap iff some difference lies in `(−τa, τb)`.
pub fn pair_conflict(a: &ScheduleTriple, b: &ScheduleTriple) -> Option<u64> {
    let (pa, pb) = (a.period as i64, b.period as i64);
    let g = pa.gcd(&pb);
    let delta = (a.offset as i64 - b.offset as i64).rem_euclid(g);
    if delta >= b.duration as i64 && g - delta >= a.duration as i64 {
        return None;
    }
    Some(earliest_overlap(a, b))
}

fn earliest_overlap(a: &ScheduleTriple, b: &ScheduleTriple) -> u64 {
    let horizon = a.offset.max(b.offset) as u64 + (a.period as u64).lcm(&(b.period as u64)) + a.period.max(b.period) as u64;
    let mut best = u64::MAX;
    let mut i = 0;
    while a.start(i) < horizon {
        let (sa, ea) = (a.start(i), a.start(i) + a.duration as u64);
        // first instance of b ending after sa
        let first = (sa + 1).saturating_sub(b.offset as u64 + b.duration as u64).div_ceil(b.period as u64);
        let mut j = first;
        while b.start(j) < ea {
            let (sb, eb) = (b.start(j), b.start(j) + b.duration as u64);
            if sb < ea && sa < eb {
                best = best.min(sa.max(sb));
            }
            j += 1;
        }
        i += 1;
    }
    best
}

/// Mutual exclusion of the windows of a schedule vector. `context` names
/// the module or link, for the witnesses.
pub fn contention_free(vector: &[(String, ScheduleTriple)], context: &str) -> (bool, Vec<Violation>) {
    let mut violations = Vec::new();
    for (i, (na, a)) in vector.iter().enumerate() {
        for (nb, b) in &vector[i + 1..] {
            if let Some(t) = pair_conflict(a, b) {
                violations.push(Violation {
                    kind: Predicate::CF,
                    participants: vec![na.clone(), nb.clone(), context.to_string()],
                    instants: vec![t as i64],
                    explanation: format!("{na} {a} and {nb} {b} are both active at {t} on {context}"),
                });
            }
        }
    }
    (violations.is_empty(), violations)
}
