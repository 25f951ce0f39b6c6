use std::collections::{BTreeMap, BTreeSet};

use super::{Predicate, Violation, WfMode};
use crate::avionics::{Link, SystemSpec, VirtualLink};

/// Dispatch offsets on adjacent links of every path are at least
/// `max_hopdelay` apart.
pub fn well_formed_paths(sys: &SystemSpec, mode: WfMode) -> (bool, Vec<Violation>) {
    let h = sys.max_hopdelay as i64;
    let mut violations = Vec::new();
    for f in &sys.frames {
        let Some(vl) = sys.topology.virtual_link(&f.virtual_link) else { continue };
        let mut pairs: BTreeSet<(Link, Link)> = BTreeSet::new();
        for path in &vl.paths {
            let links = VirtualLink::path_links(path);
            pairs.extend(links.windows(2).map(|w| (w[0].clone(), w[1].clone())));
        }
        for (first, second) in pairs {
            let (Some(prev), Some(next)) = (f.hop(&first), f.hop(&second)) else { continue };
            let (prev, next) = (prev.offset as i64, next.offset as i64);
            let (ok, gap) = match mode {
                WfMode::Strict => (next - prev >= h, next - prev),
                WfMode::Modular => {
                    let d = (next - prev).rem_euclid(f.period as i64);
                    (d != 0 && d >= h, d)
                }
            };
            if !ok {
                violations.push(Violation {
                    kind: Predicate::WF,
                    participants: vec![f.name.clone(), first.to_string(), second.to_string()],
                    instants: vec![prev, next],
                    explanation: format!(
                        "{}: dispatch at {next} on {second} is {gap} after {prev} on {first}, below the hop delay {h}",
                        f.name
                    ),
                });
            }
        }
    }
    (violations.is_empty(), violations)
}

/// A frame leaves every vertex at the same offset on all its outgoing
/// links.
pub fn simultaneous_relay(sys: &SystemSpec) -> (bool, Vec<Violation>) {
    let mut violations = Vec::new();
    for f in &sys.frames {
        let mut outgoing: BTreeMap<&str, Vec<(&Link, u32)>> = BTreeMap::new();
        for hop in &f.hops {
            outgoing.entry(hop.link.from.as_str()).or_default().push((&hop.link, hop.offset));
        }
        for (vertex, hops) in outgoing {
            let offsets: BTreeSet<u32> = hops.iter().map(|(_, o)| *o).collect();
            if offsets.len() > 1 {
                let mut participants = vec![vertex.to_string(), f.name.clone()];
                participants.extend(hops.iter().map(|(l, _)| l.to_string()));
                violations.push(Violation {
                    kind: Predicate::SR,
                    participants,
                    instants: hops.iter().map(|(_, o)| *o as i64).collect(),
                    explanation: format!(
                        "{} leaves {vertex} at different offsets: {}",
                        f.name,
                        hops.iter().map(|(l, o)| format!("{o} on {l}")).collect::<Vec<_>>().join(", ")
                    ),
                });
            }
        }
    }
    (violations.is_empty(), violations)
}
