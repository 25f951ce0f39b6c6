use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{Constraint, Rel, Term};

/// Errors in a system description.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid schedule for `{name}`: {reason}")]
    InvalidSchedule { name: String, reason: String },
    #[error("frame `{frame}` uses link {link}, which is {reason}")]
    UnknownLink { frame: String, link: String, reason: String },
    #[error("virtual link `{name}`: {reason}")]
    InconsistentVirtualLink { name: String, reason: String },
    #[error("`{0}` is defined more than once")]
    Duplicate(String),
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
    #[error("module `{0}` has no partitions")]
    EmptyModule(String),
    #[error("latency constraint `{name}`: {reason}")]
    InvalidLatency { name: String, reason: String },
    #[error("configuration: {0}")]
    Config(String),
}

/// Temporal parameters `(o, τ, π)` of a partition or a frame on a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScheduleTriple {
    pub offset: u32,
    pub duration: u32,
    pub period: u32,
}

impl ScheduleTriple {
    pub fn new(offset: u32, duration: u32, period: u32) -> Self {
        ScheduleTriple { offset, duration, period }
    }

    /// `1 ≤ τ ≤ π`. The offset may exceed the period.
    pub fn validate(&self, name: &str) -> Result<(), ModelError> {
        let reason = if self.period == 0 {
            "period must be at least 1"
        } else if self.duration == 0 {
            "duration must be at least 1"
        } else if self.duration > self.period {
            "duration exceeds period"
        } else {
            return Ok(());
        };
        Err(ModelError::InvalidSchedule { name: name.to_string(), reason: reason.to_string() })
    }

    /// Start of instance `k`.
    pub fn start(&self, k: u64) -> u64 {
        self.offset as u64 + k * self.period as u64
    }
}

impl fmt::Display for ScheduleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.offset, self.duration, self.period)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    pub name: String,
    pub schedule: ScheduleTriple,
    pub guard: Constraint,
    pub result: Constraint,
    /// Bind the result variables locally (queuing mode).
    pub queuing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleSpec {
    pub name: String,
    pub partitions: Vec<PartitionSpec>,
}

impl ModuleSpec {
    pub fn schedule_vector(&self) -> Vec<(String, ScheduleTriple)> {
        self.partitions.iter().map(|p| (p.name.clone(), p.schedule)).collect()
    }
}

/// A directed dataflow link `[from, to]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
}

impl Link {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Link { from: from.into(), to: to.into() }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.from, self.to)
    }
}

/// The union of the dataflow paths from one sender to its receivers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualLink {
    pub name: String,
    /// Each path as its vertex sequence, sender first.
    pub paths: Vec<Vec<String>>,
}

impl VirtualLink {
    pub fn sender(&self) -> Option<&str> {
        self.paths.first().and_then(|p| p.first()).map(String::as_str)
    }

    pub fn path_links(path: &[String]) -> Vec<Link> {
        path.windows(2).map(|w| Link::new(&w[0], &w[1])).collect()
    }

    pub fn links(&self) -> BTreeSet<Link> {
        self.paths.iter().flat_map(|p| Self::path_links(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    pub end_systems: Vec<String>,
    pub switches: Vec<String>,
    /// Directed links; each physical connection contributes both directions.
    pub links: BTreeSet<Link>,
    pub virtual_links: Vec<VirtualLink>,
}

impl Topology {
    pub fn is_vertex(&self, v: &str) -> bool {
        self.end_systems.iter().chain(&self.switches).any(|x| x == v)
    }

    pub fn is_end_system(&self, v: &str) -> bool {
        self.end_systems.iter().any(|x| x == v)
    }

    pub fn virtual_link(&self, name: &str) -> Option<&VirtualLink> {
        self.virtual_links.iter().find(|vl| vl.name == name)
    }

    /// Adds both directions of a physical connection.
    pub fn connect(&mut self, a: &str, b: &str) {
        self.links.insert(Link::new(a, b));
        self.links.insert(Link::new(b, a));
    }
}

/// A frame on one link of its virtual link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopSpec {
    pub link: Link,
    pub offset: u32,
    pub guard: Constraint,
    pub result: Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSpec {
    pub name: String,
    pub virtual_link: String,
    pub length: u32,
    pub period: u32,
    pub queuing: bool,
    pub hops: Vec<HopSpec>,
}

impl FrameSpec {
    pub fn hop(&self, link: &Link) -> Option<&HopSpec> {
        self.hops.iter().find(|h| &h.link == link)
    }

    /// Schedule of the frame on `link`.
    pub fn triple(&self, link: &Link) -> Option<ScheduleTriple> {
        self.hop(link).map(|h| ScheduleTriple::new(h.offset, self.length, self.period))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyKind {
    /// Sending partition start to last receiving partition end, for one frame.
    Elementary,
    /// Stimulus to the end of the last partition of a chain.
    EndToEnd,
}

/// An environment input that starts a latency measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulus {
    pub tick: u64,
    pub input: Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencySpec {
    pub name: String,
    pub kind: LatencyKind,
    /// Partition and frame names in dataflow order.
    pub chain: Vec<String>,
    pub deadline: u64,
    pub stimulus: Stimulus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    pub modules: Vec<ModuleSpec>,
    pub topology: Topology,
    pub frames: Vec<FrameSpec>,
    pub max_hopdelay: u32,
    pub latency: Vec<LatencySpec>,
}

/// Where a partition runs.
#[derive(Debug, Clone, Copy)]
pub struct Placed<'a> {
    pub module: &'a ModuleSpec,
    pub partition: &'a PartitionSpec,
}

impl SystemSpec {
    pub fn partition(&self, name: &str) -> Option<Placed<'_>> {
        self.modules.iter().find_map(|m| {
            m.partitions.iter().find(|p| p.name == name).map(|p| Placed { module: m, partition: p })
        })
    }

    pub fn frame(&self, name: &str) -> Option<&FrameSpec> {
        self.frames.iter().find(|f| f.name == name)
    }

    /// Frames on each link, in declaration order, for every link that
    /// carries at least one frame.
    pub fn frames_by_link(&self) -> BTreeMap<Link, Vec<(&FrameSpec, &HopSpec)>> {
        let mut out: BTreeMap<Link, Vec<(&FrameSpec, &HopSpec)>> = BTreeMap::new();
        for f in &self.frames {
            for h in &f.hops {
                out.entry(h.link.clone()).or_default().push((f, h));
            }
        }
        out
    }

    /// Every period of every partition and frame.
    pub fn periods(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.modules.iter().flat_map(|m| m.partitions.iter().map(|p| p.schedule.period)).collect();
        out.extend(self.frames.iter().map(|f| f.period));
        out
    }

    /// Variables a result binds: left-hand sides of its top-level `x = e`.
    pub fn bound_vars(result: &Constraint) -> Vec<String> {
        result
            .conjuncts()
            .into_iter()
            .filter_map(|c| match c {
                Constraint::Atom(a) if a.rel == Rel::Eq => match &a.lhs {
                    Term::Var(x) => Some(x.clone()),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    }

    /// Variables written by some partition or frame result (carried as
    /// streams) and all other variables mentioned (plain).
    pub fn variables(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut written = BTreeSet::new();
        let mut mentioned = BTreeSet::new();
        let mut visit = |guard: &Constraint, result: &Constraint| {
            written.extend(Self::bound_vars(result));
            mentioned.extend(guard.free_vars());
            mentioned.extend(result.free_vars());
        };
        for m in &self.modules {
            for p in &m.partitions {
                visit(&p.guard, &p.result);
            }
        }
        for f in &self.frames {
            for h in &f.hops {
                visit(&h.guard, &h.result);
            }
        }
        for l in &self.latency {
            mentioned.extend(l.stimulus.input.free_vars());
        }
        let plain = mentioned.difference(&written).cloned().collect();
        (written, plain)
    }

    /// Structural checks: unique names, valid schedules, paths made of
    /// topology links, frames mapped onto exactly the links of their
    /// virtual link with fixed length and period, and latency chains
    /// naming known partitions and frames.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = BTreeSet::new();
        let mut unique = |n: &str| {
            if names.insert(n.to_string()) {
                Ok(())
            } else {
                Err(ModelError::Duplicate(n.to_string()))
            }
        };
        for v in self.topology.end_systems.iter().chain(&self.topology.switches) {
            unique(v)?;
        }
        for m in &self.modules {
            if !self.topology.end_systems.is_empty() && !self.topology.is_end_system(&m.name) {
                return Err(ModelError::Unknown { what: "end system for module", name: m.name.clone() });
            }
            if m.partitions.is_empty() {
                return Err(ModelError::EmptyModule(m.name.clone()));
            }
            for p in &m.partitions {
                unique(&p.name)?;
                p.schedule.validate(&p.name)?;
            }
        }
        for l in &self.topology.links {
            for v in [&l.from, &l.to] {
                if !self.topology.is_vertex(v) {
                    return Err(ModelError::Unknown { what: "vertex", name: v.clone() });
                }
            }
        }
        let mut vl_names = BTreeSet::new();
        for vl in &self.topology.virtual_links {
            if !vl_names.insert(vl.name.clone()) {
                return Err(ModelError::Duplicate(vl.name.clone()));
            }
            let bad = |reason: String| ModelError::InconsistentVirtualLink { name: vl.name.clone(), reason };
            let sender = vl.sender().ok_or_else(|| bad("has no paths".into()))?;
            for path in &vl.paths {
                if path.len() < 2 {
                    return Err(bad(format!("path {path:?} has fewer than two vertices")));
                }
                if path[0] != sender {
                    return Err(bad(format!("path {path:?} does not start at sender {sender}")));
                }
                for end in [&path[0], &path[path.len() - 1]] {
                    if !self.topology.is_end_system(end) {
                        return Err(bad(format!("path endpoint {end} is not an end system")));
                    }
                }
                for link in VirtualLink::path_links(path) {
                    if !self.topology.links.contains(&link) {
                        return Err(bad(format!("{link} is not a link of the topology")));
                    }
                }
            }
        }
        for f in &self.frames {
            unique(&f.name)?;
            ScheduleTriple::new(0, f.length, f.period).validate(&f.name)?;
            let vl = self
                .topology
                .virtual_link(&f.virtual_link)
                .ok_or_else(|| ModelError::Unknown { what: "virtual link", name: f.virtual_link.clone() })?;
            let vl_links = vl.links();
            let mut seen = BTreeSet::new();
            for h in &f.hops {
                let reason = if !self.topology.links.contains(&h.link) {
                    Some("not in the topology")
                } else if !vl_links.contains(&h.link) {
                    Some("not part of the frame's virtual link")
                } else if !seen.insert(h.link.clone()) {
                    Some("scheduled twice")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(ModelError::UnknownLink {
                        frame: f.name.clone(),
                        link: h.link.to_string(),
                        reason: reason.to_string(),
                    });
                }
            }
            if let Some(missing) = vl_links.iter().find(|l| !seen.contains(*l)) {
                return Err(ModelError::InconsistentVirtualLink {
                    name: vl.name.clone(),
                    reason: format!("frame `{}` has no offset on {missing}", f.name),
                });
            }
        }
        for l in &self.latency {
            let bad = |reason: String| ModelError::InvalidLatency { name: l.name.clone(), reason };
            if l.chain.is_empty() {
                return Err(bad("empty chain".into()));
            }
            for item in &l.chain {
                if self.partition(item).is_none() && self.frame(item).is_none() {
                    return Err(bad(format!("`{item}` is neither a partition nor a frame")));
                }
            }
            for pair in l.chain.windows(2) {
                if let (Some(f), Some(next)) = (self.frame(&pair[0]), self.partition(&pair[1])) {
                    self.frame_route(f, &next.module.name).ok_or_else(|| {
                        bad(format!("frame `{}` does not reach module {}", f.name, next.module.name))
                    })?;
                }
            }
            if l.kind == LatencyKind::Elementary {
                let shape_ok = l.chain.len() >= 3
                    && self.partition(&l.chain[0]).is_some()
                    && self.frame(&l.chain[1]).is_some()
                    && l.chain[2..].iter().all(|r| self.partition(r).is_some());
                if !shape_ok {
                    return Err(bad("elementary chains are [sender, frame, receivers...]".into()));
                }
            }
        }
        Ok(())
    }

    /// Links a frame crosses from its sender to `module`, in order.
    pub fn frame_route(&self, frame: &FrameSpec, module: &str) -> Option<Vec<Link>> {
        let vl = self.topology.virtual_link(&frame.virtual_link)?;
        vl.paths
            .iter()
            .find(|p| p.last().map(String::as_str) == Some(module))
            .map(|p| VirtualLink::path_links(p))
    }
}
