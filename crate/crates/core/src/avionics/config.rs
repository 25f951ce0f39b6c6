//! System configuration files (TOML).
//!
//! ```toml
//! [network]
//! max_hopdelay = 3
//!
//! [[modules]]
//! name = "M1"
//! [[modules.partitions]]
//! name = "KU1"
//! offset = 0
//! duration = 25
//! period = 50
//! guard = "pReq1 = 1"
//! result = "wpId1 = wpId1 + 1"
//!
//! [topology]
//! end_systems = ["M1", "M3"]
//! switches = ["SW1"]
//! links = [["M1", "SW1"], ["SW1", "M3"]]   # both directions implied
//! [[topology.virtual_links]]
//! name = "vl1"
//! paths = [["M1", "SW1", "M3"]]
//!
//! [[frames]]
//! name = "wpId1"
//! virtual_link = "vl1"
//! length = 2
//! period = 10
//! [[frames.hops]]
//! link = ["M1", "SW1"]
//! offset = 50
//! guard = "wpId1 > 0"
//! result = "sw11 = wpId1"
//!
//! [[latency]]
//! name = "display"
//! kind = "end-to-end"          # or "elementary"
//! chain = ["KU1", "wpId1", "FM1"]
//! deadline = 600
//! stimulus = { tick = 0, input = "pReq1 = 1" }
//! ```

use serde::Deserialize;

use super::model::{
    FrameSpec, HopSpec, LatencyKind, LatencySpec, Link, ModelError, ModuleSpec, PartitionSpec, ScheduleTriple,
    Stimulus, SystemSpec, Topology, VirtualLink,
};
use crate::constraint::Constraint;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    network: RawNetwork,
    modules: Vec<RawModule>,
    topology: RawTopology,
    #[serde(default)]
    frames: Vec<RawFrame>,
    #[serde(default)]
    latency: Vec<RawLatency>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    max_hopdelay: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModule {
    name: String,
    partitions: Vec<RawPartition>,
}

fn always() -> String {
    "true".to_string()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    name: String,
    offset: u32,
    duration: u32,
    period: u32,
    #[serde(default = "always")]
    guard: String,
    result: String,
    #[serde(default)]
    queuing: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    end_systems: Vec<String>,
    #[serde(default)]
    switches: Vec<String>,
    links: Vec<[String; 2]>,
    #[serde(default)]
    virtual_links: Vec<RawVirtualLink>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVirtualLink {
    name: String,
    paths: Vec<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    name: String,
    virtual_link: String,
    length: u32,
    period: u32,
    #[serde(default)]
    queuing: bool,
    hops: Vec<RawHop>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHop {
    link: [String; 2],
    offset: u32,
    #[serde(default = "always")]
    guard: String,
    result: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLatency {
    name: String,
    kind: LatencyKind,
    chain: Vec<String>,
    deadline: u64,
    #[serde(default)]
    stimulus: Option<RawStimulus>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStimulus {
    #[serde(default)]
    tick: u64,
    #[serde(default = "always")]
    input: String,
}

fn constraint(text: &str, place: &str) -> Result<Constraint, ModelError> {
    text.parse().map_err(|e| ModelError::Config(format!("{place}: {e}")))
}

/// Reads and validates a system description.
pub fn load_system(text: &str) -> Result<SystemSpec, ModelError> {
    let raw: RawSystem = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
    let mut modules = Vec::new();
    for m in raw.modules {
        let mut partitions = Vec::new();
        for p in m.partitions {
            partitions.push(PartitionSpec {
                guard: constraint(&p.guard, &format!("guard of {}", p.name))?,
                result: constraint(&p.result, &format!("result of {}", p.name))?,
                schedule: ScheduleTriple::new(p.offset, p.duration, p.period),
                queuing: p.queuing,
                name: p.name,
            });
        }
        modules.push(ModuleSpec { name: m.name, partitions });
    }
    let mut topology = Topology {
        end_systems: raw.topology.end_systems,
        switches: raw.topology.switches,
        ..Topology::default()
    };
    for [a, b] in &raw.topology.links {
        topology.connect(a, b);
    }
    topology.virtual_links =
        raw.topology.virtual_links.into_iter().map(|v| VirtualLink { name: v.name, paths: v.paths }).collect();
    let mut frames = Vec::new();
    for f in raw.frames {
        let mut hops = Vec::new();
        for h in f.hops {
            let link = Link::new(&h.link[0], &h.link[1]);
            hops.push(HopSpec {
                guard: constraint(&h.guard, &format!("guard of {} on {link}", f.name))?,
                result: constraint(&h.result, &format!("result of {} on {link}", f.name))?,
                offset: h.offset,
                link,
            });
        }
        frames.push(FrameSpec {
            name: f.name,
            virtual_link: f.virtual_link,
            length: f.length,
            period: f.period,
            queuing: f.queuing,
            hops,
        });
    }
    let mut latency = Vec::new();
    for l in raw.latency {
        let stimulus = match l.stimulus {
            Some(s) => Stimulus { tick: s.tick, input: constraint(&s.input, &format!("stimulus of {}", l.name))? },
            None => Stimulus { tick: 0, input: Constraint::True },
        };
        latency.push(LatencySpec { name: l.name, kind: l.kind, chain: l.chain, deadline: l.deadline, stimulus });
    }
    let sys = SystemSpec { modules, topology, frames, max_hopdelay: raw.network.max_hopdelay, latency };
    sys.validate()?;
    Ok(sys)
}
