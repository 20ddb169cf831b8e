//! JSON-lines dataset files, one graph per line with canonical edge order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl From<&Graph> for GraphRecord {
    fn from(g: &Graph) -> Self {
        GraphRecord {
            n: g.n(),
            edges: g.edges().map(|e| [e.lo(), e.hi()]).collect(),
            label: g.label(),
            seed: g.seed(),
        }
    }
}

impl TryFrom<GraphRecord> for Graph {
    type Error = Error;

    fn try_from(r: GraphRecord) -> Result<Graph> {
        let mut g = Graph::new(r.n, r.edges.iter().map(|e| (e[0], e[1])))?;
        if let Some(l) = r.label {
            if l > 1 {
                return Err(Error::InvalidGraph(format!("label {l} not in {{0,1}}")));
            }
            g = g.with_label(l);
        }
        if let Some(s) = r.seed {
            g = g.with_seed(s);
        }
        Ok(g)
    }
}

pub fn write_dataset<W: Write>(mut out: W, graphs: &[Graph]) -> Result<()> {
    for g in graphs {
        serde_json::to_writer(&mut out, &GraphRecord::from(g))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<Graph>> {
    let mut graphs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GraphRecord = serde_json::from_str(&line).map_err(|e| {
            Error::Input(format!("dataset line {}: {e}", lineno + 1))
        })?;
        graphs.push(Graph::try_from(record)?);
    }
    Ok(graphs)
}
