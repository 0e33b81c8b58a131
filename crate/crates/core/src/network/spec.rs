use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Wave,
    Heat,
}

/// One edge of the metric graph, parametrised over `(0, 1)` from `tail`
/// (coordinate 0) to `head` (coordinate 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub kind: EdgeKind,
    /// Diffusivity, present exactly for heat edges. Wave edges have unit speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub tail: usize,
    pub head: usize,
}

impl EdgeSpec {
    pub fn wave(tail: usize, head: usize) -> Self {
        Self {
            kind: EdgeKind::Wave,
            beta: None,
            tail,
            head,
        }
    }

    pub fn heat(beta: f64, tail: usize, head: usize) -> Self {
        Self {
            kind: EdgeKind::Heat,
            beta: Some(beta),
            tail,
            head,
        }
    }

    /// Diffusivity for heat edges, unit speed for wave edges.
    pub fn coefficient(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }
}

/// Condition at degree-one (exterior) vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExteriorBc {
    /// `y_t = 0` (wave) or `w = 0` (heat).
    #[serde(alias = "dirichlet")]
    DirichletVelocity,
    /// `y_x = 0` (wave) or `w_x = 0` (heat).
    #[serde(alias = "neumann")]
    NeumannStress,
}

impl std::str::FromStr for ExteriorBc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" | "dirichlet_velocity" => Ok(Self::DirichletVelocity),
            "neumann" | "neumann_stress" => Ok(Self::NeumannStress),
            other => Err(Error::InvalidParameter(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// The network: edges plus the exterior condition. Every vertex of degree
/// two or more is a coupled vertex carrying continuity of traces and a signed
/// flux balance (heads count `+`, tails `-`); vertices of degree one are
/// exterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub edges: Vec<EdgeSpec>,
    pub exterior_bc: ExteriorBc,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::InconsistentNetwork("no edges".into()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            match (e.kind, e.beta) {
                (EdgeKind::Heat, Some(b)) if b > 0.0 && b.is_finite() => {}
                (EdgeKind::Heat, Some(b)) => {
                    return Err(Error::InvalidParameter(format!(
                        "edge {i}: diffusivity must be positive, got {b}"
                    )))
                }
                (EdgeKind::Heat, None) => {
                    return Err(Error::InconsistentNetwork(format!("heat edge {i} has no diffusivity")))
                }
                (EdgeKind::Wave, Some(_)) => {
                    return Err(Error::InconsistentNetwork(format!(
                        "wave edge {i} carries a diffusivity"
                    )))
                }
                (EdgeKind::Wave, None) => {}
            }
            if e.tail == e.head {
                return Err(Error::InconsistentNetwork(format!("edge {i} is a loop")));
            }
        }
        Ok(())
    }

    pub fn degrees(&self) -> BTreeMap<usize, usize> {
        let mut deg = BTreeMap::new();
        for e in &self.edges {
            *deg.entry(e.tail).or_insert(0) += 1;
            *deg.entry(e.head).or_insert(0) += 1;
        }
        deg
    }

    /// Coupled vertices (degree ≥ 2) in increasing id order.
    pub fn coupled_vertices(&self) -> Vec<usize> {
        self.degrees()
            .into_iter()
            .filter(|&(_, d)| d >= 2)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn exterior_vertices(&self) -> Vec<usize> {
        self.degrees()
            .into_iter()
            .filter(|&(_, d)| d == 1)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    /// Diffusivities of the heat edges in edge order.
    pub fn heat_betas(&self) -> Vec<f64> {
        self.edges.iter().filter_map(|e| e.beta).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// The five-edge network: vertex 0 is the exterior end of the first wave
/// edge, vertices 1–3 are coupled.
///
/// | edge | kind | tail → head |
/// |------|------|-------------|
/// | 0 | wave 1 | 0 → 1 |
/// | 1 | heat 1 | 1 → 2 |
/// | 2 | wave 2 | 2 → 3 |
/// | 3 | heat 2 | 2 → 3 |
/// | 4 | heat 3 | 3 → 1 |
pub fn build_paper_network(beta1: f64, beta2: f64, beta3: f64, bc: ExteriorBc) -> Result<NetworkSpec> {
    let spec = NetworkSpec {
        edges: vec![
            EdgeSpec::wave(0, 1),
            EdgeSpec::heat(beta1, 1, 2),
            EdgeSpec::wave(2, 3),
            EdgeSpec::heat(beta2, 2, 3),
            EdgeSpec::heat(beta3, 3, 1),
        ],
        exterior_bc: bc,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_edge_topology() {
        let spec = build_paper_network(1.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).unwrap();
        assert_eq!(spec.edges.len(), 5);
        assert_eq!(spec.count(EdgeKind::Wave), 2);
        assert_eq!(spec.count(EdgeKind::Heat), 3);
        assert_eq!(spec.coupled_vertices(), vec![1, 2, 3]);
        assert_eq!(spec.exterior_vertices(), vec![0]);
        assert!(spec.degrees().values().all(|&d| d == 1 || d >= 2));
    }

    #[test]
    fn neumann_variant_keeps_topology() {
        let spec = build_paper_network(1.0, 2.0, 3.0, ExteriorBc::NeumannStress).unwrap();
        assert_eq!(spec.exterior_bc, ExteriorBc::NeumannStress);
        assert_eq!(spec.heat_betas(), vec![1.0, 2.0, 3.0]);
        assert_eq!(spec.coupled_vertices(), vec![1, 2, 3]);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(build_paper_network(0.0, 1.0, 1.0, ExteriorBc::DirichletVelocity).is_err());
        assert!(build_paper_network(1.0, -2.0, 1.0, ExteriorBc::NeumannStress).is_err());
    }

    #[test]
    fn json_schema() {
        let spec = build_paper_network(1.0, 2.0, 3.0, ExteriorBc::DirichletVelocity).unwrap();
        let text = spec.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["exterior_bc"], "dirichlet_velocity");
        assert_eq!(v["edges"][0]["kind"], "wave");
        assert!(v["edges"][0].get("beta").is_none());
        assert_eq!(v["edges"][4]["beta"], 3.0);
        assert_eq!(v["edges"][4]["tail"], 3);
        assert_eq!(NetworkSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn json_rejects_wave_with_beta() {
        let text = r#"{"edges":[{"kind":"wave","beta":1.0,"tail":0,"head":1}],"exterior_bc":"neumann_stress"}"#;
        assert!(matches!(
            NetworkSpec::from_json(text),
            Err(Error::InconsistentNetwork(_))
        ));
    }
}
