use super::assemble::{assemble, DofLayout, EdgeInput, EndCondition};
use super::spec::{EdgeKind, ExteriorBc, NetworkSpec};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Which generator a [`DiscreteSystem`] discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The coupled wave-heat network.
    Full(ExteriorBc),
    /// Wave edges alone with absorbing conditions at the coupled vertices.
    WaveDamped,
    /// Heat edges alone with all vertex traces clamped to zero.
    HeatDirichlet,
    /// Hand-built generator (tests, small examples).
    Custom,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full(ExteriorBc::DirichletVelocity) => "full",
            Variant::Full(ExteriorBc::NeumannStress) => "full-neumann",
            Variant::WaveDamped => "wave-damped",
            Variant::HeatDirichlet => "heat-dirichlet",
            Variant::Custom => "custom",
        }
    }
}

/// A finite-dimensional generator `A_h` together with the diagonal energy
/// weights defining `⟨x, y⟩_h = Σ m_i x_i y_i`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub variant: Variant,
    pub betas: Vec<f64>,
    pub layout: DofLayout,
    /// Unknowns with an absorbing end condition.
    pub absorbing: Vec<usize>,
    generator: CsrMatrix<f64>,
    weights: Vec<f64>,
}

impl DiscreteSystem {
    /// Wraps an arbitrary generator with positive weights.
    pub fn custom(generator: CsrMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        if generator.nrows() != generator.ncols() || generator.nrows() != weights.len() {
            return Err(Error::InvalidParameter("generator and weights disagree in size".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        Ok(Self {
            variant: Variant::Custom,
            betas: Vec::new(),
            layout: DofLayout {
                n: 0,
                dim: weights.len(),
                edges: Vec::new(),
                junctions: Vec::new(),
            },
            absorbing: Vec::new(),
            generator,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn generator(&self) -> &CsrMatrix<f64> {
        &self.generator
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.generator.matvec(z)
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights.iter().zip(x).zip(y).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    /// `E = ½ ‖z‖²_h`.
    pub fn energy(&self, z: &[f64]) -> f64 {
        0.5 * self.norm_sq(z)
    }

    /// `⟨A_h z, z⟩_h`.
    pub fn power(&self, z: &[f64]) -> f64 {
        self.inner(&self.apply(z), z)
    }

    /// The dissipation predicted by summation by parts:
    /// `Σ_heat β h Σ ((Δw)/h)² + Σ_absorbing v²`. Equals `-⟨A_h z, z⟩_h`.
    pub fn dissipation(&self, z: &[f64]) -> f64 {
        let h = self.layout.h();
        let value = |d: Option<usize>| d.map_or(0.0, |i| z[i]);
        let mut total = 0.0;
        for e in self.layout.edges.iter().filter(|e| e.kind == EdgeKind::Heat) {
            let mut sum = 0.0;
            for j in 0..self.layout.n {
                let dw = (value(e.nodes[j + 1]) - value(e.nodes[j])) / h;
                sum += dw * dw;
            }
            total += e.beta * h * sum;
        }
        total + self.absorbing.iter().map(|&i| z[i] * z[i]).sum::<f64>()
    }

    /// State equal to one on every node unknown (`v`, `w`, vertex traces) and
    /// zero on the midpoint unknowns `u`. Lies in the kernel of the generator
    /// when no node trace is clamped.
    pub fn constant_node_state(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for e in &self.layout.edges {
            for d in e.nodes.iter().flatten() {
                z[*d] = 1.0;
            }
        }
        z
    }

    /// Writes `<prefix>.mtx` (generator) and `<prefix>.weights` (one weight per line).
    pub fn export(&self, dir: &Path, prefix: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = std::fs::File::create(dir.join(format!("{prefix}.mtx")))?;
        self.generator.write_matrix_market(std::io::BufWriter::new(file))?;
        let mut text = String::with_capacity(self.dim() * 24);
        for w in &self.weights {
            text.push_str(&format!("{w:.17e}\n"));
        }
        std::fs::write(dir.join(format!("{prefix}.weights")), text)?;
        Ok(())
    }
}

fn vertex_index(spec: &NetworkSpec) -> BTreeMap<usize, usize> {
    spec.coupled_vertices()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect()
}

fn exterior(bc: ExteriorBc) -> EndCondition {
    match bc {
        ExteriorBc::DirichletVelocity => EndCondition::Dirichlet,
        ExteriorBc::NeumannStress => EndCondition::Neumann,
    }
}

pub(crate) fn edge_inputs(
    spec: &NetworkSpec,
    kind: Option<EdgeKind>,
    coupled: impl Fn(usize) -> EndCondition,
) -> Vec<EdgeInput> {
    let index = vertex_index(spec);
    let cond = |v: usize| match index.get(&v) {
        Some(&k) => coupled(k),
        None => exterior(spec.exterior_bc),
    };
    spec.edges
        .iter()
        .enumerate()
        .filter(|(_, e)| kind.map_or(true, |k| e.kind == k))
        .map(|(i, e)| EdgeInput {
            kind: e.kind,
            beta: e.coefficient(),
            tail: cond(e.tail),
            head: cond(e.head),
            source: i,
        })
        .collect()
}

fn absorbing_dofs(inputs: &[EdgeInput], layout: &DofLayout) -> Vec<usize> {
    let n = layout.n;
    let mut out = Vec::new();
    for (inp, e) in inputs.iter().zip(&layout.edges) {
        if inp.tail == EndCondition::Absorbing {
            out.extend(e.nodes[0]);
        }
        if inp.head == EndCondition::Absorbing {
            out.extend(e.nodes[n]);
        }
    }
    out
}

fn build(
    spec: &NetworkSpec,
    variant: Variant,
    inputs: Vec<EdgeInput>,
    n_junctions: usize,
    n: usize,
) -> Result<DiscreteSystem> {
    if inputs.is_empty() {
        return Err(Error::InconsistentNetwork(format!(
            "no edges for variant {}",
            variant.name()
        )));
    }
    let asm = assemble(&inputs, n_junctions, 0, n)?;
    let absorbing = absorbing_dofs(&inputs, &asm.layout);
    Ok(DiscreteSystem {
        variant,
        betas: spec.heat_betas(),
        layout: asm.layout,
        absorbing,
        generator: asm.generator,
        weights: asm.weights,
    })
}

/// Assembles the coupled network generator.
pub fn discretize(spec: &NetworkSpec, n: usize) -> Result<DiscreteSystem> {
    spec.validate()?;
    let inputs = edge_inputs(spec, None, EndCondition::Junction);
    build(
        spec,
        Variant::Full(spec.exterior_bc),
        inputs,
        spec.coupled_vertices().len(),
        n,
    )
}

/// Wave edges only, with `u = ∓v` (head/tail) at every coupled vertex.
pub fn discretize_wave_damped(spec: &NetworkSpec, n: usize) -> Result<DiscreteSystem> {
    spec.validate()?;
    let inputs = edge_inputs(spec, Some(EdgeKind::Wave), |_| EndCondition::Absorbing);
    build(spec, Variant::WaveDamped, inputs, 0, n)
}

/// Heat edges only, with every vertex trace clamped to zero.
pub fn discretize_heat_dirichlet(spec: &NetworkSpec, n: usize) -> Result<DiscreteSystem> {
    spec.validate()?;
    let mut inputs = edge_inputs(spec, Some(EdgeKind::Heat), |_| EndCondition::Dirichlet);
    for e in &mut inputs {
        e.tail = EndCondition::Dirichlet;
        e.head = EndCondition::Dirichlet;
    }
    build(spec, Variant::HeatDirichlet, inputs, 0, n)
}
