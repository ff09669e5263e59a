//! Problem file schema: a JSON document with sections {geometry, smooth,
//! nonsmooth, constraint, schedule, solver} plus an optional generation
//! meta block. Unknown keys are rejected everywhere. Matrices are either
//! nested arrays or a path to a dense binary blob (row-major little-endian
//! f64 with an 8-byte header holding m and n as u32 each).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use teprog::geometry::{BregmanGeometry, SetDescriptor};
use teprog::linalg::Matrix;
use teprog::problems::{CompositeProblem, NonsmoothTerm, SmoothTerm};
use teprog::telescope::{ScheduleFamily, TelescopicSchedule};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub geometry: GeometrySection,
    pub smooth: SmoothSection,
    pub nonsmooth: NonsmoothSection,
    pub constraint: ConstraintSection,
    pub schedule: ScheduleSection,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySection {
    HalfSquaredEuclidean(EuclideanSpec),
    NegativeEntropy(EntropySpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EuclideanSpec {
    pub dimension: usize,
    #[serde(default = "default_two")]
    pub norm_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySpec {
    pub dimension: usize,
    #[serde(default = "default_one")]
    pub norm_exponent: f64,
}

fn default_two() -> f64 {
    2.0
}

fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothSection {
    LpResidual(LpResidualSpec),
    SimplexPower(EmptySpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptySpec {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpResidualSpec {
    pub p: f64,
    pub matrix: MatrixSource,
    pub offset: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    Blob(BlobSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonsmoothSection {
    ScaledL1(ScaledL1Spec),
    MaxLinear(MaxLinearSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledL1Spec {
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxLinearSpec {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSection {
    WholeSpace,
    Box(BoxSpec),
    Ball(BallSpec),
    Simplex,
    Prism,
    Intersection(Vec<ConstraintSection>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub radius: f64,
    pub norm_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSection {
    PowerBox(PowerBoxSpec),
    SqrtBall,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBoxSpec {
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub rule: RuleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    pub k_max: u64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
}

fn default_inner_tol() -> f64 {
    1e-8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Lipschitz,
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
}

/// A parsed and materialized problem: core objects plus the instance hash
/// over the canonical (matrix-inlined) instance sections.
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub problem: CompositeProblem,
    pub schedule: TelescopicSchedule,
    pub hash: String,
}

pub fn parse_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("schema violation in {}: {e}", path.display())))
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem, CliError> {
    let file = parse_problem_file(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    materialize(file, base)
}

/// Build the core objects from a parsed file; `base` anchors blob paths.
pub fn materialize(file: ProblemFile, base: &Path) -> Result<LoadedProblem, CliError> {
    let geometry = match &file.geometry {
        GeometrySection::HalfSquaredEuclidean(s) => {
            BregmanGeometry::half_squared_euclidean(s.dimension, s.norm_exponent)
        }
        GeometrySection::NegativeEntropy(s) => {
            BregmanGeometry::negative_entropy(s.dimension, s.norm_exponent)
        }
    }
    .map_err(CliError::from_core_input)?;

    let (smooth, canonical_smooth) = match &file.smooth {
        SmoothSection::LpResidual(spec) => {
            let rows = match &spec.matrix {
                MatrixSource::Rows(rows) => rows.clone(),
                MatrixSource::Blob(blob) => {
                    let m = read_matrix_blob(&base.join(&blob.path))?;
                    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
                }
            };
            let matrix = Matrix::from_rows(&rows).map_err(CliError::from_core_input)?;
            let canonical = SmoothSection::LpResidual(LpResidualSpec {
                p: spec.p,
                matrix: MatrixSource::Rows(rows),
                offset: spec.offset.clone(),
            });
            (
                SmoothTerm::lp_residual(matrix, spec.offset.clone(), spec.p)
                    .map_err(CliError::from_core_input)?,
                canonical,
            )
        }
        SmoothSection::SimplexPower(_) => (SmoothTerm::SimplexPower, file.smooth.clone()),
    };

    let nonsmooth = match &file.nonsmooth {
        NonsmoothSection::ScaledL1(s) => NonsmoothTerm::scaled_l1(s.lambda),
        NonsmoothSection::MaxLinear(s) => NonsmoothTerm::max_linear(s.rows.clone()),
    }
    .map_err(CliError::from_core_input)?;

    let constraint = constraint_to_set(&file.constraint)?;
    let family = match &file.schedule {
        ScheduleSection::PowerBox(s) => ScheduleFamily::PowerBox { sigma: s.sigma },
        ScheduleSection::SqrtBall => ScheduleFamily::SqrtBall,
        ScheduleSection::Constant => ScheduleFamily::Constant,
    };

    let problem = CompositeProblem::new(smooth, nonsmooth, constraint.clone(), geometry)
        .map_err(CliError::from_core_input)?;
    let schedule = TelescopicSchedule::new(family, constraint, problem.geometry())
        .map_err(CliError::from_core_input)?;

    let hash = instance_hash(
        &file.geometry,
        &canonical_smooth,
        &file.nonsmooth,
        &file.constraint,
        &file.schedule,
    )?;
    Ok(LoadedProblem {
        file,
        problem,
        schedule,
        hash,
    })
}

fn constraint_to_set(c: &ConstraintSection) -> Result<SetDescriptor, CliError> {
    Ok(match c {
        ConstraintSection::WholeSpace => SetDescriptor::WholeSpace,
        ConstraintSection::Box(s) => {
            SetDescriptor::boxed(s.radius).map_err(CliError::from_core_input)?
        }
        ConstraintSection::Ball(s) => {
            SetDescriptor::ball(s.radius, s.norm_exponent).map_err(CliError::from_core_input)?
        }
        ConstraintSection::Simplex => SetDescriptor::Simplex,
        ConstraintSection::Prism => SetDescriptor::Prism,
        ConstraintSection::Intersection(parts) => SetDescriptor::Intersection(
            parts
                .iter()
                .map(constraint_to_set)
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// SHA-256 over the canonical instance sections (matrices inlined), so a
/// blob-backed file and its inline twin hash identically. Solver settings
/// are excluded: they configure a run, not the instance.
fn instance_hash(
    geometry: &GeometrySection,
    smooth: &SmoothSection,
    nonsmooth: &NonsmoothSection,
    constraint: &ConstraintSection,
    schedule: &ScheduleSection,
) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(&(geometry, smooth, nonsmooth, constraint, schedule))
        .map_err(|e| CliError::input(format!("cannot canonicalize instance: {e}")))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(hex_string(&h.finalize()))
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Matrices at or above this entry count go to a binary blob instead of
/// nested JSON arrays.
pub const BLOB_THRESHOLD: usize = 1_000_000;

pub fn write_matrix_blob(path: &Path, matrix: &Matrix) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::input(format!("cannot create blob {}: {e}", path.display())))?;
    let m = matrix.rows() as u32;
    let n = matrix.cols() as u32;
    let mut buf = Vec::with_capacity(8 + matrix.data().len() * 8);
    buf.extend_from_slice(&m.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    for v in matrix.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)
        .map_err(|e| CliError::input(format!("cannot write blob: {e}")))
}

pub fn read_matrix_blob(path: &Path) -> Result<Matrix, CliError> {
    let mut f = std::fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open blob {}: {e}", path.display())))?;
    let mut header = [0u8; 8];
    f.read_exact(&mut header)
        .map_err(|e| CliError::input(format!("blob too short: {e}")))?;
    let m = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut raw = Vec::new();
    f.read_to_end(&mut raw)
        .map_err(|e| CliError::input(format!("cannot read blob: {e}")))?;
    if raw.len() != m * n * 8 {
        return Err(CliError::input(format!(
            "blob payload has {} bytes, expected {} for {m}x{n}",
            raw.len(),
            m * n * 8
        )));
    }
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(m, n, data).map_err(CliError::from_core_input)
}

/// Reference-solution file consumed by `certify`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFile {
    pub instance_hash: String,
    pub x_ref: Vec<f64>,
    pub f_ref: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_reference(path: &PathBuf) -> Result<ReferenceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("bad reference file {}: {e}", path.display())))
}
