//! Binary file formats for chips, ensemble statistics and models.
//!
//! All three formats are little-endian with a four-byte magic and a
//! version word. Group structure is stored as the lattice kind, size and
//! subgroup selector only; the reduction itself is rebuilt on load and
//! cross-checked against the stored degree-of-freedom counts, so a file
//! can never smuggle in a stale or foreign class assignment.
//!
//! Chip files (`QFDC`) hold raw pixel payloads, one record of `N` doubles
//! per chip. Statistics files (`QSTA`) hold the accumulated count, the
//! reduced mean and the packed lower triangle of the reduced covariance.
//! Model files (`QMOD`) hold the solver parameters and the reduced
//! coefficients.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::degeneracy::DegeneracyMatrix;
use crate::ensemble_stats::EnsembleStats;
use crate::error::{QfdError, Result};
use crate::lattice::{LatticeKind, LatticeSpec};
use crate::point_group::GroupRep;
use crate::qfd_train::QfdModel;

const CHIP_MAGIC: [u8; 4] = *b"QFDC";
const STATS_MAGIC: [u8; 4] = *b"QSTA";
const MODEL_MAGIC: [u8; 4] = *b"QMOD";
const FORMAT_VERSION: u32 = 1;
const MAX_SELECTOR_BYTES: u32 = 4096;

/// A batch of chips over one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipSet {
    lattice: LatticeSpec,
    chips: Vec<Vec<f64>>,
}

impl ChipSet {
    /// Wraps chips after checking every one has the lattice's pixel count.
    pub fn new(lattice: LatticeSpec, chips: Vec<Vec<f64>>) -> Result<ChipSet> {
        for chip in &chips {
            if chip.len() != lattice.pixel_count() {
                return Err(QfdError::DimensionMismatch {
                    context: "chip set",
                    expected: lattice.pixel_count(),
                    actual: chip.len(),
                });
            }
        }
        Ok(ChipSet { lattice, chips })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn chips(&self) -> &[Vec<f64>] {
        &self.chips
    }

    pub fn into_chips(self) -> Vec<Vec<f64>> {
        self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }
}

fn truncated(what: &'static str) -> impl FnOnce(io::Error) -> QfdError {
    move |e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            QfdError::Truncated(what)
        } else {
            QfdError::Io(e)
        }
    }
}

fn read_bytes<R: Read, const K: usize>(r: &mut R, what: &'static str) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(truncated(what))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_bytes(r, what)?))
}

fn read_u64<R: Read>(r: &mut R, what: &'static str) -> Result<u64> {
    Ok(u64::from_le_bytes(read_bytes(r, what)?))
}

fn read_f64<R: Read>(r: &mut R, what: &'static str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_bytes(r, what)?))
}

fn read_f64_block<R: Read>(r: &mut R, len: usize, what: &'static str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len.min(1 << 20));
    for _ in 0..len {
        out.push(read_f64(r, what)?);
    }
    Ok(out)
}

fn read_magic<R: Read>(r: &mut R, expected: [u8; 4]) -> Result<()> {
    let found: [u8; 4] = read_bytes(r, "magic")?;
    if found != expected {
        return Err(QfdError::BadMagic { expected, found });
    }
    Ok(())
}

fn read_version<R: Read>(r: &mut R) -> Result<()> {
    let version = read_u32(r, "version")?;
    if version != FORMAT_VERSION {
        return Err(QfdError::UnsupportedVersion(version));
    }
    Ok(())
}

fn kind_byte(kind: LatticeKind) -> u8 {
    match kind {
        LatticeKind::Square => 0,
        LatticeKind::Hexagonal => 1,
    }
}

fn read_lattice<R: Read>(r: &mut R) -> Result<LatticeSpec> {
    let byte = read_bytes::<_, 1>(r, "lattice kind")?[0];
    let kind = match byte {
        0 => LatticeKind::Square,
        1 => LatticeKind::Hexagonal,
        other => return Err(QfdError::Format(format!("unknown lattice kind byte {other}"))),
    };
    let n = read_u32(r, "lattice size")?;
    LatticeSpec::new(kind, n as usize)
}

fn write_lattice<W: Write>(w: &mut W, lattice: LatticeSpec) -> Result<()> {
    w.write_all(&[kind_byte(lattice.kind())])?;
    w.write_all(&(lattice.n() as u32).to_le_bytes())?;
    Ok(())
}

fn read_selector<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u32(r, "selector length")?;
    if len > MAX_SELECTOR_BYTES {
        return Err(QfdError::Format(format!(
            "selector length {len} exceeds the {MAX_SELECTOR_BYTES} byte cap"
        )));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf).map_err(truncated("selector"))?;
    String::from_utf8(buf).map_err(|_| QfdError::Format("selector is not UTF-8".into()))
}

fn write_selector<W: Write>(w: &mut W, selector: &str) -> Result<()> {
    w.write_all(&(selector.len() as u32).to_le_bytes())?;
    w.write_all(selector.as_bytes())?;
    Ok(())
}

/// Rebuilds the reduction a statistics or model file refers to and checks
/// the stored degree-of-freedom counts against it.
fn rebuild_reduction(
    lattice: LatticeSpec,
    selector: &str,
    stored_linear: usize,
    stored_quadratic: usize,
) -> Result<DegeneracyMatrix> {
    let rep = GroupRep::by_selector(lattice, selector)?;
    let dm = DegeneracyMatrix::build(&rep);
    let dof = dm.dof();
    if dof.linear != stored_linear || dof.quadratic != stored_quadratic {
        return Err(QfdError::Format(format!(
            "stored degrees of freedom {stored_linear}+{stored_quadratic} disagree with \
             the rebuilt reduction {}+{}",
            dof.linear, dof.quadratic
        )));
    }
    Ok(dm)
}

/// Writes a chip set in `QFDC` format.
pub fn write_chips<W: Write>(w: &mut W, chips: &ChipSet) -> Result<()> {
    if chips.len() > u32::MAX as usize {
        return Err(QfdError::InvalidParameter {
            what: "chip count",
            reason: format!("{} does not fit the format's 32-bit count", chips.len()),
        });
    }
    w.write_all(&CHIP_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_lattice(w, chips.lattice())?;
    w.write_all(&(chips.len() as u32).to_le_bytes())?;
    for chip in chips.chips() {
        for &value in chip {
            w.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a chip set in `QFDC` format.
pub fn read_chips<R: Read>(r: &mut R) -> Result<ChipSet> {
    read_magic(r, CHIP_MAGIC)?;
    read_version(r)?;
    let lattice = read_lattice(r)?;
    let count = read_u32(r, "chip count")? as usize;
    let mut chips = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        chips.push(read_f64_block(r, lattice.pixel_count(), "chip payload")?);
    }
    ChipSet::new(lattice, chips)
}

/// Writes accumulated statistics in `QSTA` format. Requires at least two
/// accumulated chips so the covariance is defined.
pub fn write_stats<W: Write>(w: &mut W, stats: &EnsembleStats) -> Result<()> {
    let covariance = stats.covariance()?;
    let dm = DegeneracyMatrix::build(&GroupRep::by_selector(
        stats.lattice(),
        stats.selector(),
    )?);
    if dm.fingerprint() != stats.fingerprint() {
        return Err(QfdError::FingerprintMismatch {
            context: "statistics write",
        });
    }
    w.write_all(&STATS_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_lattice(w, stats.lattice())?;
    write_selector(w, stats.selector())?;
    let dof = dm.dof();
    w.write_all(&(dof.linear as u32).to_le_bytes())?;
    w.write_all(&(dof.quadratic as u32).to_le_bytes())?;
    w.write_all(&stats.count().to_le_bytes())?;
    for &value in stats.mean().as_slice() {
        w.write_all(&value.to_le_bytes())?;
    }
    for i in 0..dof.total() {
        for j in 0..=i {
            w.write_all(&covariance[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads accumulated statistics in `QSTA` format, rebuilding and
/// validating the reduction they were accumulated under.
pub fn read_stats<R: Read>(r: &mut R) -> Result<EnsembleStats> {
    read_magic(r, STATS_MAGIC)?;
    read_version(r)?;
    let lattice = read_lattice(r)?;
    let selector = read_selector(r)?;
    let dof_linear = read_u32(r, "linear degrees of freedom")? as usize;
    let dof_quadratic = read_u32(r, "quadratic degrees of freedom")? as usize;
    let dm = rebuild_reduction(lattice, &selector, dof_linear, dof_quadratic)?;
    let count = read_u64(r, "chip count")?;
    let total = dof_linear + dof_quadratic;
    let mean = DVector::from_vec(read_f64_block(r, total, "mean")?);
    let mut covariance = DMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..=i {
            let value = read_f64(r, "covariance")?;
            covariance[(i, j)] = value;
            covariance[(j, i)] = value;
        }
    }
    EnsembleStats::from_moments(&dm, count, mean, covariance)
}

/// Writes a trained model in `QMOD` format.
pub fn write_model<W: Write>(w: &mut W, model: &QfdModel) -> Result<()> {
    w.write_all(&MODEL_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_lattice(w, model.lattice())?;
    write_selector(w, model.selector())?;
    w.write_all(&model.lambda().to_le_bytes())?;
    w.write_all(&model.pinv_tol().to_le_bytes())?;
    w.write_all(&(model.coeffs().len() as u32).to_le_bytes())?;
    for &value in model.coeffs() {
        w.write_all(&value.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a trained model in `QMOD` format, rebuilding its reduction and
/// validating the coefficient count against it.
pub fn read_model<R: Read>(r: &mut R) -> Result<QfdModel> {
    read_magic(r, MODEL_MAGIC)?;
    read_version(r)?;
    let lattice = read_lattice(r)?;
    let selector = read_selector(r)?;
    let lambda = read_f64(r, "lambda")?;
    let pinv_tol = read_f64(r, "pinv_tol")?;
    let total = read_u32(r, "coefficient count")? as usize;
    let coeffs = read_f64_block(r, total, "coefficients")?;
    QfdModel::from_parts(lattice, &selector, lambda, pinv_tol, coeffs)
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(QfdError::Format("trailing bytes after record".into())),
    }
}

/// Writes a chip set to a file.
pub fn save_chips(path: &Path, chips: &ChipSet) -> Result<()> {
    let mut w = create_writer(path)?;
    write_chips(&mut w, chips)?;
    w.flush()?;
    Ok(())
}

/// Reads a chip set from a file, rejecting trailing bytes.
pub fn load_chips(path: &Path) -> Result<ChipSet> {
    let mut r = open_reader(path)?;
    let chips = read_chips(&mut r)?;
    expect_eof(&mut r)?;
    Ok(chips)
}

/// Writes accumulated statistics to a file.
pub fn save_stats(path: &Path, stats: &EnsembleStats) -> Result<()> {
    let mut w = create_writer(path)?;
    write_stats(&mut w, stats)?;
    w.flush()?;
    Ok(())
}

/// Reads accumulated statistics from a file, rejecting trailing bytes.
pub fn load_stats(path: &Path) -> Result<EnsembleStats> {
    let mut r = open_reader(path)?;
    let stats = read_stats(&mut r)?;
    expect_eof(&mut r)?;
    Ok(stats)
}

/// Writes a trained model to a file.
pub fn save_model(path: &Path, model: &QfdModel) -> Result<()> {
    let mut w = create_writer(path)?;
    write_model(&mut w, model)?;
    w.flush()?;
    Ok(())
}

/// Reads a trained model from a file, rejecting trailing bytes.
pub fn load_model(path: &Path) -> Result<QfdModel> {
    let mut r = open_reader(path)?;
    let model = read_model(&mut r)?;
    expect_eof(&mut r)?;
    Ok(model)
}
