//! Trajectory persistence: a directory with `manifest.json` and one
//! `field_<k>.bin` per checkpoint.
//!
//! Payload layout is row-major cells, each cell `(rho, m_1 .. m_d, S)` as
//! little-endian 64-bit floats with no padding, `d` the grid dimension.
//! Right limits recorded at concatenation instants are stored alongside as
//! `right_<k>.bin` and listed in the manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DomainError, Field, Grid, PersistError, Trajectory};
use crate::thermo::{GasModel, State};

const FORMAT_VERSION: &str = "1";
const ENDIANNESS: &str = "little";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    endianness: String,
    gas: GasModel,
    grid: Grid,
    times: Vec<f64>,
    e0: f64,
    m0: f64,
    entropy_tol: f64,
    scheme_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    right_limits: Vec<usize>,
}

fn write_field(field: &Field, dim: usize, path: &Path) -> Result<(), PersistError> {
    let mut bytes = Vec::with_capacity(field.cells().len() * (2 + dim) * 8);
    for cell in field.cells() {
        bytes.extend_from_slice(&cell.rho.to_le_bytes());
        for a in 0..dim {
            bytes.extend_from_slice(&cell.m[a].to_le_bytes());
        }
        bytes.extend_from_slice(&cell.entropy.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

fn read_field(grid: &Grid, path: &Path) -> Result<Field, PersistError> {
    let dim = grid.dim();
    let bytes = fs::read(path)?;
    let expected = grid.num_cells() * (2 + dim) * 8;
    if bytes.len() != expected {
        return Err(PersistError::PayloadSize {
            path: path.display().to_string(),
            expected,
            found: bytes.len(),
        });
    }
    let mut cells = Vec::with_capacity(grid.num_cells());
    let stride = (2 + dim) * 8;
    for chunk in bytes.chunks_exact(stride) {
        let read = |i: usize| f64::from_le_bytes(chunk[i * 8..(i + 1) * 8].try_into().unwrap());
        let rho = read(0);
        let mut m = [0.0; 2];
        for a in 0..dim {
            m[a] = read(1 + a);
        }
        let entropy = read(1 + dim);
        cells.push(State::new(rho, m, entropy));
    }
    Ok(Field::from_parts_unchecked(grid.clone(), cells))
}

pub(super) fn save(traj: &Trajectory, dir: &Path) -> Result<(), PersistError> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION.to_string(),
        endianness: ENDIANNESS.to_string(),
        gas: *traj.gas(),
        grid: traj.grid().clone(),
        times: traj.times().to_vec(),
        e0: traj.e0(),
        m0: traj.m0(),
        entropy_tol: traj.entropy_tol(),
        scheme_id: traj.scheme_id().to_string(),
        right_limits: traj.right_limit_indices().collect(),
    };
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    let dim = traj.grid().dim();
    for (k, field) in traj.fields().iter().enumerate() {
        write_field(field, dim, &dir.join(format!("field_{k}.bin")))?;
    }
    for k in traj.right_limit_indices() {
        write_field(traj.right_value(k), dim, &dir.join(format!("right_{k}.bin")))?;
    }
    Ok(())
}

pub(super) fn load(dir: &Path) -> Result<Trajectory, DomainError> {
    let manifest: Manifest = serde_json::from_slice(
        &fs::read(dir.join("manifest.json")).map_err(PersistError::Io)?,
    )
    .map_err(PersistError::Manifest)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion(manifest.format_version).into());
    }
    if manifest.endianness != ENDIANNESS {
        return Err(PersistError::Endianness(manifest.endianness).into());
    }
    let mut fields = Vec::with_capacity(manifest.times.len());
    for k in 0..manifest.times.len() {
        let field = read_field(&manifest.grid, &dir.join(format!("field_{k}.bin")))?;
        // re-run the per-cell domain checks on load
        fields.push(Field::new(manifest.grid.clone(), field.cells().to_vec())?);
    }
    let mut traj = Trajectory::new(
        manifest.gas,
        manifest.times,
        fields,
        manifest.e0,
        manifest.entropy_tol,
        manifest.scheme_id,
    )?;
    let m0_file = manifest.m0;
    if (traj.m0() - m0_file).abs() > 1e-10 * m0_file.abs().max(1.0) {
        return Err(PersistError::Inconsistent(format!(
            "manifest m0 = {m0_file} but the fields integrate to {}",
            traj.m0()
        ))
        .into());
    }
    for k in manifest.right_limits {
        let field = read_field(traj.grid(), &dir.join(format!("right_{k}.bin")))?;
        traj.set_right_limit(k, field)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_trajectory() -> Trajectory {
        let gas = GasModel::air();
        let grid = Grid::torus_2d([4, 4], [1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let base: Vec<State> = (0..grid.num_cells())
            .map(|_| {
                State::new(
                    rng.gen_range(0.5..2.0),
                    [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect();
        let f0 = Field::new(grid.clone(), base).unwrap();
        let e0 = f0.total_energy(&gas) * 1.5;
        Trajectory::new(gas, vec![0.0, 0.25], vec![f0.clone(), f0], e0, 1e-9, "rand").unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let traj = random_trajectory();
        traj.save(dir.path()).unwrap();
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(traj.times(), back.times());
        for (a, b) in traj.fields().iter().zip(back.fields()) {
            for (ca, cb) in a.cells().iter().zip(b.cells()) {
                assert_eq!(ca.rho.to_bits(), cb.rho.to_bits());
                assert_eq!(ca.m[0].to_bits(), cb.m[0].to_bits());
                assert_eq!(ca.m[1].to_bits(), cb.m[1].to_bits());
                assert_eq!(ca.entropy.to_bits(), cb.entropy.to_bits());
            }
        }
        assert_eq!(traj.e0().to_bits(), back.e0().to_bits());
        assert_eq!(traj.m0().to_bits(), back.m0().to_bits());
    }

    #[test]
    fn truncated_payload_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let traj = random_trajectory();
        traj.save(dir.path()).unwrap();
        let path = dir.path().join("field_1.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        match Trajectory::load(dir.path()) {
            Err(DomainError::Persist(PersistError::PayloadSize { .. })) => {}
            other => panic!("expected payload size error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let traj = random_trajectory();
        traj.save(dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": \"1\"", "\"format_version\": \"9\"");
        fs::write(&path, text).unwrap();
        match Trajectory::load(dir.path()) {
            Err(DomainError::Persist(PersistError::UnsupportedVersion(v))) => assert_eq!(v, "9"),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn endianness_marker_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let traj = random_trajectory();
        traj.save(dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"endianness\": \"little\"", "\"endianness\": \"big\"");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            Trajectory::load(dir.path()),
            Err(DomainError::Persist(PersistError::Endianness(_)))
        ));
    }

    #[test]
    fn right_limits_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut traj = random_trajectory();
        let mut lifted = traj.field(1).clone();
        for c in lifted.cells_mut() {
            c.entropy += 0.1 * c.rho;
        }
        traj.set_right_limit(1, lifted).unwrap();
        traj.save(dir.path()).unwrap();
        let back = Trajectory::load(dir.path()).unwrap();
        assert_eq!(
            back.right_value(1).cells()[3].entropy.to_bits(),
            traj.right_value(1).cells()[3].entropy.to_bits()
        );
    }
}
