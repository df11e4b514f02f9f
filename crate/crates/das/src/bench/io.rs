//! Self-describing binary container for instance sets.
//!
//! Layout: magic, version, header (role, class, dim, folds, count, master
//! seed), then per instance the class, seed, fold label and raw
//! little-endian f64 payloads for shifts and rotations. Round trips are
//! bit-exact.

use super::{
    BenchError, CompComponent, InstanceSet, InstanceSpec, ProblemClass, Recipe, SetRole,
    SquareMatrix,
};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DASI";
const VERSION: u16 = 1;

struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.out.write_all(&[v])
    }
    fn u16(&mut self, v: u16) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn f64s(&mut self, vs: &[f64]) -> std::io::Result<()> {
        for &v in vs {
            self.out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

struct Reader<R: Read> {
    inp: R,
    offset: usize,
}

impl<R: Read> Reader<R> {
    fn take(&mut self, buf: &mut [u8], what: &str) -> Result<(), BenchError> {
        self.inp.read_exact(buf).map_err(|_| BenchError::Parse {
            offset: self.offset,
            what: format!("truncated while reading {what}"),
        })?;
        self.offset += buf.len();
        Ok(())
    }
    fn u8(&mut self, what: &str) -> Result<u8, BenchError> {
        let mut b = [0u8; 1];
        self.take(&mut b, what)?;
        Ok(b[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16, BenchError> {
        let mut b = [0u8; 2];
        self.take(&mut b, what)?;
        Ok(u16::from_le_bytes(b))
    }
    fn u32(&mut self, what: &str) -> Result<u32, BenchError> {
        let mut b = [0u8; 4];
        self.take(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self, what: &str) -> Result<u64, BenchError> {
        let mut b = [0u8; 8];
        self.take(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, BenchError> {
        let mut out = Vec::with_capacity(n);
        let mut b = [0u8; 8];
        for _ in 0..n {
            self.take(&mut b, what)?;
            out.push(f64::from_le_bytes(b));
        }
        Ok(out)
    }
}

fn role_tag(role: SetRole) -> u8 {
    match role {
        SetRole::Train => 0,
        SetRole::Validation => 1,
        SetRole::Test => 2,
    }
}

fn role_from_tag(tag: u8, offset: usize) -> Result<SetRole, BenchError> {
    match tag {
        0 => Ok(SetRole::Train),
        1 => Ok(SetRole::Validation),
        2 => Ok(SetRole::Test),
        _ => Err(BenchError::Parse {
            offset,
            what: format!("unknown role tag {tag}"),
        }),
    }
}

pub fn save_instance_set(set: &InstanceSet, path: &Path) -> Result<(), BenchError> {
    let file = File::create(path)?;
    let mut w = Writer {
        out: BufWriter::new(file),
    };
    w.out.write_all(MAGIC)?;
    w.u16(VERSION)?;
    w.u8(role_tag(set.role))?;
    w.u8(set.class.index())?;
    w.u16(set.dim as u16)?;
    w.u16(set.k_folds as u16)?;
    w.u32(set.instances.len() as u32)?;
    w.u64(set.master_seed)?;
    for (inst, &fold) in set.instances.iter().zip(&set.folds) {
        w.u8(inst.class.index())?;
        w.u64(inst.seed)?;
        w.u16(fold as u16)?;
        w.f64s(&inst.shift)?;
        w.f64s(&inst.rotation.data)?;
        match &inst.recipe {
            Recipe::Simple => w.u8(0)?,
            Recipe::Hybrid { perm } => {
                w.u8(1)?;
                for &p in perm {
                    w.u16(p)?;
                }
            }
            Recipe::Composition { extras } => {
                w.u8(2)?;
                w.u8(extras.len() as u8)?;
                for c in extras {
                    w.f64s(&c.shift)?;
                    match &c.rotation {
                        Some(m) => {
                            w.u8(1)?;
                            w.f64s(&m.data)?;
                        }
                        None => w.u8(0)?,
                    }
                }
            }
        }
    }
    w.out.flush()?;
    Ok(())
}

pub fn load_instance_set(path: &Path) -> Result<InstanceSet, BenchError> {
    let file = File::open(path)?;
    let mut r = Reader {
        inp: BufReader::new(file),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.take(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(BenchError::Parse {
            offset: 0,
            what: "bad magic".into(),
        });
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(BenchError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let role = role_from_tag(r.u8("role")?, r.offset)?;
    let class_tag = r.u8("class")?;
    let class = ProblemClass::from_index(class_tag).ok_or_else(|| BenchError::Parse {
        offset: r.offset,
        what: format!("unknown class tag {class_tag}"),
    })?;
    let dim = r.u16("dim")? as usize;
    let k_folds = r.u16("k_folds")? as usize;
    let count = r.u32("count")? as usize;
    let master_seed = r.u64("master_seed")?;

    let mut instances = Vec::with_capacity(count);
    let mut folds = Vec::with_capacity(count);
    for _ in 0..count {
        let ctag = r.u8("instance class")?;
        let iclass = ProblemClass::from_index(ctag).ok_or_else(|| BenchError::Parse {
            offset: r.offset,
            what: format!("unknown instance class tag {ctag}"),
        })?;
        let seed = r.u64("instance seed")?;
        let fold = r.u16("fold")? as usize;
        let shift = r.f64s(dim, "shift")?;
        let rot = SquareMatrix {
            n: dim,
            data: r.f64s(dim * dim, "rotation")?,
        };
        let rtag = r.u8("recipe tag")?;
        let recipe = match rtag {
            0 => Recipe::Simple,
            1 => {
                let mut perm = Vec::with_capacity(dim);
                for _ in 0..dim {
                    perm.push(r.u16("perm")?);
                }
                Recipe::Hybrid { perm }
            }
            2 => {
                let n_extra = r.u8("component count")? as usize;
                let mut extras = Vec::with_capacity(n_extra);
                for _ in 0..n_extra {
                    let cshift = r.f64s(dim, "component shift")?;
                    let has_rot = r.u8("component rotation flag")?;
                    let rotation = if has_rot == 1 {
                        Some(SquareMatrix {
                            n: dim,
                            data: r.f64s(dim * dim, "component rotation")?,
                        })
                    } else {
                        None
                    };
                    extras.push(CompComponent {
                        shift: cshift,
                        rotation,
                    });
                }
                Recipe::Composition { extras }
            }
            _ => {
                return Err(BenchError::Parse {
                    offset: r.offset,
                    what: format!("unknown recipe tag {rtag}"),
                })
            }
        };
        instances.push(InstanceSpec {
            class: iclass,
            dim,
            shift,
            rotation: rot,
            recipe,
            seed,
            optimum_cost: 0.0,
        });
        folds.push(fold);
    }
    Ok(InstanceSet {
        class,
        dim,
        k_folds,
        master_seed,
        role,
        instances,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{evaluate, generate_instance_set};
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn round_trip_is_deep_equal() {
        let dir = tempfile::tempdir().unwrap();
        for class in [ProblemClass::C2, ProblemClass::C6, ProblemClass::C8] {
            let set = generate_instance_set(class, 10, 8, 123, 4, SetRole::Test);
            let path = dir.path().join(format!("{}.dasi", class.name()));
            save_instance_set(&set, &path).unwrap();
            let loaded = load_instance_set(&path).unwrap();
            assert_eq!(set, loaded);
        }
    }

    #[test]
    fn reloaded_costs_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let set = generate_instance_set(ProblemClass::C9, 10, 4, 5, 4, SetRole::Test);
        let path = dir.path().join("set.dasi");
        save_instance_set(&set, &path).unwrap();
        let loaded = load_instance_set(&path).unwrap();
        let mut rng = rng_from_seed(1);
        for (a, b) in set.instances.iter().zip(&loaded.instances) {
            for _ in 0..20 {
                let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-100.0..100.0)).collect();
                let fa = evaluate(a, &x).unwrap();
                let fb = evaluate(b, &x).unwrap();
                assert_eq!(fa.to_bits(), fb.to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let set = generate_instance_set(ProblemClass::C2, 10, 4, 5, 4, SetRole::Train);
        let path = dir.path().join("set.dasi");
        save_instance_set(&set, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.dasi");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        match load_instance_set(&cut) {
            Err(BenchError::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let set = generate_instance_set(ProblemClass::C2, 10, 4, 5, 4, SetRole::Train);
        let path = dir.path().join("set.dasi");
        save_instance_set(&set, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9; // bump version field
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_instance_set(&path),
            Err(BenchError::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn serialized_sets_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = generate_instance_set(ProblemClass::C11, 10, 16, 5, 4, SetRole::Train);
        let b = generate_instance_set(ProblemClass::C11, 10, 16, 5, 4, SetRole::Train);
        let pa = dir.path().join("a.dasi");
        let pb = dir.path().join("b.dasi");
        save_instance_set(&a, &pa).unwrap();
        save_instance_set(&b, &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }
}
