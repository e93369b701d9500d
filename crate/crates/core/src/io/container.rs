//! GFB1 dataset container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! header   "GFB1" | version u16 | H u32 | W u32 | m u32 | entry_count u32   (22 bytes)
//! entry    label_len u32 | label (UTF-8) | speckle_seed u64 | distribution u8
//!          | ground_truth H*W f32 | buckets m f32 | planes_included u8
//!          | planes m*H*W f32 (only when planes_included = 1)
//! ```
//!
//! Distribution codes: 0 uniform01, 1 binary, 255 derived. Derived entries
//! (merged frames) have no single generating seed; their planes are always
//! stored and are authoritative.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fma::MergedGroupFrame;
use crate::forward::{BatchGroupFrame, BucketSequence, GroupFrame};
use crate::image::Image;
use crate::io::atomic_write;
use crate::reconstruct::{gi, gi_from_gf, gi_from_planes, GhostImage};
use crate::speckle::{Distribution, SpeckleSet};

pub const MAGIC: [u8; 4] = *b"GFB1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 22;
pub const DERIVED_CODE: u8 = 0xFF;

/// One group frame with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerEntry {
    pub object_id: String,
    pub speckle_seed: u64,
    /// `None` marks a derived entry.
    pub distribution: Option<Distribution>,
    pub ground_truth: Vec<f32>,
    pub buckets: Vec<f32>,
    pub planes: Option<Vec<f32>>,
}

fn to_f32(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

fn to_f64(values: &[f32]) -> Vec<f64> {
    values.iter().map(|&v| v as f64).collect()
}

fn check_dims(img: &Image, dims: (usize, usize)) -> Result<()> {
    if img.dims() != dims {
        return Err(Error::DimensionMismatch {
            left: dims,
            right: img.dims(),
        });
    }
    Ok(())
}

impl ContainerEntry {
    pub fn from_group_frame(gf: &GroupFrame, ground_truth: &Image, include_planes: bool) -> Result<Self> {
        check_dims(ground_truth, gf.dims())?;
        let planes = include_planes.then(|| {
            let mut out = Vec::with_capacity(gf.len() * gf.speckles().pixels());
            for i in 0..gf.len() {
                out.extend(gf.plane_row(i).iter().map(|&v| v as f32));
            }
            out
        });
        Ok(Self {
            object_id: gf.object_id().to_string(),
            speckle_seed: gf.speckle_seed(),
            distribution: Some(gf.distribution()),
            ground_truth: to_f32(ground_truth.data()),
            buckets: to_f32(gf.buckets().values()),
            planes,
        })
    }

    /// Derived entry holding every merged plane. The seed is the base
    /// frame's speckle seed, kept for reference only.
    pub fn from_merged(merged: &MergedGroupFrame, object_id: impl Into<String>, ground_truth: &Image) -> Result<Self> {
        let (h, w) = merged.dims();
        check_dims(ground_truth, (h, w))?;
        let mut planes = Vec::with_capacity(merged.len() * h * w);
        merged.for_each_plane(|_, p| {
            planes.extend(p.data().iter().map(|&v| v as f32));
            Ok(())
        })?;
        Ok(Self {
            object_id: object_id.into(),
            speckle_seed: merged.base_frame().speckle_seed(),
            distribution: None,
            ground_truth: to_f32(ground_truth.data()),
            buckets: to_f32(merged.buckets().values()),
            planes: Some(planes),
        })
    }

    pub fn samples(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_derived(&self) -> bool {
        self.distribution.is_none()
    }

    /// Bytes this entry occupies on disk.
    pub fn encoded_len(&self) -> usize {
        4 + self.object_id.len()
            + 8
            + 1
            + 4 * self.ground_truth.len()
            + 4 * self.buckets.len()
            + 1
            + self.planes.as_ref().map_or(0, |p| 4 * p.len())
    }

    pub fn ground_truth_image(&self, height: usize, width: usize) -> Result<Image> {
        Image::new(height, width, to_f64(&self.ground_truth))
    }

    /// Rebuilds the group frame by regenerating the speckle set from the
    /// seed; stored planes are attached when present.
    pub fn to_group_frame(&self, height: usize, width: usize) -> Result<GroupFrame> {
        let distribution = self.distribution.ok_or_else(|| {
            Error::Format(format!("entry `{}` is derived and has no speckle seed", self.object_id))
        })?;
        let set = SpeckleSet::generate(self.speckle_seed, self.samples(), height, width, distribution)?;
        let gf = GroupFrame::new(
            Arc::new(set),
            BucketSequence::new(to_f64(&self.buckets)),
            self.object_id.clone(),
        )?;
        match &self.planes {
            Some(p) => gf.with_planes(to_f64(p)),
            None => Ok(gf),
        }
    }

    /// Reconstruction: from planes for derived entries, through the plane
    /// consistency check when planes are stored, else from the regenerated
    /// speckle set.
    pub fn ghost_image(&self, height: usize, width: usize) -> Result<GhostImage> {
        if self.is_derived() {
            let planes = self
                .planes
                .as_ref()
                .ok_or_else(|| Error::Format("derived entry without planes".into()))?;
            return gi_from_planes(height, width, planes, &self.buckets);
        }
        let gf = self.to_group_frame(height, width)?;
        if gf.has_explicit_planes() {
            gi_from_gf(&gf)
        } else {
            gi(gf.speckles(), gf.buckets())
        }
    }
}

/// Entries sharing one image size and sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub height: usize,
    pub width: usize,
    pub samples: usize,
    pub entries: Vec<ContainerEntry>,
}

impl Container {
    pub fn new(height: usize, width: usize, samples: usize) -> Self {
        Self {
            height,
            width,
            samples,
            entries: Vec::new(),
        }
    }

    fn check(&self, e: &ContainerEntry) -> Result<()> {
        let n = self.height * self.width;
        let expect = |expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::LengthMismatch { expected, actual })
            }
        };
        expect(n, e.ground_truth.len())?;
        expect(self.samples, e.buckets.len())?;
        if let Some(p) = &e.planes {
            expect(self.samples * n, p.len())?;
        } else if e.is_derived() {
            return Err(Error::Format(format!("derived entry `{}` must store planes", e.object_id)));
        }
        Ok(())
    }

    pub fn push(&mut self, entry: ContainerEntry) -> Result<()> {
        self.check(&entry)?;
        self.entries.push(entry);
        Ok(())
    }

    /// Regroups consecutive entries that share a speckle seed and
    /// distribution into batches, regenerating each speckle set once.
    /// Stored planes are attached to their frames.
    pub fn to_bgfs(&self) -> Result<Vec<BatchGroupFrame>> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.entries.len() {
            let lead = &self.entries[start];
            let distribution = lead.distribution.ok_or_else(|| {
                Error::InvalidBgf(format!("entry `{}` is derived and cannot be regrouped", lead.object_id))
            })?;
            let end = start
                + self.entries[start..]
                    .iter()
                    .take_while(|e| e.speckle_seed == lead.speckle_seed && e.distribution == lead.distribution)
                    .count();
            let set = Arc::new(SpeckleSet::generate(
                lead.speckle_seed,
                self.samples,
                self.height,
                self.width,
                distribution,
            )?);
            let frames = self.entries[start..end]
                .iter()
                .map(|e| {
                    let gf = GroupFrame::new(set.clone(), BucketSequence::new(to_f64(&e.buckets)), e.object_id.clone())?;
                    match &e.planes {
                        Some(p) => gf.with_planes(to_f64(p)),
                        None => Ok(gf),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(BatchGroupFrame::new(frames, out.len())?);
            start = end;
        }
        Ok(out)
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.entries.iter().map(ContainerEntry::encoded_len).sum::<usize>()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out)?;
        Ok(out)
    }

    /// Streams the encoding into `out`. Entries are validated before any
    /// byte is written.
    pub fn write_to(&self, out: &mut dyn Write) -> Result<()> {
        let u32_field = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
        };
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        for (v, what) in [
            (self.height, "height"),
            (self.width, "width"),
            (self.samples, "sample count"),
            (self.entries.len(), "entry count"),
        ] {
            header.extend_from_slice(&u32_field(v, what)?.to_le_bytes());
        }
        for e in &self.entries {
            self.check(e)?;
            u32_field(e.object_id.len(), "label length")?;
        }
        out.write_all(&header)?;
        let floats = |out: &mut dyn Write, values: &[f32]| -> Result<()> {
            for v in values {
                out.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        for e in &self.entries {
            out.write_all(&(e.object_id.len() as u32).to_le_bytes())?;
            out.write_all(e.object_id.as_bytes())?;
            out.write_all(&e.speckle_seed.to_le_bytes())?;
            out.write_all(&[e.distribution.map_or(DERIVED_CODE, Distribution::code)])?;
            floats(out, &e.ground_truth)?;
            floats(out, &e.buckets)?;
            match &e.planes {
                Some(p) => {
                    out.write_all(&[1])?;
                    floats(out, p)?;
                }
                None => out.write_all(&[0])?,
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(if bytes.len() < 4 && MAGIC.starts_with(bytes) {
                Error::TruncatedFile("header".into())
            } else {
                Error::BadMagic
            });
        }
        r.pos = 4;
        let version = u16::from_le_bytes(r.array("header")?);
        if version != VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let height = r.u32("header")? as usize;
        let width = r.u32("header")? as usize;
        let samples = r.u32("header")? as usize;
        let count = r.u32("header")? as usize;
        let n = height * width;
        let mut container = Container::new(height, width, samples);
        for idx in 0..count {
            let ctx = format!("entry {idx}");
            let label_len = r.u32(&ctx)? as usize;
            let object_id = String::from_utf8(r.take(label_len, &ctx)?.to_vec())
                .map_err(|_| Error::Format(format!("{ctx}: label is not UTF-8")))?;
            let speckle_seed = u64::from_le_bytes(r.array(&ctx)?);
            let code = r.array::<1>(&ctx)?[0];
            let distribution = match code {
                DERIVED_CODE => None,
                c => Some(
                    Distribution::from_code(c)
                        .ok_or_else(|| Error::Format(format!("{ctx}: unknown distribution code {c}")))?,
                ),
            };
            let ground_truth = r.f32s(n, &ctx)?;
            let buckets = r.f32s(samples, &ctx)?;
            let planes = match r.array::<1>(&ctx)?[0] {
                0 => None,
                1 => Some(r.f32s(samples * n, &ctx)?),
                f => return Err(Error::Format(format!("{ctx}: planes flag must be 0 or 1, got {f}"))),
            };
            container.push(ContainerEntry {
                object_id,
                speckle_seed,
                distribution,
                ground_truth,
                buckets,
                planes,
            })?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(container)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, ctx: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::TruncatedFile(ctx.to_string()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, ctx: &str) -> Result<[u8; N]> {
        Ok(self.take(N, ctx)?.try_into().expect("length checked"))
    }

    fn u32(&mut self, ctx: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(ctx)?))
    }

    fn f32s(&mut self, count: usize, ctx: &str) -> Result<Vec<f32>> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| Error::TruncatedFile(ctx.to_string()))?;
        Ok(self
            .take(len, ctx)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }
}

pub fn write_container(path: impl AsRef<Path>, container: &Container) -> Result<()> {
    atomic_write(path.as_ref(), |w| container.write_to(w))
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container> {
    Container::from_bytes(&std::fs::read(path)?)
}
